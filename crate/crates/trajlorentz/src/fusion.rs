//! Gated blending of Lorentz and Euclidean distances.
//!
//! Each trajectory carries, next to its embedding `x`, a pair of small
//! factor vectors `(v_lo, v_eu)`. For a pair of trajectories the two
//! factor dot products are pushed through a softplus and normalized,
//!
//! ```text
//! alpha = s(v_lo_a · v_lo_b) / (s(v_lo_a · v_lo_b) + s(v_eu_a · v_eu_b)),
//! s(t) = ln(1 + e^t),
//! ```
//!
//! giving a weight in `(0, 1)` that is well-defined for any sign of the
//! dot products. The fused distance is the convex combination
//!
//! ```text
//! d_fu = alpha * d_Lo(cosh_project(xa), cosh_project(xb)) + (1 - alpha) * |xa - xb|.
//! ```
//!
//! Pairs that need a triangle violation can route weight to the
//! Lorentz term; pairs that behave metrically can lean on the
//! Euclidean term. Everything here is differentiable, and
//! [`fusion_backward`] returns the exact gradients used in training.

use crate::lorentz::{
    cosh_project, cosh_project_backward, euclidean_distance, euclidean_distance_backward,
    lorentz_distance, lorentz_distance_backward, ProjectionConfig,
};

/// Per-trajectory gate factors: one vector for the Lorentz vote, one
/// for the Euclidean vote.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorEmbedding {
    pub v_lo: Vec<f64>,
    pub v_eu: Vec<f64>,
}

impl FactorEmbedding {
    pub fn new(v_lo: Vec<f64>, v_eu: Vec<f64>) -> Self {
        FactorEmbedding { v_lo, v_eu }
    }

    pub fn zeros(dim: usize) -> Self {
        FactorEmbedding {
            v_lo: vec![0.0; dim],
            v_eu: vec![0.0; dim],
        }
    }
}

/// Numerically stable `ln(1 + e^t)`.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// Numerically stable logistic `1 / (1 + e^-t)`, the softplus slope.
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "factor vectors must share a dimension");
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The Lorentz weight of a pair, `s(u) / (s(u) + s(v))` with
/// `u = v_lo_a · v_lo_b` and `v = v_eu_a · v_eu_b`. Zeroed factors
/// give exactly 0.5. The weight lives in the open interval `(0, 1)`;
/// in floating point it reaches an endpoint only when one softplus
/// term is more than about sixteen orders of magnitude below the
/// other and is absorbed by the sum.
pub fn alpha_lo(fa: &FactorEmbedding, fb: &FactorEmbedding) -> f64 {
    let su = softplus(dot(&fa.v_lo, &fb.v_lo));
    let sv = softplus(dot(&fa.v_eu, &fb.v_eu));
    su / (su + sv)
}

/// The fused distance of one pair, with its ingredients kept for
/// reporting and for the backward pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionPair {
    pub alpha_lo: f64,
    pub d_lo: f64,
    pub d_eu: f64,
    pub d_fu: f64,
}

/// Forward pass: Euclidean distance of the raw embeddings, Lorentz
/// distance of their `cosh` lifts, and the gated blend.
pub fn fusion_distance(
    xa: &[f64],
    xb: &[f64],
    fa: &FactorEmbedding,
    fb: &FactorEmbedding,
    cfg: &ProjectionConfig,
) -> FusionPair {
    let d_eu = euclidean_distance(xa, xb);
    let pa = cosh_project(xa, cfg);
    let pb = cosh_project(xb, cfg);
    let d_lo = lorentz_distance(&pa, &pb).expect("projections share the configured curvature");
    let alpha = alpha_lo(fa, fb);
    FusionPair {
        alpha_lo: alpha,
        d_lo,
        d_eu,
        d_fu: alpha * d_lo + (1.0 - alpha) * d_eu,
    }
}

/// Gradients of `upstream * d_fu` with respect to both embeddings and
/// both factor pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionGrads {
    pub xa: Vec<f64>,
    pub xb: Vec<f64>,
    pub fa: FactorEmbedding,
    pub fb: FactorEmbedding,
}

/// Backward pass matching [`fusion_distance`].
///
/// The embedding gradients flow through both distance terms; the
/// factor gradients flow through the gate, scaled by the distance gap
/// `d_lo - d_eu`.
pub fn fusion_backward(
    xa: &[f64],
    xb: &[f64],
    fa: &FactorEmbedding,
    fb: &FactorEmbedding,
    cfg: &ProjectionConfig,
    upstream: f64,
) -> FusionGrads {
    let d_eu = euclidean_distance(xa, xb);
    let pa = cosh_project(xa, cfg);
    let pb = cosh_project(xb, cfg);
    let d_lo = lorentz_distance(&pa, &pb).expect("projections share the configured curvature");

    let u = dot(&fa.v_lo, &fb.v_lo);
    let v = dot(&fa.v_eu, &fb.v_eu);
    let su = softplus(u);
    let sv = softplus(v);
    let total = su + sv;
    let alpha = su / total;

    // Euclidean branch, weighted by (1 - alpha).
    let (mut gxa, mut gxb) = euclidean_distance_backward(xa, xb, upstream * (1.0 - alpha));

    // Lorentz branch, weighted by alpha, chained through the lifts.
    let (gpa, gpb) = lorentz_distance_backward(&pa, &pb, upstream * alpha);
    let gxa_lo = cosh_project_backward(xa, cfg, &gpa);
    let gxb_lo = cosh_project_backward(xb, cfg, &gpb);
    for (g, add) in gxa.iter_mut().zip(&gxa_lo) {
        *g += add;
    }
    for (g, add) in gxb.iter_mut().zip(&gxb_lo) {
        *g += add;
    }

    // Gate branch: dL/dalpha spread over the four factor vectors.
    let dl_dalpha = upstream * (d_lo - d_eu);
    let dalpha_du = sigmoid(u) * sv / (total * total);
    let dalpha_dv = -sigmoid(v) * su / (total * total);
    let scale_u = dl_dalpha * dalpha_du;
    let scale_v = dl_dalpha * dalpha_dv;
    let fa_grad = FactorEmbedding {
        v_lo: fb.v_lo.iter().map(|&w| scale_u * w).collect(),
        v_eu: fb.v_eu.iter().map(|&w| scale_v * w).collect(),
    };
    let fb_grad = FactorEmbedding {
        v_lo: fa.v_lo.iter().map(|&w| scale_u * w).collect(),
        v_eu: fa.v_eu.iter().map(|&w| scale_v * w).collect(),
    };

    FusionGrads {
        xa: gxa,
        xb: gxb,
        fa: fa_grad,
        fb: fb_grad,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn rand_vec(rng: &mut ChaCha8Rng, dim: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..dim).map(|_| rng.gen_range(lo..hi)).collect()
    }

    fn factors_with_dots(u: f64, v: f64) -> (FactorEmbedding, FactorEmbedding) {
        // One-dimensional factors whose dot products are exactly u and v.
        (
            FactorEmbedding::new(vec![u], vec![v]),
            FactorEmbedding::new(vec![1.0], vec![1.0]),
        )
    }

    #[test]
    fn test_alpha_balanced_at_zero_factors() {
        let (fa, fb) = (FactorEmbedding::zeros(4), FactorEmbedding::zeros(4));
        assert_eq!(alpha_lo(&fa, &fb), 0.5);
    }

    #[test]
    fn test_alpha_softplus_ratio() {
        // Independent evaluation of s(10) / (s(10) + s(-10)).
        let s = |t: f64| t.max(0.0) + (-t.abs()).exp().ln_1p();
        let want = s(10.0) / (s(10.0) + s(-10.0));
        let (fa, fb) = factors_with_dots(10.0, -10.0);
        let got = alpha_lo(&fa, &fb);
        assert_eq!(got, want);
        assert_relative_eq!(got, 0.9999955, epsilon = 1e-6);
    }

    #[test]
    fn test_alpha_stays_in_open_unit_interval() {
        // Dot products stay small enough that neither softplus term is
        // absorbed, keeping the weight strictly inside the interval.
        let mut r = rng(1);
        for _ in 0..500 {
            let dim = r.gen_range(1..5);
            let fa = FactorEmbedding::new(
                rand_vec(&mut r, dim, -2.0, 2.0),
                rand_vec(&mut r, dim, -2.0, 2.0),
            );
            let fb = FactorEmbedding::new(
                rand_vec(&mut r, dim, -2.0, 2.0),
                rand_vec(&mut r, dim, -2.0, 2.0),
            );
            let a = alpha_lo(&fa, &fb);
            assert!(a > 0.0 && a < 1.0, "alpha {a} left (0, 1)");
            // The gate only sees dot products, so it is symmetric.
            assert_eq!(a, alpha_lo(&fb, &fa));
        }
    }

    #[test]
    fn test_fusion_is_convex_combination() {
        let mut r = rng(2);
        let cfg = ProjectionConfig::default();
        for _ in 0..200 {
            let dim = r.gen_range(1..6);
            let xa = rand_vec(&mut r, dim, -2.0, 2.0);
            let xb = rand_vec(&mut r, dim, -2.0, 2.0);
            let fa = FactorEmbedding::new(
                rand_vec(&mut r, 3, -1.0, 1.0),
                rand_vec(&mut r, 3, -1.0, 1.0),
            );
            let fb = FactorEmbedding::new(
                rand_vec(&mut r, 3, -1.0, 1.0),
                rand_vec(&mut r, 3, -1.0, 1.0),
            );
            let p = fusion_distance(&xa, &xb, &fa, &fb, &cfg);
            assert_relative_eq!(
                p.d_fu,
                p.alpha_lo * p.d_lo + (1.0 - p.alpha_lo) * p.d_eu,
                epsilon = 1e-12
            );
            assert!(p.d_fu >= p.d_lo.min(p.d_eu) - 1e-12);
            assert!(p.d_fu <= p.d_lo.max(p.d_eu) + 1e-12);
        }
    }

    #[test]
    fn test_saturated_gate_picks_lorentz() {
        let (fa, fb) = factors_with_dots(30.0, -30.0);
        let cfg = ProjectionConfig::default();
        let p = fusion_distance(&[1.0, 0.5], &[-0.5, 1.0], &fa, &fb, &cfg);
        assert_relative_eq!(p.d_fu, p.d_lo, max_relative = 1e-4);
        // And the mirrored gate picks the Euclidean term.
        let (fa, fb) = factors_with_dots(-30.0, 30.0);
        let p = fusion_distance(&[1.0, 0.5], &[-0.5, 1.0], &fa, &fb, &cfg);
        assert_relative_eq!(p.d_fu, p.d_eu, max_relative = 1e-4);
    }

    #[test]
    fn test_identical_embeddings_have_zero_distance() {
        let cfg = ProjectionConfig::default();
        let x = [0.3, -0.7, 1.1];
        let fa = FactorEmbedding::new(vec![0.2, 0.1], vec![-0.3, 0.4]);
        let p = fusion_distance(&x, &x, &fa, &fa, &cfg);
        assert!(p.d_eu.abs() <= 1e-12);
        assert!(p.d_lo.abs() <= 1e-12);
        assert!(p.d_fu.abs() <= 1e-12);
    }

    #[test]
    fn test_backward_matches_fd() {
        let cfg = ProjectionConfig::default();
        let mut r = rng(3);
        let h = 1e-5;
        let central =
            |f: &dyn Fn(&[f64]) -> f64, x: &[f64]| -> Vec<f64> {
                let mut g = Vec::with_capacity(x.len());
                let mut xp = x.to_vec();
                for i in 0..x.len() {
                    xp[i] = x[i] + h;
                    let up = f(&xp);
                    xp[i] = x[i] - h;
                    let down = f(&xp);
                    xp[i] = x[i];
                    g.push((up - down) / (2.0 * h));
                }
                g
            };
        let close = |a: &[f64], b: &[f64]| {
            for (&x, &y) in a.iter().zip(b) {
                let denom = 1.0f64.max(x.abs()).max(y.abs());
                assert!((x - y).abs() / denom < 1e-4, "grad {x} vs fd {y}");
            }
        };

        for _ in 0..60 {
            let dim = r.gen_range(1..5);
            let fdim = r.gen_range(1..4);
            let mut xa = rand_vec(&mut r, dim, -2.0, 2.0);
            while xa.iter().map(|v| v * v).sum::<f64>().sqrt() < 0.3 {
                xa = rand_vec(&mut r, dim, -2.0, 2.0);
            }
            let mut xb = rand_vec(&mut r, dim, -2.0, 2.0);
            while xb.iter().map(|v| v * v).sum::<f64>().sqrt() < 0.3 {
                xb = rand_vec(&mut r, dim, -2.0, 2.0);
            }
            let fa = FactorEmbedding::new(
                rand_vec(&mut r, fdim, -1.5, 1.5),
                rand_vec(&mut r, fdim, -1.5, 1.5),
            );
            let fb = FactorEmbedding::new(
                rand_vec(&mut r, fdim, -1.5, 1.5),
                rand_vec(&mut r, fdim, -1.5, 1.5),
            );
            let upstream = r.gen_range(-2.0..2.0);
            let g = fusion_backward(&xa, &xb, &fa, &fb, &cfg, upstream);

            let f_xa = |v: &[f64]| upstream * fusion_distance(v, &xb, &fa, &fb, &cfg).d_fu;
            close(&g.xa, &central(&f_xa, &xa));
            let f_xb = |v: &[f64]| upstream * fusion_distance(&xa, v, &fa, &fb, &cfg).d_fu;
            close(&g.xb, &central(&f_xb, &xb));

            let f_fa_lo = |v: &[f64]| {
                let fa2 = FactorEmbedding::new(v.to_vec(), fa.v_eu.clone());
                upstream * fusion_distance(&xa, &xb, &fa2, &fb, &cfg).d_fu
            };
            close(&g.fa.v_lo, &central(&f_fa_lo, &fa.v_lo));
            let f_fa_eu = |v: &[f64]| {
                let fa2 = FactorEmbedding::new(fa.v_lo.clone(), v.to_vec());
                upstream * fusion_distance(&xa, &xb, &fa2, &fb, &cfg).d_fu
            };
            close(&g.fa.v_eu, &central(&f_fa_eu, &fa.v_eu));
            let f_fb_lo = |v: &[f64]| {
                let fb2 = FactorEmbedding::new(v.to_vec(), fb.v_eu.clone());
                upstream * fusion_distance(&xa, &xb, &fa, &fb2, &cfg).d_fu
            };
            close(&g.fb.v_lo, &central(&f_fb_lo, &fb.v_lo));
            let f_fb_eu = |v: &[f64]| {
                let fb2 = FactorEmbedding::new(fb.v_lo.clone(), v.to_vec());
                upstream * fusion_distance(&xa, &xb, &fa, &fb2, &cfg).d_fu
            };
            close(&g.fb.v_eu, &central(&f_fb_eu, &fb.v_eu));
        }
    }
}
