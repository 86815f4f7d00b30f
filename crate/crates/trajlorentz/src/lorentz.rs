//! Lorentzian geometry on the hyperboloid, built for triangle breaking.
//!
//! The Lorentz inner product on `R^{n+1}` is
//! `⟨a, b⟩ = -a₀b₀ + a₁b₁ + ... + aₙbₙ`, and the hyperboloid of
//! curvature `β > 0` is the upper sheet
//! `H(β) = { a : ⟨a, a⟩ = -β, a₀ ≥ √β }`. On that sheet the quantity
//!
//! ```text
//! d_Lo(a, b) = |⟨a, b⟩| - β
//! ```
//!
//! is non-negative and vanishes exactly at `a = b`, yet it is not a
//! metric: reflecting a point's spatial part gives two points that are
//! both close to the apex `(√β, 0, ..., 0)` while being far from each
//! other. This "broken triangle" is a feature here, because the
//! trajectory measures in [`crate::metrics`] violate the triangle
//! inequality too, and a distance that can imitate that fits them
//! better than any Euclidean distance can.
//!
//! Two projections lift Euclidean vectors onto the sheet:
//!
//! * [`vanilla_project`] keeps the vector as the spatial part and
//!   solves for the time coordinate. Far from the origin this
//!   collapses: translating a pair far out shrinks its Lorentz
//!   distance toward zero.
//! * [`cosh_project`] re-parametrizes the radius as a hyperbolic
//!   angle, `r = (Σxᵢ²)^{1/c}`, mapping `x` to
//!   `(√β·cosh r, √β·sinh(r)·x/|x|)`. For `c = 2` and scalar inputs
//!   the distance has the closed form `β(cosh(b - a) - 1)`, so
//!   translated pairs keep their separation instead of collapsing.
//!
//! Every forward map has an analytic backward companion used by the
//! trainer; all of them are validated against central finite
//! differences in the test suite.

use crate::error::{Error, Result};

/// Curvature and compression parameters for the hyperboloid maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionConfig {
    /// Curvature `β > 0` of the target sheet.
    pub beta: f64,
    /// Norm-compression exponent: the hyperbolic angle is
    /// `(Σxᵢ²)^{1/c}`. Must be at least 1; larger values compress
    /// large radii harder.
    pub c: f64,
    /// Upper clamp on the hyperbolic angle, keeping `cosh`/`sinh` in
    /// representable range.
    pub norm_clamp: f64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig {
            beta: 1.0,
            c: 4.0,
            norm_clamp: 50.0,
        }
    }
}

impl ProjectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.beta.is_finite() || self.beta <= 0.0 {
            return Err(Error::Config(format!(
                "beta must be positive and finite, got {}",
                self.beta
            )));
        }
        if !self.c.is_finite() || self.c < 1.0 {
            return Err(Error::Config(format!("c must be at least 1, got {}", self.c)));
        }
        if !self.norm_clamp.is_finite() || self.norm_clamp <= 0.0 {
            return Err(Error::Config(format!(
                "norm clamp must be positive and finite, got {}",
                self.norm_clamp
            )));
        }
        Ok(())
    }
}

/// The Lorentz inner product `-a₀b₀ + Σᵢ aᵢbᵢ`.
///
/// Panics when the slices differ in length; this is a programming
/// error, not a data condition.
pub fn lorentz_inner(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "lorentz inner product needs equal dims");
    assert!(!a.is_empty(), "lorentz inner product needs a time coordinate");
    let mut acc = -a[0] * b[0];
    for (x, y) in a[1..].iter().zip(&b[1..]) {
        acc += x * y;
    }
    acc
}

/// A point on the upper hyperboloid sheet of curvature `beta`.
///
/// `coords[0]` is the time coordinate, the rest is the spatial part.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicPoint {
    coords: Vec<f64>,
    beta: f64,
}

impl HyperbolicPoint {
    /// Validates sheet membership: `⟨x, x⟩ = -β` within `1e-6`,
    /// measured relative to the gross magnitude `x₀² + Σxᵢ² + β` so the
    /// check stays meaningful far from the apex where the inner product
    /// cancels catastrophically, and `x₀ ≥ √β` up to the same slack.
    pub fn new(coords: Vec<f64>, beta: f64) -> Result<Self> {
        if !beta.is_finite() || beta <= 0.0 {
            return Err(Error::Config(format!(
                "beta must be positive and finite, got {beta}"
            )));
        }
        if coords.is_empty() || coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(
                "hyperbolic point needs finite, non-empty coordinates".into(),
            ));
        }
        let inner = lorentz_inner(&coords, &coords);
        let gross: f64 = coords.iter().map(|v| v * v).sum::<f64>() + beta;
        if (inner + beta).abs() > 1e-6 * gross {
            return Err(Error::Data(format!(
                "point is off the hyperboloid: <x,x> = {inner}, expected {}",
                -beta
            )));
        }
        if coords[0] < beta.sqrt() - 1e-9 * gross.sqrt() {
            return Err(Error::Data(format!(
                "point is on the lower sheet: x0 = {}, need at least {}",
                coords[0],
                beta.sqrt()
            )));
        }
        Ok(HyperbolicPoint { coords, beta })
    }

    /// Wraps coordinates that are on the sheet by construction.
    /// Used by the projections, whose outputs satisfy
    /// `x₀² - |spatial|² = β` by algebra.
    pub fn new_unchecked(coords: Vec<f64>, beta: f64) -> Self {
        HyperbolicPoint { coords, beta }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Time coordinate `x₀`.
    pub fn time(&self) -> f64 {
        self.coords[0]
    }

    /// Spatial part `x₁..xₙ`.
    pub fn spatial(&self) -> &[f64] {
        &self.coords[1..]
    }

    /// Spatial dimension `n`.
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }
}

/// The apex `(√β, 0, ..., 0)` of the sheet with spatial dimension `dim`.
pub fn apex(dim: usize, beta: f64) -> HyperbolicPoint {
    let mut coords = vec![0.0; dim + 1];
    coords[0] = beta.sqrt();
    HyperbolicPoint::new_unchecked(coords, beta)
}

/// The mirror image of `a` with the spatial part negated. Stays on the
/// sheet, keeps the same distance to the apex, and sits at distance
/// `2a₀² - 2β` from `a`: together the three points break the triangle
/// inequality whenever `a₀ > √β`.
pub fn spatial_reflection(a: &HyperbolicPoint) -> HyperbolicPoint {
    let mut coords = a.coords.clone();
    for v in &mut coords[1..] {
        *v = -*v;
    }
    HyperbolicPoint::new_unchecked(coords, a.beta)
}

/// The Lorentz distance `|⟨a, b⟩| - β`.
///
/// Non-negative up to floating-point cancellation; values as low as
/// about `-1e-9` can appear for nearly identical far-out points and
/// are deliberately not clamped. The two points must live on sheets of
/// the same curvature.
pub fn lorentz_distance(a: &HyperbolicPoint, b: &HyperbolicPoint) -> Result<f64> {
    if a.beta != b.beta {
        return Err(Error::Config(format!(
            "curvature mismatch: {} vs {}",
            a.beta, b.beta
        )));
    }
    if a.coords.len() != b.coords.len() {
        return Err(Error::Config(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(lorentz_inner(&a.coords, &b.coords).abs() - a.beta)
}

/// Gradient of `upstream * d_Lo(a, b)` with respect to both coordinate
/// vectors. At the (unreachable on-sheet) kink `⟨a, b⟩ = 0` the zero
/// subgradient is returned.
pub fn lorentz_distance_backward(
    a: &HyperbolicPoint,
    b: &HyperbolicPoint,
    upstream: f64,
) -> (Vec<f64>, Vec<f64>) {
    let inner = lorentz_inner(&a.coords, &b.coords);
    let s = if inner > 0.0 {
        upstream
    } else if inner < 0.0 {
        -upstream
    } else {
        0.0
    };
    let mut ga = vec![0.0; a.coords.len()];
    let mut gb = vec![0.0; b.coords.len()];
    ga[0] = s * -b.coords[0];
    gb[0] = s * -a.coords[0];
    for i in 1..a.coords.len() {
        ga[i] = s * b.coords[i];
        gb[i] = s * a.coords[i];
    }
    (ga, gb)
}

/// Lifts `x` onto `H(β)` by keeping it as the spatial part:
/// `x ↦ (√(Σxᵢ² + β), x)`.
pub fn vanilla_project(x: &[f64], beta: f64) -> HyperbolicPoint {
    assert!(beta > 0.0, "beta must be positive");
    let q: f64 = x.iter().map(|v| v * v).sum();
    let mut coords = Vec::with_capacity(x.len() + 1);
    coords.push((q + beta).sqrt());
    coords.extend_from_slice(x);
    HyperbolicPoint::new_unchecked(coords, beta)
}

/// Gradient of `upstream · vanilla_project(x)` with respect to `x`,
/// where `upstream` has one entry per output coordinate.
pub fn vanilla_project_backward(x: &[f64], beta: f64, upstream: &[f64]) -> Vec<f64> {
    assert_eq!(upstream.len(), x.len() + 1, "upstream must match output dim");
    let q: f64 = x.iter().map(|v| v * v).sum();
    let x0 = (q + beta).sqrt();
    x.iter()
        .zip(&upstream[1..])
        .map(|(&xi, &ui)| upstream[0] * xi / x0 + ui)
        .collect()
}

/// `sinh(r) / r`, switching to a four-term Taylor expansion for small
/// `r` where the direct quotient loses digits.
fn sinh_over_r(r: f64) -> f64 {
    if r < 1e-4 {
        let r2 = r * r;
        1.0 + r2 / 6.0 + r2 * r2 / 120.0 + r2 * r2 * r2 / 5040.0
    } else {
        r.sinh() / r
    }
}

/// Lifts `x` onto `H(β)` through a hyperbolic angle.
///
/// With `q = Σxᵢ²`, the angle is `r = q^{1/c}` clamped to
/// `[0, norm_clamp]`, and the output is
///
/// ```text
/// ( √β·cosh r,  x · √β·sinh(r)/√q )
/// ```
///
/// so the spatial norm is exactly `√β·sinh r` and membership holds by
/// construction. The zero vector maps to the apex.
pub fn cosh_project(x: &[f64], cfg: &ProjectionConfig) -> HyperbolicPoint {
    let sqrt_beta = cfg.beta.sqrt();
    let q: f64 = x.iter().map(|v| v * v).sum();
    let mut coords = vec![0.0; x.len() + 1];
    if q == 0.0 {
        coords[0] = sqrt_beta;
        return HyperbolicPoint::new_unchecked(coords, cfg.beta);
    }
    let m = q.sqrt();
    let r = q.powf(1.0 / cfg.c).min(cfg.norm_clamp);
    coords[0] = sqrt_beta * r.cosh();
    let k = sqrt_beta * sinh_over_r(r) * (r / m);
    for (out, &xi) in coords[1..].iter_mut().zip(x) {
        *out = xi * k;
    }
    HyperbolicPoint::new_unchecked(coords, cfg.beta)
}

/// Gradient of `upstream · cosh_project(x)` with respect to `x`.
///
/// When the angle is clamped its derivative is zero, matching the
/// forward clamp. At the origin the map is non-differentiable for
/// `c > 2`; the bounded subgradient from the magnitude pass-through
/// case (`spatial scale √β`) is returned, and the time coordinate
/// contributes nothing there because `cosh` is flat at zero.
pub fn cosh_project_backward(x: &[f64], cfg: &ProjectionConfig, upstream: &[f64]) -> Vec<f64> {
    assert_eq!(upstream.len(), x.len() + 1, "upstream must match output dim");
    let sqrt_beta = cfg.beta.sqrt();
    let q: f64 = x.iter().map(|v| v * v).sum();
    if q == 0.0 {
        return upstream[1..].iter().map(|&ui| ui * sqrt_beta).collect();
    }
    let m = q.sqrt();
    let r_raw = q.powf(1.0 / cfg.c);
    let clamped = r_raw > cfg.norm_clamp;
    let r = if clamped { cfg.norm_clamp } else { r_raw };
    // dr/dq, zero when the clamp is active.
    let dr_dq = if clamped {
        0.0
    } else {
        r_raw / (cfg.c * q)
    };
    let sinh_r = sinh_over_r(r) * r;
    let cosh_r = r.cosh();
    let k = sqrt_beta * sinh_r / m;
    // S is the upstream-weighted spatial dot product.
    let s_dot: f64 = upstream[1..].iter().zip(x).map(|(&u, &xi)| u * xi).sum();
    let dk_factor = sqrt_beta * (2.0 * cosh_r * dr_dq / m) - k / q;
    x.iter()
        .zip(&upstream[1..])
        .map(|(&xj, &uj)| {
            upstream[0] * sqrt_beta * sinh_r * dr_dq * 2.0 * xj + s_dot * xj * dk_factor + uj * k
        })
        .collect()
}

/// Plain Euclidean distance between equal-length vectors.
pub fn euclidean_distance(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "euclidean distance needs equal dims");
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Gradient of `upstream * |x - y|` with respect to `x` and `y`; the
/// zero subgradient is returned at `x = y`.
pub fn euclidean_distance_backward(x: &[f64], y: &[f64], upstream: f64) -> (Vec<f64>, Vec<f64>) {
    let d = euclidean_distance(x, y);
    if d == 0.0 {
        return (vec![0.0; x.len()], vec![0.0; y.len()]);
    }
    let gx: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| upstream * (a - b) / d)
        .collect();
    let gy = gx.iter().map(|g| -g).collect();
    (gx, gy)
}

/// Rewrites two points with (anti)parallel spatial parts in the
/// two-dimensional sheet spanned by the time axis and their common
/// spatial line. The second coordinate is a signed magnitude, so the
/// pair's Lorentz distance is preserved exactly.
///
/// Fails when the spatial parts are not collinear within `1e-9`
/// relative tolerance.
pub fn reduce_parallel_pair(
    a: &HyperbolicPoint,
    b: &HyperbolicPoint,
) -> Result<(HyperbolicPoint, HyperbolicPoint)> {
    if a.beta != b.beta {
        return Err(Error::Config(format!(
            "curvature mismatch: {} vs {}",
            a.beta, b.beta
        )));
    }
    let na: f64 = a.spatial().iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb: f64 = b.spatial().iter().map(|v| v * v).sum::<f64>().sqrt();
    let dot: f64 = a.spatial().iter().zip(b.spatial()).map(|(x, y)| x * y).sum();
    if (na * nb - dot.abs()).abs() > 1e-9 * (na * nb).max(1.0) {
        return Err(Error::Config(
            "spatial parts are not collinear; the planar reduction does not apply".into(),
        ));
    }
    let sign_b = if dot < 0.0 { -1.0 } else { 1.0 };
    let ra = HyperbolicPoint::new_unchecked(vec![a.time(), na], a.beta);
    let rb = HyperbolicPoint::new_unchecked(vec![b.time(), sign_b * nb], b.beta);
    Ok((ra, rb))
}

/// The closest point to `b` among all sheet points sharing `c`'s time
/// coordinate: same radius as `c`, spatial direction borrowed from
/// `b`. By Cauchy-Schwarz, `d_Lo(b, c) ≥ d_Lo(b, lower_bound_point(b, c))`
/// for every `c`, which turns rotations toward `b` into a lower bound.
///
/// If `b` sits at the apex its direction is undefined and `c`'s own
/// direction is used, making the bound an equality.
pub fn lower_bound_point(b: &HyperbolicPoint, c: &HyperbolicPoint) -> Result<HyperbolicPoint> {
    if b.beta != c.beta {
        return Err(Error::Config(format!(
            "curvature mismatch: {} vs {}",
            b.beta, c.beta
        )));
    }
    if b.coords.len() != c.coords.len() {
        return Err(Error::Config(format!(
            "dimension mismatch: {} vs {}",
            b.dim(),
            c.dim()
        )));
    }
    let nb: f64 = b.spatial().iter().map(|v| v * v).sum::<f64>().sqrt();
    let nc: f64 = c.spatial().iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut coords = vec![0.0; c.coords.len()];
    coords[0] = c.time();
    if nb > 0.0 {
        for (out, &bi) in coords[1..].iter_mut().zip(b.spatial()) {
            *out = bi / nb * nc;
        }
    } else {
        coords[1..].copy_from_slice(c.spatial());
    }
    Ok(HyperbolicPoint::new_unchecked(coords, c.beta))
}
