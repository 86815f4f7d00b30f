//! The per-pair gate that decides how Lorentzian a distance should be.
//!
//! Each embedding carries two small factor vectors besides its
//! coordinates. For a pair, the softplus of each factor dot product
//! becomes a vote: `alpha = sp(u_a . u_b) / (sp(u_a . u_b) + sp(v_a . v_b))`,
//! and the pair's distance is `alpha * d_Lo + (1 - alpha) * d_Eu`.
//! Pairs whose measure behavior is warping-like can learn factors that
//! push alpha toward 1 (Lorentz wins), metric-like pairs push it
//! toward 0, and fresh random factors start near an even split.
//!
//! Run: cargo run --example fusion_gate

use trajlorentz::fusion::{alpha_lo, fusion_distance};
use trajlorentz::{FactorEmbedding, ProjectionConfig};

fn show(label: &str, xa: &[f64], xb: &[f64], fa: &FactorEmbedding, fb: &FactorEmbedding) {
    let cfg = ProjectionConfig::default();
    let pair = fusion_distance(xa, xb, fa, fb, &cfg);
    println!(
        "{label:<26} alpha {:.3}   d_lo {:.3}   d_eu {:.3}   fused {:.3}",
        pair.alpha_lo, pair.d_lo, pair.d_eu, pair.d_fu
    );
}

fn main() {
    let xa = [0.8, -0.3, 1.1];
    let xb = [-0.4, 0.9, 0.2];

    // Strongly agreeing Lorentz factors against sleepy Euclidean ones:
    // the gate leans Lorentzian.
    show(
        "lorentz factors agree",
        &xa,
        &xb,
        &FactorEmbedding::new(vec![2.0, 1.5], vec![0.1, -0.1]),
        &FactorEmbedding::new(vec![1.8, 1.2], vec![-0.2, 0.1]),
    );

    // The mirror image leans Euclidean.
    show(
        "euclid factors agree",
        &xa,
        &xb,
        &FactorEmbedding::new(vec![0.1, -0.1], vec![2.0, 1.5]),
        &FactorEmbedding::new(vec![-0.2, 0.1], vec![1.8, 1.2]),
    );

    // Near-zero factors, the state right after initialization: both
    // softplus votes sit at ln 2 and the blend is an even split.
    show(
        "fresh init",
        &xa,
        &xb,
        &FactorEmbedding::zeros(2),
        &FactorEmbedding::zeros(2),
    );

    // Anti-aligned Lorentz factors actively veto the Lorentz half.
    show(
        "lorentz factors oppose",
        &xa,
        &xb,
        &FactorEmbedding::new(vec![2.0, 1.5], vec![0.3, 0.3]),
        &FactorEmbedding::new(vec![-2.0, -1.5], vec![0.3, 0.3]),
    );

    println!();
    let fa = FactorEmbedding::new(vec![2.0, 1.5], vec![0.1, -0.1]);
    let fb = FactorEmbedding::new(vec![1.8, 1.2], vec![-0.2, 0.1]);
    println!(
        "gate alone for the agreeing pair: alpha = {:.4}",
        alpha_lo(&fa, &fb)
    );
    // Zero up to the documented cancellation floor of the Lorentz
    // half, which is left unclamped on purpose.
    println!(
        "identical coordinates keep a zero fused distance no matter \
         the gate: {:+.1e}",
        fusion_distance(&xa, &xa, &fa, &fb, &ProjectionConfig::default()).d_fu
    );
}
