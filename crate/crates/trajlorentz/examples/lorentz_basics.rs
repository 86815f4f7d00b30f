//! A tour of the Lorentzian hyperboloid: the bilinear form, sheet
//! membership, the apex, and why distances here may legally break the
//! triangle inequality.
//!
//! Points live on the upper sheet of `<p, p> = -beta` under the inner
//! product that negates the first coordinate. The distance
//! `|<a, b>| - beta` is zero only for coinciding points and grows with
//! separation, but it is not a metric: a chain of short hops can be
//! cheaper than it "should" be, which is exactly the freedom needed to
//! mimic warping-style trajectory measures.
//!
//! Run: cargo run --example lorentz_basics

use trajlorentz::lorentz::{
    apex, cosh_project, lorentz_distance, lorentz_inner, lower_bound_point, spatial_reflection,
};
use trajlorentz::ProjectionConfig;

fn main() -> trajlorentz::Result<()> {
    let cfg = ProjectionConfig {
        beta: 1.0,
        c: 4.0,
        norm_clamp: 50.0,
    };

    // Lift three plane vectors onto the sheet.
    let a = cosh_project(&[0.6, -0.2], &cfg);
    let b = cosh_project(&[-1.1, 0.4], &cfg);
    let c = cosh_project(&[2.0, 1.5], &cfg);
    let top = apex(2, cfg.beta);

    println!("apex           {:?}", top.coords());
    println!("a              {:?}", a.coords());
    println!("membership <a, a> + beta = {:+.3e}", lorentz_inner(a.coords(), a.coords()) + cfg.beta);
    println!();

    let d_ab = lorentz_distance(&a, &b)?;
    let d_ba = lorentz_distance(&b, &a)?;
    let d_aa = lorentz_distance(&a, &a)?;
    println!("d(a, b) = {d_ab:.6}");
    println!("symmetric: {}", d_ab == d_ba);
    println!("d(a, a) = {d_aa:+.3e} (zero up to rounding)");
    println!("d(apex, a) = {:.6}", lorentz_distance(&top, &a)?);
    println!();

    // Reflecting the spatial part keeps the sheet and the distance to
    // the apex, but moves the point as far from the original as the
    // sheet allows at that height.
    let a_flip = spatial_reflection(&a);
    println!("reflected a    {:?}", a_flip.coords());
    println!(
        "d(apex, a) = d(apex, a') = {}",
        lorentz_distance(&top, &a)? == lorentz_distance(&top, &a_flip)?
    );
    println!("d(a, a') = {:.6}", lorentz_distance(&a, &a_flip)?);
    println!();

    // Unlike a metric, the three pairwise distances obey no triangle
    // law. Whether a triple violates depends on where the points sit.
    let d_ac = lorentz_distance(&a, &c)?;
    let d_bc = lorentz_distance(&b, &c)?;
    println!("d(a, c) = {d_ac:.6}, d(b, c) = {d_bc:.6}");
    println!(
        "triangle check d(a, c) <= d(a, b) + d(b, c): {}",
        d_ac <= d_ab + d_bc
    );

    // Of all sheet points at c's height, the one whose spatial part
    // points toward b is nearest to b. Swinging c around to that spot
    // can only shrink the distance, which gives a clean lower bound.
    let w = lower_bound_point(&b, &c)?;
    let d_bw = lorentz_distance(&b, &w)?;
    println!();
    println!("c swung toward b: {:?}", w.coords());
    println!(
        "d(b, c) = {d_bc:.6} >= d(b, w) = {:.6}: {}",
        d_bw,
        d_bc >= d_bw - 1e-12
    );
    Ok(())
}
