//! Evaluates every discrete function-space quantity on one field: Lebesgue,
//! Gagliardo, Sobolev and Stein norms, the Holder seminorm, and the
//! interpolation inequality between Lebesgue exponents.
//!
//! Run with `cargo run --release --example norms_tour`.

use frackpz::norms::{interpolation_defect, interpolation_theta, norm_report, sobolev_norm, NormKind};
use frackpz::{make_grid, Domain, Field};

fn main() -> frackpz::Result<()> {
    let grid = make_grid(Domain::disk([0.0, 0.0], 1.0)?, 1.0 / 24.0)?;
    let u = Field::from_fn(&grid, |p| (1.0 - p[0] * p[0] - p[1] * p[1]).max(0.0).sqrt() * (1.0 + p[0]));
    println!("u = (1 - |x|^2)^(1/2) (1 + x1) on the unit disk, {} nodes", grid.len());
    let kinds = [
        NormKind::Lebesgue { p: 1.0 },
        NormKind::Lebesgue { p: 2.0 },
        NormKind::Lebesgue { p: f64::INFINITY },
        NormKind::Gagliardo { sigma: 0.25, p: 2.0 },
        NormKind::Gagliardo { sigma: 0.45, p: 2.0 },
        NormKind::Stein { sigma: 0.3, p: 2.0 },
        NormKind::Stein { sigma: 0.3, p: 4.0 },
        NormKind::Holder { sigma: 0.5 },
    ];
    for kind in kinds {
        let r = norm_report(&u, kind)?;
        println!("  {}", serde_json::to_string(&r).expect("report serializes"));
    }
    println!("  W^(0.45,2) norm = {:.6}", sobolev_norm(&u, 0.45, 2.0)?);

    let (q, eta, r) = (2.0, 0.5, 6.0);
    let theta = interpolation_theta(q, eta, r)?;
    println!(
        "interpolation 1/q = theta/(1+eta) + (1-theta)/r with q = {q}, eta = {eta}, r = {r}: theta = {theta:.4}, defect = {:.3e}",
        interpolation_defect(&u, q, eta, r)?
    );
    Ok(())
}
