//! Applies the discrete fractional Laplacian to the Getoor profile
//! `(1 - |x|^2)_+^sigma` on the unit ball, whose exact image is a constant,
//! and prints the interior error under refinement.
//!
//! Run with `cargo run --release --example getoor_validation`.

use std::time::Instant;

use frackpz::fracops::{apply_frac_laplacian, getoor_constant};
use frackpz::{make_grid, Domain, Field};

fn interior_error(dim: usize, sigma: f64, h: f64, margin: f64) -> frackpz::Result<(usize, f64)> {
    let grid = make_grid(Domain::unit_ball(dim), h)?;
    let u = Field::from_fn(&grid, |p| (1.0 - p[0] * p[0] - p[1] * p[1]).max(0.0).powf(sigma));
    let lu = apply_frac_laplacian(&u, sigma)?;
    let exact = getoor_constant(dim, sigma);
    let err = lu
        .values()
        .iter()
        .zip(grid.delta())
        .filter(|(_, d)| **d > margin)
        .map(|(v, _)| ((v - exact) / exact).abs())
        .fold(0.0, f64::max);
    Ok((grid.len(), err))
}

fn main() -> frackpz::Result<()> {
    println!("interval (-1,1), sigma = 1/2, exact value 1");
    for n in [512, 1024, 2048] {
        let t0 = Instant::now();
        let (nodes, err) = interior_error(1, 0.5, 2.0 / n as f64, 0.05)?;
        println!("  n = {nodes:5}  max rel. error (delta > 0.05) = {err:.3e}  [{:.2?}]", t0.elapsed());
    }
    println!("unit disk, sigma = 0.4, exact value {:.6}", getoor_constant(2, 0.4));
    for inv in [16, 24, 32, 48] {
        let t0 = Instant::now();
        let h = 1.0 / inv as f64;
        for margin in [0.05, 0.1, 0.2] {
            let (nodes, err) = interior_error(2, 0.4, h, margin)?;
            println!(
                "  h = 1/{inv:2}  nodes = {nodes:5}  max rel. error (delta > {margin}) = {err:.3e}  [{:.2?}]",
                t0.elapsed()
            );
        }
    }
    Ok(())
}
