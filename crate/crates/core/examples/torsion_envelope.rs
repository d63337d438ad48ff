//! Fractional torsion functions `(-Delta)^sigma phi = 1` on the three domain
//! shapes, their boundary envelopes `phi ~ delta^sigma`, and the Holder
//! seminorm of the interval torsion under refinement.
//!
//! Run with `cargo run --release --example torsion_envelope`.

use frackpz::nonexist::{boundary_envelope, torsion_function};
use frackpz::norms::holder_seminorm;
use frackpz::{make_grid, Domain};

fn main() -> frackpz::Result<()> {
    println!("interval (-1,1), sigma = 1/2: exact phi = (1 - x^2)^(1/2), envelope range [1, sqrt 2]");
    for n in [256, 512, 1024, 2048] {
        let grid = make_grid(Domain::interval(-1.0, 1.0)?, 2.0 / n as f64)?;
        let phi = torsion_function(&grid, 0.5)?;
        let env = boundary_envelope(&phi, 0.5)?;
        let mid = phi.values()[n / 2];
        let holder = holder_seminorm(&phi, 0.5)?;
        println!(
            "  n = {n:4}  phi(0) = {mid:.5}  ratio range [{:.4}, {:.4}]  C0 = {:.4}  [phi]_(1/2) = {holder:.4}",
            env.low,
            env.high,
            env.certified()
        );
    }
    let shapes = [
        ("unit disk", Domain::disk([0.0, 0.0], 1.0)?, 1.0 / 24.0),
        ("unit square", Domain::square([0.0, 0.0], 1.0)?, 1.0 / 32.0),
    ];
    for (name, domain, h) in shapes {
        println!("{name}, h = {h:.4}");
        let grid = make_grid(domain, h)?;
        for sigma in [0.25, 0.5, 0.75] {
            let phi = torsion_function(&grid, sigma)?;
            let env = boundary_envelope(&phi, sigma)?;
            println!(
                "  sigma = {sigma:.2}  max phi = {:.5}  min phi = {:.3e}  C0 = {:.4} over {} nodes",
                phi.max(),
                phi.min(),
                env.certified(),
                env.nodes
            );
        }
    }
    Ok(())
}
