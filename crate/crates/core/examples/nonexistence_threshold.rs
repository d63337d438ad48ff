//! Non-existence thresholds: the torsion-based `lambda**` of the
//! half-Laplacian problem against its closed form `4/pi^2` (s = t = 1/2,
//! q = 2, f = 1), and the bump-family estimate for the Stein problem.
//!
//! Run with `cargo run --release --example nonexistence_threshold`.

use std::f64::consts::PI;

use frackpz::nonexist::{dyadic_bumps, lambda_starstar_kpz1, lambda_starstar_kpz3, DEFAULT_BUMPS};
use frackpz::{make_grid, Domain, Field};

fn main() -> frackpz::Result<()> {
    println!("half-Laplacian problem, s = t = 1/2, q = 2, mu1 = 1, f = 1; closed form 4/pi^2 = {:.6}", 4.0 / (PI * PI));
    for n in [256, 512, 1024, 2048] {
        let grid = make_grid(Domain::interval(-1.0, 1.0)?, 2.0 / n as f64)?;
        let b = lambda_starstar_kpz1(&grid, 0.5, 0.5, 2.0, 1.0, &Field::constant(&grid, 1.0))?;
        println!(
            "  n = {n:4}  lambda** = {:.6}  int psi^2/phi = {:.5}  int f phi = {:.5}  C_q = {}  C0 = {:.4}",
            b.lambda_starstar, b.psi_integral, b.f_pairing, b.young_constant, b.c0
        );
    }

    let grid = make_grid(Domain::interval(-1.0, 1.0)?, 2.0 / 512.0)?;
    let one = Field::constant(&grid, 1.0);
    let b = lambda_starstar_kpz1(&grid, 0.6, 0.5, 2.0, 1.0, &one)?;
    println!("half-Laplacian problem, s = 0.6, t = 0.5: lambda** = {:.6}", b.lambda_starstar);

    let k = lambda_starstar_kpz3(&grid, 0.6, 0.5, 2.0, 1.0, &one, &dyadic_bumps(&grid, DEFAULT_BUMPS)?)?;
    println!("Stein problem, s = 0.6, t = 0.5, constant {} = {:.6}", k.constant.formula, k.constant.value);
    for (j, r) in k.ratios.iter().enumerate() {
        match r {
            Some(r) => println!("  bump {j}: ratio {r:.6}"),
            None => println!("  bump {j}: skipped (zero pairing with f)"),
        }
    }
    println!("  lambda** (upper estimate of the infimum) = {:.6} at bump {}", k.lambda_starstar, k.argmin);

    let disk = make_grid(Domain::unit_ball(2), 1.0 / 24.0)?;
    let one = Field::constant(&disk, 1.0);
    let b = lambda_starstar_kpz1(&disk, 0.6, 0.5, 2.0, 1.0, &one)?;
    let k = lambda_starstar_kpz3(&disk, 0.6, 0.5, 2.0, 1.0, &one, &dyadic_bumps(&disk, DEFAULT_BUMPS)?)?;
    println!("unit disk, h = 1/24: half-Laplacian lambda** = {:.5}, Stein lambda** = {:.5}", b.lambda_starstar, k.lambda_starstar);
    Ok(())
}
