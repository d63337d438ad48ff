//! Brackets the Picard blow-up parameter on the reference interval between
//! the existence threshold `lambda*` (from measured constants) and the
//! non-existence thresholds `lambda**` of the half-Laplacian and Stein
//! problems.
//!
//! Run with `cargo run --release --example lambda_sweep`.

use frackpz::kpz::{lambda_sweep, thresholds, IterationOptions, DEFAULT_SAMPLES};
use frackpz::nonexist::{dyadic_bumps, lambda_starstar_kpz1, lambda_starstar_kpz3, DEFAULT_BUMPS};
use frackpz::{make_grid, Domain, Field, GradientVariant, GreenOperator, ProblemSpec};

fn main() -> frackpz::Result<()> {
    let grid = make_grid(Domain::interval(-1.0, 1.0)?, 2.0 / 512.0)?;
    let (s, t, q, m) = (0.6, 0.5, 2.0, 4.0);
    let green = GreenOperator::new(&grid, s)?;
    let one = Field::constant(&grid, 1.0);
    let kpz1 = lambda_starstar_kpz1(&grid, s, t, q, 1.0, &one)?;
    let kpz3 = lambda_starstar_kpz3(&grid, s, t, q, 1.0, &one, &dyadic_bumps(&grid, DEFAULT_BUMPS)?)?;
    for (variant, upper) in [
        (GradientVariant::HalfLaplacian, Some(kpz1.lambda_starstar)),
        (GradientVariant::RieszGradient, None),
        (GradientVariant::Stein, Some(kpz3.lambda_starstar)),
    ] {
        let spec = ProblemSpec::constant(&grid, s, t, q, 0.0, 1.0, 1.0, m, variant)?;
        let (bundle, _) = thresholds(&spec, &green, DEFAULT_SAMPLES, 42)?;
        let hi = upper.unwrap_or(1.0) * 1.5;
        let lambdas: Vec<f64> = (0..=30).map(|k| hi * k as f64 / 30.0).collect();
        let mut rep = lambda_sweep(&spec, &lambdas, &green, IterationOptions::default())?;
        rep.lambda_star = Some(bundle.lambda_star);
        rep.lambda_starstar = upper;
        println!("{}:", variant.name());
        for row in &rep.rows {
            println!(
                "  lambda = {:.5}  converged = {:5}  iterations = {:3}  ||u||_inf = {:.4e}",
                row.lambda, row.converged, row.iterations, row.final_linf
            );
        }
        println!(
            "  lambda* = {:.5e} <= lambda_c = {:?}  vs  lambda** = {:?}  (monotone prefix: {})",
            bundle.lambda_star, rep.largest_converging, upper, rep.monotone_prefix
        );
    }
    Ok(())
}
