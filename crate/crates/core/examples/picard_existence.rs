//! Existence side of the problem on the reference interval: picks `r`,
//! measures the Calderon-Zygmund and embedding constants, evaluates the
//! threshold `lambda*` and the ball radius, then runs Picard iteration at
//! `lambda*/2` for every gradient variant and traces the ball norm.
//!
//! Run with `cargo run --release --example picard_existence`.

use std::time::Instant;

use frackpz::kpz::{iterate, thresholds, BallNorm, IterationOptions, DEFAULT_SAMPLES};
use frackpz::{make_grid, Domain, GradientVariant, GreenOperator, ProblemSpec};

fn main() -> frackpz::Result<()> {
    let grid = make_grid(Domain::interval(-1.0, 1.0)?, 2.0 / 512.0)?;
    let (s, t, q, m) = (0.6, 0.5, 2.0, 4.0);
    let green = GreenOperator::new(&grid, s)?;
    for variant in GradientVariant::ALL {
        let t0 = Instant::now();
        let spec = ProblemSpec::constant(&grid, s, t, q, 0.0, 1.0, 1.0, m, variant)?;
        let (bundle, constants) = thresholds(&spec, &green, DEFAULT_SAMPLES, 42)?;
        println!("{}:", variant.name());
        println!(
            "  r = {:.4} in ({:.4}, {}), gamma = {}, C~ = {:.5}, k~ = {:.5}",
            bundle.r.r, bundle.r.lower, bundle.r.upper, bundle.gamma, constants.cz.constant, constants.embedding.constant
        );
        println!(
            "  lambda* = {:.6e}, ell = {:.6e}, ball radius = {:.6e}, identity residual = {:.1e}",
            bundle.lambda_star, bundle.ell, bundle.ball_radius, bundle.identity_residual
        );
        let ball = BallNorm::for_spec(&spec, bundle.r.r);
        let spec = spec.with_lambda(0.5 * bundle.lambda_star)?;
        let opts = IterationOptions {
            ball: Some((ball, bundle.ball_radius)),
            ..IterationOptions::default()
        };
        let (u, rep) = iterate(&spec, &green, None, opts)?;
        let peak = rep.ball_trace.iter().cloned().fold(0.0, f64::max);
        println!(
            "  Picard at lambda*/2: converged = {} in {} steps, ||u||_inf = {:.4e}, weak residual = {:.2e}",
            rep.converged,
            rep.iterations,
            u.max_abs(),
            rep.residual.unwrap_or(f64::NAN)
        );
        println!(
            "  max ball norm = {:.4e} (radius {:.4e}, inside = {:?})  [{:.2?}]",
            peak,
            bundle.ball_radius,
            rep.inside_ball,
            t0.elapsed()
        );
    }
    Ok(())
}
