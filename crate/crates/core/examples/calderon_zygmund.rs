//! Measures the two constants behind the existence thresholds: the
//! Calderon-Zygmund constant of `|||G_s h|||_{t,p} <= C ||h||_{L^m}` and the
//! embedding constant between Sobolev scales, at two resolutions.
//!
//! Run with `cargo run --release --example calderon_zygmund`.

use frackpz::norms::embedding_constant;
use frackpz::poisson::estimate_cz_constant;
use frackpz::{make_grid, Domain, GreenOperator};

fn main() -> frackpz::Result<()> {
    let (s, t, p, m) = (0.6, 0.6, 4.0, 10.0);
    println!("interval (-1,1), s = {s}, t = {t}, p = {p}, m = {m}");
    for n in [256, 512, 1024] {
        let grid = make_grid(Domain::interval(-1.0, 1.0)?, 2.0 / n as f64)?;
        let green = GreenOperator::new(&grid, s)?;
        let cz = estimate_cz_constant(&green, t, p, m, 50, 42)?;
        let emb = embedding_constant(&grid, 0.5, 0.6, 4.0, 50, 42, &[])?;
        println!(
            "  n = {n:4}  C~ = {:.5} (h = 1 alone: {:.5})  k~(0.5 <= 0.6, p = 4) = {:.5}",
            cz.constant, cz.constant_ratio, emb.constant
        );
    }
    let disk = make_grid(Domain::unit_ball(2), 1.0 / 16.0)?;
    let green = GreenOperator::new(&disk, 0.6)?;
    let cz = estimate_cz_constant(&green, 0.65, 4.0, 10.0, 50, 42)?;
    println!("unit disk, h = 1/16, s = 0.6, t = 0.65: C~ = {:.5} over {} samples", cz.constant, cz.samples);
    match estimate_cz_constant(&green, 0.65, 1.0, 10.0, 50, 42) {
        Ok(_) => println!("unexpected: p = 1 accepted"),
        Err(e) => println!("p = 1 is rejected: {e}"),
    }
    Ok(())
}
