//! The three nonlocal gradients on a planar field: the half t-Laplacian,
//! the Riesz t-gradient and the Stein t-functional, plus the Riesz potential
//! and an exterior evaluation of the half t-Laplacian.
//!
//! Run with `cargo run --release --example nonlocal_gradients`.

use frackpz::fracops::{apply_half_laplacian, half_laplacian, riesz_gradient, riesz_potential, stein_functional, stein_functional_at};
use frackpz::{make_grid, Domain, Field};

fn main() -> frackpz::Result<()> {
    let grid = make_grid(Domain::square([-1.0, -1.0], 2.0)?, 1.0 / 16.0)?;
    let u = Field::from_fn(&grid, |p| (1.0 - p[0] * p[0]) * (1.0 - p[1] * p[1]) * (1.0 + 0.5 * p[1]));
    println!("u = (1 - x^2)(1 - y^2)(1 + y/2) on (-1,1)^2, {} nodes", grid.len());
    for t in [0.3, 0.5, 0.8] {
        let lap = half_laplacian(&u, t)?;
        let grad = riesz_gradient(&u, t)?;
        let stein = stein_functional(&u, t)?;
        let centre = grid.cell_containing([1e-9, 1e-9]).expect("center cell is a node");
        let g = grad.values()[centre];
        println!(
            "  t = {t}: max |(-Delta)^(t/2) u| = {:.4}  max |grad^t u| = {:.4}  max D_t u = {:.4}  grad^t u near 0 = ({:.4}, {:.4})",
            lap.max_abs(),
            grad.magnitude().max(),
            stein.max(),
            g[0],
            g[1]
        );
        let outside = [[1.5, 0.0], [3.0, 3.0]];
        let ext = apply_half_laplacian(&u, t, &outside)?;
        let ext_stein = stein_functional_at(&u, t, &outside)?;
        println!("        exterior (-Delta)^(t/2) u = {:.4e}, {:.4e}; exterior D_t u = {:.4e}, {:.4e}", ext[0], ext[1], ext_stein[0], ext_stein[1]);
    }
    for alpha in [0.5, 1.0, 1.5] {
        let j = riesz_potential(&Field::constant(&grid, 1.0), alpha)?;
        println!("  J_{alpha} 1: max {:.4}, min {:.4}", j.max(), j.min());
    }
    Ok(())
}
