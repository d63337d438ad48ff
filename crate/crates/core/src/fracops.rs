//! Nonlocal operators on grid fields.
//!
//! Every operator is built from the unit-cell kernel tables of
//! [`crate::quadrature`], so the weight between nodes `i` and `j` is
//! `w_ij = int_{cell_j} |x_i - y|^{-(N + beta)} dy` with the same-cell term
//! dropped for hypersingular kernels. The exterior of the grid enters through
//! per-node tails `int_{R^N \ cells} |x_i - y|^{-(N+beta)} dy`, which carry the
//! exterior Dirichlet condition.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::Mat;
use rayon::prelude::*;
use statrs::function::gamma::gamma;

use crate::domain_grid::{Field, Grid, Point};
use crate::error::{check_unit_open, Error, Result};
use crate::quadrature::{exterior_tails, odd_table, point_cell_power, power_table};

/// Normalization constants of the fractional Laplacian and the Riesz gradient.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct KernelConstants {
    /// `a(N, sigma) = -2^{2 sigma} Gamma(N/2 + sigma) / (pi^{N/2} Gamma(-sigma))`.
    pub a: f64,
    /// `mu(N, sigma) = 2^sigma Gamma((N + sigma + 1)/2) / (pi^{N/2} Gamma((1 - sigma)/2))`.
    pub mu: f64,
}

pub fn kernel_constants(dim: usize, sigma: f64) -> Result<KernelConstants> {
    check_unit_open("sigma", sigma)?;
    Ok(KernelConstants {
        a: laplacian_constant(dim, sigma),
        mu: gradient_constant(dim, sigma),
    })
}

pub(crate) fn laplacian_constant(dim: usize, sigma: f64) -> f64 {
    let n = dim as f64;
    -(2.0_f64).powf(2.0 * sigma) * gamma(0.5 * n + sigma) / (PI.powf(0.5 * n) * gamma(-sigma))
}

pub(crate) fn gradient_constant(dim: usize, sigma: f64) -> f64 {
    let n = dim as f64;
    (2.0_f64).powf(sigma) * gamma(0.5 * (n + sigma + 1.0)) / (PI.powf(0.5 * n) * gamma(0.5 * (1.0 - sigma)))
}

/// `(-Delta)^sigma (1 - |x|^2)_+^sigma` on the unit ball, a constant.
pub fn getoor_constant(dim: usize, sigma: f64) -> f64 {
    let n = dim as f64;
    (2.0_f64).powf(2.0 * sigma) * gamma(sigma + 1.0) * gamma(0.5 * n + sigma) / gamma(0.5 * n)
}

/// Dense matrix of `(-Delta)^sigma` on a grid.
///
/// `M_ii = a (sum_j w_ij + tail_i)`, `M_ij = -a w_ij`. Each entry is a single
/// table lookup, so `M_ij == M_ji` bit for bit.
pub struct OperatorMatrix {
    grid: Arc<Grid>,
    sigma: f64,
    matrix: Mat<f64>,
    tail: Vec<f64>,
}

impl std::fmt::Debug for OperatorMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OperatorMatrix")
            .field("sigma", &self.sigma)
            .field("n", &self.grid.len())
            .finish()
    }
}

/// Off-diagonal weight sums and scaled tails for order `sigma`.
fn row_data(grid: &Grid, beta: f64) -> (Vec<f64>, Arc<Vec<f64>>) {
    let table = power_table(grid, beta);
    let scale = table.scale(grid.spacing());
    let tails = exterior_tails(grid, beta);
    let sums = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let ki = grid.lattice_index(i);
            let mut s = 0.0;
            for kj in grid.lattice() {
                s += table.unit(kj[0] - ki[0], kj[1] - ki[1]);
            }
            scale * s
        })
        .collect();
    (sums, tails)
}

pub fn assemble_frac_laplacian(grid: &Arc<Grid>, sigma: f64) -> Result<OperatorMatrix> {
    check_unit_open("sigma", sigma)?;
    let beta = 2.0 * sigma;
    let a = laplacian_constant(grid.dimension(), sigma);
    let table = power_table(grid, beta);
    let scale = table.scale(grid.spacing());
    let (sums, tails) = row_data(grid, beta);
    let n = grid.len();
    let lat = grid.lattice();
    let mut matrix = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        let kj = lat[j];
        let col = matrix.col_mut(j).try_as_col_major_mut().expect("contiguous column");
        let col = col.as_slice_mut();
        for (i, c) in col.iter_mut().enumerate() {
            *c = if i == j {
                a * (sums[j] + tails[j])
            } else {
                let ki = lat[i];
                -a * scale * table.unit(kj[0] - ki[0], kj[1] - ki[1])
            };
        }
    }
    Ok(OperatorMatrix {
        grid: Arc::clone(grid),
        sigma,
        matrix,
        tail: tails.iter().map(|t| a * t).collect(),
    })
}

impl OperatorMatrix {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn order(&self) -> f64 {
        self.sigma
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn matrix(&self) -> &Mat<f64> {
        &self.matrix
    }

    /// Exterior contribution `a tail_i` to the diagonal.
    pub fn tail(&self) -> &[f64] {
        &self.tail
    }

    /// `sum_j M_ij`, equal to the scaled exterior tail.
    pub fn row_sum(&self, i: usize) -> f64 {
        self.column(i).iter().sum()
    }

    fn column(&self, j: usize) -> &[f64] {
        self.matrix
            .col(j)
            .try_as_col_major()
            .expect("contiguous column")
            .as_slice()
    }

    /// `M u` using symmetric columns as rows; rows are independent and each
    /// row sum is sequential, so results are deterministic.
    pub fn apply_values(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.len() {
            return Err(Error::GridMismatch(u.len(), self.len()));
        }
        Ok((0..self.len())
            .into_par_iter()
            .map(|i| self.column(i).iter().zip(u).map(|(m, x)| m * x).sum())
            .collect())
    }

    pub fn apply(&self, u: &Field) -> Result<Field> {
        if !Arc::ptr_eq(u.grid(), &self.grid) {
            return Err(Error::GridMismatch(u.len(), self.len()));
        }
        Field::new(Arc::clone(&self.grid), self.apply_values(u.values())?)
    }

    /// Discrete energy `h^N u^T M u`.
    pub fn quadratic_form(&self, u: &Field) -> Result<f64> {
        let mu = self.apply(u)?;
        u.inner(&mu)
    }
}

/// Matrix-free `(-Delta)^sigma u` at every node.
pub fn apply_frac_laplacian(u: &Field, sigma: f64) -> Result<Field> {
    check_unit_open("sigma", sigma)?;
    let grid = u.grid();
    let beta = 2.0 * sigma;
    let a = laplacian_constant(grid.dimension(), sigma);
    let table = power_table(grid, beta);
    let scale = table.scale(grid.spacing());
    let tails = exterior_tails(grid, beta);
    let lat = grid.lattice();
    let v = u.values();
    let out = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let ki = lat[i];
            let mut s = 0.0;
            for (kj, vj) in lat.iter().zip(v) {
                s += table.unit(kj[0] - ki[0], kj[1] - ki[1]) * (v[i] - vj);
            }
            a * (scale * s + tails[i] * v[i])
        })
        .collect();
    Field::new(Arc::clone(grid), out)
}

/// Minimum distance to the boundary for exterior evaluation points, in units of `h`.
const EXTERIOR_CLEARANCE: f64 = 0.5;

/// Classifies an evaluation point: `Ok(Some(i))` for node `i`, `Ok(None)` for
/// an admissible exterior point.
fn classify_point(grid: &Grid, p: Point) -> Result<Option<usize>> {
    if let Some(i) = grid.node_matching(p) {
        return Ok(Some(i));
    }
    let bd = grid.domain().boundary_distance(p);
    if !bd.exterior && bd.distance > 0.0 {
        return Err(Error::NotANode(p));
    }
    let limit = EXTERIOR_CLEARANCE * grid.spacing();
    if bd.distance < limit || grid.cell_containing(p).is_some() {
        return Err(Error::BoundaryLayerPoint {
            point: p,
            distance: bd.distance,
            limit,
        });
    }
    Ok(None)
}

/// `(-Delta)^{t/2} u` at every node.
pub fn half_laplacian(u: &Field, t: f64) -> Result<Field> {
    check_unit_open("t", t)?;
    apply_frac_laplacian(u, 0.5 * t)
}

/// `(-Delta)^{t/2} u` at arbitrary points: grid nodes or exterior points at
/// least `h/2` from the boundary. Outside the domain `u(x) = 0`, so the
/// principal value reduces to `-a(N, t/2) int u(y) |x - y|^{-(N+t)} dy`.
pub fn apply_half_laplacian(u: &Field, t: f64, points: &[Point]) -> Result<Vec<f64>> {
    check_unit_open("t", t)?;
    let grid = u.grid();
    let kinds = points.iter().map(|&p| classify_point(grid, p)).collect::<Result<Vec<_>>>()?;
    let interior = if kinds.iter().any(Option::is_some) {
        Some(half_laplacian(u, t)?)
    } else {
        None
    };
    let a = laplacian_constant(grid.dimension(), 0.5 * t);
    let e = grid.dimension() as f64 + t;
    Ok(points
        .iter()
        .zip(&kinds)
        .map(|(&p, kind)| match kind {
            Some(i) => interior.as_ref().expect("interior values computed").values()[*i],
            None => -a * exterior_potential(u, p, e),
        })
        .collect())
}

/// `sum_j u_j int_{cell_j} |p - y|^{-e} dy` for a point outside every cell.
fn exterior_potential(u: &Field, p: Point, e: f64) -> f64 {
    let grid = u.grid();
    let (dim, h) = (grid.dimension(), grid.spacing());
    grid.nodes()
        .iter()
        .zip(u.values())
        .map(|(&c, &v)| if v == 0.0 { 0.0 } else { v * point_cell_power(dim, p, c, h, e) })
        .sum()
}

/// One `N`-vector per node; only the first `N` components are meaningful.
#[derive(Clone, Debug)]
pub struct VectorField {
    grid: Arc<Grid>,
    values: Vec<[f64; 2]>,
}

impl VectorField {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    pub fn components(&self) -> usize {
        self.grid.dimension()
    }

    /// Euclidean magnitude per node.
    pub fn magnitude(&self) -> Field {
        let v = self.values.iter().map(|c| c[0].hypot(c[1])).collect();
        Field::new(Arc::clone(&self.grid), v).expect("length preserved")
    }
}

/// Riesz t-gradient `nabla^t u`.
///
/// With `V_ij = int_{cell_j} (x_i - y) |x_i - y|^{-(N+t+1)} dy`, the exterior
/// tail is `-sum_{j != i} V_ij` because the odd kernel integrates to zero
/// over `R^N` minus the centered cell. The node value
/// `mu [sum_j V_ij (u_i - u_j) + u_i tail_i]` therefore reduces to
/// `-mu sum_j V_ij u_j`.
pub fn riesz_gradient(u: &Field, t: f64) -> Result<VectorField> {
    check_unit_open("t", t)?;
    let grid = u.grid();
    let mu = gradient_constant(grid.dimension(), t);
    let table = odd_table(grid, t);
    let scale = table.scale(grid.spacing());
    let lat = grid.lattice();
    let v = u.values();
    let values = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let ki = lat[i];
            let mut g = [0.0; 2];
            for (kj, vj) in lat.iter().zip(v) {
                if *vj != 0.0 {
                    let w = table.unit(ki[0] - kj[0], ki[1] - kj[1]);
                    g[0] += w[0] * vj;
                    g[1] += w[1] * vj;
                }
            }
            [-mu * scale * g[0], -mu * scale * g[1]]
        })
        .collect();
    Ok(VectorField {
        grid: Arc::clone(grid),
        values,
    })
}

/// Stein t-functional
/// `D_t u(x) = sqrt(a(N,t)/2 int (u(x) - u(y))^2 |x - y|^{-(N+2t)} dy)` at every node.
pub fn stein_functional(u: &Field, t: f64) -> Result<Field> {
    check_unit_open("t", t)?;
    let grid = u.grid();
    let beta = 2.0 * t;
    let a = laplacian_constant(grid.dimension(), t);
    let table = power_table(grid, beta);
    let scale = table.scale(grid.spacing());
    let tails = exterior_tails(grid, beta);
    let lat = grid.lattice();
    let v = u.values();
    let out = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let ki = lat[i];
            let mut s = 0.0;
            for (kj, vj) in lat.iter().zip(v) {
                let d = v[i] - vj;
                s += table.unit(kj[0] - ki[0], kj[1] - ki[1]) * d * d;
            }
            (0.5 * a * (scale * s + tails[i] * v[i] * v[i])).sqrt()
        })
        .collect();
    Field::new(Arc::clone(grid), out)
}

/// Stein t-functional at exterior points (at least `h/2` from the boundary),
/// where `u(x) = 0`.
pub fn stein_functional_at(u: &Field, t: f64, points: &[Point]) -> Result<Vec<f64>> {
    check_unit_open("t", t)?;
    let grid = u.grid();
    let a = laplacian_constant(grid.dimension(), t);
    let e = grid.dimension() as f64 + 2.0 * t;
    let sq = u.map(|x| x * x);
    let interior = stein_functional(u, t)?;
    points
        .iter()
        .map(|&p| {
            Ok(match classify_point(grid, p)? {
                Some(i) => interior.values()[i],
                None => (0.5 * a * exterior_potential(&sq, p, e)).sqrt(),
            })
        })
        .collect()
}

/// Riesz potential `J_alpha g(x_i) = int g(y) |x_i - y|^{alpha - N} dy`, `0 < alpha < N`.
pub fn riesz_potential(g: &Field, alpha: f64) -> Result<Field> {
    let grid = g.grid();
    let n = grid.dimension() as f64;
    if !(alpha > 0.0 && alpha < n) {
        return Err(Error::out_of_range("alpha", alpha, format!("(0, {n})")));
    }
    let table = power_table(grid, -alpha);
    let scale = table.scale(grid.spacing());
    let lat = grid.lattice();
    let v = g.values();
    let out = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let ki = lat[i];
            let mut s = 0.0;
            for (kj, vj) in lat.iter().zip(v) {
                s += table.unit(kj[0] - ki[0], kj[1] - ki[1]) * vj;
            }
            scale * s
        })
        .collect();
    Field::new(Arc::clone(grid), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain_grid::{make_grid, Domain};

    #[test]
    fn constants_for_half_order_in_one_dimension() {
        let k = kernel_constants(1, 0.5).unwrap();
        assert!((k.a - 1.0 / PI).abs() < 1e-14);
        let mu = 2f64.sqrt() * gamma(1.25) / (PI.sqrt() * gamma(0.25));
        assert!((k.mu - mu).abs() < 1e-14);
    }

    #[test]
    fn constants_reject_poles() {
        assert!(kernel_constants(1, 0.0).is_err());
        assert!(kernel_constants(2, 1.0).is_err());
    }

    #[test]
    fn getoor_constant_is_one_for_half_order_interval() {
        assert!((getoor_constant(1, 0.5) - 1.0).abs() < 1e-14);
        assert!((getoor_constant(1, 0.25) - PI.sqrt() / 2.0).abs() < 1e-14);
    }

    #[test]
    fn matrix_and_matrix_free_agree() {
        let g = make_grid(Domain::unit_ball(2), 0.2).unwrap();
        let u = Field::from_fn(&g, |p| (1.0 - p[0] * p[0] - p[1] * p[1]).powf(0.4));
        let m = assemble_frac_laplacian(&g, 0.4).unwrap();
        let a = m.apply(&u).unwrap();
        let b = apply_frac_laplacian(&u, 0.4).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-10 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn row_sums_equal_tails() {
        let g = make_grid(Domain::interval(-1.0, 1.0).unwrap(), 0.1).unwrap();
        let m = assemble_frac_laplacian(&g, 0.3).unwrap();
        for i in 0..g.len() {
            assert!((m.row_sum(i) - m.tail()[i]).abs() < 1e-9 * m.entry(i, i));
            assert!(m.tail()[i] > 0.0);
        }
    }

    #[test]
    fn riesz_tail_matches_closed_form_in_one_dimension() {
        // For u = 1 the gradient is mu times the exterior tail of the odd kernel.
        let g = make_grid(Domain::interval(-1.0, 1.0).unwrap(), 0.125).unwrap();
        let t = 0.4;
        let u = Field::constant(&g, 1.0);
        let grad = riesz_gradient(&u, t).unwrap();
        let mu = gradient_constant(1, t);
        for (i, x) in g.nodes().iter().enumerate() {
            let x = x[0];
            let tail = ((x + 1.0).powf(-t) - (1.0 - x).powf(-t)) / t;
            let got = grad.values()[i][0];
            assert!((got - mu * tail).abs() < 1e-11 * (1.0 + tail.abs()), "{got} vs {}", mu * tail);
        }
    }

    #[test]
    fn exterior_points_are_classified() {
        let g = make_grid(Domain::interval(-1.0, 1.0).unwrap(), 0.25).unwrap();
        let u = Field::constant(&g, 1.0);
        assert!(matches!(
            apply_half_laplacian(&u, 0.5, &[[1.05, 0.0]]),
            Err(Error::BoundaryLayerPoint { .. })
        ));
        assert!(matches!(apply_half_laplacian(&u, 0.5, &[[0.1, 0.0]]), Err(Error::NotANode(_))));
        let v = apply_half_laplacian(&u, 0.5, &[[3.0, 0.0], [0.125, 0.0]]).unwrap();
        assert!(v[0] < 0.0);
    }

    #[test]
    fn riesz_potential_rejects_bad_order() {
        let g = make_grid(Domain::unit_ball(1), 0.25).unwrap();
        let u = Field::constant(&g, 1.0);
        assert!(riesz_potential(&u, 1.0).is_err());
        assert!(riesz_potential(&u, 0.0).is_err());
    }
}
