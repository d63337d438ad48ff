//! Fractional Poisson problem `(-Delta)^s u = h` in the domain, `u = 0` outside.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::linalg::solvers::{Llt, LltError, Solve};
use faer::{Mat, Side};
use serde::Serialize;

use crate::domain_grid::{distance, Field, Grid, Point};
use crate::error::{check_unit_open, Error, Result};
use crate::fracops::{apply_half_laplacian, assemble_frac_laplacian, riesz_potential, OperatorMatrix};
use crate::kpz::{ptilde, Exponent};
use crate::norms::{lebesgue_norm, stein_norm};
use crate::sampling::cz_battery;

/// Relative residual accepted from the dense solve.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

/// Discrete Green operator: a Cholesky factorization of `(-Delta)^s`.
pub struct GreenOperator {
    op: OperatorMatrix,
    llt: Llt<f64>,
}

impl std::fmt::Debug for GreenOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GreenOperator")
            .field("s", &self.op.order())
            .field("n", &self.op.len())
            .finish()
    }
}

/// Crude condition estimate from the diagonal spread of a symmetric matrix.
fn diagonal_condition(m: &Mat<f64>) -> f64 {
    let d: Vec<f64> = (0..m.nrows()).map(|i| m[(i, i)].abs()).collect();
    let hi = d.iter().cloned().fold(0.0, f64::max);
    let lo = d.iter().cloned().fold(f64::INFINITY, f64::min);
    hi / lo
}

impl GreenOperator {
    pub fn new(grid: &Arc<Grid>, s: f64) -> Result<Self> {
        let op = assemble_frac_laplacian(grid, s)?;
        Self::from_operator(op)
    }

    pub fn from_operator(op: OperatorMatrix) -> Result<Self> {
        let llt = op.matrix().llt(Side::Lower).map_err(|e| match e {
            LltError::NonPositivePivot { index } => Error::Factorization {
                pivot: index,
                condition: diagonal_condition(op.matrix()),
            },
        })?;
        Ok(GreenOperator { op, llt })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.op.grid()
    }

    pub fn order(&self) -> f64 {
        self.op.order()
    }

    pub fn operator(&self) -> &OperatorMatrix {
        &self.op
    }

    /// `u = G_s[h]`, with the residual `||M u - h|| / ||h||` checked.
    pub fn solve(&self, h: &Field) -> Result<Field> {
        if !Arc::ptr_eq(h.grid(), self.grid()) {
            return Err(Error::GridMismatch(h.len(), self.op.len()));
        }
        if h.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("right-hand side of the Poisson problem".into()));
        }
        let u = self.solve_values(h.values())?;
        Field::new(Arc::clone(self.grid()), u)
    }

    pub(crate) fn solve_values(&self, h: &[f64]) -> Result<Vec<f64>> {
        let n = h.len();
        let norm_h = h.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm_h == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let b = Mat::<f64>::from_fn(n, 1, |i, _| h[i]);
        let x = self.llt.solve(&b);
        let u: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
        let mu = self.op.apply_values(&u)?;
        let res = mu.iter().zip(h).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() / norm_h;
        if !(res <= SOLVE_TOLERANCE) {
            return Err(Error::SolveResidual {
                residual: res,
                tolerance: SOLVE_TOLERANCE,
            });
        }
        Ok(u)
    }
}

pub fn solve_poisson(grid: &Arc<Grid>, s: f64, h: &Field) -> Result<Field> {
    GreenOperator::new(grid, s)?.solve(h)
}

/// Measured constant of `|||G_s h|||_{t,p} <= C ||h||_{L^m}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CZEstimate {
    pub s: f64,
    pub t: f64,
    pub p: f64,
    pub m: f64,
    pub constant: f64,
    /// Ratio attained by `h = 1` (a lower bound for the constant).
    pub constant_ratio: f64,
    pub samples: usize,
    pub h: f64,
}

/// Checks `0 < s <= t < min{1, s(1 + 1/N)}`, `1 < p < p~(m,s,t)` and the
/// Stein equivalence range `p > 2N/(N + 2t)`.
pub fn check_cz_range(dim: usize, s: f64, t: f64, p: f64, m: f64) -> Result<()> {
    check_unit_open("s", s)?;
    check_unit_open("t", t)?;
    let n = dim as f64;
    if !(s <= t && t < (s * (1.0 + 1.0 / n)).min(1.0)) {
        return Err(Error::Hypothesis(format!(
            "the Calderon-Zygmund estimate needs 0 < s <= t < min{{1, s(1+1/N)}}; got s = {s}, t = {t}"
        )));
    }
    let pt = ptilde(m, s, t, dim)?;
    if !(p > 1.0 && Exponent::Finite(p) < pt) {
        return Err(Error::Hypothesis(format!(
            "the Calderon-Zygmund estimate needs 1 < p < p~(m,s,t) = {pt}; got p = {p}"
        )));
    }
    let lo = 2.0 * n / (n + 2.0 * t);
    if p <= lo {
        return Err(Error::Hypothesis(format!(
            "the Stein-norm proxy needs p > 2N/(N+2t) = {lo}; got p = {p}"
        )));
    }
    Ok(())
}

/// Samples `|||G_s h|||_{t,p} / ||h||_{L^m}` over a reproducible battery of
/// non-negative right-hand sides (including `h = 1` and boundary bumps).
pub fn estimate_cz_constant(green: &GreenOperator, t: f64, p: f64, m: f64, samples: usize, seed: u64) -> Result<CZEstimate> {
    let grid = green.grid();
    let s = green.order();
    check_cz_range(grid.dimension(), s, t, p, m)?;
    if m < 1.0 {
        return Err(Error::out_of_range("m", m, "[1, inf]"));
    }
    let battery = cz_battery(grid, samples.max(1), seed);
    let mut constant = 0.0_f64;
    let mut constant_ratio = 0.0;
    for (k, h) in battery.iter().enumerate() {
        let u = green.solve(h)?;
        let ratio = stein_norm(&u, t, p)? / lebesgue_norm(h, m)?;
        if k == 0 {
            constant_ratio = ratio;
        }
        constant = constant.max(ratio);
    }
    Ok(CZEstimate {
        s,
        t,
        p,
        m,
        constant,
        constant_ratio,
        samples: battery.len(),
        h: grid.spacing(),
    })
}

/// Exterior inequality check at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailCheck {
    pub point: Point,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    pub s: f64,
    pub t: f64,
    /// Shift in the first term, `0 < shift < 2s - t`.
    pub shift: f64,
    #[serde(skip)]
    pub g1: Vec<f64>,
    #[serde(skip)]
    pub g2: Vec<f64>,
    #[serde(skip)]
    pub g3: Vec<f64>,
    /// Smallest `C` with `|(-Delta)^{t/2} u| <= C [g1 + |log delta| g2 + delta^{s-t} g3]`
    /// at every node with `delta > 2h`.
    pub fitted_constant: f64,
    pub nodes_checked: usize,
    pub medium_range: Vec<TailCheck>,
    pub far_range: Vec<TailCheck>,
}

impl DecompositionReport {
    pub fn tails_hold(&self) -> bool {
        self.medium_range.iter().chain(&self.far_range).all(|c| c.holds)
    }
}

/// Point at distance `d` beyond the boundary along direction `dir` from the incenter.
fn beyond_boundary(grid: &Grid, dir: Point, d: f64) -> Point {
    let dom = grid.domain();
    let c = dom.incenter();
    let mut rho = 0.0;
    let mut step = dom.diameter();
    while step > 1e-12 * dom.diameter() {
        let p = [c[0] + (rho + step) * dir[0], c[1] + (rho + step) * dir[1]];
        if dom.contains(p) {
            rho += step;
        }
        step *= 0.5;
    }
    [c[0] + (rho + d) * dir[0], c[1] + (rho + d) * dir[1]]
}

fn sample_direction(grid: &Grid, k: usize, count: usize) -> Point {
    if grid.dimension() == 1 {
        [if k % 2 == 0 { 1.0 } else { -1.0 }, 0.0]
    } else {
        let th = 2.0 * PI * (k as f64 + 0.5) / count as f64;
        [th.cos(), th.sin()]
    }
}

/// `count` exterior points inside `B_R(0)`, from one cell width out to near `R`.
pub fn medium_range_points(grid: &Grid, count: usize) -> Vec<Point> {
    let h = grid.spacing();
    let r = grid.tail_radius();
    (0..count)
        .map(|k| {
            let dir = sample_direction(grid, k, count);
            let edge = beyond_boundary(grid, dir, 0.0);
            let room = (r - edge[0].hypot(edge[1])).max(2.0 * h);
            let frac = (k / 2) as f64 / ((count / 2).max(1)) as f64;
            // Geometric spacing between 1.5 h and 0.9 of the room to B_R.
            let d = 1.5 * h * (0.9 * room / (1.5 * h)).powf(frac);
            let mut p = beyond_boundary(grid, dir, d);
            while grid.cell_containing(p).is_some() || grid.domain().boundary_distance(p).distance < h {
                p = [p[0] + h * dir[0], p[1] + h * dir[1]];
            }
            p
        })
        .collect()
}

/// `count` points with `|x| >= R`, spread geometrically out to `8R`.
pub fn far_range_points(grid: &Grid, count: usize) -> Vec<Point> {
    let r = grid.tail_radius();
    (0..count)
        .map(|k| {
            let dir = sample_direction(grid, k, count);
            let rho = r * 8f64.powf(k as f64 / count as f64);
            [rho * dir[0], rho * dir[1]]
        })
        .collect()
}

/// Diagnostics for the pointwise decomposition of `(-Delta)^{t/2} G_s h`.
pub fn decomposition_diagnostics(green: &GreenOperator, t: f64, h: &Field, shift: Option<f64>) -> Result<DecompositionReport> {
    let grid = green.grid();
    let s = green.order();
    check_unit_open("t", t)?;
    if !(s <= t && t < (2.0 * s).min(1.0)) {
        return Err(Error::Hypothesis(format!(
            "the decomposition needs s <= t < min{{1, 2s}}; got s = {s}, t = {t}"
        )));
    }
    let width = 2.0 * s - t;
    let shift = shift.unwrap_or(0.5 * width);
    if !(shift > 0.0 && shift < width) {
        return Err(Error::out_of_range("shift", shift, format!("(0, {width})")));
    }
    let u = green.solve(h)?;
    let abs_h = h.map(f64::abs);
    let g1 = riesz_potential(&abs_h, width - shift)?;
    let g2 = riesz_potential(&abs_h, width)?;
    let g3 = riesz_potential(&abs_h, s)?.scaled(t - s);
    let lap = apply_half_laplacian(&u, t, grid.nodes())?;
    let hh = grid.spacing();
    let mut fitted = 0.0_f64;
    let mut checked = 0;
    for i in 0..grid.len() {
        let d = grid.delta()[i];
        if d <= 2.0 * hh {
            continue;
        }
        checked += 1;
        let rhs = g1.values()[i] + d.ln().abs() * g2.values()[i] + d.powf(s - t) * g3.values()[i];
        let lhs = lap[i].abs();
        if lhs > 0.0 {
            fitted = fitted.max(if rhs > 0.0 { lhs / rhs } else { f64::INFINITY });
        }
    }

    let mass: f64 = u.values().iter().map(|v| v.abs()).sum::<f64>() * grid.cell_measure();
    let n = grid.dimension() as f64;
    let weighted = Field::from_fn(grid, |_| 0.0);
    let weighted = {
        let mut w = weighted;
        for (i, v) in w.values_mut().iter_mut().enumerate() {
            *v = u.values()[i].abs() / grid.delta()[i].powf(s);
        }
        w
    };
    let med_pts = medium_range_points(grid, 20);
    let med_lhs = apply_half_laplacian(&u, t, &med_pts)?;
    let medium_range = med_pts
        .iter()
        .zip(&med_lhs)
        .map(|(&p, l)| {
            let rhs = cell_potential(&weighted, p, n + t - s);
            TailCheck {
                point: p,
                lhs: l.abs(),
                rhs,
                holds: l.abs() <= rhs,
            }
        })
        .collect();
    let far_pts = far_range_points(grid, 20);
    let far_lhs = apply_half_laplacian(&u, t, &far_pts)?;
    let far_range = far_pts
        .iter()
        .zip(&far_lhs)
        .map(|(&p, l)| {
            let rhs = 4f64.powf(n + t) * (1.0 + distance(p, [0.0, 0.0])).powf(-(n + t)) * mass;
            TailCheck {
                point: p,
                lhs: l.abs(),
                rhs,
                holds: l.abs() <= rhs,
            }
        })
        .collect();

    Ok(DecompositionReport {
        s,
        t,
        shift,
        g1: g1.into_values(),
        g2: g2.into_values(),
        g3: g3.into_values(),
        fitted_constant: fitted,
        nodes_checked: checked,
        medium_range,
        far_range,
    })
}

/// `sum_j w_j int_{cell_j} |p - y|^{-e} dy`.
fn cell_potential(w: &Field, p: Point, e: f64) -> f64 {
    let grid = w.grid();
    grid.nodes()
        .iter()
        .zip(w.values())
        .map(|(&c, &v)| v * crate::quadrature::point_cell_power(grid.dimension(), p, c, grid.spacing(), e))
        .sum()
}
