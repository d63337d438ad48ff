//! Function-space quantities on grid fields.
//!
//! Fields vanish outside the grid cells, so integrals over `R^N` split into
//! node sums over the cells and exterior contributions. Gagliardo double
//! integrals over `(Omega x R^N) U ((R^N \ Omega) x Omega)` reduce to node pairs
//! plus the exact per-node exterior tails; the Stein functional of a field is
//! nonzero outside the domain and is integrated there with the exterior
//! quadrature plus an analytic far field.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::domain_grid::{Field, Grid};
use crate::error::{check_unit_open, Error, Result};
use crate::fracops::{laplacian_constant, stein_functional};
use crate::quadrature::{exterior_quadrature, exterior_tails, exterior_weights, far_field_integral, power_table};
use crate::sampling::{streams, FieldSampler};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormKind {
    Lebesgue { p: f64 },
    Gagliardo { sigma: f64, p: f64 },
    Stein { sigma: f64, p: f64 },
    Holder { sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormReport {
    #[serde(flatten)]
    pub kind: NormKind,
    pub value: f64,
    pub h: f64,
}

pub fn norm_report(u: &Field, kind: NormKind) -> Result<NormReport> {
    let value = match kind {
        NormKind::Lebesgue { p } => lebesgue_norm(u, p)?,
        NormKind::Gagliardo { sigma, p } => gagliardo_seminorm(u, sigma, p)?,
        NormKind::Stein { sigma, p } => stein_norm(u, sigma, p)?,
        NormKind::Holder { sigma } => holder_seminorm(u, sigma)?,
    };
    Ok(NormReport {
        kind,
        value,
        h: u.grid().spacing(),
    })
}

fn check_lebesgue_exponent(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::out_of_range("p", p, "[1, inf]"))
    }
}

/// `(sum_i |v_i|^p h^N)^{1/p}`; `p = inf` gives the max norm.
pub(crate) fn lp_values(values: &[f64], p: f64, cell: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let s: f64 = values.iter().map(|v| v.abs().powf(p)).sum();
    (s * cell).powf(1.0 / p)
}

pub fn lebesgue_norm(u: &Field, p: f64) -> Result<f64> {
    check_lebesgue_exponent(p)?;
    Ok(lp_values(u.values(), p, u.grid().cell_measure()))
}

/// `[u]_{W^{sigma,p}}` over `D_Omega`.
///
/// Pairs `i != j` use the cell-integrated kernel `|x - y|^{-(N + sigma p)}`;
/// the exterior part `2 sum_i |u_i|^p tail_i` is exact.
pub fn gagliardo_seminorm(u: &Field, sigma: f64, p: f64) -> Result<f64> {
    check_unit_open("sigma", sigma)?;
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::out_of_range("p", p, "[1, inf)"));
    }
    let grid = u.grid();
    let beta = sigma * p;
    let table = power_table(grid, beta);
    let scale = table.scale(grid.spacing());
    let tails = exterior_tails(grid, beta);
    let lat = grid.lattice();
    let v = u.values();
    let rows: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let ki = lat[i];
            let mut s = 0.0;
            for (kj, vj) in lat.iter().zip(v) {
                let d = (v[i] - vj).abs();
                if d != 0.0 {
                    s += table.unit(kj[0] - ki[0], kj[1] - ki[1]) * d.powf(p);
                }
            }
            scale * s + 2.0 * tails[i] * v[i].abs().powf(p)
        })
        .collect();
    let total: f64 = rows.iter().sum();
    Ok((total * grid.cell_measure()).powf(1.0 / p))
}

/// `||u||_{W^{sigma,p}} = (||u||_p^p + [u]_{W^{sigma,p}}^p)^{1/p}`.
pub fn sobolev_norm(u: &Field, sigma: f64, p: f64) -> Result<f64> {
    let l = lebesgue_norm(u, p)?;
    let g = gagliardo_seminorm(u, sigma, p)?;
    Ok((l.powf(p) + g.powf(p)).powf(1.0 / p))
}

fn check_stein_exponent(dim: usize, sigma: f64, p: f64) -> Result<()> {
    let n = dim as f64;
    let lo = 2.0 * n / (n + 2.0 * sigma);
    if p > lo && p.is_finite() {
        Ok(())
    } else {
        Err(Error::Hypothesis(format!(
            "Stein norm equivalence needs 2N/(N+2 sigma) < p < inf; got p = {p}, 2N/(N+2 sigma) = {lo}"
        )))
    }
}

/// `||D_sigma u||_{L^p(R^N)}`: node values, exterior quadrature, and the
/// far field `D_sigma u(x) ~ (a/2 int u^2)^{1/2} |x - c|^{-(N + 2 sigma)/2}`.
pub fn stein_lp(u: &Field, sigma: f64, p: f64) -> Result<f64> {
    check_unit_open("sigma", sigma)?;
    let grid = u.grid();
    let dim = grid.dimension();
    check_stein_exponent(dim, sigma, p)?;
    let interior = stein_functional(u, sigma)?;
    let cell = grid.cell_measure();
    let inner: f64 = interior.values().iter().map(|v| v.powf(p)).sum::<f64>() * cell;
    Ok((inner + exterior_stein_power(grid, u, sigma, p)).powf(1.0 / p))
}

/// `int_{R^N \ cells} (D_sigma u)^p`.
fn exterior_stein_power(grid: &Arc<Grid>, u: &Field, sigma: f64, p: f64) -> f64 {
    let dim = grid.dimension();
    let e = dim as f64 + 2.0 * sigma;
    let a = laplacian_constant(dim, sigma);
    let quad = exterior_quadrature(grid);
    let w = exterior_weights(grid, e);
    let n = grid.len();
    let sq: Vec<f64> = u.values().iter().map(|v| v * v).collect();
    let near: f64 = w
        .par_chunks(n)
        .zip(quad.weights.par_iter())
        .map(|(row, qw)| {
            let s: f64 = row.iter().zip(&sq).map(|(k, v)| k * v).sum();
            qw * (0.5 * a * s).powf(0.5 * p)
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    let mass: f64 = sq.iter().sum::<f64>() * grid.cell_measure();
    near + far_field_integral(dim, (0.5 * a * mass).sqrt(), 0.5 * e, p, quad.far_radius)
}

/// Triple-bar norm `||u||_p + ||D_sigma u||_{L^p(R^N)}`.
pub fn stein_norm(u: &Field, sigma: f64, p: f64) -> Result<f64> {
    let d = stein_lp(u, sigma, p)?;
    Ok(lebesgue_norm(u, p)? + d)
}

/// `max_{i != j} |u_i - u_j| / |x_i - x_j|^sigma`, `0 < sigma <= 1`.
pub fn holder_seminorm(u: &Field, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(Error::out_of_range("sigma", sigma, "(0, 1]"));
    }
    let grid = u.grid();
    let nodes = grid.nodes();
    let v = u.values();
    Ok((0..grid.len())
        .into_par_iter()
        .map(|i| {
            let mut m = 0.0_f64;
            for j in (i + 1)..nodes.len() {
                let d = (v[i] - v[j]).abs();
                if d > 0.0 {
                    let r = crate::domain_grid::distance(nodes[i], nodes[j]);
                    m = m.max(d / r.powf(sigma));
                }
            }
            m
        })
        .reduce(|| 0.0, f64::max))
}

/// Interpolation exponent `theta` with `1/q = theta/(1+eta) + (1-theta)/r`.
pub fn interpolation_theta(q: f64, eta: f64, r: f64) -> Result<f64> {
    if !(eta > 0.0 && 1.0 + eta < q && q < r) {
        return Err(Error::Hypothesis(format!(
            "interpolation needs 1 + eta < q < r; got eta = {eta}, q = {q}, r = {r}"
        )));
    }
    Ok((1.0 / q - 1.0 / r) / (1.0 / (1.0 + eta) - 1.0 / r))
}

/// `||g||_q - ||g||_{1+eta}^theta ||g||_r^{1-theta}`, non-positive by Holder.
pub fn interpolation_defect(g: &Field, q: f64, eta: f64, r: f64) -> Result<f64> {
    let theta = interpolation_theta(q, eta, r)?;
    let lq = lebesgue_norm(g, q)?;
    let l1 = lebesgue_norm(g, 1.0 + eta)?;
    let lr = lebesgue_norm(g, r)?;
    Ok(lq - l1.powf(theta) * lr.powf(1.0 - theta))
}

/// Measured embedding constant `k` with `||u||_{W^{sigma,p}} <= k ||u||_{W^{sigma',p}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbeddingEstimate {
    pub sigma: f64,
    pub sigma_prime: f64,
    pub p: f64,
    /// `max(1, largest observed ratio)`.
    pub constant: f64,
    pub max_ratio: f64,
    pub samples: usize,
    pub h: f64,
}

/// Largest ratio `||u||_{W^{sigma,p}} / ||u||_{W^{sigma',p}}` over `samples`
/// signed random bump fields and the given extra fields, floored at 1.
pub fn embedding_constant(
    grid: &Arc<Grid>,
    sigma: f64,
    sigma_prime: f64,
    p: f64,
    samples: usize,
    seed: u64,
    extra: &[Field],
) -> Result<EmbeddingEstimate> {
    check_unit_open("sigma", sigma)?;
    check_unit_open("sigma_prime", sigma_prime)?;
    let mut sampler = FieldSampler::new(seed, streams::EMBEDDING);
    let mut fields: Vec<Field> = extra.to_vec();
    fields.extend((0..samples).map(|_| sampler.bumps(grid, true)));
    let mut max_ratio = 0.0_f64;
    for u in &fields {
        let den = sobolev_norm(u, sigma_prime, p)?;
        if den > 0.0 {
            max_ratio = max_ratio.max(sobolev_norm(u, sigma, p)? / den);
        }
    }
    Ok(EmbeddingEstimate {
        sigma,
        sigma_prime,
        p,
        constant: max_ratio.max(1.0),
        max_ratio,
        samples: fields.len(),
        h: grid.spacing(),
    })
}
