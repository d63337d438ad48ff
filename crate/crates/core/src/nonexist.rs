//! Explicit non-existence thresholds.
//!
//! For the half-Laplacian problem the threshold is built from the s- and
//! t/2-torsion functions; for the Stein problem it is an infimum over
//! compactly supported test bumps, of which a finite family gives an upper
//! estimate. Both arguments survive discretization verbatim: the discrete
//! operators are symmetric, and cell-integrated kernel weights obey the same
//! Cauchy-Schwarz splitting as the kernels themselves.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::domain_grid::{Field, Grid};
use crate::error::{check_unit_open, Error, Result};
use crate::fracops::{kernel_constants, stein_functional};
use crate::kpz::{smooth_bump, ProblemSpec};
use crate::poisson::GreenOperator;

/// Sharp Young constant `C_q = (q-1) q^{-q/(q-1)}`: `ab <= a^q + C_q b^{q/(q-1)}`.
pub fn young_constant(q: f64) -> f64 {
    (q - 1.0) * q.powf(-q / (q - 1.0))
}

/// Solution of `(-Delta)^sigma phi = 1` in the domain, zero outside.
pub fn torsion_function(grid: &Arc<Grid>, sigma: f64) -> Result<Field> {
    check_unit_open("sigma", sigma)?;
    let green = GreenOperator::new(grid, sigma)?;
    torsion_from(&green)
}

fn torsion_from(green: &GreenOperator) -> Result<Field> {
    let phi = green.solve(&Field::constant(green.grid(), 1.0))?;
    if let Some(i) = phi.values().iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Hypothesis(format!(
            "torsion function of order {} is not positive at node {i}",
            green.order()
        )));
    }
    Ok(phi)
}

/// Two-sided envelope `C0^{-1} delta^sigma <= phi <= C0 delta^sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    pub low: f64,
    pub high: f64,
    pub nodes: usize,
}

impl Envelope {
    /// `max(1/low, high)`.
    pub fn certified(&self) -> f64 {
        (1.0 / self.low).max(self.high)
    }
}

/// Least-nodes requirement of [`boundary_envelope`].
pub const ENVELOPE_MIN_NODES: usize = 10;

/// Range of `phi/delta^sigma` over nodes with `delta > 2h`.
pub fn boundary_envelope(phi: &Field, sigma: f64) -> Result<Envelope> {
    check_unit_open("sigma", sigma)?;
    let grid = phi.grid();
    let cut = 2.0 * grid.spacing();
    let (mut low, mut high, mut nodes) = (f64::INFINITY, 0.0_f64, 0);
    for (v, d) in phi.values().iter().zip(grid.delta()) {
        if *d > cut {
            let ratio = v / d.powf(sigma);
            low = low.min(ratio);
            high = high.max(ratio);
            nodes += 1;
        }
    }
    if nodes < ENVELOPE_MIN_NODES {
        return Err(Error::TooFewNodes {
            found: nodes,
            needed: ENVELOPE_MIN_NODES,
        });
    }
    if !(low > 0.0) {
        return Err(Error::Hypothesis("torsion function vanishes away from the boundary".into()));
    }
    Ok(Envelope { low, high, nodes })
}

/// Everything entering the half-Laplacian threshold.
#[derive(Debug, Clone, Serialize)]
pub struct NonexistenceBundle {
    pub s: f64,
    pub t: f64,
    pub q: f64,
    pub mu1: f64,
    /// s-torsion.
    #[serde(skip)]
    pub phi: Field,
    /// t/2-torsion.
    #[serde(skip)]
    pub psi: Field,
    pub envelope: Envelope,
    pub c0: f64,
    pub young_constant: f64,
    /// `int psi^{q/(q-1)} phi^{-1/(q-1)}`.
    pub psi_integral: f64,
    /// `int f phi`.
    pub f_pairing: f64,
    pub lambda_starstar: f64,
}

fn check_kpz1(s: f64, t: f64, q: f64, mu1: f64) -> Result<()> {
    check_unit_open("s", s)?;
    check_unit_open("t", t)?;
    if !(t < 2.0 * s) {
        return Err(Error::Hypothesis(format!("need 0 < t < min{{1, 2s}}; got s = {s}, t = {t}")));
    }
    let qmin = 2.0 * (s + 1.0) / (t + 2.0);
    if !(q > qmin) {
        return Err(Error::Hypothesis(format!("need q > 2(s+1)/(t+2) = {qmin}; got q = {q}")));
    }
    if !(mu1 > 0.0 && mu1.is_finite()) {
        return Err(Error::out_of_range("mu1", mu1, "(0, inf)"));
    }
    Ok(())
}

/// `lambda** = C_q int psi^{q'} phi^{-1/(q-1)} / (mu1^{1/(q-1)} int f phi)`.
pub fn lambda_starstar_kpz1(grid: &Arc<Grid>, s: f64, t: f64, q: f64, mu1: f64, f: &Field) -> Result<NonexistenceBundle> {
    check_kpz1(s, t, q, mu1)?;
    let phi = torsion_function(grid, s)?;
    let psi = torsion_function(grid, 0.5 * t)?;
    kpz1_from_torsions(phi, psi, s, t, q, mu1, f)
}

/// As [`lambda_starstar_kpz1`] with precomputed torsion functions.
#[allow(clippy::too_many_arguments)]
pub fn kpz1_from_torsions(phi: Field, psi: Field, s: f64, t: f64, q: f64, mu1: f64, f: &Field) -> Result<NonexistenceBundle> {
    check_kpz1(s, t, q, mu1)?;
    phi.check_same_grid(f)?;
    phi.check_same_grid(&psi)?;
    let f_pairing = f.inner(&phi)?;
    if !(f_pairing > 0.0) {
        return Err(Error::Hypothesis("f must be non-negative and non-trivial: int f phi = 0".into()));
    }
    let qp = q / (q - 1.0);
    let cell = phi.grid().cell_measure();
    let psi_integral = psi
        .values()
        .iter()
        .zip(phi.values())
        .map(|(p, h)| p.powf(qp) * h.powf(-1.0 / (q - 1.0)))
        .sum::<f64>()
        * cell;
    let cq = young_constant(q);
    let lambda_starstar = cq * psi_integral / (mu1.powf(1.0 / (q - 1.0)) * f_pairing);
    let envelope = boundary_envelope(&phi, s)?;
    Ok(NonexistenceBundle {
        s,
        t,
        q,
        mu1,
        phi,
        psi,
        c0: envelope.certified(),
        envelope,
        young_constant: cq,
        psi_integral,
        f_pairing,
        lambda_starstar,
    })
}

/// Smooth bumps `exp(1 - 1/(1 - |x-c|^2/w^2))` at the incenter with widths
/// `w_k = (R - 2h) 2^{-k}`, `k = 0..count`.
pub fn dyadic_bumps(grid: &Arc<Grid>, count: usize) -> Result<Vec<Field>> {
    let c = grid.domain().incenter();
    let w0 = grid.domain().inradius() - 2.0 * grid.spacing();
    if !(w0 > grid.spacing()) {
        return Err(Error::GridTooCoarse {
            h: grid.spacing(),
            nodes: grid.len(),
        });
    }
    Ok((0..count)
        .map(|k| {
            let w = w0 * 0.5_f64.powi(k as i32);
            Field::from_fn(grid, |p| smooth_bump(((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt() / w))
        })
        .collect())
}

/// Default size of the bump family.
pub const DEFAULT_BUMPS: usize = 8;

/// Factors of `C~_{q,mu1} = C_q mu1^{-1/(q-1)} beta^{q'}` with
/// `beta = 2 a_{N,s} q' / sqrt(a_{N,t} a_{N,2s-t})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteinYoungConstant {
    pub young_constant: f64,
    pub beta: f64,
    pub q_conjugate: f64,
    pub value: f64,
    pub formula: &'static str,
}

pub fn stein_young_constant(dim: usize, s: f64, t: f64, q: f64, mu1: f64) -> Result<SteinYoungConstant> {
    let qp = q / (q - 1.0);
    let a_s = kernel_constants(dim, s)?.a;
    let a_t = kernel_constants(dim, t)?.a;
    let a_c = kernel_constants(dim, 2.0 * s - t)?.a;
    let beta = 2.0 * a_s * qp / (a_t * a_c).sqrt();
    let cq = young_constant(q);
    Ok(SteinYoungConstant {
        young_constant: cq,
        beta,
        q_conjugate: qp,
        value: cq * mu1.powf(-1.0 / (q - 1.0)) * beta.powf(qp),
        formula: "C_q mu1^(-1/(q-1)) (2 a(N,s) q' / sqrt(a(N,t) a(N,2s-t)))^q'",
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Kpz3Bundle {
    pub s: f64,
    pub t: f64,
    pub q: f64,
    pub mu1: f64,
    pub constant: SteinYoungConstant,
    /// Ratio per bump; `None` where `int f phi^{q'} = 0`.
    pub ratios: Vec<Option<f64>>,
    pub skipped: Vec<usize>,
    pub argmin: usize,
    /// Minimum ratio: an upper estimate of the infimum over all test functions.
    pub lambda_starstar: f64,
}

/// `C~_{q,mu1} int (D_{2s-t} phi)^{q'} / int f phi^{q'}` for one test function.
pub fn kpz3_ratio(phi: &Field, s: f64, t: f64, q: f64, f: &Field, constant: f64) -> Result<Option<f64>> {
    let qp = q / (q - 1.0);
    let den = phi.values().iter().zip(f.values()).map(|(p, f)| f * p.powf(qp)).sum::<f64>() * phi.grid().cell_measure();
    if !(den > 0.0) {
        return Ok(None);
    }
    let d = stein_functional(phi, 2.0 * s - t)?;
    let num = d.values().iter().map(|v| v.powf(qp)).sum::<f64>() * phi.grid().cell_measure();
    Ok(Some(constant * num / den))
}

pub fn lambda_starstar_kpz3(grid: &Arc<Grid>, s: f64, t: f64, q: f64, mu1: f64, f: &Field, bumps: &[Field]) -> Result<Kpz3Bundle> {
    check_unit_open("s", s)?;
    check_unit_open("t", t)?;
    if !(t < 2.0 * s) {
        return Err(Error::Hypothesis(format!("need 0 < t < min{{1, 2s}}; got s = {s}, t = {t}")));
    }
    check_unit_open("2s - t", 2.0 * s - t)?;
    if !(q > 1.0) {
        return Err(Error::out_of_range("q", q, "(1, inf)"));
    }
    if !(mu1 > 0.0 && mu1.is_finite()) {
        return Err(Error::out_of_range("mu1", mu1, "(0, inf)"));
    }
    if bumps.is_empty() {
        return Err(Error::Config("empty test-bump family".into()));
    }
    let cut = 2.0 * grid.spacing();
    for (k, b) in bumps.iter().enumerate() {
        b.check_same_grid(f)?;
        if b.min() < 0.0 {
            return Err(Error::Hypothesis(format!("test bump {k} takes negative values")));
        }
        if b.values().iter().zip(grid.delta()).any(|(v, d)| *v != 0.0 && *d < cut) {
            return Err(Error::Hypothesis(format!("test bump {k} is supported within 2h of the boundary")));
        }
    }
    let constant = stein_young_constant(grid.dimension(), s, t, q, mu1)?;
    let ratios = bumps
        .par_iter()
        .map(|b| kpz3_ratio(b, s, t, q, f, constant.value))
        .collect::<Result<Vec<_>>>()?;
    let skipped: Vec<usize> = ratios.iter().enumerate().filter(|(_, r)| r.is_none()).map(|(k, _)| k).collect();
    let (argmin, lambda_starstar) = ratios
        .iter()
        .enumerate()
        .filter_map(|(k, r)| r.map(|r| (k, r)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::Hypothesis("every test bump has int f phi^{q'} = 0".into()))?;
    Ok(Kpz3Bundle {
        s,
        t,
        q,
        mu1,
        constant,
        ratios,
        skipped,
        argmin,
        lambda_starstar,
    })
}

/// Both sides of the identities and the Young inequality of the torsion argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainCheck {
    /// `int u`.
    pub mass: f64,
    /// `int mu |(-Delta)^{t/2} u|^q phi + lambda int f phi`.
    pub energy_side: f64,
    pub energy_gap: f64,
    /// `int psi (-Delta)^{t/2} u`.
    pub psi_side: f64,
    pub psi_gap: f64,
    /// `int psi |(-Delta)^{t/2} u|`.
    pub young_lhs: f64,
    /// `mu1 int |(-Delta)^{t/2} u|^q phi + C_q mu1^{-1/(q-1)} int psi^{q'} phi^{-1/(q-1)}`.
    pub young_rhs: f64,
    pub young_holds: bool,
}

pub fn nonexistence_chain_check(u: &Field, bundle: &NonexistenceBundle, spec: &ProblemSpec) -> Result<ChainCheck> {
    u.check_same_grid(&bundle.phi)?;
    u.check_same_grid(&spec.f)?;
    if !(spec.t < 2.0 * spec.s) {
        return Err(Error::Hypothesis("the chain needs t < 2s".into()));
    }
    let lu = crate::fracops::half_laplacian(u, spec.t)?;
    let q = spec.q;
    let cell = u.grid().cell_measure();
    let mass = u.integral();
    let grad_phi: f64 = lu
        .values()
        .iter()
        .zip(spec.mu.values())
        .zip(bundle.phi.values())
        .map(|((l, m), p)| m * l.abs().powf(q) * p)
        .sum::<f64>()
        * cell;
    let energy_side = grad_phi + spec.lambda * spec.f.inner(&bundle.phi)?;
    let psi_side = lu.inner(&bundle.psi)?;
    let young_lhs = lu.values().iter().zip(bundle.psi.values()).map(|(l, p)| l.abs() * p).sum::<f64>() * cell;
    let grad_phi_min: f64 = lu.values().iter().zip(bundle.phi.values()).map(|(l, p)| l.abs().powf(q) * p).sum::<f64>() * cell;
    let young_rhs = bundle.mu1 * grad_phi_min + bundle.young_constant * bundle.mu1.powf(-1.0 / (q - 1.0)) * bundle.psi_integral;
    Ok(ChainCheck {
        mass,
        energy_side,
        energy_gap: (mass - energy_side).abs(),
        psi_side,
        psi_gap: (mass - psi_side).abs(),
        young_lhs,
        young_rhs,
        young_holds: young_lhs <= young_rhs * (1.0 + 1e-12),
    })
}
