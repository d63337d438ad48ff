//! Nonlinear machinery for `(-Delta)^s u = mu |D_t u|^q + lambda f`.
//!
//! Admissible exponents, the existence thresholds built from measured
//! constants, Picard iteration of the fixed-point map, discrete weak
//! residuals, and lambda sweeps. A Picard run that fails to converge means
//! only that no Picard fixed point was found.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::domain_grid::{Field, Grid};
use crate::error::{check_unit_open, Error, Result};
use crate::fracops::{half_laplacian, riesz_gradient, stein_functional};
use crate::norms::{embedding_constant, lebesgue_norm, lp_values, stein_lp, stein_norm, EmbeddingEstimate};
use crate::poisson::{estimate_cz_constant, CZEstimate, GreenOperator};

/// An exponent in `(0, inf]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    /// `1/a^+`, infinite when `a <= 0`.
    pub fn reciprocal_positive_part(a: f64) -> Self {
        if a <= 0.0 {
            Exponent::Infinite
        } else {
            Exponent::Finite(1.0 / a)
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    pub fn value(&self) -> f64 {
        match self {
            Exponent::Finite(v) => *v,
            Exponent::Infinite => f64::INFINITY,
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.value().partial_cmp(&other.value())
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(v) => write!(f, "{v}"),
            Exponent::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(v) => s.serialize_f64(*v),
            Exponent::Infinite => s.serialize_str("inf"),
        }
    }
}

fn positive_part(a: f64) -> f64 {
    a.max(0.0)
}

/// Upper bound `q-bar(m, s, t)` on the growth exponent.
pub fn qbar(m: f64, s: f64, t: f64, dim: usize) -> Result<Exponent> {
    check_unit_open("s", s)?;
    check_unit_open("t", t)?;
    if !(m >= 1.0) {
        return Err(Error::out_of_range("m", m, "[1, inf)"));
    }
    let n = dim as f64;
    let crit = n / s;
    Ok(if t <= s && m >= crit {
        Exponent::Infinite
    } else if t > s && m > crit {
        Exponent::Finite(s / (n * (t - s)))
    } else if t <= s {
        Exponent::Finite(n / (n - m * s))
    } else {
        Exponent::Finite(n / (n - s * m + m * n * (t - s)))
    })
}

/// Integrability ceiling `p~(m, s, t)` of the Calderon-Zygmund estimate.
///
/// At `m = N/(2s - t)`, where neither displayed case applies, the second
/// branch is used.
pub fn ptilde(m: f64, s: f64, t: f64, dim: usize) -> Result<Exponent> {
    check_unit_open("s", s)?;
    check_unit_open("t", t)?;
    if t < s {
        return Err(Error::Hypothesis(format!("p~(m,s,t) is defined for t >= s; got s = {s}, t = {t}")));
    }
    if !(m >= 1.0) {
        return Err(Error::out_of_range("m", m, "[1, inf)"));
    }
    let n = dim as f64;
    let top = Exponent::reciprocal_positive_part(t - s);
    if m > n / (2.0 * s - t) {
        return Ok(top);
    }
    let den = n - m * s + m * n * (t - s);
    Ok(Exponent::reciprocal_positive_part(den / (m * n)).min(top))
}

/// Lower bound `m-bar(s, t) = 2N / (N + 2s - 2N (t-s)^+)` on the datum exponent
/// for the Stein variant.
pub fn mbar(s: f64, t: f64, dim: usize) -> f64 {
    let n = dim as f64;
    2.0 * n / (n + 2.0 * s - 2.0 * n * positive_part(t - s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientVariant {
    HalfLaplacian,
    RieszGradient,
    Stein,
}

impl GradientVariant {
    pub const ALL: [GradientVariant; 3] = [
        GradientVariant::HalfLaplacian,
        GradientVariant::RieszGradient,
        GradientVariant::Stein,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            GradientVariant::HalfLaplacian => "half_laplacian",
            GradientVariant::RieszGradient => "riesz_gradient",
            GradientVariant::Stein => "stein",
        }
    }
}

/// Which form of the smallness condition on `t` holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `t < min{1, s(1 + 1/(qN))}`.
    Strict,
    /// Only `t < min{1, s(1 + 1/N)}`.
    Weak,
}

/// Data of one nonlinear problem on a grid.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub grid: Arc<Grid>,
    pub s: f64,
    pub t: f64,
    pub q: f64,
    pub lambda: f64,
    pub mu: Field,
    pub f: Field,
    pub m: f64,
    pub variant: GradientVariant,
    regime: Regime,
}

impl ProblemSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(s: f64, t: f64, q: f64, lambda: f64, mu: Field, f: Field, m: f64, variant: GradientVariant) -> Result<Self> {
        check_unit_open("s", s)?;
        check_unit_open("t", t)?;
        if !(q > 1.0 && q.is_finite()) {
            return Err(Error::out_of_range("q", q, "(1, inf)"));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::out_of_range("lambda", lambda, "[0, inf)"));
        }
        if !(m >= 1.0 && m.is_finite()) {
            return Err(Error::out_of_range("m", m, "[1, inf)"));
        }
        mu.check_same_grid(&f)?;
        if mu.values().iter().chain(f.values()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mu or f".into()));
        }
        let n = mu.grid().dimension() as f64;
        let regime = if t < (s * (1.0 + 1.0 / (q * n))).min(1.0) {
            Regime::Strict
        } else if t < (s * (1.0 + 1.0 / n)).min(1.0) {
            Regime::Weak
        } else {
            return Err(Error::Hypothesis(format!(
                "need 0 < t < min{{1, s(1+1/N)}}; got s = {s}, t = {t}, N = {n}"
            )));
        };
        Ok(ProblemSpec {
            grid: Arc::clone(mu.grid()),
            s,
            t,
            q,
            lambda,
            mu,
            f,
            m,
            variant,
            regime,
        })
    }

    /// Problem with constant `mu` and `f`.
    #[allow(clippy::too_many_arguments)]
    pub fn constant(grid: &Arc<Grid>, s: f64, t: f64, q: f64, lambda: f64, mu: f64, f: f64, m: f64, variant: GradientVariant) -> Result<Self> {
        Self::new(s, t, q, lambda, Field::constant(grid, mu), Field::constant(grid, f), m, variant)
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::out_of_range("lambda", lambda, "[0, inf)"));
        }
        let mut c = self.clone();
        c.lambda = lambda;
        Ok(c)
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn dimension(&self) -> usize {
        self.grid.dimension()
    }

    /// `||mu||_inf`.
    pub fn mu_sup(&self) -> f64 {
        self.mu.max_abs()
    }

    /// `mu_1 = min mu`.
    pub fn mu_min(&self) -> f64 {
        self.mu.min()
    }

    /// `mu_2 = max mu`.
    pub fn mu_max(&self) -> f64 {
        self.mu.max()
    }

    pub fn gamma(&self) -> f64 {
        self.t.max(self.s)
    }

    /// Nonlocal gradient magnitude `|D_t phi|` for the configured variant.
    pub fn gradient(&self, phi: &Field) -> Result<Field> {
        match self.variant {
            GradientVariant::HalfLaplacian => Ok(half_laplacian(phi, self.t)?.map(f64::abs)),
            GradientVariant::RieszGradient => Ok(riesz_gradient(phi, self.t)?.magnitude()),
            GradientVariant::Stein => stein_functional(phi, self.t),
        }
    }

    /// `mu |D_t phi|^q + lambda f`.
    pub fn nonlinearity(&self, phi: &Field) -> Result<Field> {
        let g = self.gradient(phi)?;
        let q = self.q;
        let v: Vec<f64> = g
            .values()
            .iter()
            .zip(self.mu.values())
            .zip(self.f.values())
            .map(|((g, mu), f)| mu * g.abs().powf(q) + self.lambda * f)
            .collect();
        Field::new(Arc::clone(&self.grid), v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExistenceCase {
    /// `m > N/s`.
    Large,
    /// `1 <= m <= N/s`.
    Small,
}

/// Admissible interval for the integrability exponent `r` and the choice made.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RChoice {
    pub r: f64,
    pub lower: f64,
    pub upper: Exponent,
    pub case: ExistenceCase,
    /// Datum exponent actually used; in the large case it may be lowered into
    /// `(N/s, 1/(q (t-s)^+))` since `L^m` embeds in `L^{m'}` for `m' < m`.
    pub m_effective: f64,
}

pub fn pick_r(dim: usize, s: f64, t: f64, q: f64, m: f64, variant: GradientVariant) -> Result<RChoice> {
    let qb = qbar(m, s, t, dim)?;
    if !(Exponent::Finite(q) < qb) {
        return Err(Error::Hypothesis(format!("need q < q-bar(m,s,t) = {qb}; got q = {q}")));
    }
    let n = dim as f64;
    let stein = variant == GradientVariant::Stein;
    if stein {
        let mb = mbar(s, t, dim);
        if m <= mb {
            return Err(Error::Hypothesis(format!("the Stein variant needs m > m-bar(s,t) = {mb}; got m = {m}")));
        }
    }
    let gamma = t.max(s);
    let (case, m_eff, upper) = if m > n / s {
        let upper = Exponent::reciprocal_positive_part(t - s);
        let cap = Exponent::reciprocal_positive_part(q * (t - s));
        let m_eff = if Exponent::Finite(m) < cap {
            m
        } else {
            (n / s * cap.value()).sqrt()
        };
        (ExistenceCase::Large, m_eff, upper)
    } else {
        let den = n - m * s + m * n * (gamma - s);
        (ExistenceCase::Small, m, Exponent::reciprocal_positive_part(den / (m * n)))
    };
    let mut lower = q * m_eff;
    if stein {
        lower = lower.max(2.0);
    }
    if !(Exponent::Finite(lower) < upper) {
        return Err(Error::Hypothesis(format!(
            "empty interval for r: lower end {lower} >= upper end {upper} (q >= q-bar or m <= m-bar)"
        )));
    }
    let r = match upper {
        Exponent::Infinite => 2.0 * lower,
        Exponent::Finite(u) => (lower * u).sqrt(),
    };
    Ok(RChoice {
        r,
        lower,
        upper,
        case,
        m_effective: m_eff,
    })
}

/// Aggregated inputs of the threshold formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdInputs {
    pub q: f64,
    pub r: f64,
    pub m: f64,
    /// Measured Calderon-Zygmund constant.
    pub cz: f64,
    /// Measured embedding constant.
    pub k: f64,
    pub mu_sup: f64,
    pub measure: f64,
    /// `||f||_{L^m}`.
    pub f_norm: f64,
}

impl ThresholdInputs {
    /// `A = ||mu||_inf |Omega|^{(r - qm)/(mr)}`.
    pub fn aggregate(&self) -> f64 {
        self.mu_sup * self.measure.powf((self.r - self.q * self.m) / (self.m * self.r))
    }

    /// `lambda* = (q-1)/(q ||f||_m) (q (C k)^q A)^{-1/(q-1)}`.
    pub fn lambda_star(&self) -> f64 {
        let q = self.q;
        (q - 1.0) / (q * self.f_norm) * (q * (self.cz * self.k).powf(q) * self.aggregate()).powf(-1.0 / (q - 1.0))
    }

    /// `g(l) = l^{1/q} - C (A k^q l + lambda f_norm)`.
    pub fn ball_equation(&self, ell: f64, lambda: f64) -> f64 {
        ell.powf(1.0 / self.q) - self.cz * (self.aggregate() * self.k.powf(self.q) * ell + lambda * self.f_norm)
    }

    /// Closed form of the tangency point at `lambda*`.
    pub fn ell_closed_form(&self) -> f64 {
        let q = self.q;
        (q * self.cz * self.aggregate() * self.k.powf(q)).powf(-q / (q - 1.0))
    }

    /// Tangency root of the ball equation at `lambda*`: bisection on the
    /// derivative in `log l` followed by Newton polishing.
    pub fn solve_ell(&self) -> Result<f64> {
        let q = self.q;
        let c = self.cz * self.aggregate() * self.k.powf(q);
        // g'(l) = l^{1/q - 1}/q - c is decreasing in l.
        let dg = |l: f64| l.powf(1.0 / q - 1.0) / q - c;
        let (mut lo, mut hi) = (1e-300_f64.ln(), 1e300_f64.ln());
        if !(dg(lo.exp()) > 0.0 && dg(hi.exp()) < 0.0) {
            return Err(Error::RootFinding { lo: lo.exp(), hi: hi.exp() });
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if dg(mid.exp()) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-6 {
                break;
            }
        }
        let mut ell = (0.5 * (lo + hi)).exp();
        for _ in 0..50 {
            let g2 = (1.0 / q) * (1.0 / q - 1.0) * ell.powf(1.0 / q - 2.0);
            let step = dg(ell) / g2;
            ell -= step;
            if step.abs() <= 1e-15 * ell {
                break;
            }
        }
        if !(ell.is_finite() && ell > 0.0) {
            return Err(Error::RootFinding { lo: lo.exp(), hi: hi.exp() });
        }
        Ok(ell)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdBundle {
    pub r: RChoice,
    pub gamma: f64,
    pub eta: f64,
    pub theta: f64,
    pub inputs: ThresholdInputs,
    pub lambda_star: f64,
    pub ell: f64,
    /// `ell^{1/q}`, the radius of the invariant ball.
    pub ball_radius: f64,
    /// `|g(ell)| / ell^{1/q}` at `lambda*`.
    pub identity_residual: f64,
    /// Cap on the `(gamma, 1+eta)` norm in the small-`m` case, when the
    /// `m = 1` constant is supplied.
    pub m_cap: Option<f64>,
}

/// `eta` at half of its admissible bound `min{q-1, (s - N(gamma-s)) / (N(1+gamma-s) - s)}`.
pub fn eta_choice(dim: usize, s: f64, t: f64, q: f64) -> f64 {
    let n = dim as f64;
    let g = t.max(s);
    let b = (s - n * (g - s)) / (n * (1.0 + g - s) - s);
    0.5 * (q - 1.0).min(b)
}

pub fn thresholds_from(r: RChoice, dim: usize, s: f64, t: f64, inputs: ThresholdInputs, cz_one: Option<(f64, f64)>) -> Result<ThresholdBundle> {
    if !(inputs.cz > 0.0 && inputs.k > 0.0 && inputs.f_norm > 0.0 && inputs.mu_sup > 0.0 && inputs.measure > 0.0) {
        return Err(Error::Hypothesis(
            "thresholds need positive C, k, ||f||_m, ||mu||_inf and |Omega|".into(),
        ));
    }
    let lambda_star = inputs.lambda_star();
    let ell = inputs.solve_ell()?;
    let ball_radius = ell.powf(1.0 / inputs.q);
    let identity_residual = inputs.ball_equation(ell, lambda_star).abs() / ball_radius;
    let eta = eta_choice(dim, s, t, inputs.q);
    let theta = crate::norms::interpolation_theta(inputs.q, eta, r.r)?;
    let m_cap = match (r.case, cz_one) {
        (ExistenceCase::Small, Some((c1, f_l1))) => {
            let a1 = inputs.mu_sup * inputs.measure.powf((r.r - inputs.q) / r.r);
            Some(c1 * (a1 * inputs.k.powf(inputs.q) * ell + lambda_star * f_l1))
        }
        _ => None,
    };
    Ok(ThresholdBundle {
        r,
        gamma: t.max(s),
        eta,
        theta,
        inputs,
        lambda_star,
        ell,
        ball_radius,
        identity_residual,
        m_cap,
    })
}

/// Measured constants entering the thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasuredConstants {
    pub cz: CZEstimate,
    pub embedding: EmbeddingEstimate,
}

/// Number of random samples used for each measured constant.
pub const DEFAULT_SAMPLES: usize = 50;

/// Measures `C~` at `(s, gamma, r, m)` and `k~` for `W^{t,r}` into `W^{gamma,r}`.
pub fn measure_constants(spec: &ProblemSpec, green: &GreenOperator, r: &RChoice, samples: usize, seed: u64) -> Result<MeasuredConstants> {
    let gamma = spec.gamma();
    let cz = estimate_cz_constant(green, gamma, r.r, r.m_effective, samples, seed)?;
    let torsion = green.solve(&Field::constant(&spec.grid, 1.0))?;
    let embedding = embedding_constant(&spec.grid, spec.t, gamma, r.r, samples, seed, &[torsion])?;
    Ok(MeasuredConstants { cz, embedding })
}

/// Picks `r`, measures the constants and evaluates the thresholds for `spec`.
pub fn thresholds(spec: &ProblemSpec, green: &GreenOperator, samples: usize, seed: u64) -> Result<(ThresholdBundle, MeasuredConstants)> {
    let dim = spec.dimension();
    let r = pick_r(dim, spec.s, spec.t, spec.q, spec.m, spec.variant)?;
    let constants = measure_constants(spec, green, &r, samples, seed)?;
    let inputs = ThresholdInputs {
        q: spec.q,
        r: r.r,
        m: r.m_effective,
        cz: constants.cz.constant,
        k: constants.embedding.constant,
        mu_sup: spec.mu_sup(),
        measure: spec.grid.total_measure(),
        f_norm: lebesgue_norm(&spec.f, r.m_effective)?,
    };
    let bundle = thresholds_from(r, dim, spec.s, spec.t, inputs, None)?;
    Ok((bundle, constants))
}

/// The norm whose ball of radius `ell^{1/q}` is invariant under the fixed-point map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallNorm {
    pub gamma: f64,
    pub r: f64,
    /// Whether `||u||_r` is added to `||D_gamma u||_{L^r(R^N)}`.
    pub with_lebesgue: bool,
}

impl BallNorm {
    pub fn for_spec(spec: &ProblemSpec, r: f64) -> Self {
        BallNorm {
            gamma: spec.gamma(),
            r,
            with_lebesgue: !(spec.variant == GradientVariant::Stein && spec.t >= spec.s),
        }
    }

    pub fn eval(&self, u: &Field) -> Result<f64> {
        if self.with_lebesgue {
            stein_norm(u, self.gamma, self.r)
        } else {
            stein_lp(u, self.gamma, self.r)
        }
    }
}

/// Outcome of a Picard run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationReport {
    pub converged: bool,
    pub iterations: usize,
    /// Weak residual of the final iterate, for converged runs.
    pub residual: Option<f64>,
    pub diverged: bool,
    pub blowup_iterate: Option<usize>,
    pub linf_trace: Vec<f64>,
    pub ball_trace: Vec<f64>,
    pub ball_radius: Option<f64>,
    pub ball_norm: Option<BallNorm>,
    /// Whether every traced iterate stayed within `ball_radius (1 + BALL_SLACK)`.
    pub inside_ball: Option<bool>,
}

/// Relative slack allowed in ball-membership checks.
pub const BALL_SLACK: f64 = 0.05;
/// `||u||_inf` beyond which a run is declared divergent.
pub const DIVERGENCE_LEVEL: f64 = 1e8;

/// `T(phi) = G_s[mu |D_t phi|^q + lambda f]`.
pub fn picard_step(spec: &ProblemSpec, phi: &Field, green: &GreenOperator) -> Result<Field> {
    let rhs = spec.nonlinearity(phi)?;
    if rhs.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Picard right-hand side overflowed".into()));
    }
    green.solve(&rhs)
}

#[derive(Debug, Clone, Copy)]
pub struct IterationOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Ball to trace: norm and radius.
    pub ball: Option<(BallNorm, f64)>,
    /// Compute the weak residual of the final iterate.
    pub residual: bool,
}

impl Default for IterationOptions {
    fn default() -> Self {
        IterationOptions {
            max_iter: 200,
            tol: 1e-10,
            ball: None,
            residual: true,
        }
    }
}

/// Picard iteration from `u0` (zero by default) until
/// `||u_{k+1} - u_k||_inf <= tol (1 + ||u_k||_inf)`.
pub fn iterate(spec: &ProblemSpec, green: &GreenOperator, u0: Option<&Field>, opts: IterationOptions) -> Result<(Field, IterationReport)> {
    if opts.max_iter == 0 || !(opts.tol > 0.0) {
        return Err(Error::Config("iterate needs max_iter >= 1 and tol > 0".into()));
    }
    let mut u = match u0 {
        Some(u) => {
            u.check_same_grid(&spec.f)?;
            u.clone()
        }
        None => Field::zeros(&spec.grid),
    };
    let mut report = IterationReport {
        converged: false,
        iterations: 0,
        residual: None,
        diverged: false,
        blowup_iterate: None,
        linf_trace: Vec::new(),
        ball_trace: Vec::new(),
        ball_radius: opts.ball.map(|b| b.1),
        ball_norm: opts.ball.map(|b| b.0),
        inside_ball: None,
    };
    for k in 1..=opts.max_iter {
        let next = match picard_step(spec, &u, green) {
            Ok(v) => v,
            Err(Error::NonFinite(_)) | Err(Error::SolveResidual { .. }) => {
                report.linf_trace.push(f64::INFINITY);
                if opts.ball.is_some() {
                    report.ball_trace.push(f64::INFINITY);
                }
                report.diverged = true;
                report.blowup_iterate = Some(k);
                report.iterations = k;
                break;
            }
            Err(e) => return Err(e),
        };
        let size = next.max_abs();
        report.iterations = k;
        report.linf_trace.push(size);
        if !size.is_finite() || size > DIVERGENCE_LEVEL {
            if opts.ball.is_some() {
                report.ball_trace.push(f64::INFINITY);
            }
            report.diverged = true;
            report.blowup_iterate = Some(k);
            u = next;
            break;
        }
        if let Some((norm, _)) = opts.ball {
            report.ball_trace.push(norm.eval(&next)?);
        }
        let diff = next.values().iter().zip(u.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = 1.0 + u.max_abs();
        u = next;
        if diff <= opts.tol * scale {
            report.converged = true;
            break;
        }
    }
    if let Some((_, radius)) = opts.ball {
        report.inside_ball = Some(report.ball_trace.iter().all(|b| *b <= radius * (1.0 + BALL_SLACK)));
    }
    if report.converged && opts.residual {
        report.residual = Some(WeakBattery::new(green)?.residual(&u, spec)?);
    }
    Ok((u, report))
}

/// Fixed discrete test functions vanishing outside the domain, with their
/// images under `(-Delta)^s`.
pub struct WeakBattery {
    tests: Vec<Field>,
    images: Vec<Field>,
}

/// `exp(1 - 1/(1 - rho^2))` for `rho < 1`, zero otherwise.
pub fn smooth_bump(rho: f64) -> f64 {
    if rho >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - rho * rho)).exp()
    }
}

impl WeakBattery {
    /// The s-torsion function, Getoor-type profiles `(1 - |x-c|^2/R^2)_+^k` for
    /// `k` in `{1/4, 1/2, 3/4, 1}`, and five centered smooth bumps of
    /// decreasing width; `c` and `R` are the incenter and inradius.
    pub fn new(green: &GreenOperator) -> Result<Self> {
        let grid = green.grid();
        let c = grid.domain().incenter();
        let rad = grid.domain().inradius();
        let rel = move |p: [f64; 2]| ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt() / rad;
        let mut tests = vec![green.solve(&Field::constant(grid, 1.0))?];
        for k in [0.25, 0.5, 0.75, 1.0] {
            tests.push(Field::from_fn(grid, |p| (1.0 - rel(p).powi(2)).max(0.0).powf(k)));
        }
        for j in 0..5 {
            let w = 1.0 - 0.15 * j as f64;
            tests.push(Field::from_fn(grid, |p| smooth_bump(rel(p) / w)));
        }
        let images = tests.iter().map(|t| green.operator().apply(t)).collect::<Result<_>>()?;
        Ok(WeakBattery { tests, images })
    }

    pub fn len(&self) -> usize {
        self.tests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tests.is_empty()
    }

    pub fn tests(&self) -> &[Field] {
        &self.tests
    }

    /// `max_j |<u, M phi_j> - <mu |D_t u|^q + lambda f, phi_j>| / ||phi_j||_inf`.
    pub fn residual(&self, u: &Field, spec: &ProblemSpec) -> Result<f64> {
        let g = spec.nonlinearity(u)?;
        let mut worst = 0.0_f64;
        for (phi, img) in self.tests.iter().zip(&self.images) {
            let lhs = u.inner(img)?;
            let rhs = g.inner(phi)?;
            worst = worst.max((lhs - rhs).abs() / phi.max_abs());
        }
        Ok(worst)
    }
}

pub fn weak_residual(u: &Field, spec: &ProblemSpec, green: &GreenOperator) -> Result<f64> {
    WeakBattery::new(green)?.residual(u, spec)
}

/// `int_Omega |(D_t phi1)^alpha - (D_t phi2)^alpha|`.
pub fn stein_power_gap(phi1: &Field, phi2: &Field, t: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 1.0) {
        return Err(Error::out_of_range("alpha", alpha, "(1, inf)"));
    }
    phi1.check_same_grid(phi2)?;
    let a = stein_functional(phi1, t)?;
    let b = stein_functional(phi2, t)?;
    let cell = phi1.grid().cell_measure();
    Ok(a.values().iter().zip(b.values()).map(|(x, y)| (x.powf(alpha) - y.powf(alpha)).abs()).sum::<f64>() * cell)
}

/// Right-hand side of the mean-value/Holder bound on [`stein_power_gap`]:
/// `C(||D phi1||_alpha, ||D phi2||_alpha) ||D_t (phi1 - phi2)||_{L^{max(alpha,2)}(Omega)}`.
pub fn stein_power_gap_bound(phi1: &Field, phi2: &Field, t: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 1.0) {
        return Err(Error::out_of_range("alpha", alpha, "(1, inf)"));
    }
    let grid = phi1.grid();
    let cell = grid.cell_measure();
    let a = stein_functional(phi1, t)?;
    let b = stein_functional(phi2, t)?;
    let d = stein_functional(&phi1.add_scaled(-1.0, phi2)?, t)?;
    let sum = lp_values(a.values(), alpha, cell) + lp_values(b.values(), alpha, cell);
    Ok(if alpha >= 2.0 {
        std::f64::consts::FRAC_1_SQRT_2 * alpha * sum.powf(alpha - 1.0) * lp_values(d.values(), alpha, cell)
    } else {
        let measure = grid.total_measure();
        alpha * sum.powf(alpha - 1.0) * measure.powf(1.0 / alpha - 0.5) * lp_values(d.values(), 2.0, cell)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub converged: bool,
    pub diverged: bool,
    pub iterations: usize,
    pub final_linf: f64,
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Largest converging lambda (empirical Picard threshold).
    pub largest_converging: Option<f64>,
    pub smallest_diverging: Option<f64>,
    pub lambda_star: Option<f64>,
    pub lambda_starstar: Option<f64>,
    /// Whether `||u_lambda||_inf` is non-decreasing over the converging prefix.
    pub monotone_prefix: bool,
}

/// Runs [`iterate`] from zero for each `lambda` (ascending).
pub fn lambda_sweep(spec: &ProblemSpec, lambdas: &[f64], green: &GreenOperator, opts: IterationOptions) -> Result<SweepReport> {
    if lambdas.is_empty() {
        return Err(Error::Config("lambda sweep needs at least one value".into()));
    }
    if lambdas.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Config("lambda values must be sorted ascending".into()));
    }
    let opts = IterationOptions { ball: None, ..opts };
    let rows = lambdas
        .par_iter()
        .map(|&l| {
            let sp = spec.with_lambda(l)?;
            let (u, rep) = iterate(&sp, green, None, opts)?;
            Ok(SweepRow {
                lambda: l,
                converged: rep.converged,
                diverged: rep.diverged,
                iterations: rep.iterations,
                final_linf: u.max_abs(),
                residual: rep.residual,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let largest_converging = rows.iter().filter(|r| r.converged).map(|r| r.lambda).fold(None, |m: Option<f64>, l| Some(m.map_or(l, |m| m.max(l))));
    let smallest_diverging = rows.iter().find(|r| !r.converged).map(|r| r.lambda);
    let prefix: Vec<f64> = rows.iter().take_while(|r| r.converged).map(|r| r.final_linf).collect();
    let monotone_prefix = prefix.windows(2).all(|w| w[0] <= w[1] * (1.0 + 1e-12));
    Ok(SweepReport {
        rows,
        largest_converging,
        smallest_diverging,
        lambda_star: None,
        lambda_starstar: None,
        monotone_prefix,
    })
}
