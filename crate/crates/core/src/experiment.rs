//! Configuration-driven experiments.
//!
//! A JSON configuration names one experiment kind, a domain, a grid spacing
//! and the problem data. [`run`] validates everything before computing,
//! writes `fields/*.csv`, `report.json` and `manifest.json` into the output
//! directory, and returns the manifest. Reports carry no timestamps, so two
//! runs of the same configuration produce byte-identical reports and fields.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::domain_grid::{Domain, Field, Grid};
use crate::error::{Error, Result};
use crate::fracops::{apply_frac_laplacian, assemble_frac_laplacian, getoor_constant, kernel_constants};
use crate::kpz::{iterate, lambda_sweep, pick_r, thresholds, BallNorm, GradientVariant, IterationOptions, ProblemSpec};
use crate::nonexist::{dyadic_bumps, lambda_starstar_kpz1, lambda_starstar_kpz3, young_constant};
use crate::poisson::{check_cz_range, decomposition_diagnostics, estimate_cz_constant, GreenOperator};
use crate::sampling::{streams, FieldSampler};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SolvePoisson,
    OperatorValidate,
    CzProbe,
    Thresholds,
    Iterate,
    Sweep,
    NonexistKpz1,
    NonexistKpz3,
    Decomposition,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::SolvePoisson => "solve_poisson",
            ExperimentKind::OperatorValidate => "operator_validate",
            ExperimentKind::CzProbe => "cz_probe",
            ExperimentKind::Thresholds => "thresholds",
            ExperimentKind::Iterate => "iterate",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::NonexistKpz1 => "nonexist_kpz1",
            ExperimentKind::NonexistKpz3 => "nonexist_kpz3",
            ExperimentKind::Decomposition => "decomposition",
        }
    }
}

/// A datum given either as a number (constant field) or as a named profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldInput {
    Constant(f64),
    Profile(Profile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    /// `amplitude (R^2 - |x - c|^2)_+^exponent` on the inscribed ball.
    Getoor { exponent: f64, #[serde(default = "one")] amplitude: f64 },
    /// `amplitude exp(-|x - center|^2 / width^2)`.
    Gaussian { center: [f64; 2], width: f64, #[serde(default = "one")] amplitude: f64 },
}

fn one() -> f64 {
    1.0
}

impl Default for FieldInput {
    fn default() -> Self {
        FieldInput::Constant(1.0)
    }
}

impl FieldInput {
    fn validate(&self, name: &str) -> Result<()> {
        let ok = match self {
            FieldInput::Constant(c) => c.is_finite(),
            FieldInput::Profile(Profile::Getoor { exponent, amplitude }) => *exponent >= 0.0 && exponent.is_finite() && amplitude.is_finite(),
            FieldInput::Profile(Profile::Gaussian { center, width, amplitude }) => {
                *width > 0.0 && width.is_finite() && amplitude.is_finite() && center.iter().all(|c| c.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid field specification for {name}")))
        }
    }

    pub fn build(&self, grid: &Arc<Grid>) -> Field {
        match self {
            FieldInput::Constant(c) => Field::constant(grid, *c),
            FieldInput::Profile(Profile::Getoor { exponent, amplitude }) => {
                let c = grid.domain().incenter();
                let r = grid.domain().inradius();
                Field::from_fn(grid, |p| {
                    let d2 = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
                    amplitude * (r * r - d2).max(0.0).powf(*exponent)
                })
            }
            FieldInput::Profile(Profile::Gaussian { center, width, amplitude }) => Field::from_fn(grid, |p| {
                let d2 = (p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2);
                amplitude * (-d2 / (width * width)).exp()
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub s: f64,
    pub t: f64,
    pub q: f64,
    #[serde(default)]
    pub lambda: f64,
    /// When set, `lambda` is replaced by this multiple of the computed `lambda*`.
    #[serde(default)]
    pub lambda_fraction: Option<f64>,
    #[serde(default)]
    pub mu: FieldInput,
    #[serde(default)]
    pub f: FieldInput,
    pub m: f64,
    pub variant: GradientVariant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_tol")]
    pub picard: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    200
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            picard: default_tol(),
            max_iter: default_max_iter(),
        }
    }
}

fn default_seed() -> u64 {
    42
}

fn default_samples() -> usize {
    crate::kpz::DEFAULT_SAMPLES
}

fn default_bumps() -> usize {
    crate::nonexist::DEFAULT_BUMPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub domain: Domain,
    pub h: f64,
    #[serde(default)]
    pub problem: Option<ProblemConfig>,
    /// Operator order for `solve_poisson` and `operator_validate`.
    #[serde(default)]
    pub sigma: Option<f64>,
    /// Right-hand side for `solve_poisson` and `decomposition`.
    #[serde(default)]
    pub rhs: FieldInput,
    /// Target exponent for `cz_probe`.
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub lambdas: Option<Vec<f64>>,
    #[serde(default)]
    pub shift: Option<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_bumps")]
    pub bumps: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        hex(&Sha256::digest(serde_json::to_vec(self).expect("config serializes")))
    }

    fn problem(&self) -> Result<&ProblemConfig> {
        self.problem
            .as_ref()
            .ok_or_else(|| Error::Config(format!("experiment {} needs a \"problem\" section", self.kind.name())))
    }

    fn sigma(&self) -> Result<f64> {
        self.sigma
            .or(self.problem.as_ref().map(|p| p.s))
            .ok_or_else(|| Error::Config(format!("experiment {} needs \"sigma\"", self.kind.name())))
    }

    fn spec(&self, grid: &Arc<Grid>) -> Result<ProblemSpec> {
        let p = self.problem()?;
        p.mu.validate("mu")?;
        p.f.validate("f")?;
        ProblemSpec::new(p.s, p.t, p.q, p.lambda, p.mu.build(grid), p.f.build(grid), p.m, p.variant)
    }

    /// Checks every field needed by the configured kind; performs no solves.
    pub fn validate(&self) -> Result<Arc<Grid>> {
        self.domain.validate()?;
        let grid = Arc::new(Grid::new(self.domain, self.h)?);
        if self.tolerances.max_iter == 0 || !(self.tolerances.picard > 0.0) {
            return Err(Error::Config("tolerances need max_iter >= 1 and picard > 0".into()));
        }
        if self.samples == 0 {
            return Err(Error::Config("samples must be positive".into()));
        }
        self.rhs.validate("rhs")?;
        match self.kind {
            ExperimentKind::SolvePoisson | ExperimentKind::OperatorValidate => {
                crate::error::check_unit_open("sigma", self.sigma()?)?;
            }
            ExperimentKind::CzProbe => {
                let p = self.problem()?;
                let target = self.p.ok_or_else(|| Error::Config("cz_probe needs \"p\"".into()))?;
                check_cz_range(grid.dimension(), p.s, p.t, target, p.m)?;
            }
            ExperimentKind::Thresholds => {
                let spec = self.spec(&grid)?;
                pick_r(grid.dimension(), spec.s, spec.t, spec.q, spec.m, spec.variant)?;
            }
            ExperimentKind::Iterate => {
                let spec = self.spec(&grid)?;
                if let Some(frac) = self.problem()?.lambda_fraction {
                    if !(frac >= 0.0 && frac.is_finite()) {
                        return Err(Error::out_of_range("lambda_fraction", frac, "[0, inf)"));
                    }
                    pick_r(grid.dimension(), spec.s, spec.t, spec.q, spec.m, spec.variant)?;
                }
            }
            ExperimentKind::Sweep => {
                self.spec(&grid)?;
                let l = self.lambdas.as_deref().unwrap_or(&[]);
                if l.is_empty() {
                    return Err(Error::Config("sweep needs a non-empty lambda list".into()));
                }
                if l.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || l.windows(2).any(|w| !(w[0] <= w[1])) {
                    return Err(Error::Config("lambda list must be finite, non-negative and ascending".into()));
                }
            }
            ExperimentKind::NonexistKpz1 => {
                let spec = self.spec(&grid)?;
                if !(spec.mu_min() > 0.0) {
                    return Err(Error::Hypothesis("non-existence needs min mu > 0".into()));
                }
            }
            ExperimentKind::NonexistKpz3 => {
                let spec = self.spec(&grid)?;
                if !(spec.mu_min() > 0.0) {
                    return Err(Error::Hypothesis("non-existence needs min mu > 0".into()));
                }
                if self.bumps == 0 {
                    return Err(Error::Config("bumps must be positive".into()));
                }
            }
            ExperimentKind::Decomposition => {
                let p = self.problem()?;
                crate::error::check_unit_open("s", p.s)?;
                crate::error::check_unit_open("t", p.t)?;
                if !(p.s <= p.t && p.t < (2.0 * p.s).min(1.0)) {
                    return Err(Error::Hypothesis("the decomposition needs s <= t < min{1, 2s}".into()));
                }
            }
        }
        Ok(grid)
    }
}

/// Parses `a:b:n` into `n` equally spaced values from `a` to `b`.
pub fn parse_lambda_range(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::Config(format!("lambda range must be a:b:n, got {text:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 || !(a.is_finite() && b.is_finite()) || b < a {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Renders `x1[,x2],value` rows in node order with 17 significant digits.
pub fn field_csv(field: &Field) -> Result<String> {
    if field.is_empty() {
        return Err(Error::Config("refusing to write an empty field".into()));
    }
    let grid = field.grid();
    let mut out = String::with_capacity(48 * field.len());
    out.push_str(if grid.dimension() == 1 { "x1,value\n" } else { "x1,x2,value\n" });
    for (p, v) in grid.nodes().iter().zip(field.values()) {
        if grid.dimension() == 1 {
            out.push_str(&format!("{:.16e},{:.16e}\n", p[0], v));
        } else {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", p[0], p[1], v));
        }
    }
    Ok(out)
}

pub fn emit_field_csv(field: &Field, path: &Path) -> Result<()> {
    write_file(path, field_csv(field)?.as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(bytes).map_err(io)
}

/// A constant reported together with where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantRecord {
    pub name: String,
    pub value: f64,
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub kind: ExperimentKind,
    pub config_hash: String,
    pub version: String,
    pub seed: u64,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub files: Vec<OutputFile>,
    pub constants: Vec<ConstantRecord>,
}

/// Collected outputs of one experiment before they are written.
#[derive(Default)]
struct Outputs {
    fields: Vec<(String, Field)>,
    tables: Vec<(String, String)>,
    constants: Vec<ConstantRecord>,
}

impl Outputs {
    fn field(&mut self, name: &str, f: Field) {
        self.fields.push((name.to_string(), f));
    }

    fn constant(&mut self, name: &str, value: f64, provenance: impl Into<String>) {
        self.constants.push(ConstantRecord {
            name: name.to_string(),
            value,
            provenance: provenance.into(),
        });
    }
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Validates `config`, runs it, and writes outputs under `out_dir`.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<RunManifest> {
    let grid = config.validate()?;
    let started = unix_now();
    let mut outputs = Outputs::default();
    let report = execute(config, &grid, &mut outputs)?;
    let report = json!({
        "kind": config.kind,
        "grid": grid_metadata(&grid),
        "seed": config.seed,
        "result": report,
    });
    let mut files = Vec::new();
    let mut record = |rel: String, bytes: &[u8]| -> Result<()> {
        write_file(&out_dir.join(&rel), bytes)?;
        files.push(OutputFile {
            path: rel,
            sha256: hex(&Sha256::digest(bytes)),
        });
        Ok(())
    };
    for (name, field) in &outputs.fields {
        record(format!("fields/{name}.csv"), field_csv(field)?.as_bytes())?;
    }
    for (name, text) in &outputs.tables {
        record(name.clone(), text.as_bytes())?;
    }
    record("report.json".into(), serde_json::to_string_pretty(&report)?.as_bytes())?;
    let manifest = RunManifest {
        kind: config.kind,
        config_hash: config.hash(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        started_unix: started,
        finished_unix: unix_now(),
        files,
        constants: outputs.constants,
    };
    write_file(&out_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok(manifest)
}

fn grid_metadata(grid: &Grid) -> Value {
    json!({
        "domain": grid.domain(),
        "h": grid.spacing(),
        "nodes": grid.len(),
        "dimension": grid.dimension(),
        "measure": grid.total_measure(),
    })
}

fn execute(config: &ExperimentConfig, grid: &Arc<Grid>, out: &mut Outputs) -> Result<Value> {
    match config.kind {
        ExperimentKind::SolvePoisson => solve_poisson_experiment(config, grid, out),
        ExperimentKind::OperatorValidate => operator_validate(config, grid, out),
        ExperimentKind::CzProbe => cz_probe(config, grid, out),
        ExperimentKind::Thresholds => thresholds_experiment(config, grid, out),
        ExperimentKind::Iterate => iterate_experiment(config, grid, out),
        ExperimentKind::Sweep => sweep_experiment(config, grid, out),
        ExperimentKind::NonexistKpz1 => nonexist_kpz1(config, grid, out),
        ExperimentKind::NonexistKpz3 => nonexist_kpz3(config, grid, out),
        ExperimentKind::Decomposition => decomposition(config, grid, out),
    }
}

fn closed_form(kind: &str) -> String {
    format!("closed form: {kind}")
}

/// Largest relative deviation from `exact` over nodes with `delta > margin`.
fn interior_error(values: &Field, exact: &Field, margin: f64) -> f64 {
    values
        .values()
        .iter()
        .zip(exact.values())
        .zip(values.grid().delta())
        .filter(|(_, d)| **d > margin)
        .map(|((v, e), _)| ((v - e) / e).abs())
        .fold(0.0, f64::max)
}

fn is_ball(domain: &Domain) -> bool {
    matches!(domain, Domain::Interval { .. } | Domain::Disk { .. })
}

fn solve_poisson_experiment(config: &ExperimentConfig, grid: &Arc<Grid>, out: &mut Outputs) -> Result<Value> {
    let sigma = config.sigma()?;
    let rhs = config.rhs.build(grid);
    let green = GreenOperator::new(grid, sigma)?;
    let u = green.solve(&rhs)?;
    let residual = {
        let r = green.operator().apply(&u)?.add_scaled(-1.0, &rhs)?;
        r.values().iter().map(|v| v * v).sum::<f64>().sqrt() / rhs.values().iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE)
    };
    let mut report = json!({
        "sigma": sigma,
        "relative_residual": residual,
        "max": u.max(),
        "min": u.min(),
    });
    if let (true, FieldInput::Constant(c)) = (is_ball(grid.domain()), &config.rhs) {
        let center = grid.domain().incenter();
        let r = grid.domain().inradius();
        let k = getoor_constant(grid.dimension(), sigma);
        out.constant("getoor_constant", k, closed_form("2^{2s} Gamma(1+s) Gamma(N/2+s) / Gamma(N/2)"));
        let exact = Field::from_fn(grid, |p| c * (r * r - (p[0] - center[0]).powi(2) - (p[1] - center[1]).powi(2)).max(0.0).powf(sigma) / k);
        let margin = 0.05 * r;
        report["interior_margin"] = json!(margin);
        report["interior_max_rel_error"] = json!(interior_error(&u, &exact, margin));
        out.field("exact", exact);
    }
    out.field("rhs", rhs);
    out.field("solution", u);
    Ok(report)
}

fn operator_validate(config: &ExperimentConfig, grid: &Arc<Grid>, out: &mut Outputs) -> Result<Value> {
    let sigma = config.sigma()?;
    let op = assemble_frac_laplacian(grid, sigma)?;
    let n = op.len();
    let mut asym = 0.0_f64;
    for j in 0..n {
        for i in 0..j {
            asym = asym.max((op.entry(i, j) - op.entry(j, i)).abs());
        }
    }
    let mut sampler = FieldSampler::new(config.seed, streams::PROPERTY);
    let mut min_form = f64::INFINITY;
    for _ in 0..config.samples {
        let u = sampler.uniform(grid, -1.0, 1.0);
        min_form = min_form.min(op.quadratic_form(&u)?);
    }
    let center = grid.domain().incenter();
    let r = grid.domain().inradius();
    let profile = Field::from_fn(grid, |p| (r * r - (p[0] - center[0]).powi(2) - (p[1] - center[1]).powi(2)).max(0.0).powf(sigma));
    let image = op.apply(&profile)?;
    let free = apply_frac_laplacian(&profile, sigma)?;
    let agreement = image.values().iter().zip(free.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let k = getoor_constant(grid.dimension(), sigma);
    let constants = kernel_constants(grid.dimension(), sigma)?;
    out.constant("a", constants.a, closed_form("2^{2s} Gamma(N/2+s) / (pi^{N/2} |Gamma(-s)|)"));
    out.constant("getoor_constant", k, closed_form("2^{2s} Gamma(1+s) Gamma(N/2+s) / Gamma(N/2)"));
    let mut report = json!({
        "sigma": sigma,
        "kernel_constant": constants.a,
        "max_asymmetry": asym,
        "min_quadratic_form": min_form,
        "quadratic_form_samples": config.samples,
        "matrix_free_agreement": agreement,
    });
    if is_ball(grid.domain()) {
        let exact = Field::constant(grid, k);
        let margin = 0.05 * r;
        report["getoor_constant"] = json!(k);
        report["interior_margin"] = json!(margin);
        report["interior_max_rel_error"] = json!(interior_error(&image, &exact, margin));
    }
    out.field("profile", profile);
    out.field("image", image);
    Ok(report)
}

fn cz_probe(config: &ExperimentConfig, grid: &Arc<Grid>, out: &mut Outputs) -> Result<Value> {
    let p = config.problem()?;
    let target = config.p.expect("validated");
    let green = GreenOperator::new(grid, p.s)?;
    let est = estimate_cz_constant(&green, p.t, target, p.m, config.samples, config.seed)?;
    out.constant(
        "C~",
        est.constant,
        format!(
            "measured: max of |||G_s h|||_(t,p) / ||h||_m over {} right-hand sides, seed {}, stream {}",
            est.samples,
            config.seed,
            streams::CZ
        ),
    );
    Ok(serde_json::to_value(est)?)
}

fn record_measured(out: &mut Outputs, config: &ExperimentConfig, m: &crate::kpz::MeasuredConstants) {
    out.constant(
        "C~",
        m.cz.constant,
        format!(
            "measured: max of stein_norm(G_s h, gamma, r) / ||h||_m over {} right-hand sides, seed {}, stream {}",
            m.cz.samples,
            config.seed,
            streams::CZ
        ),
    );
    out.constant(
        "k~",
        m.embedding.constant,
        format!(
            "measured: max(1, max of W^(t,r) / W^(gamma,r) norm ratios) over {} fields, seed {}, stream {}",
            m.embedding.samples,
            config.seed,
            streams::EMBEDDING
        ),
    );
}

fn thresholds_experiment(config: &ExperimentConfig, grid: &Arc<Grid>, out: &mut Outputs) -> Result<Value> {
    let spec = config.spec(grid)?;
    let green = GreenOperator::new(grid, spec.s)?;
    let (bundle, measured) = thresholds(&spec, &green, config.samples, config.seed)?;
    record_measured(out, config, &measured);
    out.constant("lambda*", bundle.lambda_star, "closed form from the measured C~, k~");
    Ok(json!({
        "regime": spec.regime(),
        "thresholds": bundle,
        "measured": measured,
    }))
}

fn iterate_experiment(config: &ExperimentConfig, grid: &Arc<Grid>, out: &mut Outputs) -> Result<Value> {
    let mut spec = config.spec(grid)?;
    let green = GreenOperator::new(grid, spec.s)?;
    let problem = config.problem()?;
    let mut opts = IterationOptions {
        max_iter: config.tolerances.max_iter,
        tol: config.tolerances.picard,
        ball: None,
        residual: true,
    };
    let mut threshold_report = Value::Null;
    let admissible = pick_r(grid.dimension(), spec.s, spec.t, spec.q, spec.m, spec.variant).is_ok();
    if admissible {
        let (bundle, measured) = thresholds(&spec, &green, config.samples, config.seed)?;
        record_measured(out, config, &measured);
        out.constant("lambda*", bundle.lambda_star, "closed form from the measured C~, k~");
        if let Some(frac) = problem.lambda_fraction {
            spec = spec.with_lambda(frac * bundle.lambda_star)?;
        }
        opts.ball = Some((BallNorm::for_spec(&spec, bundle.r.r), bundle.ball_radius));
        threshold_report = serde_json::to_value(bundle)?;
    }
    let (u, rep) = iterate(&spec, &green, None, opts)?;
    out.field("solution", u);
    Ok(json!({
        "lambda": spec.lambda,
        "variant": spec.variant,
        "regime": spec.regime(),
        "thresholds": threshold_report,
        "iteration": rep,
        "outcome": if rep.converged { "converged" } else { "no Picard fixed point found" },
    }))
}

fn sweep_experiment(config: &ExperimentConfig, grid: &Arc<Grid>, out: &mut Outputs) -> Result<Value> {
    let spec = config.spec(grid)?;
    let green = GreenOperator::new(grid, spec.s)?;
    let lambdas = config.lambdas.clone().expect("validated");
    let opts = IterationOptions {
        max_iter: config.tolerances.max_iter,
        tol: config.tolerances.picard,
        ball: None,
        residual: true,
    };
    let mut rep = lambda_sweep(&spec, &lambdas, &green, opts)?;
    let mut measured_report = Value::Null;
    if pick_r(grid.dimension(), spec.s, spec.t, spec.q, spec.m, spec.variant).is_ok() {
        let (bundle, measured) = thresholds(&spec, &green, config.samples, config.seed)?;
        record_measured(out, config, &measured);
        rep.lambda_star = Some(bundle.lambda_star);
        measured_report = json!({ "cz": measured.cz.constant, "k": measured.embedding.constant });
    }
    let mu1 = spec.mu_min();
    rep.lambda_starstar = match spec.variant {
        GradientVariant::HalfLaplacian if mu1 > 0.0 => lambda_starstar_kpz1(grid, spec.s, spec.t, spec.q, mu1, &spec.f).ok().map(|b| b.lambda_starstar),
        GradientVariant::Stein if mu1 > 0.0 => dyadic_bumps(grid, config.bumps)
            .and_then(|b| lambda_starstar_kpz3(grid, spec.s, spec.t, spec.q, mu1, &spec.f, &b))
            .ok()
            .map(|b| b.lambda_starstar),
        _ => None,
    };
    let mut csv = String::from("lambda,converged,iterations,final_norm,residual\n");
    for r in &rep.rows {
        csv.push_str(&format!(
            "{:.16e},{},{},{:.16e},{}\n",
            r.lambda,
            r.converged,
            r.iterations,
            r.final_linf,
            r.residual.map(|v| format!("{v:.16e}")).unwrap_or_default()
        ));
    }
    out.tables.push(("sweep.csv".into(), csv));
    Ok(json!({
        "variant": spec.variant,
        "sweep": rep,
        "measured": measured_report,
    }))
}

fn nonexist_kpz1(config: &ExperimentConfig, grid: &Arc<Grid>, out: &mut Outputs) -> Result<Value> {
    let spec = config.spec(grid)?;
    let b = lambda_starstar_kpz1(grid, spec.s, spec.t, spec.q, spec.mu_min(), &spec.f)?;
    out.constant("C_q", b.young_constant, "sharp Young constant (q-1) q^(-q/(q-1))");
    out.constant("C0", b.c0, "measured: extreme ratios of phi / delta^s over nodes with delta > 2h");
    out.constant("lambda**", b.lambda_starstar, "node quadrature of the torsion functions");
    out.field("phi", b.phi.clone());
    out.field("psi", b.psi.clone());
    Ok(serde_json::to_value(&b)?)
}

fn nonexist_kpz3(config: &ExperimentConfig, grid: &Arc<Grid>, out: &mut Outputs) -> Result<Value> {
    let spec = config.spec(grid)?;
    let bumps = dyadic_bumps(grid, config.bumps)?;
    let b = lambda_starstar_kpz3(grid, spec.s, spec.t, spec.q, spec.mu_min(), &spec.f, &bumps)?;
    out.constant("C_q", young_constant(spec.q), "sharp Young constant (q-1) q^(-q/(q-1))");
    out.constant("C~_(q,mu1)", b.constant.value, b.constant.formula);
    out.constant(
        "lambda**",
        b.lambda_starstar,
        format!("upper estimate of the infimum over {} dyadic smooth bumps", bumps.len()),
    );
    out.field("best_bump", bumps[b.argmin].clone());
    Ok(json!({ "bundle": b, "label": "upper estimate of the infimum" }))
}

fn decomposition(config: &ExperimentConfig, grid: &Arc<Grid>, out: &mut Outputs) -> Result<Value> {
    let p = config.problem()?;
    let green = GreenOperator::new(grid, p.s)?;
    let rhs = config.rhs.build(grid);
    let rep = decomposition_diagnostics(&green, p.t, &rhs, config.shift)?;
    out.field("g1", Field::new(Arc::clone(grid), rep.g1.clone())?);
    out.field("g2", Field::new(Arc::clone(grid), rep.g2.clone())?);
    out.field("g3", Field::new(Arc::clone(grid), rep.g3.clone())?);
    Ok(json!({ "report": rep, "tails_hold": rep.tails_hold() }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(kind: &str, extra: &str) -> String {
        format!(r#"{{"kind": "{kind}", "domain": {{"shape": "interval", "a": -1, "b": 1}}, "h": 0.0625 {extra}}}"#)
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_json(&config("solve_poisson", r#", "sigma": 0.5, "sigmma": 1"#)).is_err());
        assert!(ExperimentConfig::from_json(&config("solve_poisson", r#", "sigma": 0.5"#)).is_ok());
    }

    #[test]
    fn empty_sweep_fails_validation() {
        let c = ExperimentConfig::from_json(&config(
            "sweep",
            r#", "lambdas": [], "problem": {"s": 0.6, "t": 0.5, "q": 2, "m": 4, "variant": "stein"}"#,
        ))
        .unwrap();
        let e = c.validate().unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn lambda_ranges() {
        assert_eq!(parse_lambda_range("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_lambda_range("0.2:0.2:1").unwrap(), vec![0.2]);
        assert!(parse_lambda_range("1:0:3").is_err());
        assert!(parse_lambda_range("0:1").is_err());
    }

    #[test]
    fn csv_rows_in_node_order() {
        let g = Arc::new(Grid::new(Domain::interval(-0.5, 0.5).unwrap(), 0.25).unwrap());
        let f = Field::from_fn(&g, |p| p[0]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        emit_field_csv(&f, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x1,value");
        assert_eq!(lines.len(), g.len() + 1);
        let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(first[0], g.node(0)[0]);
    }
}
