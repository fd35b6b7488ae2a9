//! Experiment configuration.
//!
//! A config is one JSON document `{kind, parameters, master_seed,
//! output_path}`. `parameters` is checked against the kind's schema
//! (unknown keys are errors) and missing entries take the defaults below;
//! the fully resolved parameters are what every output file echoes.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use srip_core::ensembles::{Ensemble, ValueDist};
use srip_core::recovery::{AltMinOptions, BasisPursuitOptions, MAX_ORACLE_ROWS};

use crate::error::{HarnessError, Result};

/// Default output directory when neither the config nor the CLI names one.
pub const OUT_DIR_ENV: &str = "SRIP_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "srip-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Recover,
    Oracle,
    Srip,
    Rip,
    Mu,
    Concentration,
    Jl,
    PhaseTransition,
    BernoulliWitness,
}

impl Kind {
    pub const ALL: [Kind; 9] = [
        Kind::Recover,
        Kind::Oracle,
        Kind::Srip,
        Kind::Rip,
        Kind::Mu,
        Kind::Concentration,
        Kind::Jl,
        Kind::PhaseTransition,
        Kind::BernoulliWitness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Recover => "recover",
            Kind::Oracle => "oracle",
            Kind::Srip => "srip",
            Kind::Rip => "rip",
            Kind::Mu => "mu",
            Kind::Concentration => "concentration",
            Kind::Jl => "jl",
            Kind::PhaseTransition => "phase_transition",
            Kind::BernoulliWitness => "bernoulli_witness",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default)]
    pub parameters: Map<String, Value>,
    #[serde(default)]
    pub master_seed: u64,
    /// Directory for the outputs; empty means `$SRIP_OUT_DIR` or `srip-out`.
    #[serde(default)]
    pub output_path: String,
}

impl ExperimentConfig {
    pub fn new(kind: Kind) -> Self {
        Self { kind, parameters: Map::new(), master_seed: 0, output_path: String::new() }
    }

    pub fn with_param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.set_param(key, value.into());
        self
    }

    /// Sets one parameter; dotted keys reach into nested tables
    /// (`alt_min.max_outer`).
    pub fn set_param(&mut self, key: &str, value: Value) {
        let mut map = &mut self.parameters;
        let mut parts = key.split('.').peekable();
        while let Some(part) = parts.next() {
            if parts.peek().is_none() {
                map.insert(part.to_string(), value);
                return;
            }
            let slot = map.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
            if !slot.is_object() {
                *slot = Value::Object(Map::new());
            }
            map = slot.as_object_mut().expect("object");
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        if !self.output_path.is_empty() {
            return PathBuf::from(&self.output_path);
        }
        std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let raw = Value::Object(self.parameters.clone());
        let params = match self.kind {
            Kind::Recover => Params::Recover(parse(raw)?),
            Kind::Oracle => Params::Oracle(parse(raw)?),
            Kind::Srip => Params::Srip(parse(raw)?),
            Kind::Rip => Params::Rip(parse(raw)?),
            Kind::Mu => Params::Mu(parse(raw)?),
            Kind::Concentration => Params::Concentration(parse::<ConcParams>(raw)?.filled()),
            Kind::Jl => Params::Jl(parse(raw)?),
            Kind::PhaseTransition => Params::PhaseTransition(parse::<PhaseParams>(raw)?.filled()),
            Kind::BernoulliWitness => Params::BernoulliWitness(parse(raw)?),
        };
        params.validate()?;
        Ok(Resolved { kind: self.kind, params, master_seed: self.master_seed })
    }
}

fn parse<T: serde::de::DeserializeOwned>(raw: Value) -> Result<T> {
    serde_json::from_value(raw).map_err(|e| HarnessError::config(e.to_string()))
}

/// A validated config with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub kind: Kind,
    pub params: Params,
    pub master_seed: u64,
}

impl Resolved {
    /// What output files embed. The output location is not part of it, so
    /// the same experiment written to two places is byte-identical.
    pub fn echo(&self) -> Value {
        serde_json::json!({
            "kind": self.kind,
            "parameters": self.params.to_value(),
            "master_seed": self.master_seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Recover(RecoverParams),
    Oracle(OracleParams),
    Srip(SripParams),
    Rip(RipParams),
    Mu(MuParams),
    Concentration(ConcParams),
    Jl(JlParams),
    PhaseTransition(PhaseParams),
    BernoulliWitness(WitnessParams),
}

impl Params {
    pub fn to_value(&self) -> Value {
        let v = match self {
            Params::Recover(p) => serde_json::to_value(p),
            Params::Oracle(p) => serde_json::to_value(p),
            Params::Srip(p) => serde_json::to_value(p),
            Params::Rip(p) => serde_json::to_value(p),
            Params::Mu(p) => serde_json::to_value(p),
            Params::Concentration(p) => serde_json::to_value(p),
            Params::Jl(p) => serde_json::to_value(p),
            Params::PhaseTransition(p) => serde_json::to_value(p),
            Params::BernoulliWitness(p) => serde_json::to_value(p),
        };
        v.expect("parameters serialise")
    }

    fn validate(&self) -> Result<()> {
        match self {
            Params::Recover(p) => p.validate(),
            Params::Oracle(p) => p.validate(),
            Params::Srip(p) => grid_ok(&p.m_grid, p.n, &p.k_grid, p.matrices),
            Params::Rip(p) => grid_ok(&p.m_grid, p.n, &p.k_grid, p.matrices),
            Params::Mu(p) => {
                nonempty("m_grid", &p.m_grid)?;
                for &m in &p.m_grid {
                    srip_core::halfnorm::check_mu_args(m, p.trials)?;
                }
                Ok(())
            }
            Params::Concentration(p) => p.validate(),
            Params::Jl(p) => p.validate(),
            Params::PhaseTransition(p) => p.validate(),
            Params::BernoulliWitness(p) => {
                nonempty("m_grid", &p.m_grid)?;
                positive("seeds", p.seeds)?;
                if p.n < 2 {
                    return Err(HarnessError::config("bernoulli_witness needs n >= 2"));
                }
                Ok(())
            }
        }
    }
}

fn nonempty<T>(name: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        return Err(HarnessError::config(format!("{name} is empty")));
    }
    Ok(())
}

fn positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(HarnessError::config(format!("{name} must be positive")));
    }
    Ok(())
}

fn fraction(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(HarnessError::config(format!("{name} = {v} is not in [0, 1]")));
    }
    Ok(())
}

fn threshold(v: f64) -> Result<()> {
    if v.is_nan() || v <= 0.0 || !v.is_finite() {
        return Err(HarnessError::config(format!("success_threshold = {v} must be positive")));
    }
    Ok(())
}

fn instance_ok(n: usize, k: usize, m: usize) -> Result<()> {
    if n == 0 || m == 0 {
        return Err(HarnessError::config("n and m must be positive"));
    }
    if k == 0 || k > n {
        return Err(HarnessError::config(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    Ok(())
}

fn grid_ok(m_grid: &[usize], n: usize, k_grid: &[usize], matrices: usize) -> Result<()> {
    nonempty("m_grid", m_grid)?;
    nonempty("k_grid", k_grid)?;
    positive("matrices", matrices)?;
    for &m in m_grid {
        for &k in k_grid {
            instance_ok(n, k, m)?;
        }
    }
    Ok(())
}

fn seeded_ensemble(e: Ensemble) -> Result<()> {
    if e == Ensemble::Custom {
        return Err(HarnessError::config("custom matrices are read from matrix_file, not generated"));
    }
    Ok(())
}

/// Basis pursuit settings; see `BasisPursuitOptions`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BpSettings {
    pub max_iters: usize,
    pub primal_tol: f64,
    pub dual_tol: f64,
    pub penalty: f64,
}

impl Default for BpSettings {
    fn default() -> Self {
        let d = BasisPursuitOptions::default();
        Self { max_iters: d.max_iters, primal_tol: d.primal_tol, dual_tol: d.dual_tol, penalty: d.penalty }
    }
}

impl BpSettings {
    pub fn options(&self) -> BasisPursuitOptions {
        BasisPursuitOptions {
            max_iters: self.max_iters,
            primal_tol: self.primal_tol,
            dual_tol: self.dual_tol,
            penalty: self.penalty,
        }
    }
}

/// Alternating-solver settings; the restart seed is derived per trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AltMinSettings {
    pub max_outer: usize,
    pub warmup_stages: usize,
    pub warmup_sweeps: usize,
    pub warmup_decay: f64,
}

impl Default for AltMinSettings {
    fn default() -> Self {
        let d = AltMinOptions::default();
        Self {
            max_outer: d.max_outer,
            warmup_stages: d.warmup_stages,
            warmup_sweeps: d.warmup_sweeps,
            warmup_decay: d.warmup_decay,
        }
    }
}

impl AltMinSettings {
    pub fn options(&self, bp: &BpSettings, seed: u64) -> AltMinOptions {
        AltMinOptions {
            basis_pursuit: bp.options(),
            max_outer: self.max_outer,
            warmup_stages: self.warmup_stages,
            warmup_sweeps: self.warmup_sweeps,
            warmup_decay: self.warmup_decay,
            seed,
        }
    }
}

/// Instances from files instead of seeds: a matrix plus either
/// measurements or a ground-truth signal (or both).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputFiles {
    pub matrix_file: Option<String>,
    pub measurements_file: Option<String>,
    pub signal_file: Option<String>,
}

impl InputFiles {
    pub fn is_set(&self) -> bool {
        self.matrix_file.is_some() || self.measurements_file.is_some() || self.signal_file.is_some()
    }

    fn validate(&self) -> Result<()> {
        if !self.is_set() {
            return Ok(());
        }
        if self.matrix_file.is_none() {
            return Err(HarnessError::config("input files need matrix_file"));
        }
        if self.measurements_file.is_none() && self.signal_file.is_none() {
            return Err(HarnessError::config("matrix_file needs measurements_file or signal_file"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoverParams {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub ensemble: Ensemble,
    pub value_dist: ValueDist,
    pub trials: usize,
    pub restarts: usize,
    pub success_threshold: f64,
    /// Also run the sign-enumeration oracle when `m` allows it.
    pub compare_oracle: bool,
    pub alt_min: AltMinSettings,
    pub basis_pursuit: BpSettings,
    pub input: InputFiles,
}

impl Default for RecoverParams {
    fn default() -> Self {
        Self {
            n: 32,
            k: 3,
            m: 40,
            ensemble: Ensemble::Gaussian,
            value_dist: ValueDist::UnitGaussian,
            trials: 1,
            restarts: 20,
            success_threshold: 1e-4,
            compare_oracle: true,
            alt_min: AltMinSettings::default(),
            basis_pursuit: BpSettings::default(),
            input: InputFiles::default(),
        }
    }
}

impl RecoverParams {
    fn validate(&self) -> Result<()> {
        self.input.validate()?;
        if !self.input.is_set() {
            instance_ok(self.n, self.k, self.m)?;
            seeded_ensemble(self.ensemble)?;
        }
        positive("trials", self.trials)?;
        positive("restarts", self.restarts)?;
        threshold(self.success_threshold)?;
        self.alt_min.options(&self.basis_pursuit, 0).basis_pursuit.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleParams {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub ensemble: Ensemble,
    pub value_dist: ValueDist,
    pub trials: usize,
    pub success_threshold: f64,
    pub basis_pursuit: BpSettings,
    pub input: InputFiles,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            n: 8,
            k: 2,
            m: 10,
            ensemble: Ensemble::Gaussian,
            value_dist: ValueDist::UnitGaussian,
            trials: 20,
            success_threshold: 1e-6,
            basis_pursuit: BpSettings::default(),
            input: InputFiles::default(),
        }
    }
}

impl OracleParams {
    fn validate(&self) -> Result<()> {
        self.input.validate()?;
        if !self.input.is_set() {
            instance_ok(self.n, self.k, self.m)?;
            seeded_ensemble(self.ensemble)?;
            if self.m > MAX_ORACLE_ROWS {
                return Err(HarnessError::config(format!("oracle needs m <= {MAX_ORACLE_ROWS}, got {}", self.m)));
            }
        }
        positive("trials", self.trials)?;
        threshold(self.success_threshold)?;
        self.basis_pursuit.options().validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SripMethod {
    /// Exact when the enumeration fits the budget, sampled otherwise.
    Auto,
    Exact,
    Randomized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SripParams {
    pub m_grid: Vec<usize>,
    pub n: usize,
    pub k_grid: Vec<usize>,
    pub ensemble: Ensemble,
    pub matrices: usize,
    pub method: SripMethod,
    pub n_supports: usize,
    pub n_vectors: usize,
}

impl Default for SripParams {
    fn default() -> Self {
        Self {
            m_grid: vec![20],
            n: 10,
            k_grid: vec![1, 2],
            ensemble: Ensemble::Gaussian,
            matrices: 1,
            method: SripMethod::Auto,
            n_supports: 200,
            n_vectors: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RipParams {
    pub m_grid: Vec<usize>,
    pub n: usize,
    pub k_grid: Vec<usize>,
    pub ensemble: Ensemble,
    pub matrices: usize,
}

impl Default for RipParams {
    fn default() -> Self {
        Self { m_grid: vec![20], n: 10, k_grid: vec![1, 2], ensemble: Ensemble::Gaussian, matrices: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MuParams {
    pub m_grid: Vec<usize>,
    pub trials: usize,
}

impl Default for MuParams {
    fn default() -> Self {
        Self { m_grid: vec![1, 2, 3, 4, 5, 6, 7, 8, 16, 64, 256], trials: 100_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Probe {
    /// `| ||Ax||^2 - ||x||^2 | >= eps`, parameter `eps`.
    Tail,
    /// `|F(X)/sqrt(m) - mu_m| > t`, parameter `t`.
    Half,
    /// `F(Ax)^2 < nu_0^2 / 4`, no parameter.
    Strong,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConcParams {
    pub probe: Probe,
    pub m_grid: Vec<usize>,
    /// `eps` (tail) or `t` (half) values; defaults depend on the probe.
    pub params: Vec<f64>,
    pub n: usize,
    pub trials: usize,
}

impl Default for ConcParams {
    fn default() -> Self {
        Self { probe: Probe::Tail, m_grid: vec![50, 100], params: Vec::new(), n: 100, trials: 10_000 }
    }
}

impl ConcParams {
    fn filled(mut self) -> Self {
        if self.params.is_empty() {
            self.params = match self.probe {
                Probe::Tail => vec![0.3, 0.5, 0.8],
                Probe::Half => vec![0.05, 0.1, 0.2],
                Probe::Strong => Vec::new(),
            };
        }
        self
    }

    fn validate(&self) -> Result<()> {
        nonempty("m_grid", &self.m_grid)?;
        if self.probe == Probe::Strong && !self.params.is_empty() {
            return Err(HarnessError::config("the strong probe takes no params"));
        }
        for &m in &self.m_grid {
            match self.probe {
                Probe::Tail => {
                    self.params.iter().try_for_each(|&e| srip_core::probes::validate_conc_tail(m, e, self.trials))?
                }
                Probe::Half => {
                    self.params.iter().try_for_each(|&t| srip_core::probes::validate_half_conc(m, t, self.trials))?
                }
                Probe::Strong => srip_core::probes::validate_strong_conc(m, self.n, self.trials)?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JlParams {
    pub num_points: usize,
    pub n: usize,
    pub m: usize,
    pub embeddings: usize,
    /// Required fraction of embeddings reaching the proved level.
    pub min_pass_fraction: f64,
    /// Level the distribution is compared against (reported only).
    pub reference_ratio: f64,
}

impl Default for JlParams {
    fn default() -> Self {
        Self { num_points: 20, n: 100, m: 80, embeddings: 50, min_pass_fraction: 0.98, reference_ratio: 0.1 }
    }
}

impl JlParams {
    fn validate(&self) -> Result<()> {
        if self.num_points < 2 {
            return Err(HarnessError::config("jl needs at least two points"));
        }
        positive("n", self.n)?;
        positive("m", self.m)?;
        positive("embeddings", self.embeddings)?;
        fraction("min_pass_fraction", self.min_pass_fraction)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Oracle,
    AltMin,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Oracle => "oracle",
            Solver::AltMin => "alt_min",
        }
    }

    pub fn default_threshold(self) -> f64 {
        match self {
            Solver::Oracle => 1e-6,
            Solver::AltMin => 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseParams {
    pub n: usize,
    pub k: usize,
    pub m_grid: Vec<usize>,
    pub trials: usize,
    pub solver: Solver,
    pub ensemble: Ensemble,
    pub value_dist: ValueDist,
    pub restarts: usize,
    /// `None` picks the solver's default.
    pub success_threshold: Option<f64>,
    pub alt_min: AltMinSettings,
    pub basis_pursuit: BpSettings,
}

impl Default for PhaseParams {
    fn default() -> Self {
        Self {
            n: 32,
            k: 3,
            m_grid: (12..=64).step_by(4).collect(),
            trials: 20,
            solver: Solver::AltMin,
            ensemble: Ensemble::Gaussian,
            value_dist: ValueDist::UnitGaussian,
            restarts: 20,
            success_threshold: None,
            alt_min: AltMinSettings::default(),
            basis_pursuit: BpSettings::default(),
        }
    }
}

impl PhaseParams {
    fn filled(mut self) -> Self {
        self.success_threshold.get_or_insert(self.solver.default_threshold());
        self
    }

    pub fn threshold(&self) -> f64 {
        self.success_threshold.unwrap_or(self.solver.default_threshold())
    }

    fn validate(&self) -> Result<()> {
        nonempty("m_grid", &self.m_grid)?;
        positive("trials", self.trials)?;
        positive("restarts", self.restarts)?;
        seeded_ensemble(self.ensemble)?;
        threshold(self.threshold())?;
        self.basis_pursuit.options().validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WitnessParams {
    pub m_grid: Vec<usize>,
    pub n: usize,
    pub seeds: usize,
    /// Largest accepted `||A_I x||`.
    pub residual_tol: f64,
}

impl Default for WitnessParams {
    fn default() -> Self {
        Self { m_grid: vec![8, 16, 64], n: 8, seeds: 100, residual_tol: 1e-14 }
    }
}
