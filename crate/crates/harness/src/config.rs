//! Experiment configuration: JSON in, validated config with defaults out.

use std::fmt;
use std::path::PathBuf;

use bvs_core::audit::{BetaStarLaw, RateConfig, SizeMap};
use bvs_core::estimators::SelectionRule;
use bvs_core::graphical::{EdgeRule, GraphTruth};
use bvs_core::posterior::{MoveProbs, SamplerKind};
use bvs_core::{DispersionPrior, Error as CoreError, GlmFamily, McmcConfig, PriorSpec, TrueModel, VPolicy, XLaw};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// A config problem, located by a dotted path such as `prior.r_exp`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Re-roots a core validation error under a config section.
    fn from_core(section: &str, err: CoreError) -> Self {
        match err {
            CoreError::InvalidParameter { name, reason } => Self::new(format!("{section}.{name}"), reason),
            CoreError::Audit { condition, reason } => Self::new(format!("{section}.{condition}"), reason),
            other => Self::new(section, other.to_string()),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Fit,
    Counterexample,
    RateSweep,
    Audit,
    Graph,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Fit => "fit",
            ExperimentKind::Counterexample => "counterexample",
            ExperimentKind::RateSweep => "rate_sweep",
            ExperimentKind::Audit => "audit",
            ExperimentKind::Graph => "graph",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XLawSpec {
    UniformCube,
    IndicatorDesign,
}

impl XLawSpec {
    pub fn law(self) -> XLaw {
        match self {
            XLawSpec::UniformCube => XLaw::UniformCube,
            XLawSpec::IndicatorDesign => XLaw::IndicatorDesign,
        }
    }
}

fn default_x_law() -> XLawSpec {
    XLawSpec::UniformCube
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthSection {
    pub beta_star: BetaStarLaw,
    #[serde(default = "default_x_law")]
    pub x_law: XLawSpec,
    /// True dispersion, only for the unknown-variance normal family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersion: Option<f64>,
}

fn default_v_policy() -> VPolicy {
    VPolicy::IdentityScale { c: 1.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_exp: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<usize>,
    #[serde(default = "default_v_policy")]
    pub v_policy: VPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersion: Option<DispersionPrior>,
}

impl Default for PriorSection {
    fn default() -> Self {
        Self {
            r_exp: None,
            r_max: None,
            v_policy: default_v_policy(),
            dispersion: None,
        }
    }
}

impl PriorSection {
    /// The prior at dimension K with explicit sizes.
    pub fn spec(&self, k: usize, r_exp: usize, r_max: usize) -> Result<PriorSpec, ConfigError> {
        PriorSpec::new(k, r_exp, r_max, self.v_policy, self.dispersion).map_err(|e| ConfigError::from_core("prior", e))
    }

    fn fixed_sizes(&self) -> Result<(usize, usize), ConfigError> {
        match (self.r_exp, self.r_max) {
            (Some(a), Some(b)) => Ok((a, b)),
            (None, _) => Err(ConfigError::new("prior.r_exp", "missing field")),
            (_, None) => Err(ConfigError::new("prior.r_max", "missing field")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McmcSection {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub move_probs: MoveProbs,
    pub rw_step: f64,
    pub sampler: SamplerKind,
}

impl Default for McmcSection {
    fn default() -> Self {
        let d = McmcConfig::default();
        Self {
            iterations: d.iterations,
            burn_in: d.burn_in,
            thin: d.thin,
            move_probs: d.move_probs,
            rw_step: d.rw_step,
            sampler: d.sampler,
        }
    }
}

impl McmcSection {
    pub fn config(&self, seed: u64) -> McmcConfig {
        McmcConfig {
            iterations: self.iterations,
            burn_in: self.burn_in,
            thin: self.thin,
            move_probs: self.move_probs,
            rw_step: self.rw_step,
            seed,
            sampler: self.sampler,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HellingerSection {
    /// Covariate draws for every Monte Carlo distance.
    pub x_draws: usize,
    /// Retained draws per chain that are scored, evenly spaced.
    pub posterior_draws: usize,
}

impl Default for HellingerSection {
    fn default() -> Self {
        Self {
            x_draws: 20_000,
            posterior_draws: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Design {
    pub n: usize,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSection {
    /// Prior variance c of the full-model N(0, c·I) slab.
    pub slab_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub n_grid: Vec<u64>,
    pub k_of_n: SizeMap,
    pub r_of_n: SizeMap,
    pub rbar_of_n: SizeMap,
    /// Accepted window for the fitted log–log slope under `--check`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_range: Option<[f64; 2]>,
}

/// Sizes (K, r, r̄) at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSizes {
    pub n: usize,
    pub k: usize,
    pub r: usize,
    pub rbar: usize,
}

impl SweepSection {
    pub fn sizes(&self, n: u64) -> Result<GridSizes, ConfigError> {
        let get = |m: &SizeMap, name: &str| {
            m.at(n)
                .map(|v| v as usize)
                .ok_or_else(|| ConfigError::new(format!("sweep.{name}"), format!("undefined at n = {n}")))
        };
        Ok(GridSizes {
            n: n as usize,
            k: get(&self.k_of_n, "k_of_n")?,
            r: get(&self.r_of_n, "r_of_n")?,
            rbar: get(&self.rbar_of_n, "rbar_of_n")?,
        })
    }
}

fn default_ce_grid() -> Vec<u64> {
    vec![1000, 4000]
}
fn default_ce_draws() -> usize {
    10_000
}
fn default_k_factor() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleSection {
    #[serde(default = "default_ce_grid")]
    pub n_grid: Vec<u64>,
    #[serde(default = "default_ce_draws")]
    pub posterior_draws: usize,
    /// K = k_factor · n.
    #[serde(default = "default_k_factor")]
    pub k_factor: usize,
}

impl Default for CounterexampleSection {
    fn default() -> Self {
        Self {
            n_grid: default_ce_grid(),
            posterior_draws: default_ce_draws(),
            k_factor: default_k_factor(),
        }
    }
}

fn default_mc() -> usize {
    2000
}
fn default_components() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub nodes: usize,
    /// Partial correlation of neighbouring nodes in the chain graph.
    pub rho: f64,
    pub n_grid: Vec<u64>,
    #[serde(default)]
    pub rule: EdgeRule,
    /// Draws of x_{k≠j} for the conditional distance.
    #[serde(default = "default_mc")]
    pub h_draws: usize,
    #[serde(default = "default_components")]
    pub max_components: usize,
}

fn default_replicates() -> usize {
    1
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_threshold() -> f64 {
    0.5
}
fn default_selection() -> SelectionRule {
    SelectionRule::All
}

/// The full run description. Sections unused by the experiment are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<GlmFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<Design>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<TruthSection>,
    #[serde(default)]
    pub prior: PriorSection,
    #[serde(default)]
    pub mcmc: McmcSection,
    #[serde(default)]
    pub hellinger: HellingerSection,
    #[serde(default = "default_selection")]
    pub selection: SelectionRule,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<RateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<CounterexampleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSection>,
}

/// Parses and validates a JSON config. Errors carry the path of the
/// offending field.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::new(path, e.into_inner().to_string())
    })?;
    cfg.fill_defaults();
    cfg.validate()?;
    Ok(cfg)
}

fn require<'a, T>(v: &'a Option<T>, path: &str, kind: ExperimentKind) -> Result<&'a T, ConfigError> {
    v.as_ref()
        .ok_or_else(|| ConfigError::new(path, format!("required for the {} experiment", kind.name())))
}

fn forbid<T>(v: &Option<T>, path: &str, kind: ExperimentKind) -> Result<(), ConfigError> {
    match v {
        Some(_) => Err(ConfigError::new(path, format!("not used by the {} experiment", kind.name()))),
        None => Ok(()),
    }
}

fn check_grid(grid: &[u64], path: &str, min_len: usize, min_n: u64) -> Result<(), ConfigError> {
    if grid.len() < min_len {
        return Err(ConfigError::new(path, format!("needs at least {min_len} points")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ConfigError::new(path, "must be strictly increasing"));
    }
    if grid[0] < min_n {
        return Err(ConfigError::new(path, format!("points must be at least {min_n}")));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Materializes section defaults that depend on the experiment.
    fn fill_defaults(&mut self) {
        if self.experiment == ExperimentKind::Counterexample && self.counterexample.is_none() {
            self.counterexample = Some(CounterexampleSection::default());
        }
    }

    /// Built-in config for the experiments that can run without a file.
    pub fn builtin(kind: ExperimentKind) -> Option<Self> {
        let text = match kind {
            ExperimentKind::Counterexample => r#"{"experiment": "counterexample", "replicates": 20}"#.to_string(),
            ExperimentKind::Audit => {
                let rate = serde_json::to_string(&bvs_core::audit::corollary_config()).ok()?;
                format!(r#"{{"experiment": "audit", "rate": {rate}}}"#)
            }
            _ => return None,
        };
        parse_config(&text).ok()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let kind = self.experiment;
        if self.replicates == 0 {
            return Err(ConfigError::new("replicates", "must be at least 1"));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(ConfigError::new("threshold", "must lie in (0, 1)"));
        }
        self.mcmc
            .config(0)
            .validate()
            .map_err(|e| ConfigError::from_core("mcmc", e))?;
        self.selection
            .validate()
            .map_err(|e| ConfigError::from_core("selection", e))?;
        self.prior
            .v_policy
            .validate()
            .map_err(|e| ConfigError::from_core("prior", e))?;
        if self.hellinger.x_draws == 0 {
            return Err(ConfigError::new("hellinger.x_draws", "must be positive"));
        }
        if self.hellinger.posterior_draws == 0 {
            return Err(ConfigError::new("hellinger.posterior_draws", "must be positive"));
        }
        if self.mcmc.config(0).kept_draws() == 0 {
            return Err(ConfigError::new("mcmc.iterations", "keeps no draws"));
        }
        match kind {
            ExperimentKind::Fit => self.validate_fit(),
            ExperimentKind::RateSweep => self.validate_sweep(),
            ExperimentKind::Counterexample => self.validate_counterexample(),
            ExperimentKind::Audit => self.validate_audit(),
            ExperimentKind::Graph => self.validate_graph(),
        }
    }

    fn validate_truth(&self, k: usize) -> Result<TrueModel, ConfigError> {
        let kind = self.experiment;
        let family = *require(&self.family, "family", kind)?;
        family.validate().map_err(|e| ConfigError::from_core("family", e))?;
        let truth = require(&self.truth, "truth", kind)?;
        truth
            .beta_star
            .validate()
            .map_err(|e| ConfigError::from_core("truth", e))?;
        if family == GlmFamily::NormalUnknownVar && self.prior.dispersion.is_none() {
            return Err(ConfigError::new("prior.dispersion", "required for the unknown-variance normal family"));
        }
        if family != GlmFamily::NormalUnknownVar && self.prior.dispersion.is_some() {
            return Err(ConfigError::new("prior.dispersion", "only used by the unknown-variance normal family"));
        }
        TrueModel::new(family, truth.beta_star.vector(k), truth.x_law.law(), truth.dispersion)
            .map_err(|e| ConfigError::from_core("truth", e))
    }

    fn validate_fit(&self) -> Result<(), ConfigError> {
        let kind = self.experiment;
        for (v, p) in [(self.sweep.is_some(), "sweep"), (self.rate.is_some(), "rate")] {
            if v {
                return Err(ConfigError::new(p, "not used by the fit experiment"));
            }
        }
        forbid(&self.counterexample, "counterexample", kind)?;
        forbid(&self.graph, "graph", kind)?;
        let design = require(&self.design, "design", kind)?;
        if design.n == 0 {
            return Err(ConfigError::new("design.n", "must be positive"));
        }
        self.validate_truth(design.k)?;
        let (r_exp, r_max) = self.prior.fixed_sizes()?;
        self.prior.spec(design.k, r_exp, r_max)?;
        if let Some(b) = &self.baseline {
            if !matches!(self.family, Some(GlmFamily::NormalKnownVar { .. })) {
                return Err(ConfigError::new("baseline", "the full-model baseline needs the normal_known_var family"));
            }
            if !(b.slab_scale.is_finite() && b.slab_scale > 0.0) {
                return Err(ConfigError::new("baseline.slab_scale", "must be positive"));
            }
        }
        Ok(())
    }

    fn validate_sweep(&self) -> Result<(), ConfigError> {
        let kind = self.experiment;
        forbid(&self.design, "design", kind)?;
        forbid(&self.baseline, "baseline", kind)?;
        forbid(&self.rate, "rate", kind)?;
        forbid(&self.counterexample, "counterexample", kind)?;
        forbid(&self.graph, "graph", kind)?;
        forbid(&self.prior.r_exp, "prior.r_exp", kind)?;
        forbid(&self.prior.r_max, "prior.r_max", kind)?;
        let sweep = require(&self.sweep, "sweep", kind)?;
        check_grid(&sweep.n_grid, "sweep.n_grid", 4, 2)?;
        if let Some([lo, hi]) = sweep.slope_range {
            if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
                return Err(ConfigError::new("sweep.slope_range", "lower end must be below the upper end"));
            }
        }
        for &n in &sweep.n_grid {
            let s = sweep.sizes(n)?;
            self.validate_truth(s.k)?;
            self.prior.spec(s.k, s.r, s.rbar).map_err(|e| ConfigError {
                path: e.path.replace("prior.r_exp", "sweep.r_of_n").replace("prior.r_max", "sweep.rbar_of_n"),
                message: format!("{} (at n = {n})", e.message),
            })?;
        }
        Ok(())
    }

    fn validate_counterexample(&self) -> Result<(), ConfigError> {
        let kind = self.experiment;
        for (v, p) in [
            (self.family.is_some(), "family"),
            (self.design.is_some(), "design"),
            (self.truth.is_some(), "truth"),
            (self.baseline.is_some(), "baseline"),
            (self.sweep.is_some(), "sweep"),
            (self.rate.is_some(), "rate"),
            (self.graph.is_some(), "graph"),
        ] {
            if v {
                return Err(ConfigError::new(p, format!("not used by the {} experiment", kind.name())));
            }
        }
        let ce = require(&self.counterexample, "counterexample", kind)?;
        check_grid(&ce.n_grid, "counterexample.n_grid", 1, 1)?;
        if ce.posterior_draws < 10_000 {
            return Err(ConfigError::new("counterexample.posterior_draws", "need at least 10^4 draws"));
        }
        if ce.k_factor == 0 {
            return Err(ConfigError::new("counterexample.k_factor", "must be positive"));
        }
        Ok(())
    }

    fn validate_audit(&self) -> Result<(), ConfigError> {
        let kind = self.experiment;
        for (v, p) in [
            (self.family.is_some(), "family"),
            (self.design.is_some(), "design"),
            (self.truth.is_some(), "truth"),
            (self.baseline.is_some(), "baseline"),
            (self.sweep.is_some(), "sweep"),
            (self.counterexample.is_some(), "counterexample"),
            (self.graph.is_some(), "graph"),
        ] {
            if v {
                return Err(ConfigError::new(p, format!("not used by the {} experiment", kind.name())));
            }
        }
        require(&self.rate, "rate", kind)?
            .validate()
            .map_err(|e| ConfigError::from_core("rate", e))
    }

    fn validate_graph(&self) -> Result<(), ConfigError> {
        let kind = self.experiment;
        for (v, p) in [
            (self.family.is_some(), "family"),
            (self.design.is_some(), "design"),
            (self.truth.is_some(), "truth"),
            (self.baseline.is_some(), "baseline"),
            (self.sweep.is_some(), "sweep"),
            (self.rate.is_some(), "rate"),
            (self.counterexample.is_some(), "counterexample"),
        ] {
            if v {
                return Err(ConfigError::new(p, format!("not used by the {} experiment", kind.name())));
            }
        }
        let g = require(&self.graph, "graph", kind)?;
        if g.nodes < 3 {
            return Err(ConfigError::new("graph.nodes", "need at least 3 nodes"));
        }
        GraphTruth::chain(g.nodes, g.rho).map_err(|e| ConfigError::from_core("graph", e))?;
        check_grid(&g.n_grid, "graph.n_grid", 1, 3)?;
        if g.h_draws == 0 {
            return Err(ConfigError::new("graph.h_draws", "must be positive"));
        }
        if g.max_components == 0 {
            return Err(ConfigError::new("graph.max_components", "must be positive"));
        }
        if self.prior.dispersion.is_none() {
            return Err(ConfigError::new("prior.dispersion", "required for neighborhood regressions"));
        }
        let (r_exp, r_max) = self.prior.fixed_sizes()?;
        self.prior.spec(g.nodes - 1, r_exp, r_max)?;
        Ok(())
    }

    /// Canonical JSON: struct field order, defaults applied.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON with the output directory left out, so
    /// identical runs written to different places hash equally. Abbreviated
    /// to 16 hex digits.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        let digest = Sha256::digest(c.canonical_json().as_bytes());
        hex::encode(&digest[..8])
    }

    /// The prior at one grid point of a sweep or from fixed sizes.
    pub fn fixed_prior(&self, k: usize) -> Result<PriorSpec, ConfigError> {
        let (r_exp, r_max) = self.prior.fixed_sizes()?;
        self.prior.spec(k, r_exp, r_max)
    }

    pub fn true_model(&self, k: usize) -> Result<TrueModel, ConfigError> {
        self.validate_truth(k)
    }
}
