//! Numeric audit of the rate conditions over an n-grid.
//!
//! Every asymptotic relation lhs ≺ rhs is reported as rows of lhs/rhs per
//! grid point; it is judged satisfied when the ratio at the last grid point
//! is below its value at the first and below 1. Finite inequalities are
//! reported with a plain pass flag.

use nalgebra::{Cholesky, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::glm::GlmFamily;
use crate::prior::{log_truncation_constant, VPolicy};
use crate::special::{ln_std_normal_cdf, ln_std_normal_sf, log_sum_exp, std_normal_ln_pdf};

/// An integer-valued sequence of n, rounded up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SizeMap {
    /// ⌈scale · n^exponent⌉.
    Power { scale: f64, exponent: f64 },
    /// ⌈scale · (ln n)^exponent⌉.
    Log { scale: f64, exponent: f64 },
    /// ⌈e^{c·n^xi}⌉.
    ExpPower { c: f64, xi: f64 },
    Constant { value: u64 },
}

/// Largest size a map may produce; beyond this f64 no longer holds every
/// integer exactly.
const MAX_SIZE: f64 = 9.0e15;

fn ceil_stable(x: f64) -> f64 {
    // absorb rounding noise such as 100² = 10000.000000000002
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

impl SizeMap {
    pub fn at(&self, n: u64) -> Option<u64> {
        let nf = n as f64;
        let v = match *self {
            SizeMap::Power { scale, exponent } => ceil_stable(scale * nf.powf(exponent)),
            SizeMap::Log { scale, exponent } => ceil_stable(scale * nf.ln().powf(exponent)),
            SizeMap::ExpPower { c, xi } => ceil_stable((c * nf.powf(xi)).exp()),
            SizeMap::Constant { value } => value as f64,
        };
        (v.is_finite() && v >= 0.0 && v <= MAX_SIZE).then_some(v as u64)
    }
}

/// True coefficient sequence, zero-padded to K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BetaStarLaw {
    /// β*_j = scale · ratio^j for j = 0, 1, ….
    Geometric { scale: f64, ratio: f64 },
    Explicit { values: Vec<f64> },
}

impl BetaStarLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            BetaStarLaw::Geometric { scale, ratio } => {
                if !scale.is_finite() {
                    return Err(invalid("beta_star.scale", "must be finite"));
                }
                if !(ratio.abs() < 1.0) {
                    return Err(invalid("beta_star.ratio", "must lie in (−1, 1) for a summable sequence"));
                }
            }
            BetaStarLaw::Explicit { values } => {
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(invalid("beta_star.values", "must be finite"));
                }
            }
        }
        Ok(())
    }

    /// The first K coefficients.
    pub fn vector(&self, k: usize) -> Vec<f64> {
        match self {
            BetaStarLaw::Geometric { scale, ratio } => (0..k).map(|j| scale * ratio.powi(j as i32)).collect(),
            BetaStarLaw::Explicit { values } => {
                let mut v = values.clone();
                v.resize(k.max(values.len()), 0.0);
                v.truncate(k);
                v
            }
        }
    }

    /// The r largest |β*_j| among the first K, in decreasing order.
    pub fn top(&self, k: u64, r: usize) -> Vec<f64> {
        match self {
            BetaStarLaw::Geometric { scale, ratio } => {
                let r = (r as u64).min(k) as usize;
                (0..r).map(|j| (scale * ratio.powi(j as i32)).abs()).collect()
            }
            BetaStarLaw::Explicit { values } => {
                let mut a: Vec<f64> = values.iter().take(k as usize).map(|v| v.abs()).collect();
                a.sort_by(|x, y| y.total_cmp(x));
                a.resize(r.min(k as usize), 0.0);
                a
            }
        }
    }

    /// Δ(r) over the first K coefficients, in closed form for the geometric law.
    pub fn delta(&self, k: u64, r: u64) -> Result<f64> {
        if r > k {
            return Err(invalid("r", format!("must not exceed K = {k}, got {r}")));
        }
        match self {
            BetaStarLaw::Geometric { scale, ratio } => {
                let a = ratio.abs();
                Ok(scale.abs() * a.powf(r as f64) * (1.0 - a.powf((k - r) as f64)) / (1.0 - a))
            }
            BetaStarLaw::Explicit { values } => {
                let used = (k as usize).min(values.len());
                delta(&values[..used], (r as usize).min(used))
            }
        }
    }
}

/// Δ(r) = inf over size-r models of the excluded ℓ1 mass: the K − r
/// smallest |β*_j|.
pub fn delta(beta_star: &[f64], r: usize) -> Result<f64> {
    if r > beta_star.len() {
        return Err(invalid("r", format!("must not exceed K = {}, got {r}", beta_star.len())));
    }
    let mut a: Vec<f64> = beta_star.iter().map(|b| b.abs()).collect();
    a.sort_by(f64::total_cmp);
    Ok(a[..beta_star.len() - r].iter().sum())
}

/// ln D(R) with D(R) = 1 + R·sup|a′|·sup|ψ| over |h| ≤ R.
pub fn ln_d_growth(family: GlmFamily, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    // ln(1 + e^t)
    let ln1p_exp = |t: f64| if t > 35.0 { t } else { t.exp().ln_1p() };
    match family {
        GlmFamily::Logistic => r.ln_1p(),
        GlmFamily::Poisson => ln1p_exp(r.ln() + r),
        GlmFamily::ExponentialLogLink => ln1p_exp(r.ln() + 2.0 * r),
        GlmFamily::NormalKnownVar { dispersion } => ln1p_exp(dispersion.ln() + 2.0 * r.ln()),
        GlmFamily::NormalUnknownVar => ln1p_exp(2.0 * r.ln()),
        GlmFamily::Probit => {
            // a′ is even and increasing in |h|, ψ = Φ is increasing
            ln1p_exp(r.ln() + ln_probit_a_prime(r) + ln_std_normal_cdf(r))
        }
    }
}

pub fn d_growth(family: GlmFamily, r: f64) -> f64 {
    ln_d_growth(family, r).exp()
}

/// ln a′(h) for probit: a′ = φ(h)/Φ(h) + φ(h)/(1 − Φ(h)).
pub fn ln_probit_a_prime(h: f64) -> f64 {
    let lp = std_normal_ln_pdf(h);
    log_sum_exp(&[lp - ln_std_normal_cdf(h), lp - ln_std_normal_sf(h)])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    /// ε_n = n^{−(1−ξ)/2}(ln n)^{k/2}.
    LogPower,
    /// ε_n = n^{−(1−ξ−b)/2}.
    Power,
}

fn default_eta() -> f64 {
    1.0
}
fn default_rect_draws() -> usize {
    20_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateConfig {
    pub n_grid: Vec<u64>,
    pub k_of_n: SizeMap,
    pub r_of_n: SizeMap,
    pub rbar_of_n: SizeMap,
    pub rate: RateKind,
    pub xi: f64,
    pub k: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub alpha: f64,
    pub delta: f64,
    pub c: f64,
    pub c_prime: f64,
    pub big_b: f64,
    pub v: f64,
    pub family: GlmFamily,
    pub beta_star: BetaStarLaw,
    pub v_policy: VPolicy,
    /// Neighborhood scale in the coefficient rectangle.
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Importance draws for non-diagonal rectangle probabilities.
    #[serde(default = "default_rect_draws")]
    pub rect_mc_draws: usize,
    #[serde(default)]
    pub seed: u64,
}

impl RateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid.len() < 2 {
            return Err(invalid("n_grid", "needs at least two points"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("n_grid", "must be strictly increasing"));
        }
        if self.n_grid[0] < 3 {
            return Err(invalid("n_grid", "points must be at least 3"));
        }
        if !(self.xi > 0.0 && self.xi < 1.0) {
            return Err(invalid("xi", "must lie in (0, 1)"));
        }
        if self.rate == RateKind::LogPower && !(self.k > 1.0) {
            return Err(invalid("k", "must exceed 1"));
        }
        if self.rate == RateKind::Power && !(self.b > 0.0) {
            return Err(invalid("b", "must be positive"));
        }
        for (name, v) in [("c", self.c), ("c_prime", self.c_prime), ("big_b", self.big_b), ("v", self.v), ("delta", self.delta), ("eta", self.eta)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, "must be positive"));
            }
        }
        if self.rect_mc_draws < 100 {
            return Err(invalid("rect_mc_draws", "need at least 100 draws"));
        }
        self.family.validate()?;
        self.beta_star.validate()?;
        self.v_policy.validate()?;
        for &n in &self.n_grid {
            let s = self.sizes(n)?;
            if !(1 <= s.r && s.r <= s.rbar && s.rbar < s.k) {
                return Err(invalid(
                    "size maps",
                    format!("need 1 ≤ r ≤ r̄ < K, got r={}, r̄={}, K={} at n={n}", s.r, s.rbar, s.k),
                ));
            }
        }
        Ok(())
    }

    fn sizes(&self, n: u64) -> Result<Sizes> {
        let get = |m: &SizeMap, name: &'static str| {
            m.at(n)
                .ok_or_else(|| invalid(name, format!("undefined at n = {n}")))
        };
        Ok(Sizes {
            k: get(&self.k_of_n, "k_of_n")?,
            r: get(&self.r_of_n, "r_of_n")?,
            rbar: get(&self.rbar_of_n, "rbar_of_n")?,
        })
    }

    /// The power threshold q that b must stay below for the power rate.
    pub fn q_threshold(&self) -> f64 {
        let base = (1.0 - self.xi).min(self.delta);
        match self.family {
            GlmFamily::Poisson | GlmFamily::ExponentialLogLink => base.min(self.xi / (3.0 + self.v)),
            _ if self.v <= 1.0 => base,
            _ => base.min(self.xi / (self.v - 1.0)),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Sizes {
    k: u64,
    r: u64,
    rbar: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateValue {
    pub n: u64,
    pub eps: f64,
    pub n_eps2: f64,
    /// ε_n ∈ (0, 1], required by the theorems.
    pub eps_in_range: bool,
    /// q and whether b < q, for the power rate.
    pub q: Option<f64>,
    pub b_below_q: Option<bool>,
}

pub fn rate_formula(config: &RateConfig, n: u64) -> Result<RateValue> {
    if n < 3 {
        return Err(invalid("n", "must be at least 3"));
    }
    let nf = n as f64;
    let (eps, q) = match config.rate {
        RateKind::LogPower => (nf.powf(-(1.0 - config.xi) / 2.0) * nf.ln().powf(config.k / 2.0), None),
        RateKind::Power => (nf.powf(-(1.0 - config.xi - config.b) / 2.0), Some(config.q_threshold())),
    };
    Ok(RateValue {
        n,
        eps,
        n_eps2: nf * eps * eps,
        eps_in_range: eps > 0.0 && eps <= 1.0,
        q,
        b_below_q: q.map(|q| config.b < q),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    /// lhs ≺ rhs.
    Asymptotic,
    /// lhs ≤ rhs at every grid point.
    Inequality,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRow {
    pub condition: String,
    pub n: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionSummary {
    pub condition: String,
    pub kind: ConditionKind,
    pub first_ratio: f64,
    pub last_ratio: f64,
    /// Ratio strictly decreasing over the whole grid.
    pub decreasing: bool,
    /// lhs is identically zero on the grid.
    pub trivially_satisfied: bool,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionsReport {
    pub rates: Vec<RateValue>,
    pub rows: Vec<AuditRow>,
    pub summaries: Vec<ConditionSummary>,
}

impl ConditionsReport {
    pub fn summary(&self, condition: &str) -> Option<&ConditionSummary> {
        self.summaries.iter().find(|s| s.condition == condition)
    }

    /// Conditions of the named groups, e.g. "theorem1".
    pub fn group<'a>(&'a self, group: &'a str) -> impl Iterator<Item = &'a ConditionSummary> + 'a {
        self.summaries
            .iter()
            .filter(move |s| s.condition.split('.').next() == Some(group))
    }

    fn merge(&mut self, other: ConditionsReport) {
        self.rows.extend(other.rows);
        self.summaries.extend(other.summaries);
    }
}

/// Groups tracked by the coherence check: the general and specialised
/// theorem conditions and the neighborhood/outside prior conditions.
pub const TRACKED_GROUPS: [&str; 4] = ["theorem1", "theorem2", "neighborhood", "outside"];

/// Per-grid-point quantities shared by the conditions.
#[derive(Debug, Clone)]
struct Point {
    n: u64,
    sizes: Sizes,
    rate: RateValue,
    /// B(r) = ch1(V⁻¹), B̄(r) = ch1(V) at size r; B̄_n = ch1(V) at size r̄.
    b_r: f64,
    bbar_r: f64,
    bbar_n: f64,
}

fn points(config: &RateConfig) -> Result<Vec<Point>> {
    config.validate()?;
    config
        .n_grid
        .iter()
        .map(|&n| {
            let sizes = config.sizes(n)?;
            let at_r = config.v_policy.bounds(sizes.r as usize);
            let at_rbar = config.v_policy.bounds(sizes.rbar as usize);
            Ok(Point {
                n,
                sizes,
                rate: rate_formula(config, n)?,
                b_r: at_r.ch1_vinv,
                bbar_r: at_r.ch1_v,
                bbar_n: at_rbar.ch1_v,
            })
        })
        .collect()
}

struct Builder<'a> {
    pts: &'a [Point],
    report: ConditionsReport,
}

impl<'a> Builder<'a> {
    fn new(pts: &'a [Point]) -> Self {
        Self {
            pts,
            report: ConditionsReport {
                rates: pts.iter().map(|p| p.rate).collect(),
                rows: Vec::new(),
                summaries: Vec::new(),
            },
        }
    }

    /// Adds a condition from per-point (lhs, rhs) pairs, or from
    /// (ln lhs, ln rhs) when `log_scale` is set.
    fn add(
        &mut self,
        condition: &str,
        kind: ConditionKind,
        log_scale: bool,
        f: impl Fn(&Point) -> Result<(f64, f64)>,
    ) -> Result<()> {
        let mut ratios = Vec::with_capacity(self.pts.len());
        let mut all_zero = true;
        for p in self.pts {
            let (a, b) = f(p).map_err(|e| Error::Audit {
                condition: condition.to_string(),
                reason: e.to_string(),
            })?;
            let (lhs, rhs, ratio) = if log_scale {
                (a.exp(), b.exp(), (a - b).exp())
            } else {
                (a, b, if a == 0.0 { 0.0 } else { a / b })
            };
            if !(ratio >= 0.0) {
                return Err(Error::Audit {
                    condition: condition.to_string(),
                    reason: format!("ratio undefined at n = {}", p.n),
                });
            }
            all_zero &= if log_scale { a == f64::NEG_INFINITY } else { lhs == 0.0 };
            ratios.push(ratio);
            self.report.rows.push(AuditRow {
                condition: condition.to_string(),
                n: p.n,
                lhs,
                rhs,
                ratio,
            });
        }
        let first_ratio = ratios[0];
        let last_ratio = *ratios.last().expect("grid has points");
        let decreasing = ratios.windows(2).all(|w| w[1] < w[0]);
        let satisfied = match kind {
            ConditionKind::Inequality => ratios.iter().all(|&r| r <= 1.0),
            ConditionKind::Asymptotic => all_zero || (last_ratio < first_ratio && last_ratio < 1.0),
        };
        self.report.summaries.push(ConditionSummary {
            condition: condition.to_string(),
            kind,
            first_ratio,
            last_ratio,
            decreasing,
            trivially_satisfied: all_zero,
            satisfied,
        });
        Ok(())
    }
}

use ConditionKind::{Asymptotic, Inequality};

fn clamp0(x: f64) -> f64 {
    x.max(0.0)
}

fn shared_outside_rows(b: &mut Builder, group: &str, config: &RateConfig) -> Result<()> {
    let fam = config.family;
    b.add(&format!("{group}.rbar_log_inv_eps2"), Asymptotic, false, |p| {
        Ok((p.sizes.rbar as f64 * clamp0(-(p.rate.eps * p.rate.eps).ln()), p.rate.n_eps2))
    })?;
    b.add(&format!("{group}.rbar_log_k"), Asymptotic, false, |p| {
        Ok((p.sizes.rbar as f64 * (p.sizes.k as f64).ln(), p.rate.n_eps2))
    })?;
    b.add(&format!("{group}.rbar_log_growth"), Asymptotic, false, |p| {
        let rbar = p.sizes.rbar as f64;
        let c_n = (p.rate.n_eps2 * p.bbar_n).sqrt();
        Ok((rbar * ln_d_growth(fam, rbar * c_n), p.rate.n_eps2))
    })
}

fn size_rows(b: &mut Builder, group: &str) -> Result<()> {
    b.add(&format!("{group}.size_order"), Inequality, false, |p| {
        let ok = 1 <= p.sizes.r && p.sizes.r <= p.sizes.rbar && p.sizes.rbar < p.sizes.k;
        Ok((p.sizes.rbar as f64, if ok { p.sizes.k as f64 } else { 0.0 }))
    })?;
    b.add(&format!("{group}.r_grows"), Asymptotic, false, |p| Ok((1.0, p.sizes.r as f64)))?;
    b.add(&format!("{group}.r_below_k"), Asymptotic, false, |p| {
        Ok((p.sizes.r as f64, p.sizes.k as f64))
    })
}

fn bias_row(b: &mut Builder, group: &str, config: &RateConfig) -> Result<()> {
    b.add(&format!("{group}.approximation_bias"), Asymptotic, false, |p| {
        Ok((config.beta_star.delta(p.sizes.k, p.sizes.r)?, p.rate.eps * p.rate.eps))
    })
}

/// General-theorem, specialised-theorem, consistency-window and
/// graphical-model conditions.
pub fn audit_theorems(config: &RateConfig) -> Result<ConditionsReport> {
    let pts = points(config)?;
    let mut b = Builder::new(&pts);

    shared_outside_rows(&mut b, "theorem1", config)?;
    size_rows(&mut b, "theorem1")?;
    bias_row(&mut b, "theorem1", config)?;
    b.add("theorem1.inverse_eigen", Asymptotic, false, |p| Ok((p.b_r, p.rate.n_eps2)))?;
    b.add("theorem1.log_eigen", Asymptotic, false, |p| {
        Ok((p.sizes.r as f64 * clamp0(p.bbar_r.ln()), p.rate.n_eps2))
    })?;

    b.add("theorem2.rbar_log_k", Asymptotic, false, |p| {
        Ok((p.sizes.rbar as f64 * (p.sizes.k as f64).ln(), p.rate.n_eps2))
    })?;
    size_rows(&mut b, "theorem2")?;
    bias_row(&mut b, "theorem2", config)?;
    let v = config.v;
    match config.family {
        GlmFamily::Poisson | GlmFamily::ExponentialLogLink => {
            b.add("theorem2.rbar_power_growth", Asymptotic, false, |p| {
                Ok((p.sizes.rbar as f64, p.rate.n_eps2.powf(1.0 / (4.0 + v))))
            })?;
        }
        _ => {
            b.add("theorem2.rbar_power_eigen", Asymptotic, false, |p| {
                Ok((p.sizes.rbar as f64, p.rate.n_eps2.powf(1.0 / v)))
            })?;
        }
    }

    b.add("consistency.r_grows", Asymptotic, false, |p| Ok((1.0, p.sizes.r as f64)))?;
    b.add("consistency.rbar_below_k", Asymptotic, false, |p| {
        Ok((p.sizes.rbar as f64, p.sizes.k as f64))
    })?;
    b.add("consistency.rbar_below_power", Asymptotic, false, |p| {
        Ok((p.sizes.rbar as f64, (p.n as f64).powf(1.0 / (v + 4.0))))
    })?;
    b.add("consistency.rbar_below_n_over_log_k", Asymptotic, false, |p| {
        Ok((p.sizes.rbar as f64, p.n as f64 / (p.sizes.k as f64).ln()))
    })?;

    let bmax = config.delta.min(config.xi).min(config.xi / v);
    b.add("graphical.b_below_threshold", Inequality, false, |_| Ok((config.b, bmax)))?;
    b.add("graphical.log_n_below_r", Asymptotic, false, |p| {
        Ok(((p.n as f64).ln(), p.sizes.r as f64))
    })?;
    b.add("graphical.rbar_below_n_b", Asymptotic, false, |p| {
        Ok((p.sizes.rbar as f64, (p.n as f64).powf(config.b)))
    })?;
    Ok(b.report)
}

/// ln P(lo < Z < hi) for standard normal Z, stable in either tail.
fn ln_normal_interval(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return f64::NEG_INFINITY;
    }
    let (a, b) = if lo > 0.0 {
        (ln_std_normal_sf(lo), ln_std_normal_sf(hi))
    } else {
        (ln_std_normal_cdf(hi), ln_std_normal_cdf(lo))
    };
    a + (-(b - a).exp()).ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RectangleProbability {
    pub ln_prob: f64,
    /// Standard error of ln_prob; zero when exact.
    pub se: f64,
}

/// ln π(β ∈ Π_j (center_j ± half_width)) under β ~ N(0, V) at size
/// |center|. Exact for a diagonal V; otherwise importance sampled with
/// uniform draws over the rectangle.
pub fn rectangle_log_probability(
    policy: &VPolicy,
    center: &[f64],
    half_width: f64,
    draws: usize,
    seed: u64,
) -> Result<RectangleProbability> {
    policy.validate()?;
    if !(half_width > 0.0) {
        return Err(invalid("half_width", "must be positive"));
    }
    let s = center.len();
    if s == 0 {
        return Ok(RectangleProbability { ln_prob: 0.0, se: 0.0 });
    }
    if let VPolicy::IdentityScale { c } = *policy {
        let sd = c.sqrt();
        let ln_prob = center
            .iter()
            .map(|m| ln_normal_interval((m - half_width) / sd, (m + half_width) / sd))
            .sum();
        return Ok(RectangleProbability { ln_prob, se: 0.0 });
    }
    if draws < 2 {
        return Err(invalid("draws", "need at least two draws"));
    }
    let cov = policy.covariance(s);
    let chol = Cholesky::new(cov).ok_or(Error::NotPositiveDefinite("slab covariance"))?;
    let l = chol.l();
    let ln_det: f64 = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let ln_norm = -0.5 * (s as f64) * (2.0 * std::f64::consts::PI).ln() - 0.5 * ln_det;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut logs = Vec::with_capacity(draws);
    for _ in 0..draws {
        let u = DVector::from_iterator(s, center.iter().map(|m| m + half_width * rng.random_range(-1.0..=1.0)));
        let z = l.solve_lower_triangular(&u).expect("Cholesky factor is nonsingular");
        logs.push(ln_norm - 0.5 * z.norm_squared());
    }
    let ln_vol = s as f64 * (2.0 * half_width).ln();
    let m = draws as f64;
    let ln_mean = log_sum_exp(&logs) - m.ln();
    // delta-method SE of the log mean from the relative spread of the weights
    let w: Vec<f64> = logs.iter().map(|x| (x - ln_mean).exp()).collect();
    let var = w.iter().map(|x| (x - 1.0) * (x - 1.0)).sum::<f64>() / (m - 1.0);
    Ok(RectangleProbability {
        ln_prob: ln_vol + ln_mean,
        se: (var / m).sqrt(),
    })
}

/// Prior-mass conditions near the truth and outside a sieve, with γ_n the
/// top-r coordinates of |β*|.
pub fn audit_conditions_no(config: &RateConfig) -> Result<ConditionsReport> {
    let pts = points(config)?;
    let mut b = Builder::new(&pts);

    bias_row(&mut b, "neighborhood", config)?;
    b.add("neighborhood.model_prior_mass", Asymptotic, false, |p| {
        let (k, r, rbar) = (p.sizes.k as f64, p.sizes.r as f64, p.sizes.rbar as usize);
        let lambda = r / k;
        let ln_pi = r * lambda.ln() + (k - r) * (-lambda).ln_1p() - log_truncation_constant(k, lambda, rbar);
        Ok((-ln_pi, p.rate.n_eps2 / 8.0))
    })?;
    b.add("neighborhood.coefficient_prior_mass", Asymptotic, false, |p| {
        let r = p.sizes.r as usize;
        let center = config.beta_star.top(p.sizes.k, r);
        let hw = config.eta * p.rate.eps * p.rate.eps / r as f64;
        let rect = rectangle_log_probability(&config.v_policy, &center, hw, config.rect_mc_draws, config.seed ^ p.n)?;
        Ok((-rect.ln_prob, p.rate.n_eps2 / 8.0))
    })?;

    shared_outside_rows(&mut b, "outside", config)?;
    // truncation puts no prior mass above r̄
    b.add("outside.size_tail", Asymptotic, true, |p| {
        Ok((f64::NEG_INFINITY, -4.0 * p.rate.n_eps2))
    })?;
    // C_n = √(B̄_n nε²); the sieve check is made at the rescaled rate ε/4
    b.add("outside.coefficient_tail", Asymptotic, true, |p| {
        let z = (p.rate.n_eps2 * p.bbar_n).sqrt() / p.bbar_n.sqrt();
        Ok((2f64.ln() + ln_std_normal_sf(z), -p.rate.n_eps2 / 4.0))
    })?;
    Ok(b.report)
}

/// Every condition group in one report.
pub fn audit_all(config: &RateConfig) -> Result<ConditionsReport> {
    let mut report = audit_theorems(config)?;
    report.merge(audit_conditions_no(config)?);
    Ok(report)
}

/// Tracked asymptotic conditions that fail the coherence check.
pub fn incoherent_conditions(report: &ConditionsReport) -> Vec<&ConditionSummary> {
    TRACKED_GROUPS
        .iter()
        .flat_map(|g| report.group(g))
        .filter(|s| s.kind == Asymptotic && !s.satisfied)
        .collect()
}

/// The pinned configuration of the log-power rate corollary.
pub fn corollary_config() -> RateConfig {
    RateConfig {
        n_grid: vec![100, 1_000, 10_000, 100_000],
        k_of_n: SizeMap::Power { scale: 1.0, exponent: 2.0 },
        r_of_n: SizeMap::Log { scale: 1.0, exponent: 1.0 },
        rbar_of_n: SizeMap::Log { scale: 1.0, exponent: 1.5 },
        rate: RateKind::LogPower,
        xi: 0.35,
        k: 1.75,
        b: 0.05,
        alpha: 2.0,
        delta: 2.0,
        c: 2.2,
        c_prime: 1.0,
        big_b: 1.0,
        v: 1.0,
        family: GlmFamily::Logistic,
        beta_star: BetaStarLaw::Geometric { scale: 3.0, ratio: 0.5 },
        v_policy: VPolicy::IdentityScale { c: 1.0 },
        eta: 1.0,
        rect_mc_draws: default_rect_draws(),
        seed: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_examples() {
        let b: Vec<f64> = (1..=20).map(|j| 0.5f64.powi(j)).collect();
        assert!((delta(&b, 3).unwrap() - (0.125 - 0.5f64.powi(20))).abs() < 1e-15);
        assert_eq!(delta(&b, 20).unwrap(), 0.0);
        assert!((delta(&b, 0).unwrap() - b.iter().sum::<f64>()).abs() < 1e-15);
        assert!(delta(&b, 21).is_err());
        let law = BetaStarLaw::Geometric { scale: 0.5, ratio: 0.5 };
        assert!((law.delta(20, 3).unwrap() - delta(&b, 3).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn d_growth_examples() {
        for f in [
            GlmFamily::Logistic,
            GlmFamily::Probit,
            GlmFamily::Poisson,
            GlmFamily::ExponentialLogLink,
            GlmFamily::NormalKnownVar { dispersion: 2.0 },
        ] {
            assert_eq!(d_growth(f, 0.0), 1.0);
        }
        assert!((d_growth(GlmFamily::Logistic, 3.0) - 4.0).abs() < 1e-12);
        assert!((d_growth(GlmFamily::Poisson, 1.0) - (1.0 + std::f64::consts::E)).abs() < 1e-12);
        assert!((d_growth(GlmFamily::ExponentialLogLink, 1.0) - (1.0 + 2f64.exp())).abs() < 1e-12);
        assert!((d_growth(GlmFamily::NormalKnownVar { dispersion: 2.0 }, 3.0) - 19.0).abs() < 1e-12);
        // huge arguments stay finite on the log scale
        assert!(ln_d_growth(GlmFamily::Poisson, 5000.0).is_finite());
    }

    #[test]
    fn rate_examples() {
        let mut cfg = corollary_config();
        cfg.xi = 0.1;
        cfg.k = 1.5;
        let r = rate_formula(&cfg, 1000).unwrap();
        let direct = 1000f64.powf(-0.45) * 1000f64.ln().powf(0.75);
        assert!((r.eps - direct).abs() < 1e-15);
        assert!((r.eps - 0.19035).abs() < 1e-4);
        cfg.rate = RateKind::Power;
        cfg.xi = 0.2;
        cfg.b = 0.05;
        let r = rate_formula(&cfg, 1000).unwrap();
        assert!((r.eps - 0.074_989).abs() < 1e-6);
        assert_eq!(r.q, Some(0.8f64.min(2.0)));
        assert_eq!(r.b_below_q, Some(true));
        cfg.rate = RateKind::LogPower;
        cfg.xi = 0.1;
        cfg.k = 4.0;
        assert!(!rate_formula(&cfg, 10).unwrap().eps_in_range);
    }

    #[test]
    fn q_threshold_branches() {
        let mut cfg = corollary_config();
        cfg.xi = 0.4;
        cfg.delta = 0.9;
        cfg.v = 1.0;
        assert!((cfg.q_threshold() - 0.6).abs() < 1e-15);
        cfg.v = 3.0;
        assert!((cfg.q_threshold() - 0.2).abs() < 1e-15);
        cfg.family = GlmFamily::Poisson;
        assert!((cfg.q_threshold() - 0.4 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn unit_eigenvalue_conditions() {
        let rep = audit_theorems(&corollary_config()).unwrap();
        for row in rep.rows.iter().filter(|r| r.condition == "theorem1.inverse_eigen") {
            let ne2 = rep.rates.iter().find(|v| v.n == row.n).unwrap().n_eps2;
            assert!((row.ratio - 1.0 / ne2).abs() < 1e-15);
        }
        assert!(rep
            .rows
            .iter()
            .filter(|r| r.condition == "theorem1.log_eigen")
            .all(|r| r.ratio == 0.0));
        assert!(rep.summary("theorem1.log_eigen").unwrap().trivially_satisfied);
    }

    #[test]
    fn rectangle_product_of_intervals() {
        let p = rectangle_log_probability(&VPolicy::IdentityScale { c: 1.0 }, &[0.5, 0.25], 0.1, 0, 0).unwrap();
        let phi = crate::special::std_normal_cdf;
        let expected = (phi(0.6) - phi(0.4)) * (phi(0.35) - phi(0.15));
        assert!((p.ln_prob - expected.ln()).abs() < 1e-12);
        // far tail stays finite
        let far = rectangle_log_probability(&VPolicy::IdentityScale { c: 1.0 }, &[40.0], 0.01, 0, 0).unwrap();
        assert!(far.ln_prob.is_finite() && far.ln_prob < -790.0);
    }

    #[test]
    fn rectangle_importance_sampling_matches_product_when_uncorrelated() {
        let cen = [0.4, -0.2, 0.1];
        let exact = rectangle_log_probability(&VPolicy::IdentityScale { c: 2.0 }, &cen, 0.3, 0, 0).unwrap();
        let mc = rectangle_log_probability(&VPolicy::Ar1 { c: 2.0, rho: 0.0 }, &cen, 0.3, 20_000, 1).unwrap();
        assert!((mc.ln_prob - exact.ln_prob).abs() < 4.0 * mc.se.max(1e-12), "{mc:?} vs {exact:?}");
    }

    #[test]
    fn size_tail_is_trivial() {
        let rep = audit_conditions_no(&corollary_config()).unwrap();
        let s = rep.summary("outside.size_tail").unwrap();
        assert!(s.trivially_satisfied && s.satisfied);
    }

    #[test]
    fn size_map_rounding() {
        assert_eq!(SizeMap::Power { scale: 1.0, exponent: 2.0 }.at(100), Some(10_000));
        assert_eq!(SizeMap::Log { scale: 1.0, exponent: 1.0 }.at(100), Some(5));
        assert_eq!(SizeMap::ExpPower { c: 1.0, xi: 0.5 }.at(1_000_000), None);
        let mut cfg = corollary_config();
        cfg.rbar_of_n = SizeMap::Constant { value: 1 };
        assert!(cfg.validate().is_err());
    }
}
