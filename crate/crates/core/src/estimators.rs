//! Selected posterior estimates p̂_A, mean estimates and the plug-in
//! classifier, with empirical checks of the inequalities linking them to
//! the Hellinger distance.
//!
//! p̂_A is the equally weighted mixture of the densities of the chain draws
//! retained by a [`SelectionRule`]. Its distance to p* is integrated per
//! covariate point: exactly through μ̂ for binary responses, by series for
//! Poisson, and by Gauss quadrature against p* for the continuous families.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::glm::GlmFamily;
use crate::hellinger::{candidate_family, tail_probability, FrozenX, HellingerEstimate, TrueModel, XSource};
use crate::posterior::{inclusion_probabilities, Chain, PosteriorDraw};
use crate::prior::ModelIndicator;
use crate::special::{gauss_hermite_64, gauss_laguerre_64, log_sum_exp};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SelectionRule {
    All,
    /// Draws whose model is among the m most visited.
    BestM { m: usize },
    /// Draws whose model contains at least one index with inclusion
    /// probability above t.
    InclusionThreshold { t: f64 },
}

impl SelectionRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SelectionRule::BestM { m } if m < 1 => Err(invalid("m", "must be at least 1")),
            SelectionRule::InclusionThreshold { t } if !(t > 0.0 && t < 1.0) => {
                Err(invalid("t", format!("must lie in (0, 1), got {t}")))
            }
            _ => Ok(()),
        }
    }
}

/// Equally weighted mixture over retained draws.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureDensity {
    pub components: Vec<PosteriorDraw>,
    pub weights: Vec<f64>,
    /// Retained fraction of the chain, the empirical π(p ∈ A | Dⁿ).
    pub selection_prob: f64,
    pub family: GlmFamily,
    pub k: usize,
}

/// Applies a selection rule to a chain whose responses follow `family`.
pub fn select(chain: &Chain, family: GlmFamily, rule: &SelectionRule) -> Result<MixtureDensity> {
    rule.validate()?;
    let Some(first) = chain.draws.first() else {
        return Err(invalid("chain", "no stored draws"));
    };
    let k = first.state.gamma.k();
    let keep: Vec<bool> = match *rule {
        SelectionRule::All => vec![true; chain.draws.len()],
        SelectionRule::BestM { m } => {
            let mut freq: BTreeMap<&ModelIndicator, usize> = BTreeMap::new();
            for d in &chain.draws {
                *freq.entry(&d.state.gamma).or_insert(0) += 1;
            }
            // stable sort keeps lexicographic γ order among ties
            let mut ranked: Vec<(&ModelIndicator, usize)> = freq.into_iter().collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1));
            let best: Vec<&ModelIndicator> = ranked.iter().take(m).map(|(g, _)| *g).collect();
            chain.draws.iter().map(|d| best.contains(&&d.state.gamma)).collect()
        }
        SelectionRule::InclusionThreshold { t } => {
            let inc = inclusion_probabilities(chain, k);
            let strong: Vec<bool> = inc.iter().map(|&p| p > t).collect();
            let keep: Vec<bool> = chain
                .draws
                .iter()
                .map(|d| d.state.gamma.included().iter().any(|&j| strong[j]))
                .collect();
            if !keep.iter().any(|&b| b) {
                let max_available = inc.iter().copied().fold(0.0, f64::max);
                return Err(Error::EmptySelection { max_available });
            }
            keep
        }
    };
    let components: Vec<PosteriorDraw> = chain
        .draws
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(d, _)| d.clone())
        .collect();
    let m = components.len();
    Ok(MixtureDensity {
        weights: vec![1.0 / m as f64; m],
        selection_prob: m as f64 / chain.draws.len() as f64,
        components,
        family,
        k,
    })
}

impl MixtureDensity {
    fn check_x(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.k {
            return Err(Error::DimensionMismatch {
                context: "covariate vector",
                expected: self.k,
                got: x.len(),
            });
        }
        if let Some(v) = x.iter().find(|v| !(v.abs() <= 1.0)) {
            return Err(invalid("x", format!("entries must lie in [−1, 1], found {v}")));
        }
        Ok(())
    }

    fn component_h(d: &PosteriorDraw, x: &[f64]) -> f64 {
        d.state
            .gamma
            .included()
            .iter()
            .zip(&d.state.beta)
            .map(|(&j, b)| x[j] * b)
            .sum()
    }

    fn concrete(&self, d: &PosteriorDraw) -> Result<GlmFamily> {
        self.family.with_dispersion(d.state.phi)
    }

    /// Unique (family, coefficient) components with pooled weights.
    fn pooled(&self) -> Vec<(usize, f64)> {
        let mut order: Vec<usize> = (0..self.components.len()).collect();
        order.sort_by(|&a, &b| {
            let (da, db) = (&self.components[a].state, &self.components[b].state);
            da.gamma
                .cmp(&db.gamma)
                .then_with(|| da.beta.partial_cmp(&db.beta).unwrap_or(std::cmp::Ordering::Equal))
                .then_with(|| da.phi.partial_cmp(&db.phi).unwrap_or(std::cmp::Ordering::Equal))
        });
        let mut out: Vec<(usize, f64)> = Vec::new();
        for i in order {
            match out.last_mut() {
                Some((j, w)) if self.components[*j].state == self.components[i].state => {
                    *w += self.weights[i]
                }
                _ => out.push((i, self.weights[i])),
            }
        }
        out
    }
}

/// μ̂_A(x) = Σ_k w_k ψ(x_{γ_k}ᵀβ_k).
pub fn mean_estimate(mix: &MixtureDensity, x: &[f64]) -> Result<f64> {
    mix.check_x(x)?;
    let mut total = 0.0;
    for (d, w) in mix.components.iter().zip(&mix.weights) {
        total += w * mix.concrete(d)?.mean_unchecked(MixtureDensity::component_h(d, x));
    }
    Ok(total)
}

/// Second-moment function of the mixture at x.
pub fn second_moment_estimate(mix: &MixtureDensity, x: &[f64]) -> Result<f64> {
    mix.check_x(x)?;
    let mut total = 0.0;
    for (d, w) in mix.components.iter().zip(&mix.weights) {
        total += w * mix.concrete(d)?.second_moment_unchecked(MixtureDensity::component_h(d, x));
    }
    Ok(total)
}

/// Ĉ_A(x) = I[μ̂_A(x) > 0.5].
pub fn classify(mix: &MixtureDensity, x: &[f64]) -> Result<u8> {
    if !mix.family.is_binary() {
        return Err(Error::UnsupportedFamily(mix.family.name(), "classification needs a binary response"));
    }
    Ok(classify_mean(mean_estimate(mix, x)?))
}

fn classify_mean(mu: f64) -> u8 {
    u8::from(mu > 0.5)
}

/// Component predictors on the frozen points, after pooling duplicates.
struct MixtureOnPoints {
    families: Vec<GlmFamily>,
    weights: Vec<f64>,
    /// h[c][i] for component c at point i.
    h: Vec<Vec<f64>>,
}

/// Entries (components × points) allowed when per-point component values
/// must be held at once.
const MIXTURE_BUDGET: usize = 30_000_000;

impl MixtureOnPoints {
    fn new(mix: &MixtureDensity, truth: &TrueModel, frozen: &FrozenX) -> Result<Self> {
        if mix.k != truth.k() {
            return Err(Error::DimensionMismatch {
                context: "mixture K",
                expected: truth.k(),
                got: mix.k,
            });
        }
        let pooled = mix.pooled();
        if pooled.len() * frozen.n_points() > MIXTURE_BUDGET && !mix.family.is_binary() {
            return Err(Error::SizeGuard(format!(
                "{} components × {} points exceeds the mixture budget",
                pooled.len(),
                frozen.n_points()
            )));
        }
        let mut families = Vec::with_capacity(pooled.len());
        let mut weights = Vec::with_capacity(pooled.len());
        let mut h = Vec::with_capacity(pooled.len());
        for (i, w) in pooled {
            let s = &mix.components[i].state;
            families.push(candidate_family(truth, mix.family, s.phi)?);
            weights.push(w);
            h.push(frozen.predictor(s.gamma.included(), &s.beta));
        }
        Ok(Self { families, weights, h })
    }

    fn mean_at(&self, i: usize) -> f64 {
        self.families
            .iter()
            .zip(&self.weights)
            .zip(&self.h)
            .map(|((f, w), h)| w * f.mean_unchecked(h[i]))
            .sum()
    }

    fn second_moment_at(&self, i: usize) -> f64 {
        self.families
            .iter()
            .zip(&self.weights)
            .zip(&self.h)
            .map(|((f, w), h)| w * f.second_moment_unchecked(h[i]))
            .sum()
    }

    fn ln_density_at(&self, i: usize, y: f64) -> f64 {
        let terms: Vec<f64> = self
            .families
            .iter()
            .zip(&self.weights)
            .zip(&self.h)
            .map(|((f, w), h)| w.ln() + f.log_density_unchecked(y, h[i]))
            .collect();
        log_sum_exp(&terms)
    }

    /// ∫ √(p̂(y|x_i) p*(y|x_i)) ν_y(dy).
    fn affinity_at(&self, truth: &GlmFamily, i: usize, hs: f64) -> f64 {
        let v = match *truth {
            GlmFamily::Logistic | GlmFamily::Probit => {
                let mu = self.mean_at(i).clamp(0.0, 1.0);
                let (ms, cs) = (truth.mean_unchecked(hs), truth.complement_mean_unchecked(hs));
                (mu * ms).sqrt() + ((1.0 - mu) * cs).sqrt()
            }
            GlmFamily::Poisson => {
                let lam_max = self
                    .h
                    .iter()
                    .map(|h| h[i].exp())
                    .fold(hs.exp(), f64::max);
                let top = (lam_max + 12.0 * lam_max.sqrt() + 30.0).ceil() as usize;
                (0..=top)
                    .map(|y| {
                        let y = y as f64;
                        (0.5 * (self.ln_density_at(i, y) + truth.log_density_unchecked(y, hs))).exp()
                    })
                    .sum()
            }
            GlmFamily::NormalKnownVar { dispersion } => {
                // E_{p*}[√(p̂/p*)] by Gauss–Hermite around h*
                let rule = gauss_hermite_64();
                let scale = (2.0 / dispersion).sqrt();
                let total: f64 = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(t, w)| {
                        let y = hs + scale * t;
                        w * (0.5 * (self.ln_density_at(i, y) - truth.log_density_unchecked(y, hs))).exp()
                    })
                    .sum();
                total / std::f64::consts::PI.sqrt()
            }
            GlmFamily::ExponentialLogLink => {
                // y = μ* t with t ~ Exp(1): E_{p*}[√(p̂/p*)] by Gauss–Laguerre
                let rule = gauss_laguerre_64();
                let mu = hs.exp();
                rule.nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(t, w)| {
                        let y = mu * t;
                        w * (0.5 * (self.ln_density_at(i, y) - truth.log_density_unchecked(y, hs))).exp()
                    })
                    .sum()
            }
            GlmFamily::NormalUnknownVar => f64::NAN,
        };
        v.min(1.0)
    }
}

/// Per-point binary mean, streamed over components so arbitrarily long
/// chains fit in memory.
fn binary_mean_on_points(mix: &MixtureDensity, truth: &TrueModel, frozen: &FrozenX) -> Result<Vec<f64>> {
    let mut mu = vec![0.0; frozen.n_points()];
    for (i, w) in mix.pooled() {
        let s = &mix.components[i].state;
        let fam = candidate_family(truth, mix.family, s.phi)?;
        let h = frozen.predictor(s.gamma.included(), &s.beta);
        for (m, hi) in mu.iter_mut().zip(&h) {
            *m += w * fam.mean_unchecked(*hi);
        }
    }
    Ok(mu)
}

/// d(p̂_A, p*)² per frozen covariate point.
fn mixture_pointwise_d2(mix: &MixtureDensity, truth: &TrueModel, frozen: &FrozenX) -> Result<Vec<f64>> {
    let tf = truth.concrete_family();
    let hs = frozen.true_predictor();
    if tf.is_binary() {
        candidate_family(truth, mix.family, None)?;
        let mu = binary_mean_on_points(mix, truth, frozen)?;
        return Ok(mu
            .iter()
            .zip(hs)
            .map(|(&m, &h)| {
                let m = m.clamp(0.0, 1.0);
                let aff = (m * tf.mean_unchecked(h)).sqrt() + ((1.0 - m) * tf.complement_mean_unchecked(h)).sqrt();
                2.0 - 2.0 * aff.min(1.0)
            })
            .collect());
    }
    let on = MixtureOnPoints::new(mix, truth, frozen)?;
    Ok((0..frozen.n_points())
        .map(|i| 2.0 - 2.0 * on.affinity_at(&tf, i, hs[i]))
        .collect())
}

/// d(p̂_A, p*) for the mixture itself.
pub fn mixture_hellinger(mix: &MixtureDensity, truth: &TrueModel, source: &XSource) -> Result<HellingerEstimate> {
    let frozen = FrozenX::new(truth, source)?;
    mixture_hellinger_on(mix, truth, &frozen)
}

pub fn mixture_hellinger_on(mix: &MixtureDensity, truth: &TrueModel, frozen: &FrozenX) -> Result<HellingerEstimate> {
    let d2 = mixture_pointwise_d2(mix, truth, frozen)?;
    Ok(frozen.estimate(&d2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityCheck {
    /// d(p̂_A, p*)².
    pub lhs: f64,
    pub lhs_se: f64,
    /// ε² + 2·tail(ε)/selection_prob.
    pub rhs: f64,
    /// Mean d² over retained draws (the convexity intermediate).
    pub mean_retained_d2: f64,
    pub pass: bool,
}

/// Checks d(p̂_A,p*)² ≤ ε² + 2·π[d > ε]/r with per-retained-draw distances.
pub fn convexity_bound_check(
    mix: &MixtureDensity,
    truth: &TrueModel,
    distances: &[f64],
    eps: f64,
    source: &XSource,
) -> Result<ConvexityCheck> {
    if distances.len() != mix.components.len() {
        return Err(Error::DimensionMismatch {
            context: "distances per retained draw",
            expected: mix.components.len(),
            got: distances.len(),
        });
    }
    if !(eps >= 0.0) {
        return Err(invalid("eps", "must be nonnegative"));
    }
    let est = mixture_hellinger(mix, truth, source)?;
    let rhs = eps * eps + 2.0 * tail_probability(distances, eps) / mix.selection_prob;
    let mean_retained_d2 = distances.iter().map(|d| d * d).sum::<f64>() / distances.len() as f64;
    Ok(ConvexityCheck {
        lhs: est.squared,
        lhs_se: est.se_squared,
        rhs,
        mean_retained_d2,
        pass: est.squared <= rhs + 3.0 * est.se_squared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionClassificationReport {
    pub d2: f64,
    pub d2_se: f64,
    /// E_x (μ̂ − μ*)² / (ν̂ + ν*).
    pub weighted_l2: f64,
    /// Standard error of weighted_l2 − 2d² (paired over x).
    pub weighted_l2_se: f64,
    pub weighted_l2_pass: bool,
    /// Excess risk E_x P*(Ĉ ≠ y | x) − L*; `None` for non-binary families.
    pub excess_risk: Option<f64>,
    pub excess_risk_se: Option<f64>,
    pub bayes_risk: Option<f64>,
    pub classification_bound: Option<f64>,
    pub classification_pass: Option<bool>,
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Monte Carlo checks of the regression and classification consequences
/// of a small Hellinger distance on one common covariate sample.
pub fn regression_classification_checks(
    mix: &MixtureDensity,
    truth: &TrueModel,
    source: &XSource,
) -> Result<RegressionClassificationReport> {
    let frozen = FrozenX::new(truth, source)?;
    let tf = truth.concrete_family();
    let hs = frozen.true_predictor();
    let d2 = mixture_pointwise_d2(mix, truth, &frozen)?;
    let est = frozen.estimate(&d2);
    let n = frozen.n_points();
    let (mu_hat, nu_hat): (Vec<f64>, Vec<f64>) = if tf.is_binary() {
        let mu = binary_mean_on_points(mix, truth, &frozen)?;
        (mu.clone(), mu)
    } else {
        let on = MixtureOnPoints::new(mix, truth, &frozen)?;
        ((0..n).map(|i| on.mean_at(i)).collect(), (0..n).map(|i| on.second_moment_at(i)).collect())
    };
    let mut ratio = Vec::with_capacity(n);
    let mut gap = Vec::with_capacity(n);
    for i in 0..n {
        let ms = tf.mean_unchecked(hs[i]);
        let nus = tf.second_moment_unchecked(hs[i]);
        let denom = nu_hat[i] + nus;
        let r = if denom > 0.0 { (mu_hat[i] - ms).powi(2) / denom } else { 0.0 };
        ratio.push(r);
        gap.push(r - 2.0 * d2[i]);
    }
    let (weighted_l2, _) = mean_and_se(&ratio);
    let (_, gap_se) = mean_and_se(&gap);
    let weighted_l2_pass = weighted_l2 <= 2.0 * est.squared + 3.0 * gap_se;

    let mut report = RegressionClassificationReport {
        d2: est.squared,
        d2_se: est.se_squared,
        weighted_l2,
        weighted_l2_se: gap_se,
        weighted_l2_pass,
        excess_risk: None,
        excess_risk_se: None,
        bayes_risk: None,
        classification_bound: None,
        classification_pass: None,
    };
    if tf.is_binary() {
        let mut excess = Vec::with_capacity(n);
        let mut bayes = Vec::with_capacity(n);
        for i in 0..n {
            let ms = tf.mean_unchecked(hs[i]);
            let cs = tf.complement_mean_unchecked(hs[i]);
            let err = if classify_mean(mu_hat[i]) == 1 { cs } else { ms };
            let best = ms.min(cs);
            excess.push(err - best);
            bayes.push(best);
        }
        let (ex, ex_se) = mean_and_se(&excess);
        let (lstar, _) = mean_and_se(&bayes);
        let bound = 4.0 * est.value;
        let se = (ex_se * ex_se + (4.0 * est.se).powi(2)).sqrt();
        report.excess_risk = Some(ex);
        report.excess_risk_se = Some(ex_se);
        report.bayes_risk = Some(lstar);
        report.classification_bound = Some(bound);
        report.classification_pass = Some(ex <= bound + 3.0 * se);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hellinger::XLaw;
    use crate::posterior::{McmcConfig, ModelState};

    fn draw(k: usize, idx: Vec<usize>, beta: Vec<f64>) -> PosteriorDraw {
        PosteriorDraw {
            state: ModelState {
                gamma: ModelIndicator::new(k, idx).unwrap(),
                beta,
                phi: None,
            },
            log_post: 0.0,
        }
    }

    fn chain(draws: Vec<PosteriorDraw>) -> Chain {
        Chain {
            draws,
            acceptance: Default::default(),
            config: McmcConfig::default(),
        }
    }

    #[test]
    fn all_and_best_one_on_single_model() {
        let c = chain(vec![draw(3, vec![1], vec![0.2]), draw(3, vec![1], vec![0.4])]);
        let all = select(&c, GlmFamily::Logistic, &SelectionRule::All).unwrap();
        assert_eq!(all.selection_prob, 1.0);
        assert_eq!(all.weights, vec![0.5, 0.5]);
        let best = select(&c, GlmFamily::Logistic, &SelectionRule::BestM { m: 1 }).unwrap();
        assert_eq!(best, all);
    }

    #[test]
    fn best_m_breaks_ties_lexicographically() {
        let c = chain(vec![
            draw(3, vec![2], vec![0.1]),
            draw(3, vec![0], vec![0.1]),
            draw(3, vec![1], vec![0.1]),
            draw(3, vec![1], vec![0.3]),
        ]);
        let m = select(&c, GlmFamily::Logistic, &SelectionRule::BestM { m: 2 }).unwrap();
        let kept: Vec<Vec<usize>> = m.components.iter().map(|d| d.state.gamma.included().to_vec()).collect();
        assert_eq!(kept, vec![vec![0], vec![1], vec![1]]);
        assert!((m.selection_prob - 0.75).abs() < 1e-15);
    }

    #[test]
    fn inclusion_threshold_retention() {
        // inclusion: j0 in 1/20 = 0.05 (not > 0.05), j1 in 10/20, j2 in 2/20
        let mut draws = vec![draw(3, vec![0], vec![0.1])];
        draws.extend((0..10).map(|_| draw(3, vec![1], vec![0.1])));
        draws.extend((0..2).map(|_| draw(3, vec![2], vec![0.1])));
        draws.extend((0..7).map(|_| draw(3, vec![], vec![])));
        let c = chain(draws);
        let m = select(&c, GlmFamily::Logistic, &SelectionRule::InclusionThreshold { t: 0.05 }).unwrap();
        assert_eq!(m.components.len(), 12);
        assert!((m.selection_prob - 0.6).abs() < 1e-15);
        let err = select(&c, GlmFamily::Logistic, &SelectionRule::InclusionThreshold { t: 0.6 }).unwrap_err();
        assert_eq!(err, Error::EmptySelection { max_available: 0.5 });
        assert!(SelectionRule::InclusionThreshold { t: 1.0 }.validate().is_err());
        assert!(SelectionRule::BestM { m: 0 }.validate().is_err());
    }

    #[test]
    fn mean_and_classifier() {
        // logistic means 0.2 and 0.6 at x = (1)
        let l = |p: f64| (p / (1.0 - p)).ln();
        let c = chain(vec![draw(1, vec![0], vec![l(0.2)]), draw(1, vec![0], vec![l(0.6)])]);
        let m = select(&c, GlmFamily::Logistic, &SelectionRule::All).unwrap();
        assert!((mean_estimate(&m, &[1.0]).unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(classify(&m, &[1.0]).unwrap(), 0);
        assert_eq!(classify_mean(0.6), 1);
        assert_eq!(classify_mean(0.5), 0);
        assert!(mean_estimate(&m, &[1.5]).is_err());
        let p = select(&c, GlmFamily::Poisson, &SelectionRule::All).unwrap();
        assert!(classify(&p, &[1.0]).is_err());
    }

    #[test]
    fn mixture_at_truth_has_zero_distance_and_risk() {
        let fam = GlmFamily::Probit;
        let truth = TrueModel::new(fam, vec![0.8, -0.4], XLaw::UniformCube, None).unwrap();
        let c = chain(vec![draw(2, vec![0, 1], vec![0.8, -0.4])]);
        let m = select(&c, fam, &SelectionRule::All).unwrap();
        let src = XSource::MonteCarlo { n_x: 2000, seed: 1 };
        let r = regression_classification_checks(&m, &truth, &src).unwrap();
        assert!(r.d2 < 1e-14 && r.weighted_l2 < 1e-20);
        assert_eq!(r.excess_risk, Some(0.0));
        let cc = convexity_bound_check(&m, &truth, &[0.0], 0.1, &src).unwrap();
        assert!(cc.pass && cc.lhs < 1e-14);
        let cc = convexity_bound_check(&m, &truth, &[0.0], 2f64.sqrt(), &src).unwrap();
        assert!((cc.rhs - 2.0).abs() < 1e-15 && cc.pass);
    }

    #[test]
    fn pure_noise_bayes_error() {
        let fam = GlmFamily::Logistic;
        let truth = TrueModel::new(fam, vec![0.0, 0.0], XLaw::UniformCube, None).unwrap();
        let c = chain(vec![draw(2, vec![0], vec![1.0])]);
        let m = select(&c, fam, &SelectionRule::All).unwrap();
        let r = regression_classification_checks(&m, &truth, &XSource::MonteCarlo { n_x: 1000, seed: 2 }).unwrap();
        assert!((r.bayes_risk.unwrap() - 0.5).abs() < 1e-15);
        assert!(r.excess_risk.unwrap().abs() < 1e-15);
    }
}
