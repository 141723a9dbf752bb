//! Exact model posteriors by enumeration over all |γ| ≤ r̄ for small K.
//!
//! Normal families use the closed-form marginal likelihood. Other families
//! estimate each model's marginal likelihood by prior Monte Carlo (average
//! likelihood over slab draws), which is unbiased with a reportable
//! standard error.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::conjugate::NormalSuffStats;
use super::Dataset;
use crate::error::{Error, Result};
use crate::prior::{ModelIndicator, PriorSpec};
use crate::special::log_sum_exp;

/// Largest K accepted by enumeration.
pub const MAX_ENUMERATION_K: usize = 15;
/// Largest model size for which prior-MC marginals are attempted.
pub const MAX_MC_MODEL_SIZE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerationOptions {
    /// Slab draws per model for the prior-MC marginal likelihood.
    pub mc_draws: usize,
    pub seed: u64,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self {
            mc_draws: 1_000_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeight {
    pub gamma: ModelIndicator,
    pub probability: f64,
    pub log_marginal: f64,
    /// Standard error of `log_marginal` (delta method); zero when exact.
    pub log_marginal_se: f64,
}

/// Normalized π(γ | Dⁿ) over every admissible model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPosterior {
    k: usize,
    models: Vec<ModelWeight>,
}

impl ModelPosterior {
    pub fn models(&self) -> &[ModelWeight] {
        &self.models
    }

    pub fn probability(&self, gamma: &ModelIndicator) -> f64 {
        self.models
            .iter()
            .find(|m| &m.gamma == gamma)
            .map_or(0.0, |m| m.probability)
    }

    pub fn to_map(&self) -> BTreeMap<ModelIndicator, f64> {
        self.models
            .iter()
            .map(|m| (m.gamma.clone(), m.probability))
            .collect()
    }

    /// π(γ_j = 1 | Dⁿ) for every j.
    pub fn inclusion_probabilities(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.k];
        for m in &self.models {
            for &j in m.gamma.included() {
                out[j] += m.probability;
            }
        }
        out
    }
}

/// ½ Σ |p(γ) − q(γ)| over the union of supports.
pub fn total_variation(p: &BTreeMap<ModelIndicator, f64>, q: &BTreeMap<ModelIndicator, f64>) -> f64 {
    let mut total = 0.0;
    for (g, a) in p {
        total += (a - q.get(g).copied().unwrap_or(0.0)).abs();
    }
    for (g, b) in q {
        if !p.contains_key(g) {
            total += b.abs();
        }
    }
    0.5 * total
}

pub fn enumerate_posterior(data: &Dataset, spec: &PriorSpec) -> Result<ModelPosterior> {
    enumerate_posterior_with(data, spec, &EnumerationOptions::default())
}

pub fn enumerate_posterior_with(
    data: &Dataset,
    spec: &PriorSpec,
    options: &EnumerationOptions,
) -> Result<ModelPosterior> {
    data.check_prior(spec)?;
    let k = data.k();
    if k > MAX_ENUMERATION_K {
        return Err(Error::SizeGuard(format!(
            "enumeration needs K ≤ {MAX_ENUMERATION_K}, got {k}"
        )));
    }
    let conjugate = data.family().is_normal();
    if !conjugate && spec.r_max() > MAX_MC_MODEL_SIZE {
        return Err(Error::SizeGuard(format!(
            "prior Monte Carlo marginals need r_max ≤ {MAX_MC_MODEL_SIZE}, got {}",
            spec.r_max()
        )));
    }
    if !conjugate && options.mc_draws < 2 {
        return Err(crate::error::invalid("mc_draws", "need at least 2 draws"));
    }
    let models = ModelIndicator::enumerate(k, spec.r_max());
    let stats = if conjugate {
        Some(NormalSuffStats::new(data)?)
    } else {
        None
    };
    let mut weights = Vec::with_capacity(models.len());
    for (idx, gamma) in models.into_iter().enumerate() {
        let (log_marginal, se) = match &stats {
            Some(s) => (s.fit(spec, &gamma)?.log_marginal, 0.0),
            None => prior_mc_marginal(data, spec, &gamma, options, idx as u64),
        };
        weights.push(ModelWeight {
            log_marginal,
            log_marginal_se: se,
            probability: 0.0,
            gamma,
        });
    }
    let log_joint: Vec<f64> = weights
        .iter()
        .map(|w| {
            spec.log_prior_model(&w.gamma)
                .map(|lp| lp.value() + w.log_marginal)
        })
        .collect::<Result<_>>()?;
    let norm = log_sum_exp(&log_joint);
    for (w, lj) in weights.iter_mut().zip(&log_joint) {
        w.probability = (lj - norm).exp();
    }
    Ok(ModelPosterior { k, models: weights })
}

/// ln of the prior-averaged likelihood over `mc_draws` slab draws, with the
/// delta-method standard error of the log estimate.
fn prior_mc_marginal(
    data: &Dataset,
    spec: &PriorSpec,
    gamma: &ModelIndicator,
    options: &EnumerationOptions,
    stream: u64,
) -> (f64, f64) {
    let family = data.family();
    if gamma.size() == 0 {
        let h = vec![0.0; data.n()];
        return (data.log_likelihood_at(&family, &h), 0.0);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(options.seed);
    rng.set_stream(stream);
    // running max-shifted sums of w and w²
    let (mut max, mut s1, mut s2) = (f64::NEG_INFINITY, 0.0, 0.0);
    let cols: Vec<_> = gamma.included().iter().map(|&j| data.x().column(j)).collect();
    let mut h = vec![0.0; data.n()];
    for _ in 0..options.mc_draws {
        let beta = spec.sample_slab(gamma.size(), 1.0, &mut rng);
        h.iter_mut().for_each(|v| *v = 0.0);
        for (col, b) in cols.iter().zip(&beta) {
            for (hi, x) in h.iter_mut().zip(col.iter()) {
                *hi += x * b;
            }
        }
        let ll = data.log_likelihood_at(&family, &h);
        if ll > max {
            let shift = (max - ll).exp();
            s1 *= shift;
            s2 *= shift * shift;
            max = ll;
        }
        let w = (ll - max).exp();
        s1 += w;
        s2 += w * w;
    }
    let t = options.mc_draws as f64;
    let mean = s1 / t;
    let var = (s2 / t - mean * mean).max(0.0) * t / (t - 1.0);
    (max + mean.ln(), (var / t).sqrt() / mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glm::GlmFamily;
    use crate::prior::VPolicy;
    use nalgebra::DMatrix;

    fn normal_data() -> Dataset {
        let x = DMatrix::from_row_slice(
            5,
            3,
            &[
                0.2, 0.2, -0.5, //
                -0.7, -0.7, 0.1, //
                0.9, 0.9, 0.3, //
                -0.1, -0.1, -0.8, //
                0.4, 0.4, 0.6,
            ],
        );
        Dataset::new(x, vec![0.5, -1.1, 1.4, 0.2, 0.6], GlmFamily::NormalKnownVar { dispersion: 1.0 }).unwrap()
    }

    #[test]
    fn probabilities_sum_to_one_and_respect_symmetry() {
        let data = normal_data();
        let spec = PriorSpec::new(3, 1, 2, VPolicy::IdentityScale { c: 1.0 }, None).unwrap();
        let post = enumerate_posterior(&data, &spec).unwrap();
        let total: f64 = post.models().iter().map(|m| m.probability).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let a = post.probability(&ModelIndicator::new(3, vec![0]).unwrap());
        let b = post.probability(&ModelIndicator::new(3, vec![1]).unwrap());
        assert!((a - b).abs() < 1e-12);
        let inc = post.inclusion_probabilities();
        assert!((inc[0] - inc[1]).abs() < 1e-12);
    }

    #[test]
    fn guards_refuse_large_problems() {
        let data = Dataset::empty(16, GlmFamily::NormalKnownVar { dispersion: 1.0 }).unwrap();
        let spec = PriorSpec::new(16, 1, 2, VPolicy::IdentityScale { c: 1.0 }, None).unwrap();
        assert!(matches!(enumerate_posterior(&data, &spec), Err(Error::SizeGuard(_))));
        let data = Dataset::empty(6, GlmFamily::Logistic).unwrap();
        let spec = PriorSpec::new(6, 1, 4, VPolicy::IdentityScale { c: 1.0 }, None).unwrap();
        assert!(matches!(enumerate_posterior(&data, &spec), Err(Error::SizeGuard(_))));
    }

    #[test]
    fn total_variation_basics() {
        let g0 = ModelIndicator::empty(2);
        let g1 = ModelIndicator::new(2, vec![1]).unwrap();
        let p = BTreeMap::from([(g0.clone(), 0.5), (g1.clone(), 0.5)]);
        let q = BTreeMap::from([(g0, 1.0)]);
        assert!((total_variation(&p, &q) - 0.5).abs() < 1e-15);
        assert_eq!(total_variation(&p, &p), 0.0);
    }

    #[test]
    fn empty_data_gives_prior() {
        let data = Dataset::empty(4, GlmFamily::Logistic).unwrap();
        let spec = PriorSpec::new(4, 1, 2, VPolicy::IdentityScale { c: 1.0 }, None).unwrap();
        let opts = EnumerationOptions { mc_draws: 10, seed: 1 };
        let post = enumerate_posterior_with(&data, &spec, &opts).unwrap();
        for m in post.models() {
            let prior = spec.log_prior_model(&m.gamma).unwrap().value().exp();
            assert!((m.probability - prior).abs() < 1e-12);
        }
    }
}
