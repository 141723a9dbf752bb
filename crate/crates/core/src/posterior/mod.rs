//! Posterior inference over (γ, β_γ, φ).
//!
//! The unnormalized log posterior is the model prior plus slab prior plus
//! the GLM log likelihood. Normal families admit closed-form marginal
//! likelihoods ([`conjugate_log_marginal`]); everything else is sampled with
//! the reversible-jump chain in [`mcmc_run`]. [`enumerate_posterior`] gives
//! exact (or prior-Monte-Carlo) model posteriors for small K.

mod conjugate;
mod enumerate;
mod mcmc;

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::glm::GlmFamily;
use crate::prior::{LogProb, ModelIndicator, PriorSpec};

pub use conjugate::conjugate_log_marginal;
pub use enumerate::{
    enumerate_posterior, enumerate_posterior_with, total_variation, EnumerationOptions,
    ModelPosterior, ModelWeight,
};
pub use mcmc::{mcmc_run, AcceptanceStats, Chain, McmcConfig, MoveCounts, MoveProbs, SamplerKind};

/// Observed design and responses. Entries of X lie in [−1, 1] and every
/// response lies in the family's support. Zero rows are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: Vec<f64>,
    family: GlmFamily,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: Vec<f64>, family: GlmFamily) -> Result<Self> {
        family.validate()?;
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                context: "response length",
                expected: x.nrows(),
                got: y.len(),
            });
        }
        if let Some(v) = x.iter().find(|v| !(v.abs() <= 1.0)) {
            return Err(invalid("x", format!("entries must lie in [−1, 1], found {v}")));
        }
        for &v in &y {
            family.check_support(v)?;
        }
        Ok(Self { x, y, family })
    }

    /// Builds a dataset from row vectors of length `k`.
    pub fn from_rows(k: usize, rows: &[Vec<f64>], y: Vec<f64>, family: GlmFamily) -> Result<Self> {
        if let Some(r) = rows.iter().find(|r| r.len() != k) {
            return Err(Error::DimensionMismatch {
                context: "design row",
                expected: k,
                got: r.len(),
            });
        }
        let x = DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]);
        Self::new(x, y, family)
    }

    pub fn empty(k: usize, family: GlmFamily) -> Result<Self> {
        Self::new(DMatrix::zeros(0, k), Vec::new(), family)
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn concat(&self, other: &Dataset) -> Result<Self> {
        if self.k() != other.k() {
            return Err(Error::DimensionMismatch {
                context: "dataset columns",
                expected: self.k(),
                got: other.k(),
            });
        }
        if self.family != other.family {
            return Err(Error::FamilyMismatch {
                truth: self.family.name(),
                candidate: other.family.name(),
            });
        }
        let n = self.n();
        let x = DMatrix::from_fn(n + other.n(), self.k(), |i, j| {
            if i < n {
                self.x[(i, j)]
            } else {
                other.x[(i - n, j)]
            }
        });
        let mut y = self.y.clone();
        y.extend_from_slice(&other.y);
        Ok(Self {
            x,
            y,
            family: self.family,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn family(&self) -> GlmFamily {
        self.family
    }

    /// h_i = x_{iγ}ᵀβ for every row.
    pub fn linear_predictor(&self, gamma: &ModelIndicator, beta: &[f64]) -> Vec<f64> {
        let mut h = vec![0.0; self.n()];
        for (&j, &b) in gamma.included().iter().zip(beta) {
            for (hi, xij) in h.iter_mut().zip(self.x.column(j).iter()) {
                *hi += xij * b;
            }
        }
        h
    }

    /// Σ_i ln f(y_i, h_i) under a concrete family.
    pub(crate) fn log_likelihood_at(&self, family: &GlmFamily, h: &[f64]) -> f64 {
        self.y
            .iter()
            .zip(h)
            .map(|(&y, &hi)| family.log_density_unchecked(y, hi))
            .sum()
    }

    /// Checks that the prior matches this dataset: same K, and a dispersion
    /// prior exactly when the family is the unknown-variance normal.
    pub(crate) fn check_prior(&self, spec: &PriorSpec) -> Result<()> {
        if spec.k() != self.k() {
            return Err(Error::DimensionMismatch {
                context: "prior K vs dataset columns",
                expected: self.k(),
                got: spec.k(),
            });
        }
        match (self.family, spec.dispersion()) {
            (GlmFamily::NormalUnknownVar, None) => Err(invalid(
                "dispersion",
                "normal_unknown_var requires a dispersion prior",
            )),
            (GlmFamily::NormalUnknownVar, Some(_)) | (_, None) => Ok(()),
            (f, Some(_)) => Err(invalid(
                "dispersion",
                format!("family {} takes no dispersion prior", f.name()),
            )),
        }
    }
}

/// A point (γ, β_γ, φ) of the parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub gamma: ModelIndicator,
    pub beta: Vec<f64>,
    pub phi: Option<f64>,
}

impl ModelState {
    pub fn empty(k: usize) -> Self {
        Self {
            gamma: ModelIndicator::empty(k),
            beta: Vec::new(),
            phi: None,
        }
    }
}

/// A stored posterior draw with its cached unnormalized log posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraw {
    pub state: ModelState,
    pub log_post: f64,
}

/// ln π(γ) + ln π(β_γ[, φ] | γ) + Σ_i ln f(y_i, x_{iγ}ᵀβ_γ).
pub fn log_unnormalized_posterior(
    data: &Dataset,
    spec: &PriorSpec,
    state: &ModelState,
) -> Result<LogProb> {
    data.check_prior(spec)?;
    if state.beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::NonFinite("coefficient"));
    }
    let model = spec.log_prior_model(&state.gamma)?;
    let coeffs = spec.log_prior_coeffs(&state.gamma, &state.beta, state.phi)?;
    let LogProb::Finite(model) = model else {
        return Ok(LogProb::Excluded);
    };
    let family = data.family.with_dispersion(state.phi)?;
    let h = data.linear_predictor(&state.gamma, &state.beta);
    let loglik = data.log_likelihood_at(&family, &h);
    if loglik.is_nan() {
        return Err(Error::NonFinite("log likelihood"));
    }
    Ok(LogProb::Finite(model + coeffs.total() + loglik))
}

/// Per-index inclusion frequency over the chain's stored draws (all zeros
/// for an empty chain).
pub fn inclusion_probabilities(chain: &Chain, k: usize) -> Vec<f64> {
    let mut counts = vec![0.0; k];
    for d in &chain.draws {
        for &j in d.state.gamma.included() {
            if j < k {
                counts[j] += 1.0;
            }
        }
    }
    let n = chain.draws.len().max(1) as f64;
    counts.iter().map(|c| c / n).collect()
}

impl Chain {
    /// Empirical distribution of γ over the stored draws.
    pub fn model_frequencies(&self) -> BTreeMap<ModelIndicator, f64> {
        let mut out = BTreeMap::new();
        let w = 1.0 / self.draws.len().max(1) as f64;
        for d in &self.draws {
            *out.entry(d.state.gamma.clone()).or_insert(0.0) += w;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::{DispersionPrior, VPolicy};

    fn spec(k: usize) -> PriorSpec {
        PriorSpec::new(k, 1, 2, VPolicy::IdentityScale { c: 1.0 }, None).unwrap()
    }

    #[test]
    fn empty_dataset_gives_log_prior() {
        let data = Dataset::empty(3, GlmFamily::Logistic).unwrap();
        let s = spec(3);
        let state = ModelState {
            gamma: ModelIndicator::new(3, vec![1]).unwrap(),
            beta: vec![0.7],
            phi: None,
        };
        let lp = log_unnormalized_posterior(&data, &s, &state).unwrap().value();
        let prior = s.log_prior_model(&state.gamma).unwrap().value()
            + s.log_prior_coeffs(&state.gamma, &state.beta, None).unwrap().total();
        assert_eq!(lp, prior);
    }

    #[test]
    fn zero_row_logistic_adds_ln_half() {
        let data = Dataset::from_rows(3, &[vec![0.0; 3]], vec![1.0], GlmFamily::Logistic).unwrap();
        let s = spec(3);
        let state = ModelState {
            gamma: ModelIndicator::new(3, vec![0, 2]).unwrap(),
            beta: vec![1.3, -0.4],
            phi: None,
        };
        let lp = log_unnormalized_posterior(&data, &s, &state).unwrap().value();
        let empty = Dataset::empty(3, GlmFamily::Logistic).unwrap();
        let prior = log_unnormalized_posterior(&empty, &s, &state).unwrap().value();
        assert!((lp - prior - 0.5f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn concatenation_is_additive() {
        let fam = GlmFamily::Poisson;
        let a = Dataset::from_rows(2, &[vec![0.5, -0.2], vec![1.0, 0.3]], vec![1.0, 4.0], fam).unwrap();
        let b = Dataset::from_rows(2, &[vec![-0.9, 0.1]], vec![0.0], fam).unwrap();
        let s = PriorSpec::new(2, 1, 1, VPolicy::IdentityScale { c: 2.0 }, None).unwrap();
        let state = ModelState {
            gamma: ModelIndicator::new(2, vec![0]).unwrap(),
            beta: vec![0.8],
            phi: None,
        };
        let post = |d: &Dataset| log_unnormalized_posterior(d, &s, &state).unwrap().value();
        let prior = post(&Dataset::empty(2, fam).unwrap());
        let joint = post(&a.concat(&b).unwrap());
        assert!((joint - (post(&a) + post(&b) - prior)).abs() < 1e-12);
    }

    #[test]
    fn excluded_state_propagates() {
        let data = Dataset::empty(3, GlmFamily::Logistic).unwrap();
        let s = PriorSpec::new(3, 1, 1, VPolicy::IdentityScale { c: 1.0 }, None).unwrap();
        let state = ModelState {
            gamma: ModelIndicator::new(3, vec![0, 1]).unwrap(),
            beta: vec![0.0, 0.0],
            phi: None,
        };
        assert_eq!(log_unnormalized_posterior(&data, &s, &state).unwrap(), LogProb::Excluded);
    }

    #[test]
    fn dataset_validation() {
        let fam = GlmFamily::Logistic;
        assert!(Dataset::from_rows(1, &[vec![1.5]], vec![1.0], fam).is_err());
        assert!(Dataset::from_rows(1, &[vec![0.5]], vec![2.0], fam).is_err());
        assert!(Dataset::from_rows(2, &[vec![0.5]], vec![1.0], fam).is_err());
        assert!(Dataset::from_rows(1, &[vec![f64::NAN]], vec![1.0], fam).is_err());
        let data = Dataset::from_rows(1, &[vec![0.5]], vec![1.0], fam).unwrap();
        let with_disp = PriorSpec::new(
            1 + 1,
            1,
            1,
            VPolicy::IdentityScale { c: 1.0 },
            Some(DispersionPrior { shape: 1.0, rate: 1.0 }),
        )
        .unwrap();
        assert!(data.check_prior(&with_disp).is_err());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let data = Dataset::empty(3, GlmFamily::Logistic).unwrap();
        let state = ModelState {
            gamma: ModelIndicator::new(3, vec![0]).unwrap(),
            beta: vec![],
            phi: None,
        };
        assert!(log_unnormalized_posterior(&data, &spec(3), &state).is_err());
    }
}
