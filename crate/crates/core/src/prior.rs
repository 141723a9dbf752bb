//! Truncated Bernoulli model prior with a Gaussian coefficient slab.
//!
//! Model indicators are drawn as i.i.d. Bernoulli(λ) flags with
//! λ = r_exp / K and conditioned on |γ| ≤ r_max. Given γ the included
//! coefficients are N(0, V_γ), or N(0, φ⁻¹V_γ) with φ ~ Ga(κ, ρ) when a
//! dispersion prior is configured.

use std::fmt;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::special::{ln_binomial, ln_gamma, log_sum_exp, LN_SQRT_2PI};

/// Sorted set of included covariate indices (0-based) out of `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModelIndicator {
    included: Vec<usize>,
    k: usize,
}

impl ModelIndicator {
    pub fn empty(k: usize) -> Self {
        Self {
            included: Vec::new(),
            k,
        }
    }

    pub fn new(k: usize, mut included: Vec<usize>) -> Result<Self> {
        included.sort_unstable();
        if included.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidModel(format!("duplicate index in {included:?}")));
        }
        if let Some(&last) = included.last() {
            if last >= k {
                return Err(Error::InvalidModel(format!(
                    "index {last} out of range for K = {k}"
                )));
            }
        }
        Ok(Self { included, k })
    }

    /// Model from a 0/1 flag vector.
    pub fn from_flags(flags: &[bool]) -> Self {
        Self {
            included: flags
                .iter()
                .enumerate()
                .filter_map(|(j, &f)| f.then_some(j))
                .collect(),
            k: flags.len(),
        }
    }

    pub fn included(&self) -> &[usize] {
        &self.included
    }

    pub fn size(&self) -> usize {
        self.included.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn contains(&self, j: usize) -> bool {
        self.included.binary_search(&j).is_ok()
    }

    /// Position of `j` within the sorted included set.
    pub fn position(&self, j: usize) -> Option<usize> {
        self.included.binary_search(&j).ok()
    }

    /// Insert `j`; returns the position it landed at.
    pub(crate) fn insert(&mut self, j: usize) -> usize {
        match self.included.binary_search(&j) {
            Ok(p) => p,
            Err(p) => {
                self.included.insert(p, j);
                p
            }
        }
    }

    pub(crate) fn remove_at(&mut self, pos: usize) -> usize {
        self.included.remove(pos)
    }

    /// Indices not in the model, in increasing order.
    pub fn excluded(&self) -> impl Iterator<Item = usize> + '_ {
        let mut it = self.included.iter().peekable();
        (0..self.k).filter(move |j| {
            while let Some(&&i) = it.peek() {
                if i < *j {
                    it.next();
                } else {
                    break;
                }
            }
            it.peek() != Some(&j)
        })
    }

    /// Every subset of {0..k} with at most `max_size` elements, in
    /// size-then-lexicographic order.
    pub fn enumerate(k: usize, max_size: usize) -> Vec<ModelIndicator> {
        let mut out = Vec::new();
        let mut current = Vec::new();
        for size in 0..=max_size.min(k) {
            combos(k, size, 0, &mut current, &mut out);
        }
        out.into_iter()
            .map(|included| ModelIndicator { included, k })
            .collect()
    }
}

fn combos(k: usize, size: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == size {
        out.push(cur.clone());
        return;
    }
    for j in start..k {
        if k - j < size - cur.len() {
            break;
        }
        cur.push(j);
        combos(k, size, j + 1, cur, out);
        cur.pop();
    }
}

impl fmt::Display for ModelIndicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, j) in self.included.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{j}")?;
        }
        write!(f, "}}")
    }
}

/// A log probability that is either finite or exactly −∞ because the state
/// lies outside the prior support. Samplers treat `Excluded` as a hard
/// rejection, never as a numeric underflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogProb {
    Finite(f64),
    Excluded,
}

impl LogProb {
    pub fn value(self) -> f64 {
        match self {
            LogProb::Finite(v) => v,
            LogProb::Excluded => f64::NEG_INFINITY,
        }
    }

    pub fn is_excluded(self) -> bool {
        matches!(self, LogProb::Excluded)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            LogProb::Finite(v) => Some(v),
            LogProb::Excluded => None,
        }
    }

    pub fn add(self, v: f64) -> LogProb {
        match self {
            LogProb::Finite(a) => LogProb::Finite(a + v),
            LogProb::Excluded => LogProb::Excluded,
        }
    }
}

/// Slab covariance family V_γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum VPolicy {
    /// V_γ = c·I.
    IdentityScale { c: f64 },
    /// V_γ = c·(ρ^{|a−b|}) over positions a, b of the included indices in
    /// increasing index order.
    Ar1 { c: f64, rho: f64 },
}

impl VPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            VPolicy::IdentityScale { c } if !(c.is_finite() && c > 0.0) => {
                Err(invalid("v_policy.c", format!("must be positive, got {c}")))
            }
            VPolicy::Ar1 { c, .. } if !(c.is_finite() && c > 0.0) => {
                Err(invalid("v_policy.c", format!("must be positive, got {c}")))
            }
            VPolicy::Ar1 { rho, .. } if !(rho > -1.0 && rho < 1.0) => {
                Err(invalid("v_policy.rho", format!("must lie in (−1, 1), got {rho}")))
            }
            _ => Ok(()),
        }
    }

    pub fn scale(&self) -> f64 {
        match *self {
            VPolicy::IdentityScale { c } | VPolicy::Ar1 { c, .. } => c,
        }
    }

    pub fn covariance(&self, size: usize) -> DMatrix<f64> {
        match *self {
            VPolicy::IdentityScale { c } => DMatrix::from_diagonal_element(size, size, c),
            VPolicy::Ar1 { c, rho } => DMatrix::from_fn(size, size, |a, b| {
                c * rho.powi((a as i32 - b as i32).abs())
            }),
        }
    }

    /// (ch₁(V), ch₁(V⁻¹), H = max of the two) at the given model size.
    pub fn bounds(&self, size: usize) -> EigenSummary {
        let (ch1_v, ch1_vinv) = match *self {
            VPolicy::IdentityScale { c } => (c, 1.0 / c),
            VPolicy::Ar1 { .. } if size == 0 => (0.0, 0.0),
            VPolicy::Ar1 { .. } => {
                let eig = SymmetricEigen::new(self.covariance(size)).eigenvalues;
                let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
                (max, 1.0 / min)
            }
        };
        EigenSummary {
            ch1_v,
            ch1_vinv,
            h: ch1_v.max(ch1_vinv),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSummary {
    pub ch1_v: f64,
    pub ch1_vinv: f64,
    pub h: f64,
}

/// Gamma prior Ga(shape κ, rate ρ) on the dispersion φ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionPrior {
    pub shape: f64,
    pub rate: f64,
}

impl DispersionPrior {
    pub fn log_density(&self, phi: f64) -> f64 {
        self.shape * self.rate.ln() - ln_gamma(self.shape) + (self.shape - 1.0) * phi.ln()
            - self.rate * phi
    }
}

/// User-declared polynomial eigenvalue bound H(size) ≤ B·size^v.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenBound {
    pub b: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    k: usize,
    r_exp: usize,
    r_max: usize,
    v_policy: VPolicy,
    dispersion: Option<DispersionPrior>,
    eigen_bound: Option<EigenBound>,
}

/// Log slab density split into its coefficient and dispersion parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffLogPrior {
    pub slab: f64,
    pub dispersion: f64,
}

impl CoeffLogPrior {
    pub fn total(&self) -> f64 {
        self.slab + self.dispersion
    }
}

impl PriorSpec {
    pub fn new(
        k: usize,
        r_exp: usize,
        r_max: usize,
        v_policy: VPolicy,
        dispersion: Option<DispersionPrior>,
    ) -> Result<Self> {
        if r_exp < 1 {
            return Err(invalid("r_exp", "must be at least 1"));
        }
        if r_exp > r_max {
            return Err(invalid("r_exp", format!("r_exp = {r_exp} exceeds r_max = {r_max}")));
        }
        if r_max >= k {
            return Err(invalid("r_max", format!("r_max = {r_max} must be below K = {k}")));
        }
        v_policy.validate()?;
        if let Some(d) = dispersion {
            if !(d.shape > 0.0 && d.rate > 0.0 && d.shape.is_finite() && d.rate.is_finite()) {
                return Err(invalid("dispersion", "shape and rate must be positive"));
            }
        }
        Ok(Self {
            k,
            r_exp,
            r_max,
            v_policy,
            dispersion,
            eigen_bound: None,
        })
    }

    pub fn with_eigen_bound(mut self, bound: EigenBound) -> Self {
        self.eigen_bound = Some(bound);
        self
    }

    pub fn k(&self) -> usize {
        self.k
    }
    pub fn r_exp(&self) -> usize {
        self.r_exp
    }
    pub fn r_max(&self) -> usize {
        self.r_max
    }
    pub fn v_policy(&self) -> &VPolicy {
        &self.v_policy
    }
    pub fn dispersion(&self) -> Option<&DispersionPrior> {
        self.dispersion.as_ref()
    }
    pub fn eigen_bound(&self) -> Option<&EigenBound> {
        self.eigen_bound.as_ref()
    }

    /// λ = r_exp / K.
    pub fn inclusion_rate(&self) -> f64 {
        self.r_exp as f64 / self.k as f64
    }

    fn check_model(&self, gamma: &ModelIndicator) -> Result<()> {
        if gamma.k() != self.k {
            return Err(Error::DimensionMismatch {
                context: "model indicator K",
                expected: self.k,
                got: gamma.k(),
            });
        }
        Ok(())
    }

    /// ln π(γ), normalized over the truncated support.
    pub fn log_prior_model(&self, gamma: &ModelIndicator) -> Result<LogProb> {
        self.check_model(gamma)?;
        if gamma.size() > self.r_max {
            return Ok(LogProb::Excluded);
        }
        let lambda = self.inclusion_rate();
        let s = gamma.size() as f64;
        let ln_z = log_truncation_constant(self.k as f64, lambda, self.r_max);
        Ok(LogProb::Finite(
            s * lambda.ln() + (self.k as f64 - s) * (-lambda).ln_1p() - ln_z,
        ))
    }

    /// Log density of β_γ under the slab, plus the gamma log density of φ
    /// when a dispersion prior is configured.
    pub fn log_prior_coeffs(
        &self,
        gamma: &ModelIndicator,
        beta: &[f64],
        phi: Option<f64>,
    ) -> Result<CoeffLogPrior> {
        self.check_model(gamma)?;
        if beta.len() != gamma.size() {
            return Err(Error::DimensionMismatch {
                context: "coefficient vector",
                expected: gamma.size(),
                got: beta.len(),
            });
        }
        let phi_factor = match (self.dispersion, phi) {
            (Some(_), Some(p)) if p > 0.0 && p.is_finite() => p,
            (Some(_), _) => {
                return Err(invalid("phi", "a positive dispersion is required by the prior"))
            }
            (None, None) => 1.0,
            (None, Some(_)) => {
                return Err(invalid("phi", "prior has no dispersion component"))
            }
        };
        let slab = gaussian_slab_log_density(&self.v_policy, beta, phi_factor);
        let dispersion = match (self.dispersion, phi) {
            (Some(d), Some(p)) => d.log_density(p),
            _ => 0.0,
        };
        Ok(CoeffLogPrior { slab, dispersion })
    }

    pub fn v_policy_bounds(&self, size: usize) -> Result<EigenSummary> {
        if size < 1 || size > self.k {
            return Err(invalid("size", format!("must lie in [1, {}], got {size}", self.k)));
        }
        Ok(self.v_policy.bounds(size))
    }

    /// Checks H(size) ≤ B·size^v for every size up to r_max when a bound is declared.
    pub fn check_eigen_bound(&self) -> Result<()> {
        let Some(bound) = self.eigen_bound else {
            return Ok(());
        };
        for size in 1..=self.r_max {
            let h = self.v_policy.bounds(size).h;
            let cap = bound.b * (size as f64).powf(bound.v);
            if h > cap * (1.0 + 1e-12) {
                return Err(invalid(
                    "eigen_bound",
                    format!("H({size}) = {h} exceeds B·size^v = {cap}"),
                ));
            }
        }
        Ok(())
    }

    /// Draws (γ, β_γ, φ) from the prior: γ by rejection of i.i.d. Bernoulli
    /// vectors with more than r_max flags, then φ, then β_γ.
    pub fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> PriorDraw {
        let lambda = self.inclusion_rate();
        let gamma = loop {
            let flags: Vec<bool> = (0..self.k).map(|_| rng.random::<f64>() < lambda).collect();
            if flags.iter().filter(|&&f| f).count() <= self.r_max {
                break ModelIndicator::from_flags(&flags);
            }
        };
        let phi = self.dispersion.map(|d| {
            Gamma::new(d.shape, 1.0 / d.rate)
                .expect("validated gamma parameters")
                .sample(rng)
        });
        let beta = self.sample_slab(gamma.size(), phi.unwrap_or(1.0), rng);
        PriorDraw { gamma, beta, phi }
    }

    /// β ~ N(0, φ⁻¹ V) at the given size.
    pub fn sample_slab<R: Rng + ?Sized>(&self, size: usize, phi: f64, rng: &mut R) -> Vec<f64> {
        if size == 0 {
            return Vec::new();
        }
        let z = DVector::from_fn(size, |_, _| StandardNormal.sample(rng));
        match self.v_policy {
            VPolicy::IdentityScale { c } => {
                let s = (c / phi).sqrt();
                z.iter().map(|v| v * s).collect()
            }
            VPolicy::Ar1 { .. } => {
                let chol = slab_cholesky(&self.v_policy, size);
                let b = chol.l() * z / phi.sqrt();
                b.iter().copied().collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorDraw {
    pub gamma: ModelIndicator,
    pub beta: Vec<f64>,
    pub phi: Option<f64>,
}

/// ln Σ_{r=0}^{r_max} C(K,r) λ^r (1−λ)^{K−r}, the probability that an
/// untruncated Bernoulli(λ) vector has at most r_max flags. `k` may exceed
/// the range of exact integers.
pub fn log_truncation_constant(k: f64, lambda: f64, r_max: usize) -> f64 {
    let ln_l = lambda.ln();
    let ln_1ml = (-lambda).ln_1p();
    let r_top = (r_max as f64).min(k) as usize;
    let terms: Vec<f64> = (0..=r_top)
        .map(|r| ln_binomial(k, r) + r as f64 * ln_l + (k - r as f64) * ln_1ml)
        .collect();
    log_sum_exp(&terms).min(0.0)
}

pub(crate) fn slab_cholesky(policy: &VPolicy, size: usize) -> Cholesky<f64, Dyn> {
    Cholesky::new(policy.covariance(size)).expect("slab covariance is positive definite")
}

/// ln N(β; 0, φ⁻¹ V_size).
pub(crate) fn gaussian_slab_log_density(policy: &VPolicy, beta: &[f64], phi: f64) -> f64 {
    let s = beta.len();
    if s == 0 {
        return 0.0;
    }
    let sf = s as f64;
    match *policy {
        VPolicy::IdentityScale { c } => {
            let var = c / phi;
            let ss: f64 = beta.iter().map(|b| b * b).sum();
            -sf * LN_SQRT_2PI - 0.5 * sf * var.ln() - 0.5 * ss / var
        }
        VPolicy::Ar1 { .. } => {
            let chol = slab_cholesky(policy, s);
            let ln_det_v: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            let b = DVector::from_column_slice(beta);
            let sol = chol.solve(&b);
            let quad = b.dot(&sol) * phi;
            -sf * LN_SQRT_2PI - 0.5 * (ln_det_v - sf * phi.ln()) - 0.5 * quad
        }
    }
}

/// Conditional law N(mean, var) of the coefficient at `pos` given the other
/// coefficients `others` (in order, with `pos` removed), under N(0, φ⁻¹V_size).
pub(crate) fn slab_conditional(
    policy: &VPolicy,
    size: usize,
    pos: usize,
    others: &[f64],
    phi: f64,
) -> (f64, f64) {
    match *policy {
        VPolicy::IdentityScale { c } => (0.0, c / phi),
        VPolicy::Ar1 { .. } => {
            let v = policy.covariance(size);
            if size == 1 {
                return (0.0, v[(0, 0)] / phi);
            }
            let idx: Vec<usize> = (0..size).filter(|&i| i != pos).collect();
            let v_oo = DMatrix::from_fn(size - 1, size - 1, |a, b| v[(idx[a], idx[b])]);
            let v_po = DVector::from_fn(size - 1, |a, _| v[(pos, idx[a])]);
            let chol = Cholesky::new(v_oo).expect("slab covariance positive definite");
            let w = chol.solve(&v_po);
            let mean = w.dot(&DVector::from_column_slice(others));
            let var = (v[(pos, pos)] - v_po.dot(&w)) / phi;
            (mean, var)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn spec(k: usize, r: usize, rmax: usize) -> PriorSpec {
        PriorSpec::new(k, r, rmax, VPolicy::IdentityScale { c: 1.0 }, None).unwrap()
    }

    #[test]
    fn model_prior_examples() {
        // K=3, r_max=3 would violate r_max < K; r_max=2 still admits {0}
        // with the truncation constant 1 − (1/3)^3 = 26/27.
        let s = spec(3, 1, 2);
        let g = ModelIndicator::new(3, vec![0]).unwrap();
        let lp = s.log_prior_model(&g).unwrap().value();
        assert!((lp - (4.0f64 / 27.0 / (26.0 / 27.0)).ln()).abs() < 1e-14);

        let s = spec(3, 1, 1);
        let lp = s.log_prior_model(&g).unwrap().value();
        assert!((lp - 0.2f64.ln()).abs() < 1e-14);
        let g2 = ModelIndicator::new(3, vec![0, 1]).unwrap();
        assert_eq!(s.log_prior_model(&g2).unwrap(), LogProb::Excluded);
    }

    #[test]
    fn untruncated_product_when_cap_is_loose() {
        // K=3, r_exp=1: (1/3)(2/3)^2 = 4/27 once truncation removes no mass.
        let z = log_truncation_constant(3.0, 1.0 / 3.0, 3);
        assert!(z.abs() < 1e-15);
        let lp = (1.0f64 / 3.0).ln() + 2.0 * (2.0f64 / 3.0).ln() - z;
        assert!((lp + 1.909_542_504_884_438_6).abs() < 1e-12);
    }

    #[test]
    fn invalid_models_are_rejected() {
        assert!(ModelIndicator::new(3, vec![0, 0]).is_err());
        assert!(ModelIndicator::new(3, vec![3]).is_err());
        let s = spec(4, 1, 2);
        assert!(s.log_prior_model(&ModelIndicator::empty(5)).is_err());
        assert!(PriorSpec::new(3, 2, 1, VPolicy::IdentityScale { c: 1.0 }, None).is_err());
        assert!(PriorSpec::new(3, 1, 3, VPolicy::IdentityScale { c: 1.0 }, None).is_err());
        assert!(PriorSpec::new(3, 0, 1, VPolicy::IdentityScale { c: 1.0 }, None).is_err());
    }

    #[test]
    fn excluded_iterates_complement() {
        let g = ModelIndicator::new(6, vec![1, 4]).unwrap();
        assert_eq!(g.excluded().collect::<Vec<_>>(), vec![0, 2, 3, 5]);
        assert_eq!(ModelIndicator::enumerate(4, 2).len(), 1 + 4 + 6);
    }

    #[test]
    fn coefficient_prior_examples() {
        let s = spec(3, 1, 2);
        let g = ModelIndicator::new(3, vec![0]).unwrap();
        let lp = s.log_prior_coeffs(&g, &[0.0], None).unwrap();
        assert!((lp.total() + 0.918_938_533_204_672_7).abs() < 1e-14);
        assert!(s.log_prior_coeffs(&g, &[0.0, 1.0], None).is_err());

        let d = PriorSpec::new(
            3,
            1,
            2,
            VPolicy::IdentityScale { c: 1.0 },
            Some(DispersionPrior { shape: 2.0, rate: 1.0 }),
        )
        .unwrap();
        let lp = d.log_prior_coeffs(&g, &[0.0], Some(4.0)).unwrap();
        assert!((lp.slab + 0.5 * (std::f64::consts::PI / 2.0).ln()).abs() < 1e-14);
        // Ga(2,1) at 4: ln(4 e^{-4})
        assert!((lp.dispersion - (4.0f64.ln() - 4.0)).abs() < 1e-14);
        assert!(d.log_prior_coeffs(&g, &[0.0], None).is_err());
    }

    #[test]
    fn ar1_log_determinant() {
        let p = VPolicy::Ar1 { c: 1.0, rho: 0.5 };
        // at β = 0 the density is (2π)^{-1} det(V)^{-1/2}
        let lp = gaussian_slab_log_density(&p, &[0.0, 0.0], 1.0);
        let expected = -(2.0 * std::f64::consts::PI).ln() - 0.5 * 0.75f64.ln();
        assert!((lp - expected).abs() < 1e-14);
    }

    #[test]
    fn bounds_examples() {
        let s = spec(10, 1, 8);
        let b = s.v_policy_bounds(3).unwrap();
        assert_eq!((b.ch1_v, b.ch1_vinv, b.h), (1.0, 1.0, 1.0));
        let b = VPolicy::IdentityScale { c: 4.0 }.bounds(7);
        assert_eq!((b.ch1_v, b.ch1_vinv, b.h), (4.0, 0.25, 4.0));
        let b = VPolicy::Ar1 { c: 1.0, rho: 0.5 }.bounds(2);
        assert!((b.ch1_v - 1.5).abs() < 1e-12);
        assert!((b.h - 2.0).abs() < 1e-12);
        assert!(s.v_policy_bounds(0).is_err());
        assert!(s.v_policy_bounds(11).is_err());
    }

    #[test]
    fn eigen_bound_declaration() {
        let s = PriorSpec::new(20, 2, 10, VPolicy::Ar1 { c: 1.0, rho: 0.5 }, None).unwrap();
        // AR1 eigenvalues stay within [(1−ρ)/(1+ρ), (1+ρ)/(1−ρ)]: H ≤ 3
        assert!(s.clone().with_eigen_bound(EigenBound { b: 3.0, v: 0.0 }).check_eigen_bound().is_ok());
        assert!(s.with_eigen_bound(EigenBound { b: 1.5, v: 0.0 }).check_eigen_bound().is_err());
    }

    #[test]
    fn conditional_matches_schur_complement() {
        let p = VPolicy::Ar1 { c: 2.0, rho: 0.6 };
        // middle of three: neighbours at lag 1 on both sides
        let (m, v) = slab_conditional(&p, 3, 1, &[1.0, -0.5], 1.0);
        let v3 = p.covariance(3);
        let v_oo = DMatrix::from_row_slice(2, 2, &[v3[(0, 0)], v3[(0, 2)], v3[(2, 0)], v3[(2, 2)]]);
        let v_po = DVector::from_row_slice(&[v3[(1, 0)], v3[(1, 2)]]);
        let inv = v_oo.try_inverse().unwrap();
        let expect_m = (v_po.transpose() * &inv * DVector::from_row_slice(&[1.0, -0.5]))[0];
        let expect_v = v3[(1, 1)] - (v_po.transpose() * inv * &v_po)[0];
        assert!((m - expect_m).abs() < 1e-12 && (v - expect_v).abs() < 1e-12);
    }

    #[test]
    fn sampling_follows_truncated_law() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let s = spec(3, 1, 1);
        let n = 100_000;
        let target = ModelIndicator::new(3, vec![0]).unwrap();
        let hits = (0..n).filter(|_| s.sample_prior(&mut rng).gamma == target).count();
        let p = hits as f64 / n as f64;
        assert!((p - 0.2).abs() < 3.0 * (0.2f64 * 0.8 / n as f64).sqrt());

        let s = PriorSpec::new(100, 5, 99, VPolicy::IdentityScale { c: 1.0 }, None).unwrap();
        let sizes: Vec<f64> = (0..n).map(|_| s.sample_prior(&mut rng).gamma.size() as f64).collect();
        let mean = sizes.iter().sum::<f64>() / n as f64;
        let se = (5.0f64 * 0.95 / n as f64).sqrt();
        assert!((mean - 5.0).abs() < 3.0 * se);
    }

    #[test]
    fn slab_covariance_matches_policy() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let s = PriorSpec::new(5, 1, 3, VPolicy::IdentityScale { c: 2.0 }, None).unwrap();
        let n = 100_000;
        let mut acc = [0.0; 3];
        for _ in 0..n {
            let b = s.sample_slab(2, 1.0, &mut rng);
            acc[0] += b[0] * b[0];
            acc[1] += b[1] * b[1];
            acc[2] += b[0] * b[1];
        }
        let c: Vec<f64> = acc.iter().map(|a| a / n as f64).collect();
        assert!((c[0] / 2.0 - 1.0).abs() < 0.05 && (c[1] / 2.0 - 1.0).abs() < 0.05);
        assert!(c[2].abs() < 0.05 * 2.0);
    }
}
