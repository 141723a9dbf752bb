//! Closed-form marginal likelihoods and conditional posteriors for the
//! normal-linear model.
//!
//! Known dispersion φ: β ~ N(0, V), y | β ~ N(Xβ, φ⁻¹I), with
//! A = V⁻¹ + φXᵀX. Unknown dispersion: φ ~ Ga(κ, ρ), β | φ ~ N(0, φ⁻¹V),
//! with A = V⁻¹ + XᵀX and residual S = yᵀy − (Xᵀy)ᵀA⁻¹Xᵀy.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::Dataset;
use crate::error::{Error, Result};
use crate::glm::GlmFamily;
use crate::prior::{DispersionPrior, ModelIndicator, PriorSpec, VPolicy};
use crate::special::{ln_gamma, LN_SQRT_2PI};

/// Designs up to this many columns get a precomputed Gram matrix; wider
/// ones compute the needed block on demand.
const GRAM_LIMIT: usize = 1000;

pub(crate) struct NormalSuffStats<'a> {
    data: &'a Dataset,
    gram: Option<DMatrix<f64>>,
    xty: DVector<f64>,
    yty: f64,
}

/// Precision V⁻¹ and ln det V for the slab at `size`.
fn slab_precision(policy: &VPolicy, size: usize) -> (DMatrix<f64>, f64) {
    match *policy {
        VPolicy::IdentityScale { c } => (
            DMatrix::from_diagonal_element(size, size, 1.0 / c),
            size as f64 * c.ln(),
        ),
        VPolicy::Ar1 { c, rho } => {
            // tridiagonal inverse of the AR(1) correlation matrix
            let d = c * (1.0 - rho * rho);
            let p = DMatrix::from_fn(size, size, |a, b| {
                if a == b {
                    if size == 1 {
                        1.0 / c
                    } else if a == 0 || a == size - 1 {
                        1.0 / d
                    } else {
                        (1.0 + rho * rho) / d
                    }
                } else if a.abs_diff(b) == 1 {
                    -rho / d
                } else {
                    0.0
                }
            });
            let ln_det = size as f64 * c.ln() + (size.saturating_sub(1)) as f64 * (1.0 - rho * rho).ln();
            (p, ln_det)
        }
    }
}

/// Posterior quantities for one model.
pub(crate) struct ConjugateFit {
    pub log_marginal: f64,
    chol: Cholesky<f64, Dyn>,
    mean: DVector<f64>,
    /// Posterior Ga(shape, rate) of φ for the unknown-variance model.
    dispersion_post: Option<(f64, f64)>,
}

impl ConjugateFit {
    /// (β, φ) from the exact conditional posterior given γ.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, Option<f64>) {
        let phi = self.dispersion_post.map(|(shape, rate)| {
            Gamma::new(shape, 1.0 / rate)
                .expect("posterior gamma parameters are positive")
                .sample(rng)
        });
        let s = self.mean.len();
        if s == 0 {
            return (Vec::new(), phi);
        }
        let z = DVector::from_fn(s, |_, _| StandardNormal.sample(rng));
        // A = LLᵀ, so L⁻ᵀz ~ N(0, A⁻¹)
        let u = self
            .chol
            .l()
            .transpose()
            .solve_upper_triangular(&z)
            .expect("triangular factor is nonsingular");
        let scale = phi.map_or(1.0, |p| 1.0 / p.sqrt());
        let beta = self.mean.iter().zip(u.iter()).map(|(m, v)| m + scale * v).collect();
        (beta, phi)
    }
}

impl<'a> NormalSuffStats<'a> {
    pub fn new(data: &'a Dataset) -> Result<Self> {
        if !data.family().is_normal() {
            return Err(Error::UnsupportedFamily(
                data.family().name(),
                "closed-form marginal likelihoods need a normal family",
            ));
        }
        let x = data.x();
        let y = DVector::from_column_slice(data.y());
        let xty = x.tr_mul(&y);
        let gram = (data.k() <= GRAM_LIMIT).then(|| x.tr_mul(x));
        Ok(Self {
            data,
            gram,
            xty,
            yty: y.dot(&y),
        })
    }

    fn gram_block(&self, idx: &[usize]) -> DMatrix<f64> {
        let s = idx.len();
        match &self.gram {
            Some(g) => DMatrix::from_fn(s, s, |a, b| g[(idx[a], idx[b])]),
            None => {
                let x = self.data.x();
                let mut m = DMatrix::zeros(s, s);
                for a in 0..s {
                    for b in a..s {
                        let v = x.column(idx[a]).dot(&x.column(idx[b]));
                        m[(a, b)] = v;
                        m[(b, a)] = v;
                    }
                }
                m
            }
        }
    }

    pub fn fit(&self, spec: &PriorSpec, gamma: &ModelIndicator) -> Result<ConjugateFit> {
        let idx = gamma.included();
        let s = idx.len();
        let n = self.data.n() as f64;
        let (prec, ln_det_v) = slab_precision(spec.v_policy(), s);
        let g = self.gram_block(idx);
        let xty = DVector::from_fn(s, |a, _| self.xty[idx[a]]);
        match (self.data.family(), spec.dispersion()) {
            (GlmFamily::NormalKnownVar { dispersion: phi }, None) => {
                let a = prec + g * phi;
                let chol = Cholesky::new(a).ok_or(Error::NotPositiveDefinite("posterior precision"))?;
                let b = xty * phi;
                let mean = chol.solve(&b);
                let ln_det_a = ln_det(&chol);
                let log_marginal = 0.5 * n * phi.ln() - n * LN_SQRT_2PI - 0.5 * phi * self.yty
                    - 0.5 * ln_det_v
                    - 0.5 * ln_det_a
                    + 0.5 * b.dot(&mean);
                Ok(ConjugateFit {
                    log_marginal,
                    chol,
                    mean,
                    dispersion_post: None,
                })
            }
            (GlmFamily::NormalUnknownVar, Some(&DispersionPrior { shape, rate })) => {
                let a = prec + g;
                let chol = Cholesky::new(a).ok_or(Error::NotPositiveDefinite("posterior precision"))?;
                let mean = chol.solve(&xty);
                let resid = (self.yty - xty.dot(&mean)).max(0.0);
                let ln_det_a = ln_det(&chol);
                let post_shape = shape + 0.5 * n;
                let post_rate = rate + 0.5 * resid;
                let log_marginal = -n * LN_SQRT_2PI - 0.5 * ln_det_v - 0.5 * ln_det_a
                    + shape * rate.ln()
                    - ln_gamma(shape)
                    + ln_gamma(post_shape)
                    - post_shape * post_rate.ln();
                Ok(ConjugateFit {
                    log_marginal,
                    chol,
                    mean,
                    dispersion_post: Some((post_shape, post_rate)),
                })
            }
            _ => {
                self.data.check_prior(spec)?;
                unreachable!("check_prior rejects every other combination")
            }
        }
    }
}

fn ln_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// ln ∫ Π_i f(y_i, x_{iγ}ᵀβ) dπ(β[, φ] | γ) in closed form for normal families.
pub fn conjugate_log_marginal(data: &Dataset, spec: &PriorSpec, gamma: &ModelIndicator) -> Result<f64> {
    let stats = NormalSuffStats::new(data)?;
    data.check_prior(spec)?;
    if gamma.k() != data.k() {
        return Err(Error::DimensionMismatch {
            context: "model indicator K",
            expected: data.k(),
            got: gamma.k(),
        });
    }
    Ok(stats.fit(spec, gamma)?.log_marginal)
}
