//! Hellinger distance between a fitted GLM density p(y, x | γ, β_γ) and the
//! true density p*(y, x), over ν_y(dy)ν_x(dx).
//!
//! Per covariate point the squared distance is 2 − 2·affinity(h*(x), h(x));
//! it is averaged exactly over the support of the indicator design, and by
//! Monte Carlo otherwise. A [`FrozenX`] sample fixes the covariate points so
//! every draw of a chain is evaluated on the same x (common random numbers).

use std::sync::OnceLock;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::glm::{normal_affinity, GlmFamily};
use crate::posterior::{Chain, Dataset, ModelState};

/// Default Monte Carlo sample size over ν_x.
pub const DEFAULT_N_X: usize = 20_000;

/// Covariate law ν_x.
#[derive(Debug, Clone, PartialEq)]
pub enum XLaw {
    /// x = e_j with j uniform on {0..K−1}: exactly one unit entry per row.
    IndicatorDesign,
    /// i.i.d. uniform entries on [−1, 1].
    UniformCube,
    /// x ~ N(0, Θ⁻¹) for a symmetric positive definite precision Θ.
    GaussianGraph { precision: DMatrix<f64> },
}

/// The data-generating model p*(y, x) = f(y, x·β*) ν_x(x).
#[derive(Debug, Clone, PartialEq)]
pub struct TrueModel {
    family: GlmFamily,
    beta_star: Vec<f64>,
    x_law: XLaw,
    dispersion_star: Option<f64>,
    l1_norm: f64,
}

impl TrueModel {
    /// `dispersion_star` is required for (and only allowed with) the
    /// unknown-variance normal family.
    pub fn new(
        family: GlmFamily,
        beta_star: Vec<f64>,
        x_law: XLaw,
        dispersion_star: Option<f64>,
    ) -> Result<Self> {
        family.validate()?;
        family.with_dispersion(dispersion_star)?;
        if beta_star.is_empty() {
            return Err(invalid("beta_star", "needs at least one coordinate"));
        }
        if beta_star.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("beta_star"));
        }
        if let XLaw::GaussianGraph { precision } = &x_law {
            let k = beta_star.len();
            if precision.nrows() != k || precision.ncols() != k {
                return Err(Error::DimensionMismatch {
                    context: "precision matrix",
                    expected: k,
                    got: precision.nrows(),
                });
            }
            if (precision - precision.transpose()).abs().max() > 1e-12 * precision.abs().max() {
                return Err(Error::NotPositiveDefinite("precision matrix is not symmetric"));
            }
            if precision.clone().cholesky().is_none() {
                return Err(Error::NotPositiveDefinite("precision matrix"));
            }
        }
        let l1_norm = beta_star.iter().map(|b| b.abs()).sum();
        Ok(Self {
            family,
            beta_star,
            x_law,
            dispersion_star,
            l1_norm,
        })
    }

    pub fn family(&self) -> GlmFamily {
        self.family
    }

    pub fn beta_star(&self) -> &[f64] {
        &self.beta_star
    }

    pub fn x_law(&self) -> &XLaw {
        &self.x_law
    }

    pub fn dispersion_star(&self) -> Option<f64> {
        self.dispersion_star
    }

    pub fn k(&self) -> usize {
        self.beta_star.len()
    }

    /// Σ|β*_j|.
    pub fn l1_norm(&self) -> f64 {
        self.l1_norm
    }

    /// The true family with any unknown dispersion resolved.
    pub fn concrete_family(&self) -> GlmFamily {
        self.family
            .with_dispersion(self.dispersion_star)
            .expect("validated at construction")
    }

    /// Draws n rows (x, y) from p*. Covariates must be bounded, so the
    /// Gaussian graph law is refused here (see the graphical module).
    pub fn sample_dataset<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Dataset> {
        let k = self.k();
        let x = match self.x_law {
            XLaw::IndicatorDesign => {
                let mut x = DMatrix::zeros(n, k);
                for i in 0..n {
                    x[(i, rng.random_range(0..k))] = 1.0;
                }
                x
            }
            XLaw::UniformCube => {
                let mut x = DMatrix::zeros(n, k);
                for i in 0..n {
                    for j in 0..k {
                        x[(i, j)] = rng.random_range(-1.0..=1.0);
                    }
                }
                x
            }
            XLaw::GaussianGraph { .. } => {
                return Err(invalid(
                    "x_law",
                    "Gaussian covariates are unbounded; use the graphical module's sampler",
                ))
            }
        };
        let fam = self.concrete_family();
        let y = (0..n)
            .map(|i| {
                let h: f64 = self
                    .beta_star
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| **b != 0.0)
                    .map(|(j, b)| x[(i, j)] * b)
                    .sum();
                fam.sample_unchecked(h, rng)
            })
            .collect();
        Dataset::new(x, y, self.family)
    }
}

/// How ν_x is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XSource {
    /// Exact average over the K support points of the indicator design.
    Exact,
    /// Average over `n_x` covariate draws from the stream seeded by `seed`.
    MonteCarlo { n_x: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ExactDiscrete,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HellingerEstimate {
    /// d, clamped to [0, √2].
    pub value: f64,
    /// Estimate of d² (clamped to [0, 2]).
    pub squared: f64,
    /// Standard error of `squared` (sample sd / √n_x); zero when exact.
    pub se_squared: f64,
    /// Delta-method standard error of `value`.
    pub se: f64,
    pub n_x: usize,
    pub method: Method,
}

enum Points {
    /// The K unit vectors, each with weight 1/K.
    Support { k: usize },
    /// Sampled indicator rows, identified by their unit coordinate.
    Indicator { idx: Vec<usize> },
    /// Independent uniform columns, each generated on first use from its own
    /// stream so wide designs are never materialized in full.
    Columns {
        seed: u64,
        cache: Vec<OnceLock<Vec<f64>>>,
    },
    /// Dense correlated sample (n_x × K).
    Dense { x: DMatrix<f64> },
}

/// A fixed set of covariate points together with the true linear predictor
/// on them.
pub struct FrozenX {
    points: Points,
    n: usize,
    h_star: Vec<f64>,
    truth_family: GlmFamily,
    k: usize,
}

fn uniform_column(seed: u64, j: usize, n: usize) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(j as u64);
    (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

impl FrozenX {
    pub fn new(truth: &TrueModel, source: &XSource) -> Result<Self> {
        let k = truth.k();
        let points = match (source, &truth.x_law) {
            (XSource::Exact, XLaw::IndicatorDesign) => Points::Support { k },
            (XSource::Exact, _) => {
                return Err(invalid(
                    "x_source",
                    "exact evaluation needs the discrete indicator design",
                ))
            }
            (XSource::MonteCarlo { n_x, .. }, _) if *n_x == 0 => {
                return Err(invalid("n_x", "need at least one covariate draw"))
            }
            (&XSource::MonteCarlo { n_x, seed }, XLaw::IndicatorDesign) => {
                let mut rng = ChaCha20Rng::seed_from_u64(seed);
                Points::Indicator {
                    idx: (0..n_x).map(|_| rng.random_range(0..k)).collect(),
                }
            }
            (&XSource::MonteCarlo { seed, .. }, XLaw::UniformCube) => Points::Columns {
                seed,
                cache: (0..k).map(|_| OnceLock::new()).collect(),
            },
            (&XSource::MonteCarlo { n_x, seed }, XLaw::GaussianGraph { precision }) => {
                // x = L⁻ᵀz with Θ = LLᵀ has covariance Θ⁻¹
                let mut rng = ChaCha20Rng::seed_from_u64(seed);
                let z = DMatrix::from_fn(k, n_x, |_, _| StandardNormal.sample(&mut rng));
                let l = precision
                    .clone()
                    .cholesky()
                    .ok_or(Error::NotPositiveDefinite("precision matrix"))?
                    .l();
                let xt = l
                    .transpose()
                    .solve_upper_triangular(&z)
                    .ok_or(Error::NotPositiveDefinite("precision factor"))?;
                Points::Dense { x: xt.transpose() }
            }
        };
        let n = match (&points, source) {
            (Points::Support { k }, _) => *k,
            (_, XSource::MonteCarlo { n_x, .. }) => *n_x,
            _ => unreachable!(),
        };
        let mut frozen = Self {
            points,
            n,
            h_star: Vec::new(),
            truth_family: truth.concrete_family(),
            k,
        };
        frozen.h_star = frozen.predictor_streaming(truth.beta_star());
        Ok(frozen)
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.points, Points::Support { .. })
    }

    /// The true linear predictor at every frozen point.
    pub fn true_predictor(&self) -> &[f64] {
        &self.h_star
    }

    /// Full-length coefficient vector; columns that are not cached are
    /// generated, used and dropped.
    fn predictor_streaming(&self, beta_full: &[f64]) -> Vec<f64> {
        match &self.points {
            Points::Columns { seed, cache } => {
                let mut h = vec![0.0; self.n];
                for (j, &b) in beta_full.iter().enumerate() {
                    if b == 0.0 {
                        continue;
                    }
                    let add = |col: &[f64], h: &mut Vec<f64>| {
                        for (hi, x) in h.iter_mut().zip(col) {
                            *hi += x * b;
                        }
                    };
                    match cache[j].get() {
                        Some(col) => add(col, &mut h),
                        None => add(&uniform_column(*seed, j, self.n), &mut h),
                    }
                }
                h
            }
            _ => {
                let idx: Vec<usize> = (0..beta_full.len()).filter(|&j| beta_full[j] != 0.0).collect();
                let coef: Vec<f64> = idx.iter().map(|&j| beta_full[j]).collect();
                self.predictor(&idx, &coef)
            }
        }
    }

    /// h(x) = Σ_j x_j β_j at every frozen point, for included indices `idx`.
    pub fn predictor(&self, idx: &[usize], beta: &[f64]) -> Vec<f64> {
        match &self.points {
            Points::Support { k } => {
                let mut h = vec![0.0; *k];
                for (&j, &b) in idx.iter().zip(beta) {
                    h[j] += b;
                }
                h
            }
            Points::Indicator { idx: rows } => {
                let mut full = vec![0.0; self.k];
                for (&j, &b) in idx.iter().zip(beta) {
                    full[j] += b;
                }
                rows.iter().map(|&j| full[j]).collect()
            }
            Points::Columns { seed, cache } => {
                let mut h = vec![0.0; self.n];
                for (&j, &b) in idx.iter().zip(beta) {
                    let col = cache[j].get_or_init(|| uniform_column(*seed, j, self.n));
                    for (hi, x) in h.iter_mut().zip(col) {
                        *hi += x * b;
                    }
                }
                h
            }
            Points::Dense { x } => {
                let mut h = vec![0.0; self.n];
                for (&j, &b) in idx.iter().zip(beta) {
                    for (hi, x) in h.iter_mut().zip(x.column(j).iter()) {
                        *hi += x * b;
                    }
                }
                h
            }
        }
    }

    /// Summarizes per-point squared distances into an estimate.
    pub(crate) fn estimate(&self, d2: &[f64]) -> HellingerEstimate {
        summarize_d2(d2, self.is_exact())
    }
}

/// Mean of per-point squared distances with its Monte Carlo error.
pub(crate) fn summarize_d2(d2: &[f64], exact: bool) -> HellingerEstimate {
    let n = d2.len() as f64;
    let mean = d2.iter().sum::<f64>() / n;
    let (se_sq, method) = if exact {
        (0.0, Method::ExactDiscrete)
    } else {
        let var = if d2.len() > 1 {
            d2.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        ((var / n).sqrt(), Method::MonteCarlo)
    };
    let squared = mean.clamp(0.0, 2.0);
    let value = squared.sqrt();
    let se = if value > 0.0 {
        se_sq / (2.0 * value)
    } else {
        se_sq.sqrt()
    };
    HellingerEstimate {
        value,
        squared,
        se_squared: se_sq,
        se,
        n_x: d2.len(),
        method,
    }
}

/// Per-point affinity between the truth at h* and a candidate at h; normal
/// pairs with different dispersions use the unequal-variance formula.
pub(crate) fn pair_affinity(truth: &GlmFamily, cand: &GlmFamily, hs: f64, h: f64) -> f64 {
    match (*truth, *cand) {
        (GlmFamily::NormalKnownVar { dispersion: a }, GlmFamily::NormalKnownVar { dispersion: b })
            if a != b =>
        {
            normal_affinity(hs, 1.0 / a, h, 1.0 / b)
        }
        _ => truth.affinity_unchecked(hs, h),
    }
}

/// Concrete candidate family, after checking it is compatible with the truth.
pub(crate) fn candidate_family(truth: &TrueModel, family: GlmFamily, phi: Option<f64>) -> Result<GlmFamily> {
    let compatible = if truth.family.is_normal() {
        family.is_normal()
    } else {
        family == truth.family
    };
    if !compatible {
        return Err(Error::FamilyMismatch {
            truth: truth.family.name(),
            candidate: family.name(),
        });
    }
    family.with_dispersion(phi)
}

fn check_candidate(truth: &TrueModel, candidate: &ModelState) -> Result<()> {
    if candidate.gamma.k() != truth.k() {
        return Err(Error::DimensionMismatch {
            context: "candidate K",
            expected: truth.k(),
            got: candidate.gamma.k(),
        });
    }
    if candidate.beta.len() != candidate.gamma.size() {
        return Err(Error::DimensionMismatch {
            context: "candidate coefficients",
            expected: candidate.gamma.size(),
            got: candidate.beta.len(),
        });
    }
    Ok(())
}

/// d(p, p*) against a frozen covariate sample.
pub fn hellinger_on(
    truth: &TrueModel,
    family: GlmFamily,
    candidate: &ModelState,
    frozen: &FrozenX,
) -> Result<HellingerEstimate> {
    check_candidate(truth, candidate)?;
    let cand = candidate_family(truth, family, candidate.phi)?;
    let h = frozen.predictor(candidate.gamma.included(), &candidate.beta);
    let d2: Vec<f64> = frozen
        .h_star
        .iter()
        .zip(&h)
        .map(|(&hs, &hc)| 2.0 - 2.0 * pair_affinity(&frozen.truth_family, &cand, hs, hc))
        .collect();
    Ok(frozen.estimate(&d2))
}

/// d(p, p*) for one candidate `(γ, β, φ)` of the given family.
pub fn hellinger_distance(
    truth: &TrueModel,
    family: GlmFamily,
    candidate: &ModelState,
    source: &XSource,
) -> Result<HellingerEstimate> {
    let frozen = FrozenX::new(truth, source)?;
    hellinger_on(truth, family, candidate, &frozen)
}

/// Distances for every stored draw of a chain, on one common covariate sample.
pub fn posterior_hellinger(
    chain: &Chain,
    truth: &TrueModel,
    family: GlmFamily,
    source: &XSource,
) -> Result<Vec<HellingerEstimate>> {
    if chain.draws.is_empty() {
        return Err(invalid("chain", "no stored draws"));
    }
    let frozen = FrozenX::new(truth, source)?;
    chain
        .draws
        .iter()
        .map(|d| hellinger_on(truth, family, &d.state, &frozen))
        .collect()
}

/// Fraction of `distances` strictly above ε.
pub fn tail_probability(distances: &[f64], eps: f64) -> f64 {
    if distances.is_empty() {
        return 0.0;
    }
    distances.iter().filter(|&&d| d > eps).count() as f64 / distances.len() as f64
}
