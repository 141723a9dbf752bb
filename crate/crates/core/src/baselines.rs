//! The no-selection counterexample and full-model baselines.
//!
//! With an indicator design (each row has a single unit entry at a uniformly
//! chosen column), pure-noise responses and an i.i.d. N(0, 1) prior on all K
//! coefficients, the full-model posterior is independent per coordinate and
//! the Hellinger distance has the closed form
//! d² = (2/K) Σ_j (1 − e^{−β_j²/8}). When K = 2n most coordinates are
//! never observed, so the posterior stays far from the truth.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::glm::GlmFamily;
use crate::hellinger::{TrueModel, XLaw};
use crate::posterior::Dataset;
use crate::summary;

/// η = 1/2 − 1/√5.
pub fn eta() -> f64 {
    0.5 - 1.0 / 5f64.sqrt()
}

/// Lower bound 1 − 1/(η²n) on π[d ≥ √η | Dⁿ].
pub fn chebyshev_bound(n: usize) -> f64 {
    1.0 - 1.0 / (eta() * eta() * n as f64)
}

/// Largest K accepted by the dense full-model solver.
pub const MAX_DENSE_K: usize = 5000;

/// Indicator-design rows with y i.i.d. N(0, 1), independent of x.
pub fn simulate_counterexample<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Dataset> {
    if k < 1 {
        return Err(invalid("K", "must be at least 1"));
    }
    let truth = TrueModel::new(
        GlmFamily::NormalKnownVar { dispersion: 1.0 },
        vec![0.0; k],
        XLaw::IndicatorDesign,
        None,
    )?;
    truth.sample_dataset(n, rng)
}

/// Exact per-coordinate posterior (mean, variance) under an i.i.d. N(0, 1)
/// prior on every coefficient, for an indicator design.
pub fn full_model_posterior(data: &Dataset) -> Result<Vec<(f64, f64)>> {
    let GlmFamily::NormalKnownVar { dispersion: phi } = data.family() else {
        return Err(Error::UnsupportedFamily(
            data.family().name(),
            "the counterexample posterior needs a known-variance normal response",
        ));
    };
    let k = data.k();
    let mut counts = vec![0.0; k];
    let mut sums = vec![0.0; k];
    let x = data.x();
    for i in 0..data.n() {
        // each row must be a unit vector
        let mut hit = None;
        for j in 0..k {
            let v = x[(i, j)];
            if v == 1.0 && hit.is_none() {
                hit = Some(j);
            } else if v != 0.0 {
                return Err(invalid("x", format!("row {i} is not an indicator row")));
            }
        }
        let j = hit.ok_or_else(|| invalid("x", format!("row {i} is not an indicator row")))?;
        counts[j] += 1.0;
        sums[j] += data.y()[i];
    }
    Ok(counts
        .iter()
        .zip(&sums)
        .map(|(&m, &s)| {
            let prec = 1.0 + phi * m;
            (phi * s / prec, 1.0 / prec)
        })
        .collect())
}

/// d² = (2/K) Σ_j (1 − e^{−β_j²/8}) against the zero truth.
pub fn indicator_squared_distance(beta: &[f64]) -> f64 {
    let k = beta.len() as f64;
    2.0 / k * beta.iter().map(|b| -(-b * b / 8.0).exp_m1()).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleRun {
    pub n: usize,
    pub k: usize,
    pub posterior: Vec<(f64, f64)>,
    pub d2_mean: f64,
    pub d2_median: f64,
    /// Fraction of posterior draws with d ≥ √η.
    pub empirical_tail: f64,
    pub bound: f64,
    /// Binomial standard error of the tail fraction at the bound.
    pub se: f64,
    /// η²n ≤ 1: the bound says nothing and the check passes trivially.
    pub vacuous: bool,
    pub pass: bool,
}

/// Simulates one data set, samples the exact full-model posterior `draws`
/// times and compares the tail fraction with the Chebyshev bound.
pub fn run_counterexample<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    draws: usize,
    rng: &mut R,
) -> Result<CounterexampleRun> {
    if draws == 0 {
        return Err(invalid("posterior_draws", "must be positive"));
    }
    let data = simulate_counterexample(n, k, rng)?;
    let posterior = full_model_posterior(&data)?;
    let sds: Vec<(f64, f64)> = posterior.iter().map(|&(m, v)| (m, v.sqrt())).collect();
    let eta = eta();
    let mut d2s = Vec::with_capacity(draws);
    let mut beta = vec![0.0; k];
    for _ in 0..draws {
        for (b, &(m, s)) in beta.iter_mut().zip(&sds) {
            let z: f64 = StandardNormal.sample(rng);
            *b = m + s * z;
        }
        d2s.push(indicator_squared_distance(&beta));
    }
    let empirical_tail = d2s.iter().filter(|&&d2| d2 >= eta).count() as f64 / draws as f64;
    let bound = chebyshev_bound(n);
    let vacuous = eta * eta * n as f64 <= 1.0;
    let se = if vacuous {
        0.0
    } else {
        (bound * (1.0 - bound) / draws as f64).sqrt()
    };
    let pass = vacuous || empirical_tail >= bound - 3.0 * se;
    Ok(CounterexampleRun {
        n,
        k,
        posterior,
        d2_mean: summary::mean(&d2s),
        d2_median: summary::median(&d2s),
        empirical_tail,
        bound,
        se,
        vacuous,
        pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChebyshevCheck {
    pub empirical_tail: f64,
    pub bound: f64,
    pub pass: bool,
}

/// The counterexample check at K = 2n with at least 10⁴ posterior draws.
pub fn chebyshev_check<R: Rng + ?Sized>(n: usize, posterior_draws: usize, rng: &mut R) -> Result<ChebyshevCheck> {
    if posterior_draws < 10_000 {
        return Err(invalid("posterior_draws", "need at least 10^4 draws"));
    }
    let run = run_counterexample(n, 2 * n, posterior_draws, rng)?;
    Ok(ChebyshevCheck {
        empirical_tail: run.empirical_tail,
        bound: run.bound,
        pass: run.pass,
    })
}

/// Exact N(mean, A⁻¹) posterior of the untruncated full model with prior
/// β ~ N(0, c·I): A = I/c + φXᵀX.
#[derive(Debug, Clone)]
pub struct FullModelPosterior {
    mean: DVector<f64>,
    chol: Cholesky<f64, nalgebra::Dyn>,
}

impl FullModelPosterior {
    pub fn new(data: &Dataset, slab_scale: f64) -> Result<Self> {
        let GlmFamily::NormalKnownVar { dispersion: phi } = data.family() else {
            return Err(Error::UnsupportedFamily(
                data.family().name(),
                "the full-model baseline needs a known-variance normal response",
            ));
        };
        if !(slab_scale.is_finite() && slab_scale > 0.0) {
            return Err(invalid("slab_scale", "must be positive"));
        }
        let k = data.k();
        if k > MAX_DENSE_K {
            return Err(Error::SizeGuard(format!(
                "dense full-model solve needs K ≤ {MAX_DENSE_K}, got {k}"
            )));
        }
        let x = data.x();
        let y = DVector::from_column_slice(data.y());
        let mut a = x.tr_mul(x) * phi;
        for j in 0..k {
            a[(j, j)] += 1.0 / slab_scale;
        }
        let chol = Cholesky::new(a).ok_or(Error::NotPositiveDefinite("full-model precision"))?;
        let mean = chol.solve(&(x.tr_mul(&y) * phi));
        Ok(Self { mean, chol })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn precision(&self) -> DMatrix<f64> {
        let l = self.chol.l();
        &l * l.transpose()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let k = self.mean.len();
        let z = DVector::from_fn(k, |_, _| StandardNormal.sample(rng));
        let u = self
            .chol
            .l()
            .transpose()
            .solve_upper_triangular(&z)
            .expect("Cholesky factor is nonsingular");
        (&self.mean + u).iter().copied().collect()
    }
}

/// `draws` exact posterior draws of all K coefficients with no selection.
pub fn full_model_normal_baseline<R: Rng + ?Sized>(
    data: &Dataset,
    slab_scale: f64,
    rng: &mut R,
    draws: usize,
) -> Result<Vec<Vec<f64>>> {
    let post = FullModelPosterior::new(data, slab_scale)?;
    Ok((0..draws).map(|_| post.sample(rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn eta_and_bounds() {
        assert!((eta() - 0.052_786_404_500_042_06).abs() < 1e-15);
        let b1000 = chebyshev_bound(1000);
        let b4000 = chebyshev_bound(4000);
        assert!((b1000 - (1.0 - 1.0 / (eta() * eta() * 1000.0))).abs() < 1e-15);
        assert!((b1000 - 0.64115).abs() < 1e-4);
        assert!((b4000 - 0.91029).abs() < 1e-4);
    }

    #[test]
    fn indicator_rows_and_zero_columns() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let (n, k) = (50, 100);
        let d = simulate_counterexample(n, k, &mut rng).unwrap();
        for i in 0..n {
            assert_eq!(d.x().row(i).sum(), 1.0);
        }
        assert_eq!(d.x().sum(), n as f64);
        let zero_cols = (0..k).filter(|&j| d.x().column(j).sum() == 0.0).count();
        assert!(zero_cols >= k - n);
    }

    #[test]
    fn posterior_closed_forms() {
        let fam = GlmFamily::NormalKnownVar { dispersion: 1.0 };
        let rows = vec![vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]];
        let d = Dataset::from_rows(3, &rows, vec![0.5, 1.0, -2.0], fam).unwrap();
        let p = full_model_posterior(&d).unwrap();
        assert!((p[0].0 - 1.5 / 3.0).abs() < 1e-15 && (p[0].1 - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(p[1], (0.0, 1.0));
        assert_eq!(p[2], (-1.0, 0.5));
        let bad = Dataset::from_rows(3, &[vec![0.5, 0.0, 0.0]], vec![0.0], fam).unwrap();
        assert!(full_model_posterior(&bad).is_err());
    }

    #[test]
    fn vacuous_bound_passes() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let run = run_counterexample(100, 200, 1000, &mut rng).unwrap();
        assert!(run.vacuous && run.pass);
        assert!(chebyshev_check(100, 10, &mut rng).is_err());
    }

    #[test]
    fn guard_and_family_errors() {
        let d = Dataset::empty(MAX_DENSE_K + 1, GlmFamily::NormalKnownVar { dispersion: 1.0 }).unwrap();
        assert!(matches!(FullModelPosterior::new(&d, 1.0), Err(Error::SizeGuard(_))));
        let d = Dataset::empty(3, GlmFamily::Logistic).unwrap();
        assert!(FullModelPosterior::new(&d, 1.0).is_err());
    }
}
