//! One-parameter exponential-family regression models.
//!
//! Every family has a density of the form `f(y, h) = exp{a(h) y + b(h) + c(y)}`
//! in the linear parameter `h = xᵀβ`, with mean `ψ(h) = −b′(h)/a′(h)`.
//! The normal family additionally carries a dispersion φ (inverse variance);
//! [`GlmFamily::NormalUnknownVar`] must be resolved to a concrete dispersion
//! with [`GlmFamily::with_dispersion`] before densities can be evaluated.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::special::{
    ln_gamma, ln_std_normal_cdf, logistic, softplus, std_normal_cdf, std_normal_ln_pdf,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GlmFamily {
    /// Normal response with known dispersion (inverse variance) φ.
    NormalKnownVar { dispersion: f64 },
    /// Normal response whose dispersion carries a gamma prior.
    NormalUnknownVar,
    Logistic,
    Probit,
    Poisson,
    /// Exponential response with mean e^h.
    ExponentialLogLink,
}

/// Dominating measure ν_y of the response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseMeasure {
    CountingBinary,
    CountingNonnegInt,
    LebesgueReals,
    LebesguePositiveReals,
}

/// The value `h = xᵀβ`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LinearParameter(f64);

impl LinearParameter {
    pub fn new(h: f64) -> Result<Self> {
        if h.is_finite() {
            Ok(Self(h))
        } else {
            Err(Error::NonFinite("linear parameter"))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `a(h)`, `a′(h)` and `b′(h)` at one linear parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaturalTerms {
    pub a: f64,
    pub a_prime: f64,
    pub b_prime: f64,
}

impl GlmFamily {
    pub fn name(&self) -> &'static str {
        match self {
            GlmFamily::NormalKnownVar { .. } => "normal_known_var",
            GlmFamily::NormalUnknownVar => "normal_unknown_var",
            GlmFamily::Logistic => "logistic",
            GlmFamily::Probit => "probit",
            GlmFamily::Poisson => "poisson",
            GlmFamily::ExponentialLogLink => "exponential_log_link",
        }
    }

    pub fn response_measure(&self) -> ResponseMeasure {
        match self {
            GlmFamily::NormalKnownVar { .. } | GlmFamily::NormalUnknownVar => {
                ResponseMeasure::LebesgueReals
            }
            GlmFamily::Logistic | GlmFamily::Probit => ResponseMeasure::CountingBinary,
            GlmFamily::Poisson => ResponseMeasure::CountingNonnegInt,
            GlmFamily::ExponentialLogLink => ResponseMeasure::LebesguePositiveReals,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let GlmFamily::NormalKnownVar { dispersion } = self {
            if !(dispersion.is_finite() && *dispersion > 0.0) {
                return Err(invalid("dispersion", format!("must be positive, got {dispersion}")));
            }
        }
        Ok(())
    }

    pub fn is_normal(&self) -> bool {
        matches!(self, GlmFamily::NormalKnownVar { .. } | GlmFamily::NormalUnknownVar)
    }

    pub fn is_binary(&self) -> bool {
        matches!(self, GlmFamily::Logistic | GlmFamily::Probit)
    }

    /// A concrete family for density evaluation: the unknown-variance normal
    /// becomes a known-variance normal at `dispersion`; other families are
    /// returned unchanged (and reject a dispersion).
    pub fn with_dispersion(self, dispersion: Option<f64>) -> Result<GlmFamily> {
        match (self, dispersion) {
            (GlmFamily::NormalUnknownVar, Some(phi)) => {
                let f = GlmFamily::NormalKnownVar { dispersion: phi };
                f.validate()?;
                Ok(f)
            }
            (GlmFamily::NormalUnknownVar, None) => Err(invalid(
                "dispersion",
                "normal_unknown_var needs a dispersion value to evaluate densities",
            )),
            (f, None) => Ok(f),
            (f, Some(_)) => Err(invalid(
                "dispersion",
                format!("family {} takes no dispersion", f.name()),
            )),
        }
    }

    fn concrete(&self) -> Result<()> {
        match self {
            GlmFamily::NormalUnknownVar => Err(invalid(
                "family",
                "normal_unknown_var must be resolved with a dispersion first",
            )),
            f => f.validate(),
        }
    }

    pub fn check_support(&self, y: f64) -> Result<()> {
        let (ok, support) = match self.response_measure() {
            ResponseMeasure::CountingBinary => (y == 0.0 || y == 1.0, "{0, 1}"),
            ResponseMeasure::CountingNonnegInt => {
                (y.is_finite() && y >= 0.0 && y.fract() == 0.0, "nonnegative integers")
            }
            ResponseMeasure::LebesgueReals => (y.is_finite(), "finite reals"),
            ResponseMeasure::LebesguePositiveReals => (y.is_finite() && y > 0.0, "positive reals"),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::OutOfSupport {
                family: self.name(),
                value: y,
                support,
            })
        }
    }

    /// ln f(y, h).
    pub fn log_density(&self, y: f64, h: LinearParameter) -> Result<f64> {
        self.concrete()?;
        self.check_support(y)?;
        Ok(self.log_density_unchecked(y, h.0))
    }

    /// ln f(y, h) for a concrete family and a `y` already known to be in support.
    pub(crate) fn log_density_unchecked(&self, y: f64, h: f64) -> f64 {
        match *self {
            GlmFamily::NormalKnownVar { dispersion: phi } => {
                let r = y - h;
                0.5 * phi.ln() - 0.5 * phi * r * r - crate::special::LN_SQRT_2PI
            }
            GlmFamily::NormalUnknownVar => f64::NAN,
            GlmFamily::Logistic => y * h - softplus(h),
            GlmFamily::Probit => {
                if y == 1.0 {
                    ln_std_normal_cdf(h)
                } else {
                    ln_std_normal_cdf(-h)
                }
            }
            GlmFamily::Poisson => y * h - h.exp() - ln_gamma(y + 1.0),
            GlmFamily::ExponentialLogLink => -(-h).exp() * y - h,
        }
    }

    pub fn natural_terms(&self, h: LinearParameter) -> Result<NaturalTerms> {
        self.concrete()?;
        let h = h.0;
        Ok(match *self {
            GlmFamily::NormalKnownVar { dispersion: phi } => NaturalTerms {
                a: phi * h,
                a_prime: phi,
                b_prime: -phi * h,
            },
            GlmFamily::NormalUnknownVar => unreachable!(),
            GlmFamily::Logistic => NaturalTerms {
                a: h,
                a_prime: 1.0,
                b_prime: -logistic(h),
            },
            GlmFamily::Probit => {
                let ln_pdf = std_normal_ln_pdf(h);
                let ln_cdf = ln_std_normal_cdf(h);
                let ln_sf = ln_std_normal_cdf(-h);
                NaturalTerms {
                    a: ln_cdf - ln_sf,
                    a_prime: (ln_pdf - ln_cdf).exp() + (ln_pdf - ln_sf).exp(),
                    b_prime: -(ln_pdf - ln_sf).exp(),
                }
            }
            GlmFamily::Poisson => NaturalTerms {
                a: h,
                a_prime: 1.0,
                b_prime: -h.exp(),
            },
            GlmFamily::ExponentialLogLink => NaturalTerms {
                a: -(-h).exp(),
                a_prime: (-h).exp(),
                b_prime: -1.0,
            },
        })
    }

    /// ψ(h) = E(y | h).
    pub fn mean(&self, h: LinearParameter) -> Result<f64> {
        self.concrete()?;
        Ok(self.mean_unchecked(h.0))
    }

    pub(crate) fn mean_unchecked(&self, h: f64) -> f64 {
        match *self {
            GlmFamily::NormalKnownVar { .. } | GlmFamily::NormalUnknownVar => h,
            GlmFamily::Logistic => logistic(h),
            GlmFamily::Probit => std_normal_cdf(h),
            GlmFamily::Poisson | GlmFamily::ExponentialLogLink => h.exp(),
        }
    }

    /// 1 − ψ(h) for the binary families, computed without cancellation.
    pub(crate) fn complement_mean_unchecked(&self, h: f64) -> f64 {
        match self {
            GlmFamily::Logistic => logistic(-h),
            GlmFamily::Probit => std_normal_cdf(-h),
            f => 1.0 - f.mean_unchecked(h),
        }
    }

    /// E(y² | h), the second-moment function.
    pub fn second_moment(&self, h: LinearParameter) -> Result<f64> {
        self.concrete()?;
        Ok(self.second_moment_unchecked(h.0))
    }

    pub(crate) fn second_moment_unchecked(&self, h: f64) -> f64 {
        match *self {
            GlmFamily::NormalKnownVar { dispersion } => h * h + 1.0 / dispersion,
            GlmFamily::NormalUnknownVar => f64::NAN,
            GlmFamily::Logistic | GlmFamily::Probit => self.mean_unchecked(h),
            GlmFamily::Poisson => {
                let mu = h.exp();
                mu + mu * mu
            }
            GlmFamily::ExponentialLogLink => 2.0 * (2.0 * h).exp(),
        }
    }

    /// ∫ √(f(y,h1) f(y,h2)) ν_y(dy), in (0, 1].
    pub fn hellinger_affinity(&self, h1: LinearParameter, h2: LinearParameter) -> Result<f64> {
        self.concrete()?;
        Ok(self.affinity_unchecked(h1.0, h2.0))
    }

    pub(crate) fn affinity_unchecked(&self, h1: f64, h2: f64) -> f64 {
        let v = match *self {
            GlmFamily::NormalKnownVar { dispersion } => {
                let d = h1 - h2;
                (-dispersion * d * d / 8.0).exp()
            }
            GlmFamily::NormalUnknownVar => f64::NAN,
            GlmFamily::Logistic | GlmFamily::Probit => {
                let (m1, m2) = (self.mean_unchecked(h1), self.mean_unchecked(h2));
                let (c1, c2) = (
                    self.complement_mean_unchecked(h1),
                    self.complement_mean_unchecked(h2),
                );
                (m1 * m2).sqrt() + (c1 * c2).sqrt()
            }
            GlmFamily::Poisson => {
                let d = (0.5 * h1).exp() - (0.5 * h2).exp();
                (-0.5 * d * d).exp()
            }
            GlmFamily::ExponentialLogLink => {
                // 2√(μ1μ2)/(μ1+μ2) = sech((h1−h2)/2)
                1.0 / (0.5 * (h1 - h2)).cosh()
            }
        };
        v.min(1.0)
    }

    /// Draw y ~ f(·, h).
    pub fn sample_response<R: Rng + ?Sized>(&self, h: LinearParameter, rng: &mut R) -> Result<f64> {
        self.concrete()?;
        Ok(self.sample_unchecked(h.0, rng))
    }

    pub(crate) fn sample_unchecked<R: Rng + ?Sized>(&self, h: f64, rng: &mut R) -> f64 {
        match *self {
            GlmFamily::NormalKnownVar { dispersion } => {
                let z: f64 = StandardNormal.sample(rng);
                h + z / dispersion.sqrt()
            }
            GlmFamily::NormalUnknownVar => f64::NAN,
            GlmFamily::Logistic | GlmFamily::Probit => {
                let u: f64 = rng.random();
                if u < self.mean_unchecked(h) {
                    1.0
                } else {
                    0.0
                }
            }
            GlmFamily::Poisson => {
                let lambda = h.exp();
                if lambda <= 0.0 {
                    return 0.0;
                }
                match Poisson::new(lambda) {
                    Ok(d) => d.sample(rng),
                    Err(_) => 0.0,
                }
            }
            GlmFamily::ExponentialLogLink => {
                let e: f64 = Exp1.sample(rng);
                h.exp() * e
            }
        }
    }
}

/// Per-x Hellinger affinity between N(m1, var1) and N(m2, var2).
pub fn normal_affinity(m1: f64, var1: f64, m2: f64, var2: f64) -> f64 {
    let (s1, s2) = (var1.sqrt(), var2.sqrt());
    let sum = var1 + var2;
    let d = m1 - m2;
    ((2.0 * s1 * s2 / sum).sqrt() * (-d * d / (4.0 * sum)).exp()).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn lp(h: f64) -> LinearParameter {
        LinearParameter::new(h).unwrap()
    }

    #[test]
    fn log_density_examples() {
        assert!((GlmFamily::Poisson.log_density(0.0, lp(0.0)).unwrap() + 1.0).abs() < 1e-15);
        let l = GlmFamily::Logistic.log_density(1.0, lp(0.0)).unwrap();
        assert!((l - 0.5f64.ln()).abs() < 1e-15);
        let n = GlmFamily::NormalKnownVar { dispersion: 1.0 };
        assert!((n.log_density(1.0, lp(1.0)).unwrap() + 0.918_938_533_204_672_7).abs() < 1e-14);
    }

    #[test]
    fn out_of_support_is_reported() {
        let err = GlmFamily::Logistic.log_density(2.0, lp(0.0)).unwrap_err();
        match err {
            Error::OutOfSupport { family, value, .. } => {
                assert_eq!(family, "logistic");
                assert_eq!(value, 2.0);
            }
            e => panic!("unexpected {e:?}"),
        }
        assert!(GlmFamily::Poisson.log_density(1.5, lp(0.0)).is_err());
        assert!(GlmFamily::Poisson.log_density(-1.0, lp(0.0)).is_err());
        assert!(GlmFamily::ExponentialLogLink.log_density(0.0, lp(0.0)).is_err());
        assert!(LinearParameter::new(f64::NAN).is_err());
    }

    #[test]
    fn unresolved_dispersion_is_rejected() {
        assert!(GlmFamily::NormalUnknownVar.log_density(0.0, lp(0.0)).is_err());
        let f = GlmFamily::NormalUnknownVar.with_dispersion(Some(2.0)).unwrap();
        assert_eq!(f, GlmFamily::NormalKnownVar { dispersion: 2.0 });
        assert!(GlmFamily::Logistic.with_dispersion(Some(1.0)).is_err());
        assert!(GlmFamily::NormalKnownVar { dispersion: -1.0 }.validate().is_err());
    }

    #[test]
    fn natural_terms_examples() {
        let t = GlmFamily::Logistic.natural_terms(lp(2.0)).unwrap();
        assert_eq!((t.a, t.a_prime), (2.0, 1.0));
        let t = GlmFamily::ExponentialLogLink.natural_terms(lp(0.0)).unwrap();
        assert_eq!((t.a, t.a_prime), (-1.0, 1.0));
        // central difference of a(h) = ln(Φ/(1−Φ)) at 0 with step 1e-5
        let a = |h: f64| GlmFamily::Probit.natural_terms(lp(h)).unwrap().a;
        let fd = (a(1e-5) - a(-1e-5)) / 2e-5;
        let t = GlmFamily::Probit.natural_terms(lp(0.0)).unwrap();
        assert!((t.a_prime - fd).abs() < 1e-8);
        assert!((t.a_prime - 1.595_769_121_605_731).abs() < 1e-12);
    }

    #[test]
    fn mean_is_minus_b_prime_over_a_prime() {
        let fams = [
            GlmFamily::NormalKnownVar { dispersion: 2.5 },
            GlmFamily::Logistic,
            GlmFamily::Probit,
            GlmFamily::Poisson,
            GlmFamily::ExponentialLogLink,
        ];
        for f in fams {
            for &h in &[-3.0, -0.7, 0.0, 1.2, 4.0] {
                let t = f.natural_terms(lp(h)).unwrap();
                let psi = -t.b_prime / t.a_prime;
                let m = f.mean(lp(h)).unwrap();
                assert!((psi - m).abs() < 1e-12 * m.abs().max(1.0), "{f:?} h={h}");
                assert!(t.a_prime != 0.0);
            }
        }
        assert_eq!(GlmFamily::Logistic.mean(lp(0.0)).unwrap(), 0.5);
        assert!((GlmFamily::Poisson.mean(lp(1.0)).unwrap() - std::f64::consts::E).abs() < 1e-15);
        assert_eq!(GlmFamily::Probit.mean(lp(0.0)).unwrap(), 0.5);
    }

    #[test]
    fn probit_natural_parameter_stable_in_tails() {
        for &h in &[-30.0, -8.0, 8.0, 30.0] {
            let t = GlmFamily::Probit.natural_terms(lp(h)).unwrap();
            assert!(t.a.is_finite() && t.a_prime.is_finite());
            // Mills ratio: a′(h) grows like |h|
            assert!(t.a_prime > 0.9 * h.abs() && t.a_prime < 1.1 * h.abs() + 1.0);
        }
    }

    #[test]
    fn affinity_closed_form_examples() {
        let p = GlmFamily::Poisson.hellinger_affinity(lp(0.0), lp(4f64.ln())).unwrap();
        assert!((p - (-0.5f64).exp()).abs() < 1e-15);
        let e = GlmFamily::ExponentialLogLink
            .hellinger_affinity(lp(0.0), lp(4f64.ln()))
            .unwrap();
        assert!((e - 0.8).abs() < 1e-15);
        for f in [GlmFamily::Logistic, GlmFamily::Probit, GlmFamily::Poisson] {
            assert_eq!(f.hellinger_affinity(lp(0.3), lp(0.3)).unwrap(), 1.0);
        }
        let a = normal_affinity(0.0, 1.0, 0.0, 2.0);
        assert!((a - (2.0 * 2f64.sqrt() / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sampling_moments() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let n = 100_000;
        let f = GlmFamily::Logistic;
        let m: f64 = (0..n).map(|_| f.sample_response(lp(0.0), &mut rng).unwrap()).sum::<f64>() / n as f64;
        assert!((m - 0.5).abs() < 3.0 * (0.25f64 / n as f64).sqrt());

        let xs: Vec<f64> = (0..n)
            .map(|_| GlmFamily::Poisson.sample_response(lp(1.0), &mut rng).unwrap())
            .collect();
        let var = sample_var(&xs);
        assert!((var / std::f64::consts::E - 1.0).abs() < 0.05);

        let f = GlmFamily::NormalKnownVar { dispersion: 4.0 };
        let xs: Vec<f64> = (0..n).map(|_| f.sample_response(lp(0.0), &mut rng).unwrap()).collect();
        assert!((sample_var(&xs) / 0.25 - 1.0).abs() < 0.05);

        let xs: Vec<f64> = (0..n)
            .map(|_| GlmFamily::ExponentialLogLink.sample_response(lp(0.5), &mut rng).unwrap())
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((mean / 0.5f64.exp() - 1.0).abs() < 0.02);
    }

    #[test]
    fn sampling_is_deterministic_given_stream() {
        let draw = |seed| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            (0..50)
                .map(|i| GlmFamily::Poisson.sample_response(lp(i as f64 / 10.0), &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
        assert_ne!(draw(3), draw(4));
    }

    fn sample_var(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
    }
}
