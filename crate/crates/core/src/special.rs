//! Scalar special functions and quadrature rules shared by the numeric modules.

use std::f64::consts::{PI, SQRT_2};
use std::sync::OnceLock;

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma_r(x).0
}

/// ln(2π)/2.
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub fn std_normal_ln_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

pub fn std_normal_pdf(x: f64) -> f64 {
    std_normal_ln_pdf(x).exp()
}

/// Φ(x).
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// ln Φ(x), accurate in both tails.
pub fn ln_std_normal_cdf(x: f64) -> f64 {
    if x > 5.0 {
        // 1 − Φ(x) is tiny here; use the complement directly.
        (-0.5 * libm::erfc(x / SQRT_2)).ln_1p()
    } else if x > -35.0 {
        (0.5 * libm::erfc(-x / SQRT_2)).ln()
    } else {
        // Mills-ratio asymptotic series; erfc underflows past here.
        let z2 = 1.0 / (x * x);
        let series = 1.0 - z2 + 3.0 * z2 * z2 - 15.0 * z2 * z2 * z2 + 105.0 * z2.powi(4);
        std_normal_ln_pdf(x) - (-x).ln() + series.ln()
    }
}

/// ln(1 − Φ(x)).
pub fn ln_std_normal_sf(x: f64) -> f64 {
    ln_std_normal_cdf(-x)
}

/// P(lo < Z < hi) for a standard normal Z, computed on the side of zero
/// that avoids cancellation.
pub fn std_normal_interval(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if lo > 0.0 {
        std_normal_cdf(-lo) - std_normal_cdf(-hi)
    } else {
        std_normal_cdf(hi) - std_normal_cdf(lo)
    }
}

/// ln(1 + e^x) without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// 1 / (1 + e^{−x}).
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// ln C(k, r) for possibly huge (non-integer-representable) k, by the
/// falling-factorial product. Exact up to rounding for small r.
pub fn ln_binomial(k: f64, r: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..r {
        acc += (k - i as f64).ln() - ((i + 1) as f64).ln();
    }
    acc
}

/// Gauss–Hermite rule for ∫ e^{−t²} g(t) dt.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn hermite_rule(n: usize) -> GaussRule {
    // Newton iteration on orthonormal Hermite polynomials with asymptotic
    // starting guesses for the largest roots.
    const EPS: f64 = 1e-14;
    let pim4 = PI.powf(-0.25);
    let m = n.div_ceil(2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[0],
            3 => 1.91 * z - 0.91 * nodes[1],
            _ => 2.0 * z - nodes[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= EPS {
                break;
            }
        }
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        weights[i] = 2.0 / (pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    GaussRule { nodes, weights }
}

/// Cached 64-point Gauss–Hermite rule.
pub fn gauss_hermite_64() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| hermite_rule(64))
}

/// E[g(Z)] for Z ~ N(mean, var) by 64-point Gauss–Hermite.
pub fn normal_expectation(mean: f64, var: f64, g: impl Fn(f64) -> f64) -> f64 {
    let rule = gauss_hermite_64();
    let scale = (2.0 * var).sqrt();
    let total: f64 = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(t, w)| w * g(mean + scale * t))
        .sum();
    total / PI.sqrt()
}

fn laguerre_rule(n: usize) -> GaussRule {
    const EPS: f64 = 1e-14;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..n {
        z = match i {
            0 => 3.0 / (1.0 + 2.4 * nf),
            1 => z + 15.0 / (1.0 + 2.5 * nf),
            _ => {
                let ai = (i - 1) as f64;
                z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2])
            }
        };
        let mut pp = 0.0;
        let mut p2 = 0.0;
        for _ in 0..200 {
            let mut p1 = 1.0;
            p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0 - z) * p2 - jf * p3) / (jf + 1.0);
            }
            pp = (nf * p1 - nf * p2) / z;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= EPS * z.abs().max(1.0) {
                break;
            }
        }
        nodes[i] = z;
        weights[i] = -1.0 / (pp * nf * p2);
    }
    GaussRule { nodes, weights }
}

/// Cached 64-point Gauss–Laguerre rule for ∫_0^∞ e^{−t} g(t) dt.
pub fn gauss_laguerre_64() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| laguerre_rule(64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_cdf_matches_direct_in_bulk_and_is_finite_in_tails() {
        for &x in &[-4.0, -1.0, 0.0, 0.5, 3.0] {
            assert!((ln_std_normal_cdf(x) - std_normal_cdf(x).ln()).abs() < 1e-13);
        }
        assert!((ln_std_normal_cdf(0.0) - 0.5f64.ln()).abs() < 1e-15);
        // continuity across the asymptotic switch
        let a = ln_std_normal_cdf(-35.0 + 1e-9);
        let b = ln_std_normal_cdf(-35.0 - 1e-9);
        assert!((a - b).abs() / a.abs() < 1e-8);
        assert!(ln_std_normal_cdf(-60.0).is_finite());
        assert!(ln_std_normal_cdf(40.0) <= 0.0);
    }

    #[test]
    fn hermite_rule_integrates_moments() {
        // E[Z^2] = 1, E[Z^4] = 3, E[cos Z] = e^{-1/2}
        assert!((normal_expectation(0.0, 1.0, |z| z * z) - 1.0).abs() < 1e-12);
        assert!((normal_expectation(0.0, 1.0, |z| z.powi(4)) - 3.0).abs() < 1e-11);
        assert!((normal_expectation(0.0, 1.0, f64::cos) - (-0.5f64).exp()).abs() < 1e-13);
        let w: f64 = gauss_hermite_64().weights.iter().sum();
        assert!((w - PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn laguerre_rule_integrates_moments() {
        let rule = gauss_laguerre_64();
        let m0: f64 = rule.weights.iter().sum();
        let m3: f64 = rule.nodes.iter().zip(&rule.weights).map(|(t, w)| w * t.powi(3)).sum();
        assert!((m0 - 1.0).abs() < 1e-12);
        assert!((m3 - 6.0).abs() < 1e-10);
    }

    #[test]
    fn binomial_and_lse() {
        assert!((ln_binomial(10.0, 3) - 120f64.ln()).abs() < 1e-12);
        assert_eq!(ln_binomial(5.0, 0), 0.0);
        let v = [0.0f64, 1e-3f64.ln()];
        assert!((log_sum_exp(&v) - 1.001f64.ln()).abs() < 1e-14);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }

    #[test]
    fn interval_mass_symmetric() {
        let a = std_normal_interval(0.4, 0.6);
        let b = std_normal_interval(-0.6, -0.4);
        assert!((a - b).abs() < 1e-15);
        let m = std_normal_interval(-1.0, 1.0);
        assert!((m - 0.682_689_492_137_085_9).abs() < 1e-12, "{m}");
    }
}
