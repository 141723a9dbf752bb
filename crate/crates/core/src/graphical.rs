//! Gaussian graphical models by per-node neighborhood regression.
//!
//! Each node is regressed on all others with the unknown-variance normal
//! prior. Columns are standardized with sample moments and divided by
//! [`COVARIATE_SCALE`] so the design honors |x| ≤ 1 up to a small clipped
//! fraction; the response column gets the same affine map, which leaves
//! the regression coefficients unchanged and the conditional Hellinger
//! distance invariant.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimators::MixtureDensity;
use crate::glm::GlmFamily;
use crate::hellinger::{summarize_d2, HellingerEstimate};
use crate::posterior::{inclusion_probabilities, mcmc_run, Chain, Dataset, McmcConfig};
use crate::prior::PriorSpec;
use crate::special::{gauss_hermite_64, log_sum_exp};

/// Standardized columns are divided by this before clipping to [−1, 1].
pub const COVARIATE_SCALE: f64 = 4.0;

/// Multivariate normal truth, rescaled so every variable has unit variance.
#[derive(Debug, Clone)]
pub struct GraphTruth {
    precision: DMatrix<f64>,
    covariance: DMatrix<f64>,
    cov_factor: DMatrix<f64>,
}

impl GraphTruth {
    /// Accepts any SPD precision Θ and rescales it to D^{1/2}ΘD^{1/2} with
    /// D = diag(Θ⁻¹), the precision of the standardized variables.
    pub fn new(precision: DMatrix<f64>) -> Result<Self> {
        let j = precision.nrows();
        if j < 2 || precision.ncols() != j {
            return Err(invalid("precision", "must be square with at least two nodes"));
        }
        if precision.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("precision"));
        }
        if (&precision - precision.transpose()).abs().max() > 1e-12 * precision.abs().max() {
            return Err(Error::NotPositiveDefinite("precision is not symmetric"));
        }
        let chol = Cholesky::new(precision.clone()).ok_or(Error::NotPositiveDefinite("precision"))?;
        let cov = chol.inverse();
        let s = DVector::from_iterator(j, (0..j).map(|i| cov[(i, i)].sqrt()));
        let precision = DMatrix::from_fn(j, j, |a, b| precision[(a, b)] * s[a] * s[b]);
        let covariance = DMatrix::from_fn(j, j, |a, b| cov[(a, b)] / (s[a] * s[b]));
        let cov_factor = Cholesky::new(covariance.clone())
            .ok_or(Error::NotPositiveDefinite("covariance"))?
            .l();
        Ok(Self {
            precision,
            covariance,
            cov_factor,
        })
    }

    /// Nearest-neighbor chain: Θ_ii = 1, Θ_{i,i±1} = −rho, |rho| < ½.
    pub fn chain(nodes: usize, rho: f64) -> Result<Self> {
        if !(rho.abs() < 0.5) {
            return Err(invalid("rho", "must lie in (−½, ½) for a positive definite chain"));
        }
        let theta = DMatrix::from_fn(nodes, nodes, |a, b| {
            if a == b {
                1.0
            } else if a.abs_diff(b) == 1 {
                -rho
            } else {
                0.0
            }
        });
        Self::new(theta)
    }

    pub fn nodes(&self) -> usize {
        self.precision.nrows()
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// β*_{j|k} = −Θ_jk/Θ_jj over k ≠ j in increasing order.
    pub fn beta_star(&self, j: usize) -> Vec<f64> {
        others(self.nodes(), j)
            .map(|k| -self.precision[(j, k)] / self.precision[(j, j)])
            .collect()
    }

    pub fn residual_variance(&self, j: usize) -> f64 {
        1.0 / self.precision[(j, j)]
    }

    /// n i.i.d. rows from N(0, Σ).
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> DMatrix<f64> {
        let j = self.nodes();
        let z = DMatrix::from_fn(j, n, |_, _| StandardNormal.sample(rng));
        (&self.cov_factor * z).transpose()
    }
}

fn others(nodes: usize, j: usize) -> impl Iterator<Item = usize> {
    (0..nodes).filter(move |&k| k != j)
}

/// Draws n rows of the graph's Gaussian law.
pub fn sample_graph_data<R: Rng + ?Sized>(truth: &GraphTruth, n: usize, rng: &mut R) -> DMatrix<f64> {
    truth.sample(n, rng)
}

/// Column-wise affine map x ↦ (x − mean)/(sd·COVARIATE_SCALE).
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Standardization {
    pub fn from_data(data: &DMatrix<f64>) -> Result<Self> {
        let n = data.nrows();
        if n < 2 {
            return Err(invalid("data", "need at least two rows to standardize"));
        }
        let mut means = Vec::with_capacity(data.ncols());
        let mut sds = Vec::with_capacity(data.ncols());
        for (c, col) in data.column_iter().enumerate() {
            let m = col.mean();
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n as f64 - 1.0);
            if !(var > 0.0) {
                return Err(Error::ConstantColumn { column: c });
            }
            means.push(m);
            sds.push(var.sqrt());
        }
        Ok(Self { means, sds })
    }

    pub fn scale(&self, c: usize) -> f64 {
        self.sds[c] * COVARIATE_SCALE
    }

    pub fn apply(&self, c: usize, v: f64) -> f64 {
        (v - self.means[c]) / self.scale(c)
    }
}

/// One node's regression on the others.
#[derive(Debug, Clone)]
pub struct NeighborhoodFit {
    pub node: usize,
    pub chain: Chain,
    pub standardization: Standardization,
    /// Fraction of covariate entries clipped to ±1.
    pub clip_fraction: f64,
}

/// Posterior chain for column j regressed on the remaining columns.
pub fn neighborhood_select(
    data: &DMatrix<f64>,
    j: usize,
    spec: &PriorSpec,
    config: &McmcConfig,
) -> Result<NeighborhoodFit> {
    let nodes = data.ncols();
    if j >= nodes {
        return Err(invalid("node", format!("must be below {nodes}, got {j}")));
    }
    if spec.dispersion().is_none() {
        return Err(invalid("prior.dispersion", "neighborhood regression needs a dispersion prior"));
    }
    if spec.k() != nodes - 1 {
        return Err(Error::DimensionMismatch {
            context: "neighborhood prior K",
            expected: nodes - 1,
            got: spec.k(),
        });
    }
    let st = Standardization::from_data(data)?;
    let n = data.nrows();
    let mut clipped = 0usize;
    let cols: Vec<usize> = others(nodes, j).collect();
    let x = DMatrix::from_fn(n, nodes - 1, |i, c| {
        let v = st.apply(cols[c], data[(i, cols[c])]);
        if v.abs() > 1.0 {
            clipped += 1;
        }
        v.clamp(-1.0, 1.0)
    });
    let y: Vec<f64> = (0..n).map(|i| st.apply(j, data[(i, j)])).collect();
    let ds = Dataset::new(x, y, GlmFamily::NormalUnknownVar)?;
    let chain = mcmc_run(&ds, spec, config)?;
    Ok(NeighborhoodFit {
        node: j,
        chain,
        standardization: st,
        clip_fraction: clipped as f64 / (n * (nodes - 1)).max(1) as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConditionalHellingerOptions {
    /// Draws of x_{k≠j} from the true marginal.
    pub n_mc: usize,
    pub seed: u64,
    /// Mixture components kept, evenly spaced along the retained draws.
    pub max_components: usize,
}

impl Default for ConditionalHellingerOptions {
    fn default() -> Self {
        Self {
            n_mc: 2000,
            seed: 0,
            max_components: 200,
        }
    }
}

/// ĥ_{j,A}: root-mean conditional squared Hellinger distance between the
/// fitted mixture for x_j | x_{k≠j} and the truth, averaged over the true
/// marginal of x_{k≠j}. Per point the affinity is a 64-point Gauss–Hermite
/// integral against the true conditional normal.
pub fn conditional_hellinger(
    truth: &GraphTruth,
    fit: &NeighborhoodFit,
    mix: &MixtureDensity,
    opts: &ConditionalHellingerOptions,
) -> Result<HellingerEstimate> {
    let nodes = truth.nodes();
    let j = fit.node;
    if mix.k != nodes - 1 || fit.standardization.means.len() != nodes {
        return Err(Error::DimensionMismatch {
            context: "graph nodes",
            expected: nodes,
            got: mix.k + 1,
        });
    }
    if opts.n_mc < 2 || opts.max_components < 1 {
        return Err(invalid("conditional_hellinger", "need n_mc ≥ 2 and max_components ≥ 1"));
    }
    let st = &fit.standardization;
    let cols: Vec<usize> = others(nodes, j).collect();
    let m = mix.components.len();
    let keep = m.min(opts.max_components);
    struct Comp {
        cols: Vec<usize>,
        beta: Vec<f64>,
        sd: f64,
    }
    let comps: Vec<Comp> = (0..keep)
        .map(|i| {
            let d = &mix.components[i * m / keep];
            let phi = d.state.phi.ok_or_else(|| invalid("mixture", "components need a dispersion"))?;
            Ok(Comp {
                cols: d.state.gamma.included().iter().map(|&c| cols[c]).collect(),
                beta: d.state.beta.clone(),
                sd: st.scale(j) / phi.sqrt(),
            })
        })
        .collect::<Result<_>>()?;
    let ln_w = -(keep as f64).ln();
    let beta_star = truth.beta_star(j);
    let sd_star = truth.residual_variance(j).sqrt();
    let rule = gauss_hermite_64();
    let ln_sqrt_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();

    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    let x = truth.sample(opts.n_mc, &mut rng);
    let mut xt = vec![0.0; nodes];
    let mut means = vec![0.0; keep];
    let mut terms = vec![0.0; keep];
    let mut d2 = Vec::with_capacity(opts.n_mc);
    for i in 0..opts.n_mc {
        for c in 0..nodes {
            xt[c] = st.apply(c, x[(i, c)]).clamp(-1.0, 1.0);
        }
        let mu_star: f64 = cols.iter().zip(&beta_star).map(|(&c, b)| b * x[(i, c)]).sum();
        for (mean, comp) in means.iter_mut().zip(&comps) {
            let h: f64 = comp.cols.iter().zip(&comp.beta).map(|(&c, b)| b * xt[c]).sum();
            *mean = st.means[j] + st.scale(j) * h;
        }
        let mut aff = 0.0;
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            let z = std::f64::consts::SQRT_2 * t;
            let y = mu_star + sd_star * z;
            let ln_star = -0.5 * z * z - sd_star.ln() - ln_sqrt_2pi;
            for ((term, mean), comp) in terms.iter_mut().zip(&means).zip(&comps) {
                let u = (y - mean) / comp.sd;
                *term = ln_w - 0.5 * u * u - comp.sd.ln() - ln_sqrt_2pi;
            }
            aff += w * (0.5 * (log_sum_exp(&terms) - ln_star)).exp();
        }
        aff /= std::f64::consts::PI.sqrt();
        d2.push(2.0 - 2.0 * aff.min(1.0));
    }
    Ok(summarize_d2(&d2, false))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeRule {
    #[default]
    And,
    Or,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphEstimate {
    /// inclusion[j][k]: posterior inclusion of node k in node j's regression.
    pub inclusion: Vec<Vec<f64>>,
    pub adjacency_and: Vec<Vec<bool>>,
    pub adjacency_or: Vec<Vec<bool>>,
    pub threshold: f64,
    pub rule: EdgeRule,
    pub h_hat: Vec<f64>,
}

/// Aggregates per-node chains (node j's chain indexes the others in
/// increasing order) into AND/OR graphs at a threshold.
pub fn build_graph(chains: &[Chain], threshold: f64, rule: EdgeRule) -> Result<GraphEstimate> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(invalid("threshold", format!("must lie in (0, 1), got {threshold}")));
    }
    let nodes = chains.len();
    if nodes < 2 {
        return Err(invalid("chains", "need one chain per node and at least two nodes"));
    }
    let inclusion = chains
        .iter()
        .enumerate()
        .map(|(j, c)| inclusion_row(nodes, j, &inclusion_probabilities(c, nodes - 1)))
        .collect();
    Ok(GraphEstimate::from_inclusion(inclusion, threshold, rule))
}

fn inclusion_row(nodes: usize, j: usize, probs: &[f64]) -> Vec<f64> {
    let mut row = vec![0.0; nodes];
    for (k, p) in others(nodes, j).zip(probs) {
        row[k] = *p;
    }
    row
}

impl GraphEstimate {
    pub fn from_inclusion(inclusion: Vec<Vec<f64>>, threshold: f64, rule: EdgeRule) -> Self {
        let nodes = inclusion.len();
        let mut and = vec![vec![false; nodes]; nodes];
        let mut or = vec![vec![false; nodes]; nodes];
        for a in 0..nodes {
            for b in 0..nodes {
                if a == b {
                    continue;
                }
                let (x, y) = (inclusion[a][b] > threshold, inclusion[b][a] > threshold);
                and[a][b] = x && y;
                or[a][b] = x || y;
            }
        }
        Self {
            inclusion,
            adjacency_and: and,
            adjacency_or: or,
            threshold,
            rule,
            h_hat: Vec::new(),
        }
    }

    pub fn with_h_hat(mut self, h_hat: Vec<f64>) -> Result<Self> {
        if h_hat.len() != self.inclusion.len() {
            return Err(Error::DimensionMismatch {
                context: "h_hat per node",
                expected: self.inclusion.len(),
                got: h_hat.len(),
            });
        }
        self.h_hat = h_hat;
        Ok(self)
    }

    pub fn adjacency(&self) -> &[Vec<bool>] {
        match self.rule {
            EdgeRule::And => &self.adjacency_and,
            EdgeRule::Or => &self.adjacency_or,
        }
    }

    /// Edges j < k under the chosen rule.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let adj = self.adjacency();
        let mut out = Vec::new();
        for a in 0..adj.len() {
            for b in (a + 1)..adj.len() {
                if adj[a][b] {
                    out.push([a, b]);
                }
            }
        }
        out
    }

    pub fn artifact(&self) -> GraphArtifact {
        GraphArtifact {
            nodes: self.inclusion.len(),
            threshold: self.threshold,
            rule: self.rule,
            edges: self.edges(),
            inclusion: self.inclusion.clone(),
            h_hat: self.h_hat.clone(),
        }
    }
}

/// Serialized graph output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphArtifact {
    pub nodes: usize,
    pub threshold: f64,
    pub rule: EdgeRule,
    pub edges: Vec<[usize; 2]>,
    pub inclusion: Vec<Vec<f64>>,
    pub h_hat: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{select, SelectionRule};
    use crate::posterior::{ModelState, PosteriorDraw};
    use crate::prior::ModelIndicator;

    #[test]
    fn two_node_coefficients() {
        let t = GraphTruth::new(DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0])).unwrap();
        assert!((t.beta_star(0)[0] - 0.5).abs() < 1e-14);
        for i in 0..2 {
            assert!((t.covariance()[(i, i)] - 1.0).abs() < 1e-12);
        }
        assert!(GraphTruth::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
        assert!(GraphTruth::chain(5, 0.6).is_err());
    }

    #[test]
    fn standardization_rejects_constant_columns() {
        let d = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 3.0, 1.0, 4.0]);
        assert_eq!(Standardization::from_data(&d).unwrap_err(), Error::ConstantColumn { column: 0 });
    }

    #[test]
    fn graph_rules() {
        let inc = vec![vec![0.0, 0.9, 0.2], vec![0.3, 0.0, 0.8], vec![0.6, 0.7, 0.0]];
        let g = GraphEstimate::from_inclusion(inc, 0.5, EdgeRule::And);
        assert_eq!(g.edges(), vec![[1, 2]]);
        let g = GraphEstimate::from_inclusion(g.inclusion.clone(), 0.5, EdgeRule::Or);
        assert_eq!(g.edges(), vec![[0, 1], [0, 2], [1, 2]]);
        let sym = vec![vec![0.0, 0.7], vec![0.7, 0.0]];
        let g = GraphEstimate::from_inclusion(sym, 0.5, EdgeRule::And);
        assert_eq!(g.adjacency_and, g.adjacency_or);
        assert!(build_graph(&[], 1.0, EdgeRule::And).is_err());
    }

    fn fit_for(truth: &GraphTruth, node: usize, beta: Vec<f64>, idx: Vec<usize>, phi: f64) -> (NeighborhoodFit, MixtureDensity) {
        let nodes = truth.nodes();
        let draw = PosteriorDraw {
            state: ModelState {
                gamma: ModelIndicator::new(nodes - 1, idx).unwrap(),
                beta,
                phi: Some(phi),
            },
            log_post: 0.0,
        };
        let chain = Chain {
            draws: vec![draw],
            acceptance: Default::default(),
            config: McmcConfig::default(),
        };
        // identity standardization up to the covariate scale
        let st = Standardization {
            means: vec![0.0; nodes],
            sds: vec![1.0; nodes],
        };
        let mix = select(&chain, GlmFamily::NormalUnknownVar, &SelectionRule::All).unwrap();
        (
            NeighborhoodFit {
                node,
                chain,
                standardization: st,
                clip_fraction: 0.0,
            },
            mix,
        )
    }

    #[test]
    fn exact_fit_has_zero_distance_and_wide_fit_matches_formula() {
        // independent nodes: the truth is N(0, 1) for each conditional
        let truth = GraphTruth::new(DMatrix::identity(3, 3)).unwrap();
        let s2 = COVARIATE_SCALE * COVARIATE_SCALE;
        let opts = ConditionalHellingerOptions { n_mc: 50, ..Default::default() };
        let (fit, mix) = fit_for(&truth, 1, vec![], vec![], s2);
        let h = conditional_hellinger(&truth, &fit, &mix, &opts).unwrap();
        assert!(h.squared < 1e-12, "{h:?}");
        // variance twice the truth at the correct mean
        let (fit, mix) = fit_for(&truth, 1, vec![], vec![], s2 / 2.0);
        let h = conditional_hellinger(&truth, &fit, &mix, &opts).unwrap();
        let aff = (2.0 * 2f64.sqrt() / 3.0).sqrt();
        assert!((h.squared - (2.0 - 2.0 * aff)).abs() < 1e-10, "{h:?}");
    }
}
