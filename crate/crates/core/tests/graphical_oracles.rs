use bvs_core::estimators::{select, SelectionRule};
use bvs_core::graphical::{
    build_graph, conditional_hellinger, neighborhood_select, sample_graph_data, ConditionalHellingerOptions, EdgeRule,
    GraphEstimate, GraphTruth,
};
use bvs_core::summary::median;
use bvs_core::{DispersionPrior, GlmFamily, McmcConfig, PriorSpec, VPolicy};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn spec(k: usize, r: usize, rmax: usize) -> PriorSpec {
    PriorSpec::new(
        k,
        r,
        rmax,
        VPolicy::IdentityScale { c: 10.0 },
        Some(DispersionPrior { shape: 1.0, rate: 1.0 }),
    )
    .unwrap()
}

fn mcmc(seed: u64) -> McmcConfig {
    McmcConfig {
        iterations: 4000,
        burn_in: 1000,
        thin: 5,
        seed,
        ..McmcConfig::default()
    }
}

fn corr(x: &DMatrix<f64>, a: usize, b: usize) -> f64 {
    let n = x.nrows() as f64;
    let (ca, cb) = (x.column(a), x.column(b));
    let (ma, mb) = (ca.mean(), cb.mean());
    let cov = ca.iter().zip(cb.iter()).map(|(u, v)| (u - ma) * (v - mb)).sum::<f64>() / n;
    let va = ca.iter().map(|u| (u - ma).powi(2)).sum::<f64>() / n;
    let vb = cb.iter().map(|v| (v - mb).powi(2)).sum::<f64>() / n;
    cov / (va * vb).sqrt()
}

#[test]
fn identity_precision_gives_uncorrelated_columns() {
    let t = GraphTruth::new(DMatrix::identity(4, 4)).unwrap();
    let n = 20_000;
    let x = sample_graph_data(&t, n, &mut ChaCha20Rng::seed_from_u64(1));
    for a in 0..4 {
        for b in (a + 1)..4 {
            assert!(corr(&x, a, b).abs() < 3.0 / (n as f64).sqrt());
        }
    }
}

#[test]
fn large_sample_precision_and_variances() {
    let t = GraphTruth::chain(5, 0.4).unwrap();
    let n = 100_000;
    let x = sample_graph_data(&t, n, &mut ChaCha20Rng::seed_from_u64(2));
    let means: Vec<f64> = (0..5).map(|c| x.column(c).mean()).collect();
    let centered = DMatrix::from_fn(n, 5, |i, c| x[(i, c)] - means[c]);
    let s = centered.tr_mul(&centered) / (n as f64 - 1.0);
    for c in 0..5 {
        assert!((s[(c, c)] - 1.0).abs() < 0.05);
    }
    let p = s.try_inverse().unwrap();
    let truth = t.precision();
    let scale = truth.abs().max();
    for a in 0..5 {
        for b in 0..5 {
            let tv = truth[(a, b)];
            if tv != 0.0 {
                assert!((p[(a, b)] - tv).abs() <= 0.05 * tv.abs(), "({a},{b}) {} vs {tv}", p[(a, b)]);
            } else {
                assert!(p[(a, b)].abs() <= 0.05 * scale);
            }
        }
    }
}

#[test]
fn null_columns_stay_near_prior_inclusion() {
    let nodes = 6;
    let t = GraphTruth::new(DMatrix::identity(nodes, nodes)).unwrap();
    let sp = spec(nodes - 1, 1, 3);
    let prior_rate = 1.0 / (nodes - 1) as f64;
    let seeds = 5;
    let mut avg = vec![0.0; nodes - 1];
    for seed in 0..seeds {
        let x = sample_graph_data(&t, 300, &mut ChaCha20Rng::seed_from_u64(10 + seed));
        let fit = neighborhood_select(&x, 0, &sp, &mcmc(seed)).unwrap();
        assert!(fit.chain.draws.iter().all(|d| d.state.gamma.size() <= 3));
        let inc = bvs_core::inclusion_probabilities(&fit.chain, nodes - 1);
        for (a, p) in avg.iter_mut().zip(inc) {
            *a += p / seeds as f64;
        }
    }
    assert!(avg.iter().all(|&p| p < 2.0 * prior_rate), "{avg:?}");
}

#[test]
fn strong_pair_is_selected() {
    // the two-node pair of the example plus an independent third node
    let theta = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, 0.0, 0.0, 0.0, 1.0]);
    let t = GraphTruth::new(theta).unwrap();
    assert!((t.beta_star(0)[0] - 0.5).abs() < 1e-14);
    let x = sample_graph_data(&t, 2000, &mut ChaCha20Rng::seed_from_u64(3));
    let fit = neighborhood_select(&x, 0, &spec(2, 1, 1), &mcmc(3)).unwrap();
    let inc = bvs_core::inclusion_probabilities(&fit.chain, 2);
    assert!(inc[0] > 0.9, "{inc:?}");
    assert!(fit.clip_fraction < 1e-3);
}

#[test]
fn constant_column_is_rejected() {
    let mut x = sample_graph_data(&GraphTruth::chain(3, 0.3).unwrap(), 50, &mut ChaCha20Rng::seed_from_u64(4));
    x.column_mut(2).fill(1.5);
    assert!(neighborhood_select(&x, 0, &spec(2, 1, 1), &mcmc(0)).is_err());
}

#[test]
fn conditional_hellinger_self_consistent() {
    let t = GraphTruth::chain(6, 0.4).unwrap();
    let x = sample_graph_data(&t, 200, &mut ChaCha20Rng::seed_from_u64(5));
    let fit = neighborhood_select(&x, 2, &spec(5, 2, 4), &mcmc(5)).unwrap();
    let mix = select(&fit.chain, GlmFamily::NormalUnknownVar, &SelectionRule::All).unwrap();
    let small = ConditionalHellingerOptions { n_mc: 1000, seed: 1, max_components: 100 };
    let big = ConditionalHellingerOptions { n_mc: 10_000, seed: 2, max_components: 100 };
    let a = conditional_hellinger(&t, &fit, &mix, &small).unwrap();
    let b = conditional_hellinger(&t, &fit, &mix, &big).unwrap();
    let tol = 3.0 * (a.se_squared.powi(2) + b.se_squared.powi(2)).sqrt();
    assert!((a.squared - b.squared).abs() <= tol, "{a:?} vs {b:?}");
    assert!(a.value >= 0.0 && a.value <= 2f64.sqrt());
}

#[test]
fn null_graph_has_little_structure() {
    let nodes = 10;
    let t = GraphTruth::new(DMatrix::identity(nodes, nodes)).unwrap();
    let sp = spec(nodes - 1, 1, 4);
    for seed in 0..10 {
        let x = sample_graph_data(&t, 500, &mut ChaCha20Rng::seed_from_u64(100 + seed));
        let chains: Vec<_> = (0..nodes)
            .map(|j| neighborhood_select(&x, j, &sp, &mcmc(seed * 31 + j as u64)).unwrap().chain)
            .collect();
        let g = build_graph(&chains, 0.5, EdgeRule::Or).unwrap();
        assert!(g.edges().len() <= 2, "seed {seed}: {:?}", g.edges());
    }
}

#[test]
fn median_h_hat_decreases_with_n() {
    let t = GraphTruth::chain(8, 0.4).unwrap();
    let sp = spec(7, 2, 4);
    let opts = ConditionalHellingerOptions { n_mc: 500, seed: 9, max_components: 100 };
    let mut medians = Vec::new();
    for n in [100, 400, 1600] {
        let x = sample_graph_data(&t, n, &mut ChaCha20Rng::seed_from_u64(n as u64));
        let h: Vec<f64> = (0..8)
            .map(|j| {
                let fit = neighborhood_select(&x, j, &sp, &mcmc(j as u64)).unwrap();
                let mix = select(&fit.chain, GlmFamily::NormalUnknownVar, &SelectionRule::All).unwrap();
                conditional_hellinger(&t, &fit, &mix, &opts).unwrap().value
            })
            .collect();
        medians.push(median(&h));
    }
    assert!(medians.windows(2).all(|w| w[1] < w[0]), "{medians:?}");
}

proptest! {
    #[test]
    fn and_is_contained_in_or(vals in prop::collection::vec(0.0f64..1.0, 25), t in 0.05f64..0.95) {
        let inc: Vec<Vec<f64>> = (0..5).map(|a| (0..5).map(|b| if a == b { 0.0 } else { vals[a * 5 + b] }).collect()).collect();
        let g = GraphEstimate::from_inclusion(inc, t, EdgeRule::And);
        for a in 0..5 {
            for b in 0..5 {
                prop_assert!(!g.adjacency_and[a][b] || g.adjacency_or[a][b]);
                prop_assert_eq!(g.adjacency_and[a][b], g.adjacency_and[b][a]);
                prop_assert_eq!(g.adjacency_or[a][b], g.adjacency_or[b][a]);
            }
        }
        let empty = GraphEstimate::from_inclusion(g.inclusion.clone(), 1.0 - 1e-12, EdgeRule::Or);
        prop_assert!(empty.edges().is_empty());
    }
}
