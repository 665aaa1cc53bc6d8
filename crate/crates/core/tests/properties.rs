use std::sync::Arc;

use jbshap::density::ConstantDensity;
use jbshap::field::FnField;
use jbshap::metrics::spearman;
use jbshap::value_functions::{bshap, jbshap as jb, TableGame};
use jbshap::{
    exact_shapley, global_shapley, permutation_shapley, splice, Baseline, Coalition, DataPoint, GameContext,
    ValueFunction,
};
use proptest::prelude::*;

fn game(d: usize) -> impl Strategy<Value = TableGame> {
    prop::collection::vec(-10.0..10.0f64, 1 << d).prop_map(move |v| TableGame::new(d, v).unwrap())
}

fn sized_game() -> impl Strategy<Value = TableGame> {
    (1usize..=6).prop_flat_map(game)
}

fn endpoints(g: &TableGame) -> (f64, f64) {
    let d = g.dim();
    (g.value(&Coalition::empty(d)).unwrap(), g.value(&Coalition::full(d)).unwrap())
}

proptest! {
    #[test]
    fn exact_shapley_is_efficient(g in sized_game()) {
        let phi = exact_shapley(&g, g.dim()).unwrap().phi;
        let (lo, hi) = endpoints(&g);
        prop_assert!((phi.iter().sum::<f64>() - (hi - lo)).abs() < 1e-9);
    }

    #[test]
    fn every_permutation_sample_is_efficient(g in sized_game(), seed in any::<u64>()) {
        let a = permutation_shapley(&g, g.dim(), 7, seed).unwrap();
        let (lo, hi) = endpoints(&g);
        prop_assert!((a.phi.iter().sum::<f64>() - (hi - lo)).abs() < 1e-9);
    }

    #[test]
    fn exact_shapley_is_linear(a in game(4), b in game(4), alpha in -3.0..3.0f64) {
        let mix = TableGame::new(4, a.values().iter().zip(b.values()).map(|(x, y)| alpha * x + y).collect()).unwrap();
        let pa = exact_shapley(&a, 4).unwrap().phi;
        let pb = exact_shapley(&b, 4).unwrap().phi;
        let pm = exact_shapley(&mix, 4).unwrap().phi;
        for i in 0..4 {
            prop_assert!((pm[i] - (alpha * pa[i] + pb[i])).abs() < 1e-9);
        }
    }

    #[test]
    fn splice_takes_members_from_x(
        x in prop::collection::vec(-5.0..5.0f64, 5),
        b in prop::collection::vec(-5.0..5.0f64, 5),
        mask in 0u64..32,
    ) {
        let s = Coalition::from_mask(mask, 5).unwrap();
        let xp = DataPoint::new(x.clone()).unwrap();
        let bp = DataPoint::new(b.clone()).unwrap();
        let u = splice(&xp, &bp, &s).unwrap();
        for i in 0..5 {
            prop_assert_eq!(u.get(i), if s.contains(i) { x[i] } else { b[i] });
        }
        prop_assert_eq!(splice(&xp, &bp, &Coalition::full(5)).unwrap(), xp.clone());
        prop_assert_eq!(splice(&xp, &bp, &Coalition::empty(5)).unwrap(), bp);
    }

    #[test]
    fn spearman_ignores_monotone_transforms(
        a in prop::collection::vec(-5.0..5.0f64, 4..12),
        b in prop::collection::vec(-5.0..5.0f64, 12),
    ) {
        let b = &b[..a.len()];
        if let Ok(r) = spearman(&a, b) {
            let ea: Vec<f64> = a.iter().map(|v| v.exp()).collect();
            let cb: Vec<f64> = b.iter().map(|v| v * v * v + 2.0).collect();
            prop_assert!((spearman(&ea, &cb).unwrap() - r).abs() < 1e-12);
            prop_assert!((spearman(b, &a).unwrap() - r).abs() < 1e-12);
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
        }
    }

    #[test]
    fn unit_density_jbshap_equals_bshap(
        x in prop::collection::vec(-3.0..3.0f64, 3),
        b in prop::collection::vec(-3.0..3.0f64, 3),
        mask in 0u64..8,
    ) {
        let f = Arc::new(FnField::new(|u: &[f64]| u[0] * u[1] - u[2].sin()));
        let ctx = GameContext::new(f, DataPoint::new(x).unwrap(), Baseline::Fixed(DataPoint::new(b).unwrap()))
            .unwrap()
            .with_density(Arc::new(ConstantDensity(1.0)));
        let s = Coalition::from_mask(mask, 3).unwrap();
        prop_assert_eq!(jb(&ctx, &s).unwrap(), bshap(&ctx, &s).unwrap());
    }

    #[test]
    fn normalized_global_has_unit_l1(g in game(3), h in game(3)) {
        let a = vec![exact_shapley(&g, 3).unwrap(), exact_shapley(&h, 3).unwrap()];
        if let Ok(gl) = global_shapley(&a, true) {
            prop_assert!((gl.phi.iter().map(|v| v.abs()).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn permutation_estimator_is_unbiased_and_converges() {
    let values: Vec<f64> = (0..32).map(|m| ((m * 37 % 11) as f64 - 5.0) * 0.3 + (m as f64).sqrt()).collect();
    let g = TableGame::new(5, values).unwrap();
    let exact = exact_shapley(&g, 5).unwrap().phi;

    // Averaging many independent 4-permutation estimates approaches the exact value.
    let runs = 2000;
    let mut mean = vec![0.0; 5];
    for seed in 0..runs {
        let a = permutation_shapley(&g, 5, 4, seed).unwrap();
        mean.iter_mut().zip(&a.phi).for_each(|(m, p)| *m += p / runs as f64);
    }
    for (m, e) in mean.iter().zip(&exact) {
        assert!((m - e).abs() < 0.05, "{m} vs {e}");
    }

    let err = |n: usize| {
        let a = permutation_shapley(&g, 5, n, 99).unwrap();
        a.phi.iter().zip(&exact).map(|(p, e)| (p - e).abs()).fold(0.0, f64::max)
    };
    assert!(err(20_000) < err(20).max(1e-3));
    assert!(err(20_000) < 0.02);
}

#[test]
fn permutation_estimate_is_reproducible_per_seed() {
    let g = TableGame::from_fn(6, |s: &Coalition| (s.len() as f64).powi(2) + s.members().first().map_or(0.0, |&i| i as f64)).unwrap();
    let a = permutation_shapley(&g, 6, 1500, 5).unwrap();
    let b = permutation_shapley(&g, 6, 1500, 5).unwrap();
    assert_eq!(a, b);
    let c = permutation_shapley(&g, 6, 1500, 6).unwrap();
    assert_ne!(a.phi, c.phi);
}
