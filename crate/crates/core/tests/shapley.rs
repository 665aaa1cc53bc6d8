use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use jbshap::metrics::sensitivity_n;
use jbshap::value_functions::TableGame;
use jbshap::{exact_shapley, permutation_shapley, truncated_permutation_jbshap, Coalition, ValueFunction};

#[test]
fn glove_game_with_density_weights() {
    // Pairs game: value 1 when player 3 holds a glove together with 1 or 2.
    let game = TableGame::<f64>::from_fn(3, |s: &Coalition| {
        let has = |i| s.contains(i);
        let f = if has(2) && (has(0) || has(1)) { 1.0 } else { 0.0 };
        let p = if has(0) ^ has(1) { 0.5 } else { 1.0 };
        f * p
    })
    .unwrap();
    let phi = exact_shapley(&game, 3).unwrap().phi;
    for (got, want) in phi.iter().zip([0.25, 0.25, 0.5]) {
        assert!((got - want).abs() < 1e-12, "{phi:?}");
    }
}

#[test]
fn additive_game_is_exact_after_one_permutation() {
    let c = [0.5, -1.0, 2.0, 0.25, 3.0];
    let game = TableGame::<f64>::from_fn(5, |s: &Coalition| s.members().iter().map(|&i| c[i]).sum()).unwrap();
    for seed in 0..5 {
        let phi = permutation_shapley(&game, 5, 1, seed).unwrap().phi;
        for (got, want) in phi.iter().zip(c) {
            assert!((got - want).abs() < 1e-12);
        }
    }
}

#[test]
fn truncation_matches_untruncated_when_small_sets_are_already_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let d = 5;
    let game = TableGame::<f64>::from_fn(d, |s: &Coalition| if s.len() < 4 { 0.0 } else { rng.random::<f64>() }).unwrap();
    let plain = permutation_shapley(&game, d, 300, 17).unwrap();
    let cut = truncated_permutation_jbshap(&game, d, 300, 0.8, 17).unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&plain.phi), bits(&cut.phi));
}

#[test]
fn truncated_sampler_on_unanimity_game() {
    let game = TableGame::<f64>::from_fn(3, |s: &Coalition| if s.len() == 3 { 1.0 } else { 0.0 }).unwrap();
    let phi = truncated_permutation_jbshap(&game, 3, 30000, 1.0, 4).unwrap().phi;
    for p in phi {
        assert!((p - 1.0 / 3.0).abs() < 0.02);
    }
}

#[test]
fn sensitivity_n_on_random_table_game() {
    // Random per-feature weights plus an independent uniform draw per coalition.
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let w: Vec<f64> = (0..8).map(|_| rng.random()).collect();
    let values: Vec<f64> = (0..256u64)
        .map(|mask| {
            let additive: f64 = (0..8).filter(|i| mask >> i & 1 == 1).map(|i| w[i]).sum();
            (additive + rng.random::<f64>()) / 9.0
        })
        .collect();
    let game = TableGame::<f64>::new(8, values).unwrap();
    let attr = exact_shapley(&game, 8).unwrap();
    let corr = sensitivity_n(&attr, &game, &[0.125, 0.25, 0.375, 0.5], 200, 3).unwrap();
    assert!(corr > 0.5, "{corr}");
    assert_eq!(game.dim(), 8);
}

#[test]
fn sensitivity_n_on_unstructured_game_is_weak() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let values: Vec<f64> = (0..256).map(|_| rng.random()).collect();
    let game = TableGame::<f64>::new(8, values).unwrap();
    let attr = exact_shapley(&game, 8).unwrap();
    let corr = sensitivity_n(&attr, &game, &[0.125, 0.25, 0.375, 0.5], 200, 3).unwrap();
    assert!(corr.abs() < 0.5, "{corr}");
}
