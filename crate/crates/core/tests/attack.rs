use std::sync::Arc;

use jbshap::attack::{
    analytic_perturbation, ces_empirical_attack, finetune_attack, hiding_unfairness_experiment, synth_biased_dataset,
    AttackConfig, FinetuneSpec, PerturbationSpec,
};
use jbshap::density::{ConstantDensity, FnDensity, ScaledDensity, TableDensity};
use jbshap::field::{FnField, TableField};
use jbshap::learners::{net_init, LossKind, Optimizer, TrainerConfig};
use jbshap::value_functions::{bshap, ces_empirical, jbshap as jb};
use jbshap::{Baseline, Coalition, DataPoint, Dataset, DensityField, Field, GameContext, ScalarField};

fn pt(v: &[f64]) -> DataPoint {
    DataPoint::new(v.to_vec()).unwrap()
}

fn small_config() -> AttackConfig {
    let adam = |lr, epochs| TrainerConfig::new(lr, 32, epochs, 0, LossKind::Mse).with_optimizer(Optimizer::adam());
    let mut cfg = AttackConfig {
        n: 300,
        d: 4,
        model_hidden: vec![12, 12],
        model_trainer: adam(0.01, 10),
        finetune_trainer: adam(0.005, 5),
        explicands: 20,
        ..AttackConfig::default()
    };
    cfg.nce.hidden = vec![8];
    cfg.nce.trainer = adam(0.01, 5);
    cfg
}

#[test]
fn tail_trigger_moves_bshap_by_c_but_weighted_gap_stays_tiny() {
    let c = 1.5;
    let t = 6.0;
    let normal = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let f: Field = Arc::new(FnField::new(|x: &[f64]| x[0]));
    let p = Arc::new(FnDensity::new(move |x: &[f64]| normal(x[0]) * normal(x[1])));
    let f2 = analytic_perturbation(f.clone(), &PerturbationSpec::new(1, t, c)).unwrap();

    let mut grid: Vec<[f64; 2]> = Vec::new();
    for i in -40..=40 {
        for j in -40..=40 {
            grid.push([i as f64 * 0.1, j as f64 * 0.1]);
        }
        grid.push([i as f64 * 0.1, t]);
    }
    let gap = grid
        .iter()
        .map(|u| (f.evaluate(u) - f2.evaluate(u)).abs() * p.density(u))
        .fold(0.0, f64::max);
    let p_tail = normal(0.0) * normal(t);
    assert!(gap <= c * p_tail * (1.0 + 1e-12));

    let x = pt(&[1.0, t]);
    let ctx1 = GameContext::new(f, x.clone(), Baseline::Fixed(pt(&[0.0, 0.0]))).unwrap().with_density(p.clone());
    let ctx2 = ctx1.clone().with_field(f2);
    let s = Coalition::new(vec![1], 2).unwrap();
    assert_eq!(bshap(&ctx2, &s).unwrap() - bshap(&ctx1, &s).unwrap(), c);
    assert!((jb(&ctx2, &s).unwrap() - jb(&ctx1, &s).unwrap()).abs() <= gap * (1.0 + 1e-12));
}

#[test]
fn ces_table_attack_shift_and_jbshap_bound() {
    let rows = vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![2.0, 1.0], vec![3.0, 0.0], vec![2.0, 0.0]];
    let data = Arc::new(Dataset::from_rows(rows.clone()).unwrap());
    let f = TableField::new(2, rows.iter().map(|r| (r.clone(), r[0] - r[1])), 0.0).unwrap();
    let x_t = pt(&[3.0, 0.0]);
    let delta = 0.75;
    let g = ces_empirical_attack(&f, &data, &x_t, delta).unwrap();

    let s0 = Coalition::new(vec![0], 2).unwrap();
    let base = Baseline::Fixed(pt(&[2.0, 1.0]));
    let before = GameContext::new(Arc::new(f.clone()), x_t.clone(), base.clone()).unwrap();
    let after = GameContext::new(Arc::new(g.clone()), x_t.clone(), base).unwrap();
    let shift = ces_empirical(&after, &data, &s0).unwrap().value - ces_empirical(&before, &data, &s0).unwrap().value;
    assert!((shift - delta).abs() < 1e-15);
    let mean = |t: &TableField| rows.iter().map(|r| t.evaluate(r)).sum::<f64>() / rows.len() as f64;
    assert!((mean(&g) - mean(&f) - delta / rows.len() as f64).abs() < 1e-15);

    let p = Arc::new(TableDensity::new(2, rows.iter().map(|r| (r.clone(), 0.2))).unwrap());
    let slice_max = rows.iter().filter(|r| r[0] == 3.0).map(|r| p.density(r)).fold(0.0, f64::max);
    for mask in 0..4 {
        let s = Coalition::from_mask(mask, 2).unwrap();
        let d = jb(&after.clone().with_density(p.clone()), &s).unwrap() - jb(&before.clone().with_density(p.clone()), &s).unwrap();
        assert!(d.abs() <= delta * slice_max + 1e-15);
    }
    let same = ces_empirical_attack(&f, &data, &x_t, 0.0).unwrap();
    assert_eq!(same.entries(), f.entries());
}

#[test]
fn finetune_without_attack_term_keeps_the_model() {
    let net = net_init::<f64>(&[3, 6, 1], 2).unwrap();
    let rows: Vec<DataPoint> = (0..20).map(|k| pt(&[k as f64 / 10.0, 1.0, -(k as f64) / 20.0])).collect();
    let pool: Vec<DataPoint> = (0..20).map(|k| pt(&[0.0, k as f64, 0.0])).collect();
    assert!(ScaledDensity::fit(Arc::new(ConstantDensity(1.0)), pool.iter().map(|p| p.values())).is_err());
    let low = Arc::new(FnDensity::new(|x: &[f64]| if x[1] > 5.0 { 0.0 } else { 1.0 }));
    let trainer = TrainerConfig::new(0.01, 8, 50, 0, LossKind::Mse).with_optimizer(Optimizer::adam());
    let spec = |threshold: f64, weights: (f64, f64)| FinetuneSpec {
        protected: 1,
        threshold,
        weights,
        kappa: 1.0,
        trainer: trainer.clone(),
    };
    let (a, _) = finetune_attack(&net, &rows, &pool, low.as_ref(), &spec(0.1, (1.0, 0.0))).unwrap();
    let (b, rep) = finetune_attack(&net, &rows, &pool, low.as_ref(), &spec(0.0, (1.0, 100.0))).unwrap();
    assert_eq!(rep.attacked_points, 0);
    for u in rows.iter().chain(&pool) {
        assert!((a.predict(u.values()) - net.predict(u.values())).abs() < 1e-3);
        assert!((b.predict(u.values()) - net.predict(u.values())).abs() < 1e-3);
    }
    let (_, rep) = finetune_attack(&net, &rows, &pool, low.as_ref(), &spec(0.5, (1.0, 1.0))).unwrap();
    assert_eq!(rep.attacked_points, 14);
}

#[test]
fn disabled_attack_leaves_attributions_unchanged() {
    let cfg = AttackConfig {
        attack_enabled: false,
        ..small_config()
    };
    let r = hiding_unfairness_experiment(&cfg).unwrap();
    assert_eq!(r.agreement_rate, 1.0);
    assert!(r.finetune.is_none());
    for s in &r.shifts {
        assert_eq!(s.before, s.after);
    }
}

#[test]
fn experiment_is_reproducible_and_reports_stages() {
    let cfg = small_config();
    let a = hiding_unfairness_experiment(&cfg).unwrap();
    let b = hiding_unfairness_experiment(&cfg).unwrap();
    assert_eq!(a, b);
    assert!((0.0..=1.0).contains(&a.agreement_rate));
    assert!(a.bar_chart_csv().starts_with("value_function,feature,before,after\n"));

    let bad = AttackConfig { protected: 9, ..small_config() };
    match hiding_unfairness_experiment(&bad) {
        Err(jbshap::Error::Stage { stage, .. }) => assert_eq!(stage, "config"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn unbiased_labels_ignore_the_protected_feature() {
    let (data, labels) = synth_biased_dataset(4000, 5, 2, 0.0, 13).unwrap();
    let xs: Vec<f64> = data.rows().iter().map(|r| r.get(2)).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, labels.iter().sum::<f64>() / n);
    let cov: f64 = xs.iter().zip(&labels).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / n;
    let sx = (xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>() / n).sqrt();
    let sy = (labels.iter().map(|y| (y - my).powi(2)).sum::<f64>() / n).sqrt();
    assert!((cov / (sx * sy)).abs() < 0.05);

    let (_, biased) = synth_biased_dataset(4000, 5, 2, 0.1, 13).unwrap();
    let diffs: Vec<f64> = biased.iter().zip(&labels).map(|(b, u)| b - u).collect();
    for (d, x) in diffs.iter().zip(&xs) {
        assert!((d - 0.1 * x).abs() < 1e-12);
    }
}
