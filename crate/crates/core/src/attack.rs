//! Low-density manipulation: analytic tail perturbations, density-guided
//! fine-tuning, and the hiding-unfairness experiment on synthetic data.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::context::{Baseline, GameContext};
use crate::density::{nce_density, nce_train, NceConfig, NoiseSpec, ScaledDensity};
use crate::domain::{DataPoint, Dataset};
use crate::error::{Error, Result};
use crate::field::{Density, DensityField, Field, FieldKind, ScalarField, TableField};
use crate::learners::{
    net_init, sgd_train, Component, FeedForwardNet, LossKind, Optimizer, Sample, TrainReport, TrainerConfig,
};
use crate::seed;
use crate::shapley::{exact_shapley, global_shapley};
use crate::value_functions::{
    ces_supervised_fit, Bshap, CesSupervised, EncodingChoice, Jbshap, MaskSampling, SurrogateConfig, ValueFunction,
};

/// Size of the bump added on the trigger slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Magnitude {
    Absolute(f64),
    /// `C = ε / K` with `K` the largest density on the conditioned slice.
    Normalized { epsilon: f64, k: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub target: usize,
    pub trigger: f64,
    pub magnitude: Magnitude,
    /// Inputs with `|x[target] − trigger| ≤ tolerance` are on the trigger.
    pub tolerance: f64,
}

impl PerturbationSpec {
    pub fn new(target: usize, trigger: f64, c: f64) -> Self {
        Self {
            target,
            trigger,
            magnitude: Magnitude::Absolute(c),
            tolerance: 1e-9,
        }
    }

    pub fn magnitude(&self) -> Result<f64> {
        let c = match self.magnitude {
            Magnitude::Absolute(c) => c,
            Magnitude::Normalized { epsilon, k } => {
                if !(k > 0.0) {
                    return Err(Error::invalid("slice normalizer K must be positive"));
                }
                epsilon / k
            }
        };
        if !c.is_finite() {
            return Err(Error::invalid("perturbation magnitude must be finite"));
        }
        Ok(c)
    }
}

/// `f(x) + C·1[|x[t] − trigger| ≤ tol]`; off the trigger it returns `f(x)`
/// unchanged.
pub struct PerturbedField {
    base: Field,
    target: usize,
    trigger: f64,
    tolerance: f64,
    c: f64,
}

impl ScalarField for PerturbedField {
    fn evaluate(&self, x: &[f64]) -> f64 {
        let fx = self.base.evaluate(x);
        if (x[self.target] - self.trigger).abs() <= self.tolerance {
            fx + self.c
        } else {
            fx
        }
    }

    fn kind(&self) -> FieldKind {
        FieldKind::Perturbed
    }
}

pub fn analytic_perturbation(f: Field, spec: &PerturbationSpec) -> Result<Field> {
    let c = spec.magnitude()?;
    if !(spec.tolerance >= 0.0) || !spec.trigger.is_finite() {
        return Err(Error::invalid("trigger and tolerance must be finite and nonnegative"));
    }
    Ok(Arc::new(PerturbedField {
        base: f,
        target: spec.target,
        trigger: spec.trigger,
        tolerance: spec.tolerance,
        c,
    }))
}

/// Synthetic tabular data with a binary protected attribute.
///
/// The other features are noisy linear images of a two-dimensional latent
/// factor, so splices of a row with the all-zero baseline usually leave the
/// data manifold. The protected attribute is independent of the latent
/// factor. Every column is standardized. Labels are
/// `base(x) + bias·x[protected]`, with `base` a logistic score in `(0, 1)` of
/// a fixed linear read-out of the non-protected features.
pub fn synth_biased_dataset(n: usize, d: usize, protected: usize, bias: f64, seed_value: u64) -> Result<(Dataset, Vec<f64>)> {
    if n == 0 {
        return Err(Error::invalid("dataset size must be at least 1"));
    }
    if d < 2 || protected >= d {
        return Err(Error::invalid("need d ≥ 2 and a protected index below d"));
    }
    let mut rng = seed::rng(seed::derive_named(seed_value, "synth"));
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    let loadings: Vec<[f64; 2]> = (0..d).map(|_| [normal(), normal()]).collect();
    let readout: Vec<f64> = (0..d).map(|_| normal()).collect();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    for _ in 0..n {
        let z = [normal(), normal()];
        let row = (0..d)
            .map(|j| {
                if j == protected {
                    if normal() > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    loadings[j][0] * z[0] + loadings[j][1] * z[1] + 0.1 * normal()
                }
            })
            .collect();
        rows.push(row);
    }
    for j in 0..d {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n as f64;
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        for r in rows.iter_mut() {
            r[j] = (r[j] - mean) / sd;
        }
    }
    let scale = ((d - 1) as f64).sqrt();
    let labels = rows
        .iter()
        .map(|r| {
            let score: f64 = (0..d).filter(|&j| j != protected).map(|j| readout[j] * r[j]).sum::<f64>() / scale;
            let base = 1.0 / (1.0 + (-2.0 * score).exp());
            base + bias * r[protected]
        })
        .collect();
    let names = (0..d)
        .map(|j| if j == protected { "protected".to_string() } else { format!("x{j}") })
        .collect();
    Ok((Dataset::from_rows(rows)?.with_names(names)?, labels))
}

/// Fine-tuning recipe for the manipulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinetuneSpec {
    pub protected: usize,
    /// Pool points with scaled density below this are attacked.
    pub threshold: f64,
    /// `(fidelity, attack)` loss weights.
    pub weights: (f64, f64),
    /// Off-manifold target is `−kappa · x[protected]`.
    pub kappa: f64,
    pub trainer: TrainerConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinetuneReport {
    pub attacked_points: usize,
    pub train: TrainReport,
}

/// Continues training `net` on `w₁·mse(net, f)` over `on_manifold` plus
/// `w₂·mse(net, −κ·x[protected])` over pool points whose scaled density is
/// below the threshold.
pub fn finetune_attack(
    net: &FeedForwardNet,
    on_manifold: &[DataPoint],
    pool: &[DataPoint],
    scaled: &dyn DensityField,
    spec: &FinetuneSpec,
) -> Result<(FeedForwardNet, FinetuneReport)> {
    if on_manifold.is_empty() {
        return Err(Error::invalid("fine-tuning needs on-manifold rows"));
    }
    if spec.protected >= net.input_width() {
        return Err(Error::invalid("protected index outside the model input"));
    }
    let mut samples: Vec<Sample> = on_manifold
        .iter()
        .map(|x| Sample::new(x.values().to_vec(), net.predict(x.values())))
        .collect();
    let mut attacked = 0;
    for u in pool {
        if scaled.density(u.values()) < spec.threshold {
            attacked += 1;
            samples.push(
                Sample::new(u.values().to_vec(), -spec.kappa * u.get(spec.protected)).in_component(Component::Second),
            );
        }
    }
    let mut trainer = spec.trainer.clone();
    trainer.loss = LossKind::Composite {
        first: spec.weights.0,
        second: spec.weights.1,
    };
    let (tuned, train) = sgd_train(net.clone(), &samples, &trainer)?;
    Ok((
        tuned,
        FinetuneReport {
            attacked_points: attacked,
            train,
        },
    ))
}

/// Modifies a table model by `+delta` on every data row whose first feature
/// equals `x_t[0]`.
pub fn ces_empirical_attack(f: &TableField, data: &Dataset, x_t: &DataPoint, delta: f64) -> Result<TableField> {
    if data.dim() != f.dim() || x_t.dim() != f.dim() {
        return Err(Error::invalid("table, data and target dimensions differ"));
    }
    let mut out = f.clone();
    let mut seen = std::collections::BTreeSet::new();
    for row in data.rows() {
        if row.get(0) == x_t.get(0) && seen.insert(crate::domain::point_key(row.values())) {
            let current = f.evaluate(row.values());
            out.insert(row.values().to_vec(), current + delta)?;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackValueFunction {
    Bshap,
    Jbshap,
    CesSupervised,
}

impl AttackValueFunction {
    pub fn name(self) -> &'static str {
        match self {
            AttackValueFunction::Bshap => "bshap",
            AttackValueFunction::Jbshap => "jbshap",
            AttackValueFunction::CesSupervised => "ces_supervised",
        }
    }
}

/// Full experiment configuration; the defaults are the desk-scale recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackConfig {
    pub n: usize,
    pub d: usize,
    pub protected: usize,
    pub bias: f64,
    pub test_fraction: f64,
    pub model_hidden: Vec<usize>,
    pub model_trainer: TrainerConfig,
    pub nce: NceConfig,
    pub noise_ratio: usize,
    pub pool_ratio: usize,
    pub attack_enabled: bool,
    pub threshold: f64,
    pub weights: (f64, f64),
    pub kappa: f64,
    pub finetune_trainer: TrainerConfig,
    pub value_functions: Vec<AttackValueFunction>,
    pub surrogate: SurrogateConfig,
    pub explicands: usize,
    pub seed: u64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            n: 2000,
            d: 8,
            protected: 0,
            bias: 0.1,
            test_fraction: 0.2,
            model_hidden: vec![64, 64, 64],
            model_trainer: TrainerConfig::new(0.003, 32, 60, 0, LossKind::Mse).with_optimizer(Optimizer::adam()),
            nce: NceConfig::new(
                vec![64, 64],
                TrainerConfig::new(0.003, 32, 40, 0, LossKind::Bce).with_optimizer(Optimizer::adam()),
            ),
            noise_ratio: 1,
            pool_ratio: 2,
            attack_enabled: true,
            threshold: 0.1,
            weights: (1.0, 100.0),
            kappa: 0.25,
            finetune_trainer: TrainerConfig::new(0.001, 64, 400, 0, LossKind::Mse).with_optimizer(Optimizer::adam()),
            value_functions: vec![AttackValueFunction::Bshap, AttackValueFunction::Jbshap],
            surrogate: SurrogateConfig {
                hidden: vec![64, 64],
                encoding: EncodingChoice::Masked,
                masks: MaskSampling::Sampled { per_row: 8 },
                trainer: TrainerConfig::new(0.003, 64, 20, 0, LossKind::Mse).with_optimizer(Optimizer::adam()),
            },
            explicands: 100,
            seed: 0,
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 10 || self.d < 2 || self.protected >= self.d {
            return Err(Error::config("need n ≥ 10, d ≥ 2 and protected < d"));
        }
        if self.d > 20 {
            return Err(Error::config("exact attributions need d ≤ 20"));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::config("test fraction must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::config("density threshold must lie in [0, 1]"));
        }
        if self.noise_ratio == 0 || self.pool_ratio == 0 || self.explicands == 0 {
            return Err(Error::config("noise ratio, pool ratio and explicand count must be positive"));
        }
        if self.value_functions.is_empty() {
            return Err(Error::config("no value functions selected"));
        }
        self.model_trainer.validate()?;
        self.nce.trainer.validate()?;
        self.finetune_trainer.validate()?;
        self.surrogate.trainer.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionShift {
    pub value_function: AttackValueFunction,
    /// Normalized global attribution per feature.
    pub before: Vec<f64>,
    pub after: Vec<f64>,
    /// `(before − after) / |before|` on the protected feature; above 1 means
    /// the sign flipped.
    pub drop_ratio: f64,
    /// `|after − before| / |before|` on the protected feature.
    pub relative_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub protected: usize,
    pub feature_names: Vec<String>,
    /// Share of held-out rows where both models make the same decision.
    pub agreement_rate: f64,
    pub decision_threshold: f64,
    pub explicands: usize,
    pub nce_accuracy: f64,
    pub finetune: Option<FinetuneReport>,
    /// Surrogate training loss on the original and attacked model.
    pub surrogate_loss: Option<(f64, f64)>,
    pub shifts: Vec<AttributionShift>,
}

impl AttackReport {
    pub fn shift(&self, vf: AttackValueFunction) -> Option<&AttributionShift> {
        self.shifts.iter().find(|s| s.value_function == vf)
    }

    /// `value_function,feature,before,after` rows.
    pub fn bar_chart_csv(&self) -> String {
        let mut out = String::from("value_function,feature,before,after\n");
        for s in &self.shifts {
            for (j, name) in self.feature_names.iter().enumerate() {
                let _ = writeln!(out, "{},{},{},{}", s.value_function.name(), name, s.before[j], s.after[j]);
            }
        }
        out
    }
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

fn global_attribution(
    vf: AttackValueFunction,
    model: &FeedForwardNet,
    density: &Density,
    surrogate_data: &Dataset,
    cfg: &AttackConfig,
    explicands: &[DataPoint],
) -> Result<(Vec<f64>, Option<f64>)> {
    let d = cfg.d;
    let field: Field = Arc::new(model.clone());
    let baseline = Baseline::Fixed(DataPoint::zeros(d));
    let surrogate = match vf {
        AttackValueFunction::CesSupervised => {
            let s = ces_supervised_fit(model, surrogate_data, &cfg.surrogate, seed::derive_named(cfg.seed, "surrogate"))?;
            Some(Arc::new(s))
        }
        _ => None,
    };
    let mut attrs = Vec::with_capacity(explicands.len());
    for x in explicands {
        let ctx = GameContext::new(field.clone(), x.clone(), baseline.clone())?.with_density(density.clone());
        let v: Box<dyn ValueFunction> = match vf {
            AttackValueFunction::Bshap => Box::new(Bshap::new(ctx)?),
            AttackValueFunction::Jbshap => Box::new(Jbshap::new(ctx)?),
            AttackValueFunction::CesSupervised => {
                Box::new(CesSupervised::new(surrogate.clone().expect("fitted above"), ctx)?)
            }
        };
        attrs.push(exact_shapley(v.as_ref(), d)?);
    }
    let loss = surrogate.as_ref().and_then(|s| s.report().map(|r| r.last.total));
    Ok((global_shapley(&attrs, true)?.phi, loss))
}

/// Trains a biased model, an NCE density and (optionally) surrogates;
/// fine-tunes the model to hide the protected feature off the data
/// manifold; reports global attributions before and after.
pub fn hiding_unfairness_experiment(cfg: &AttackConfig) -> Result<AttackReport> {
    stage("config", cfg.validate())?;
    let (data, labels) = stage(
        "data",
        synth_biased_dataset(cfg.n, cfg.d, cfg.protected, cfg.bias, seed::derive_named(cfg.seed, "data")),
    )?;
    let n_test = ((cfg.n as f64) * cfg.test_fraction).round().max(1.0) as usize;
    let n_train = cfg.n - n_test;
    let train = stage("data", Dataset::new(data.rows()[..n_train].to_vec()))?;
    let test = &data.rows()[n_train..];

    let mut widths = vec![cfg.d];
    widths.extend(&cfg.model_hidden);
    widths.push(1);
    let model = stage("model", net_init::<f64>(&widths, seed::derive_named(cfg.seed, "model-init")))?;
    let samples: Vec<Sample> = train
        .rows()
        .iter()
        .zip(&labels)
        .map(|(x, &y)| Sample::new(x.values().to_vec(), y))
        .collect();
    let mut trainer = cfg.model_trainer.clone();
    trainer.seed = seed::derive_named(cfg.seed, "model-order");
    trainer.loss = LossKind::Mse;
    let (model, _) = stage("model", sgd_train(model, &samples, &trainer))?;

    let zero = Baseline::Fixed(DataPoint::zeros(cfg.d));
    let mut noise = NoiseSpec::new(zero.clone(), seed::derive_named(cfg.seed, "nce-noise"));
    noise.ratio = cfg.noise_ratio;
    let ood = stage("density", nce_train(&train, &noise, &cfg.nce, seed::derive_named(cfg.seed, "nce")))?;
    let mut held_out_noise = NoiseSpec::new(zero.clone(), seed::derive_named(cfg.seed, "nce-eval"));
    held_out_noise.ratio = 1;
    let test_set = stage("density", Dataset::new(test.to_vec()))?;
    let eval_noise = stage("density", held_out_noise.generate(&test_set))?;
    let nce_accuracy = ood.accuracy(test, &eval_noise);
    let density: Density = Arc::new(nce_density(ood));

    let mut pool_spec = NoiseSpec::new(zero, seed::derive_named(cfg.seed, "pool"));
    pool_spec.ratio = cfg.pool_ratio;
    let pool = stage("attack", pool_spec.generate(&train))?;

    let (attacked, finetune) = if cfg.attack_enabled {
        let scaled = stage(
            "attack",
            ScaledDensity::fit(
                density.clone(),
                pool.iter().map(|p| p.values()).chain(train.rows().iter().map(|r| r.values())),
            ),
        )?;
        let mut ft_trainer = cfg.finetune_trainer.clone();
        ft_trainer.seed = seed::derive_named(cfg.seed, "finetune-order");
        let spec = FinetuneSpec {
            protected: cfg.protected,
            threshold: cfg.threshold,
            weights: cfg.weights,
            kappa: cfg.kappa,
            trainer: ft_trainer,
        };
        let (net, rep) = stage("attack", finetune_attack(&model, train.rows(), &pool, &scaled, &spec))?;
        (net, Some(rep))
    } else {
        (model.clone(), None)
    };

    let mut sorted = labels[..n_train].to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let threshold = sorted[sorted.len() / 2];
    let agree = test
        .iter()
        .filter(|x| (model.predict(x.values()) > threshold) == (attacked.predict(x.values()) > threshold))
        .count();
    let agreement_rate = agree as f64 / test.len() as f64;

    let explicands: Vec<DataPoint> = test
        .iter()
        .filter(|x| x.get(cfg.protected) > 0.0)
        .take(cfg.explicands)
        .cloned()
        .collect();
    if explicands.is_empty() {
        return Err(Error::invalid("no held-out row has the protected feature active").in_stage("explain"));
    }

    let mut shifts = Vec::new();
    let mut surrogate_loss = None;
    let mut chosen = cfg.value_functions.clone();
    chosen.sort();
    chosen.dedup();
    for vf in chosen {
        let (before, lb) = stage("explain", global_attribution(vf, &model, &density, &train, cfg, &explicands))?;
        let (after, la) = stage("explain", global_attribution(vf, &attacked, &density, &train, cfg, &explicands))?;
        if let (Some(b), Some(a)) = (lb, la) {
            surrogate_loss = Some((b, a));
        }
        let (pb, pa) = (before[cfg.protected], after[cfg.protected]);
        let denom = pb.abs().max(f64::MIN_POSITIVE);
        shifts.push(AttributionShift {
            value_function: vf,
            drop_ratio: (pb - pa) / denom,
            relative_change: (pa - pb).abs() / denom,
            before,
            after,
        });
    }

    Ok(AttackReport {
        protected: cfg.protected,
        feature_names: data.names().map(<[String]>::to_vec).unwrap_or_default(),
        agreement_rate,
        decision_threshold: threshold,
        explicands: explicands.len(),
        nce_accuracy,
        finetune,
        surrogate_loss,
        shifts,
    })
}

/// Largest `|f₁ − f₂|·p` over an explicit list of points.
pub fn weighted_sup_gap(f1: &dyn ScalarField, f2: &dyn ScalarField, p: &dyn DensityField, points: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .map(|u| (f1.evaluate(u) - f2.evaluate(u)).abs() * p.density(u))
        .fold(0.0, f64::max)
}

/// Count of rows per distinct value of feature 0, for the table attack.
pub fn first_feature_counts(data: &Dataset) -> BTreeMap<u64, usize> {
    let mut m = BTreeMap::new();
    for r in data.rows() {
        *m.entry(r.get(0).to_bits()).or_insert(0) += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FnField;

    #[test]
    fn perturbation_on_and_off_trigger() {
        let f: Field = Arc::new(FnField::new(|x: &[f64]| x[0] * 0.1 + x[1]));
        let g = analytic_perturbation(f.clone(), &PerturbationSpec::new(1, 8.0, 2.5)).unwrap();
        for x in [[0.3, 1.0], [-1.7, 0.0], [0.1, 7.9999]] {
            assert_eq!(g.evaluate(&x).to_bits(), f.evaluate(&x).to_bits());
        }
        assert_eq!(g.evaluate(&[1.0, 8.0]), f.evaluate(&[1.0, 8.0]) + 2.5);
    }

    #[test]
    fn normalized_magnitude() {
        let mut spec = PerturbationSpec::new(0, 1.0, 0.0);
        spec.magnitude = Magnitude::Normalized { epsilon: 0.5, k: 0.25 };
        assert_eq!(spec.magnitude().unwrap(), 2.0);
        spec.magnitude = Magnitude::Normalized { epsilon: 0.5, k: 0.0 };
        assert!(spec.magnitude().is_err());
    }

    #[test]
    fn synth_is_deterministic_and_standardized() {
        let (a, la) = synth_biased_dataset(300, 5, 0, 0.1, 4).unwrap();
        let (b, lb) = synth_biased_dataset(300, 5, 0, 0.1, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
        let mean = a.mean().unwrap();
        assert!(mean.values().iter().all(|m| m.abs() < 1e-12));
        assert!(synth_biased_dataset(0, 5, 0, 0.1, 4).is_err());
    }

    #[test]
    fn ces_table_attack_shifts_matching_rows() {
        let data = Dataset::from_rows(vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![2.0, 1.0]]).unwrap();
        let f = TableField::new(2, data.rows().iter().map(|r| (r.values().to_vec(), r.get(1))), 0.0).unwrap();
        let x_t = DataPoint::new(vec![1.0, 1.0]).unwrap();
        let g = ces_empirical_attack(&f, &data, &x_t, 0.5).unwrap();
        assert_eq!(g.evaluate(&[1.0, 0.0]), 0.5);
        assert_eq!(g.evaluate(&[1.0, 1.0]), 1.5);
        assert_eq!(g.evaluate(&[2.0, 1.0]), 1.0);
        let same = ces_empirical_attack(&f, &data, &x_t, 0.0).unwrap();
        assert_eq!(same.entries(), f.entries());
    }
}
