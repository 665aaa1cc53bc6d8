//! Density estimators: empirical, Gaussian-smoothed empirical, categorical
//! products, explicit tables, and the noise-contrastive classifier ratio.

use std::collections::HashMap;
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::context::Baseline;
use crate::domain::{point_key, splice_into, Coalition, DataPoint, Dataset};
use crate::error::{Error, Result};
use crate::field::{Density, DensityField, DensityKind};
use crate::learners::{net_init, sgd_train, FeedForwardNet, NetworkDoc, OutputActivation, Sample, TrainReport, TrainerConfig};
use crate::scalar::Scalar;
use crate::seed;

/// `p(x) = (#rows equal to x) / m`.
#[derive(Debug, Clone)]
pub struct EmpiricalDensity<T = f64> {
    counts: HashMap<Vec<u64>, usize>,
    rows: usize,
    _scalar: std::marker::PhantomData<T>,
}

pub fn empirical_density<T: Scalar>(data: &Dataset<T>) -> Result<EmpiricalDensity<T>> {
    data.require_nonempty("empirical density")?;
    let mut counts = HashMap::new();
    for row in data.rows() {
        *counts.entry(point_key(row.values())).or_insert(0) += 1;
    }
    Ok(EmpiricalDensity {
        counts,
        rows: data.len(),
        _scalar: std::marker::PhantomData,
    })
}

impl<T: Scalar> EmpiricalDensity<T> {
    pub fn count(&self, x: &[T]) -> usize {
        self.counts.get(&point_key(x)).copied().unwrap_or(0)
    }

    pub fn distinct_rows(&self) -> usize {
        self.counts.len()
    }
}

impl<T: Scalar> DensityField<T> for EmpiricalDensity<T> {
    fn density(&self, x: &[T]) -> T {
        T::from_count(self.count(x)) / T::from_count(self.rows)
    }

    fn kind(&self) -> DensityKind {
        DensityKind::Empirical
    }

    fn is_normalized(&self) -> bool {
        true
    }
}

/// `p(x) = (1/m) Σ_i N(x; x_i, σ² I)`.
#[derive(Debug, Clone)]
pub struct SmoothedEmpirical<T = f64> {
    centers: Vec<Vec<T>>,
    sigma: T,
    log_norm: T,
}

pub fn smoothed_empirical<T: Scalar>(data: &Dataset<T>, sigma: T) -> Result<SmoothedEmpirical<T>> {
    if !(sigma.is_finite() && sigma > T::zero()) {
        return Err(Error::invalid("smoothing bandwidth must be positive"));
    }
    data.require_nonempty("smoothed empirical density")?;
    let d = T::from_count(data.dim());
    let two_pi = T::lit(2.0 * std::f64::consts::PI);
    let log_norm = -(d / T::lit(2.0)) * (two_pi * sigma * sigma).ln();
    Ok(SmoothedEmpirical {
        centers: data.rows().iter().map(|r| r.values().to_vec()).collect(),
        sigma,
        log_norm,
    })
}

impl<T: Scalar> DensityField<T> for SmoothedEmpirical<T> {
    fn density(&self, x: &[T]) -> T {
        let denom = T::lit(2.0) * self.sigma * self.sigma;
        let total: T = self
            .centers
            .iter()
            .map(|c| {
                let sq: T = c.iter().zip(x).map(|(&a, &b)| (a - b) * (a - b)).sum();
                (self.log_norm - sq / denom).exp()
            })
            .sum();
        total / T::from_count(self.centers.len())
    }

    fn kind(&self) -> DensityKind {
        DensityKind::SmoothedEmpirical
    }

    fn is_normalized(&self) -> bool {
        true
    }
}

/// Probability table of one categorical coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalTable {
    pub values: Vec<f64>,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CategoricalProduct<T = f64> {
    tables: Vec<HashMap<u64, T>>,
}

/// `p(x) = Π_i table_i[x_i]`, zero off-support.
pub fn categorical_product<T: Scalar>(tables: &[CategoricalTable]) -> Result<CategoricalProduct<T>> {
    let mut out = Vec::with_capacity(tables.len());
    for (i, t) in tables.iter().enumerate() {
        if t.values.is_empty() || t.values.len() != t.probs.len() {
            return Err(Error::invalid(format!("table {i}: values and probabilities must pair up")));
        }
        if t.probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::invalid(format!("table {i}: probabilities must be nonnegative")));
        }
        let total: f64 = t.probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("table {i}: probabilities sum to {total}")));
        }
        let mut map = HashMap::new();
        for (&v, &p) in t.values.iter().zip(&t.probs) {
            if !v.is_finite() {
                return Err(Error::invalid(format!("table {i}: support values must be finite")));
            }
            if map.insert(point_key(&[T::lit(v)])[0], T::lit(p)).is_some() {
                return Err(Error::invalid(format!("table {i}: duplicate support value {v}")));
            }
        }
        out.push(map);
    }
    Ok(CategoricalProduct { tables: out })
}

impl<T: Scalar> DensityField<T> for CategoricalProduct<T> {
    fn density(&self, x: &[T]) -> T {
        if x.len() != self.tables.len() {
            return T::zero();
        }
        self.tables.iter().zip(x).fold(T::one(), |acc, (t, &v)| {
            acc * t.get(&point_key(&[v])[0]).copied().unwrap_or(T::zero())
        })
    }

    fn kind(&self) -> DensityKind {
        DensityKind::CategoricalProduct
    }

    fn is_normalized(&self) -> bool {
        true
    }
}

/// Explicit nonnegative weights on exact points, zero elsewhere.
#[derive(Debug, Clone)]
pub struct TableDensity<T = f64> {
    dim: usize,
    entries: HashMap<Vec<u64>, (Vec<T>, T)>,
}

impl<T: Scalar> TableDensity<T> {
    pub fn new(dim: usize, entries: impl IntoIterator<Item = (Vec<T>, T)>) -> Result<Self> {
        let mut map = HashMap::new();
        for (point, w) in entries {
            if point.len() != dim {
                return Err(Error::invalid("density table entry has the wrong dimension"));
            }
            if !(w.is_finite() && w >= T::zero()) {
                return Err(Error::invalid("density table weights must be finite and nonnegative"));
            }
            map.insert(point_key(&point), (point, w));
        }
        Ok(Self { dim, entries: map })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn total(&self) -> T {
        self.entries.values().map(|(_, w)| *w).sum()
    }

    /// Entries in a deterministic order.
    pub fn entries(&self) -> Vec<(&[T], T)> {
        let mut keyed: Vec<_> = self.entries.iter().collect();
        keyed.sort_by(|a, b| a.0.cmp(b.0));
        keyed.into_iter().map(|(_, (p, w))| (p.as_slice(), *w)).collect()
    }
}

impl<T: Scalar> DensityField<T> for TableDensity<T> {
    fn density(&self, x: &[T]) -> T {
        self.entries.get(&point_key(x)).map_or(T::zero(), |(_, w)| *w)
    }

    fn kind(&self) -> DensityKind {
        DensityKind::Table
    }

    fn is_normalized(&self) -> bool {
        (self.total() - T::one()).abs() <= T::lit(1e-9)
    }
}

/// `p ≡ c`.
#[derive(Debug, Clone, Copy)]
pub struct ConstantDensity<T = f64>(pub T);

impl<T: Scalar> DensityField<T> for ConstantDensity<T> {
    fn density(&self, _x: &[T]) -> T {
        self.0.max(T::zero())
    }

    fn kind(&self) -> DensityKind {
        DensityKind::Constant
    }

    fn is_normalized(&self) -> bool {
        false
    }
}

/// Conic combination `Σ_k α_k p_k` with `α_k ≥ 0`.
#[derive(Clone)]
pub struct MixtureDensity<T = f64> {
    terms: Vec<(T, Density<T>)>,
}

impl<T: Scalar> MixtureDensity<T> {
    pub fn new(terms: Vec<(T, Density<T>)>) -> Result<Self> {
        if terms.iter().any(|(a, _)| !(a.is_finite() && *a >= T::zero())) {
            return Err(Error::invalid("mixture coefficients must be nonnegative"));
        }
        Ok(Self { terms })
    }
}

impl<T: Scalar> DensityField<T> for MixtureDensity<T> {
    fn density(&self, x: &[T]) -> T {
        self.terms
            .iter()
            .fold(T::zero(), |acc, (a, p)| acc + *a * p.density(x))
    }

    fn kind(&self) -> DensityKind {
        DensityKind::Mixture
    }

    fn is_normalized(&self) -> bool {
        false
    }
}

/// Closure-backed density; negative outputs are clamped to zero.
#[derive(Clone)]
pub struct FnDensity<T = f64> {
    func: Arc<dyn Fn(&[T]) -> T + Send + Sync>,
}

impl<T: Scalar> FnDensity<T> {
    pub fn new(func: impl Fn(&[T]) -> T + Send + Sync + 'static) -> Self {
        Self { func: Arc::new(func) }
    }
}

impl<T: Scalar> DensityField<T> for FnDensity<T> {
    fn density(&self, x: &[T]) -> T {
        (self.func)(x).max(T::zero())
    }

    fn kind(&self) -> DensityKind {
        DensityKind::Custom
    }

    fn is_normalized(&self) -> bool {
        false
    }
}

/// Min-max rescaling of a density to `[0, 1]` over a reference pool.
#[derive(Clone)]
pub struct ScaledDensity<T: Scalar = f64> {
    inner: Density<T>,
    lo: T,
    span: T,
}

impl<T: Scalar> ScaledDensity<T> {
    pub fn fit<'a>(inner: Density<T>, pool: impl IntoIterator<Item = &'a [T]>) -> Result<Self> {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for x in pool {
            let v = inner.density(x);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return Err(Error::invalid("density scaling needs a nonempty pool"));
        }
        let span = hi - lo;
        if span <= T::zero() {
            return Err(Error::DegenerateNormalization(
                "density is constant over the scaling pool".into(),
            ));
        }
        Ok(Self { inner, lo, span })
    }
}

impl<T: Scalar> DensityField<T> for ScaledDensity<T> {
    fn density(&self, x: &[T]) -> T {
        ((self.inner.density(x) - self.lo) / self.span).max(T::zero())
    }

    fn kind(&self) -> DensityKind {
        DensityKind::Scaled
    }

    fn is_normalized(&self) -> bool {
        false
    }
}

/// Noise for contrastive training: `splice(x, x', S)` with `x` a uniformly
/// drawn data row, `S` uniform over all `2^d` coalitions and `x'` from the
/// baseline specification.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec<T = f64> {
    pub baseline: Baseline<T>,
    /// Noise points generated per data row.
    pub ratio: usize,
    pub seed: u64,
}

impl<T: Scalar> NoiseSpec<T> {
    pub fn new(baseline: Baseline<T>, seed: u64) -> Self {
        Self {
            baseline,
            ratio: 1,
            seed,
        }
    }

    pub fn generate(&self, data: &Dataset<T>) -> Result<Vec<DataPoint<T>>> {
        data.require_nonempty("noise generation")?;
        if self.ratio == 0 {
            return Err(Error::invalid("noise ratio must be at least 1"));
        }
        let d = data.dim();
        if self.baseline.dim() != d {
            return Err(Error::invalid("noise baseline dimension differs from the data"));
        }
        let picker = match &self.baseline {
            Baseline::Distribution(dist) => Some(
                WeightedIndex::new(dist.weights().iter().map(|w| w.as_f64()))
                    .map_err(|e| Error::invalid(format!("baseline weights: {e}")))?,
            ),
            Baseline::Fixed(_) => None,
        };
        let mut rng = seed::rng(self.seed);
        let n = self.ratio * data.len();
        let mut out = Vec::with_capacity(n);
        let mut buf = Vec::with_capacity(d);
        for _ in 0..n {
            let row = &data.rows()[rng.random_range(0..data.len())];
            let members: Vec<usize> = (0..d).filter(|_| rng.random_bool(0.5)).collect();
            let s = Coalition::new(members, d)?;
            let base = match (&self.baseline, &picker) {
                (Baseline::Fixed(p), _) => p,
                (Baseline::Distribution(dist), Some(pick)) => &dist.points()[pick.sample(&mut rng)],
                (Baseline::Distribution(_), None) => unreachable!(),
            };
            splice_into(row.values(), base.values(), &s, &mut buf);
            out.push(DataPoint::new(buf.clone())?);
        }
        Ok(out)
    }
}

/// Architecture and optimisation settings for the contrastive classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NceConfig {
    pub hidden: Vec<usize>,
    pub clip: (f64, f64),
    pub trainer: TrainerConfig,
}

impl NceConfig {
    pub fn new(hidden: Vec<usize>, trainer: TrainerConfig) -> Self {
        Self {
            hidden,
            clip: DEFAULT_CLIP,
            trainer,
        }
    }
}

pub const DEFAULT_CLIP: (f64, f64) = (0.01, 0.99);

/// Trained data-vs-noise scorer.
#[derive(Debug, Clone, PartialEq)]
pub struct OodClassifier<T = f64> {
    net: FeedForwardNet<T>,
    clip: (T, T),
    seed: u64,
    report: Option<TrainReport>,
}

fn check_clip(lo: f64, hi: f64) -> Result<()> {
    if !(lo > 0.0 && hi < 1.0 && lo < hi) {
        return Err(Error::config(format!("clip bounds ({lo}, {hi}) must satisfy 0 < lo < hi < 1")));
    }
    Ok(())
}

impl<T: Scalar> OodClassifier<T> {
    pub fn from_net(net: FeedForwardNet<T>, clip: (f64, f64), seed: u64) -> Result<Self> {
        check_clip(clip.0, clip.1)?;
        if net.output_width() != 1 {
            return Err(Error::invalid("classifier net must have a single output"));
        }
        Ok(Self {
            net: net.with_output(OutputActivation::Sigmoid),
            clip: (T::lit(clip.0), T::lit(clip.1)),
            seed,
            report: None,
        })
    }

    pub fn raw_score(&self, x: &[T]) -> T {
        self.net.predict(x)
    }

    /// Score clipped to `[lo, hi]`.
    pub fn score(&self, x: &[T]) -> T {
        self.raw_score(x).max(self.clip.0).min(self.clip.1)
    }

    pub fn clip(&self) -> (T, T) {
        self.clip
    }

    pub fn net(&self) -> &FeedForwardNet<T> {
        &self.net
    }

    pub fn report(&self) -> Option<&TrainReport> {
        self.report.as_ref()
    }

    /// Fraction of `positives` scored ≥ 0.5 plus `negatives` scored < 0.5.
    pub fn accuracy(&self, positives: &[DataPoint<T>], negatives: &[DataPoint<T>]) -> f64 {
        let half = T::lit(0.5);
        let hits = positives.iter().filter(|p| self.raw_score(p.values()) >= half).count()
            + negatives.iter().filter(|p| self.raw_score(p.values()) < half).count();
        hits as f64 / (positives.len() + negatives.len()).max(1) as f64
    }

    pub fn to_doc(&self) -> ClassifierDoc {
        ClassifierDoc {
            network: self.net.to_doc(),
            clip: (self.clip.0.as_f64(), self.clip.1.as_f64()),
            seed: self.seed,
        }
    }

    pub fn from_doc(doc: &ClassifierDoc) -> Result<Self> {
        Self::from_net(FeedForwardNet::from_doc(&doc.network)?, doc.clip, doc.seed)
    }
}

/// JSON form of a trained classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierDoc {
    pub network: NetworkDoc,
    pub clip: (f64, f64),
    pub seed: u64,
}

/// Trains a classifier separating data rows (label 1) from spliced noise
/// (label 0) with binary cross-entropy. Classes carry equal total weight.
///
/// `seed` drives both initialization and the minibatch order; the trainer's
/// own seed field is replaced.
pub fn nce_train<T: Scalar>(
    data: &Dataset<T>,
    noise: &NoiseSpec<T>,
    cfg: &NceConfig,
    seed_value: u64,
) -> Result<OodClassifier<T>> {
    data.require_nonempty("contrastive training")?;
    let noise_points = noise.generate(data)?;
    nce_fit(data, &noise_points, cfg, seed_value)
}

/// [`nce_train`] against an explicit noise sample.
pub fn nce_fit<T: Scalar>(
    data: &Dataset<T>,
    noise_points: &[DataPoint<T>],
    cfg: &NceConfig,
    seed_value: u64,
) -> Result<OodClassifier<T>> {
    check_clip(cfg.clip.0, cfg.clip.1)?;
    data.require_nonempty("contrastive training")?;
    if noise_points.is_empty() {
        return Err(Error::invalid("contrastive training needs noise points"));
    }
    if noise_points.iter().any(|p| p.dim() != data.dim()) {
        return Err(Error::invalid("noise points differ in dimension from the data"));
    }
    let true_weight = T::from_count(noise_points.len()) / T::from_count(data.len());
    let mut samples: Vec<Sample<T>> = data
        .rows()
        .iter()
        .map(|r| Sample::new(r.values().to_vec(), T::one()).weighted(true_weight))
        .collect();
    samples.extend(noise_points.iter().map(|p| Sample::new(p.values().to_vec(), T::zero())));

    let mut widths = vec![data.dim()];
    widths.extend(&cfg.hidden);
    widths.push(1);
    let net = net_init::<T>(&widths, seed::derive_named(seed_value, "nce-init"))?.with_output(OutputActivation::Sigmoid);
    let mut trainer = cfg.trainer.clone();
    trainer.seed = seed::derive_named(seed_value, "nce-order");
    trainer.loss = crate::learners::LossKind::Bce;
    let (net, report) = sgd_train(net, &samples, &trainer)?;
    let mut clf = OodClassifier::from_net(net, cfg.clip, seed_value)?;
    clf.report = Some(report);
    Ok(clf)
}

/// Unnormalized density `OOD(x) / (1 − OOD(x))` with the noise density taken as 1.
#[derive(Debug, Clone)]
pub struct NceDensity<T = f64> {
    ood: OodClassifier<T>,
}

pub fn nce_density<T: Scalar>(ood: OodClassifier<T>) -> NceDensity<T> {
    NceDensity { ood }
}

impl<T: Scalar> NceDensity<T> {
    pub fn classifier(&self) -> &OodClassifier<T> {
        &self.ood
    }

    /// Density implied by a (raw) classifier score after clipping.
    pub fn ratio_of(&self, raw: T) -> T {
        let (lo, hi) = self.ood.clip;
        let s = raw.max(lo).min(hi);
        s / (T::one() - s)
    }
}

impl<T: Scalar> DensityField<T> for NceDensity<T> {
    fn density(&self, x: &[T]) -> T {
        self.ratio_of(self.ood.raw_score(x))
    }

    fn kind(&self) -> DensityKind {
        DensityKind::Nce
    }

    fn is_normalized(&self) -> bool {
        false
    }
}
