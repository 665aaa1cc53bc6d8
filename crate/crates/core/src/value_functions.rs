//! Set value functions `v(S)` derived from a model, a density, an explicand
//! and a baseline.
//!
//! Off-manifold: [`bshap`], [`rbshap`]. Joint baseline: [`jbshap`],
//! [`rjbshap`]. Conditional expectation: [`ces_empirical`], [`ces_sample`],
//! [`ces_supervised`]. Each has a struct form implementing [`ValueFunction`]
//! so it can be handed to the Shapley estimators.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::context::{product_grid, GameContext};
use crate::domain::{enumerate_coalitions, point_key, splice_into, Coalition, DataPoint, Dataset};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::learners::{encode_masked, net_init, sgd_train, FeedForwardNet, NetworkDoc, Sample, TrainReport, TrainerConfig};
use crate::scalar::Scalar;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    Bshap,
    Rbshap,
    Jbshap,
    Rjbshap,
    CesEmpirical,
    CesSample,
    CesSupervised,
    Table,
    Custom,
}

impl ValueKind {
    pub fn name(self) -> &'static str {
        match self {
            ValueKind::Bshap => "bshap",
            ValueKind::Rbshap => "rbshap",
            ValueKind::Jbshap => "jbshap",
            ValueKind::Rjbshap => "rjbshap",
            ValueKind::CesEmpirical => "ces_empirical",
            ValueKind::CesSample => "ces_sample",
            ValueKind::CesSupervised => "ces_supervised",
            ValueKind::Table => "table",
            ValueKind::Custom => "custom",
        }
    }
}

/// A cooperative game over `d` features.
///
/// Randomized estimators derive their RNG from `(seed, S)`, so evaluation is
/// call-order independent and safe to run from several threads.
pub trait ValueFunction<T: Scalar = f64>: Send + Sync {
    fn value(&self, s: &Coalition) -> Result<T>;

    fn dim(&self) -> usize;

    fn kind(&self) -> ValueKind;
}

impl<T: Scalar, V: ValueFunction<T> + ?Sized> ValueFunction<T> for Box<V> {
    fn value(&self, s: &Coalition) -> Result<T> {
        (**self).value(s)
    }

    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn kind(&self) -> ValueKind {
        (**self).kind()
    }
}

impl<T: Scalar, V: ValueFunction<T> + ?Sized> ValueFunction<T> for Arc<V> {
    fn value(&self, s: &Coalition) -> Result<T> {
        (**self).value(s)
    }

    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn kind(&self) -> ValueKind {
        (**self).kind()
    }
}

fn check_coalition<T: Scalar>(ctx: &GameContext<T>, s: &Coalition) -> Result<()> {
    if s.dim() != ctx.dim() {
        return Err(Error::invalid(format!(
            "coalition over {} features for a d={} game",
            s.dim(),
            ctx.dim()
        )));
    }
    Ok(())
}

fn check_samples(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    Ok(())
}

/// `f(x_S; x'_{S̄})`.
pub fn bshap<T: Scalar>(ctx: &GameContext<T>, s: &Coalition) -> Result<T> {
    check_coalition(ctx, s)?;
    let base = ctx.fixed_baseline()?;
    let mut buf = Vec::with_capacity(ctx.dim());
    splice_into(ctx.explicand().values(), base.values(), s, &mut buf);
    Ok(ctx.field().evaluate(&buf))
}

/// `f(x_S; x'_{S̄}) · p(x_S; x'_{S̄})`.
pub fn jbshap<T: Scalar>(ctx: &GameContext<T>, s: &Coalition) -> Result<T> {
    check_coalition(ctx, s)?;
    let base = ctx.fixed_baseline()?;
    let p = ctx.density()?;
    let mut buf = Vec::with_capacity(ctx.dim());
    splice_into(ctx.explicand().values(), base.values(), s, &mut buf);
    Ok(ctx.field().evaluate(&buf) * p.density(&buf))
}

/// Expectation of `g(splice(x, x', S))` under the baseline distribution:
/// exact when the distribution has at most `n` points, otherwise the mean of
/// `n` weighted draws from the `(seed, S)` stream.
fn baseline_average<T: Scalar>(
    ctx: &GameContext<T>,
    s: &Coalition,
    n: usize,
    seed_value: u64,
    g: impl Fn(&[T]) -> T,
) -> Result<T> {
    check_coalition(ctx, s)?;
    check_samples(n)?;
    let dist = ctx.baseline_distribution()?;
    let x = ctx.explicand().values();
    let mut buf = Vec::with_capacity(ctx.dim());
    if dist.len() <= n {
        let mut acc = T::zero();
        for (p, &w) in dist.points().iter().zip(dist.weights()) {
            splice_into(x, p.values(), s, &mut buf);
            acc = acc + w * g(&buf);
        }
        return Ok(acc);
    }
    let picker = WeightedIndex::new(dist.weights().iter().map(|w| w.as_f64()))
        .map_err(|e| Error::invalid(format!("baseline weights: {e}")))?;
    let mut rng = seed::stream(seed_value, s.stream_key());
    let mut acc = T::zero();
    for _ in 0..n {
        let p = &dist.points()[picker.sample(&mut rng)];
        splice_into(x, p.values(), s, &mut buf);
        acc = acc + g(&buf);
    }
    Ok(acc / T::from_count(n))
}

/// `E_{x'~p_b} f(x_S; x'_{S̄})`.
pub fn rbshap<T: Scalar>(ctx: &GameContext<T>, s: &Coalition, n: usize, seed_value: u64) -> Result<T> {
    let f = ctx.field().clone();
    baseline_average(ctx, s, n, seed_value, |u| f.evaluate(u))
}

/// `E_{x'~p_b} f(x_S; x'_{S̄}) p(x_S; x'_{S̄})`.
pub fn rjbshap<T: Scalar>(ctx: &GameContext<T>, s: &Coalition, n: usize, seed_value: u64) -> Result<T> {
    let f = ctx.field().clone();
    let p = ctx.density()?.clone();
    baseline_average(ctx, s, n, seed_value, |u| f.evaluate(u) * p.density(u))
}

/// Result of an exact-match conditional mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalMean<T = f64> {
    pub value: T,
    /// Rows whose `S` coordinates equal `x_S`.
    pub matched: usize,
    /// Set when no row matched and the unconditional mean was used.
    pub sparse_match: bool,
}

fn conditional_mean<T: Scalar>(x: &[T], rows: &[DataPoint<T>], fvals: &[T], s: &Coalition) -> ConditionalMean<T> {
    let mut sum = T::zero();
    let mut matched = 0usize;
    for (row, &fv) in rows.iter().zip(fvals) {
        if s.members().iter().all(|&i| row.get(i) == x[i]) {
            sum = sum + fv;
            matched += 1;
        }
    }
    if matched > 0 {
        return ConditionalMean {
            value: sum / T::from_count(matched),
            matched,
            sparse_match: false,
        };
    }
    let total: T = fvals.iter().copied().sum();
    ConditionalMean {
        value: total / T::from_count(fvals.len()),
        matched: 0,
        sparse_match: true,
    }
}

/// Mean of `f` over rows agreeing with the explicand on `S`; the dataset
/// mean when no row agrees.
pub fn ces_empirical<T: Scalar>(ctx: &GameContext<T>, data: &Dataset<T>, s: &Coalition) -> Result<ConditionalMean<T>> {
    check_coalition(ctx, s)?;
    data.require_nonempty("conditional expectation over a dataset")?;
    if data.dim() != ctx.dim() {
        return Err(Error::invalid("dataset dimension differs from the explicand"));
    }
    let fvals: Vec<T> = data.rows().iter().map(|r| ctx.field().evaluate(r.values())).collect();
    Ok(conditional_mean(ctx.explicand().values(), data.rows(), &fvals, s))
}

/// Where `ces_sample` draws the free coordinates from.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleSupport<T = f64> {
    /// Per-coordinate value lists; enumerated exactly when the free product
    /// has at most `n` cells.
    Discrete(Vec<Vec<T>>),
    /// Axis-aligned box `[lo_i, hi_i]`, sampled uniformly.
    Box { lo: Vec<T>, hi: Vec<T> },
}

impl<T: Scalar> SampleSupport<T> {
    pub fn dim(&self) -> usize {
        match self {
            SampleSupport::Discrete(v) => v.len(),
            SampleSupport::Box { lo, .. } => lo.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SampleSupport::Discrete(v) if v.iter().any(Vec::is_empty) => {
                Err(Error::invalid("discrete support has an empty coordinate"))
            }
            SampleSupport::Box { lo, hi } if lo.len() != hi.len() || lo.iter().zip(hi).any(|(a, b)| !(a <= b)) => {
                Err(Error::invalid("support box bounds must pair up with lo ≤ hi"))
            }
            _ => Ok(()),
        }
    }
}

/// Self-normalized importance estimate of the conditional expectation:
/// `Σ_k f(u_k) p(u_k) / Σ_k p(u_k)` over `u_k = splice(x, z_k, S)` with `z_k`
/// uniform on the support.
pub fn ces_sample<T: Scalar>(
    ctx: &GameContext<T>,
    support: &SampleSupport<T>,
    s: &Coalition,
    n: usize,
    seed_value: u64,
) -> Result<T> {
    check_coalition(ctx, s)?;
    check_samples(n)?;
    support.validate()?;
    if support.dim() != ctx.dim() {
        return Err(Error::invalid("sampling support dimension differs from the explicand"));
    }
    let x = ctx.explicand().values();
    let f = ctx.field();
    if s.is_full() {
        return Ok(f.evaluate(x));
    }
    let p = ctx.density()?;
    let free = s.complement();
    let mut num = T::zero();
    let mut den = T::zero();
    let mut point = x.to_vec();
    let mut accumulate = |point: &[T]| {
        let w = p.density(point);
        if w > T::zero() {
            num = num + f.evaluate(point) * w;
            den = den + w;
        }
    };
    match support {
        SampleSupport::Discrete(values) => {
            let cells = free
                .members()
                .iter()
                .try_fold(1usize, |acc, &i| acc.checked_mul(values[i].len()));
            match cells {
                Some(c) if c <= n => {
                    let sub: Vec<Vec<T>> = free.members().iter().map(|&i| values[i].clone()).collect();
                    for combo in product_grid(&sub) {
                        for (&i, v) in free.members().iter().zip(combo) {
                            point[i] = v;
                        }
                        accumulate(&point);
                    }
                }
                _ => {
                    let mut rng = seed::stream(seed_value, s.stream_key());
                    for _ in 0..n {
                        for &i in free.members() {
                            point[i] = *values[i].choose(&mut rng).expect("validated nonempty");
                        }
                        accumulate(&point);
                    }
                }
            }
        }
        SampleSupport::Box { lo, hi } => {
            let mut rng = seed::stream(seed_value, s.stream_key());
            for _ in 0..n {
                for &i in free.members() {
                    let u: f64 = rng.random();
                    point[i] = lo[i] + (hi[i] - lo[i]) * T::lit(u);
                }
                accumulate(&point);
            }
        }
    }
    if den <= T::zero() {
        return Err(Error::DegenerateSupport(format!(
            "every sampled completion of S={s} has zero density"
        )));
    }
    Ok(num / den)
}

macro_rules! context_game {
    ($name:ident) => {
        impl<T: Scalar> $name<T> {
            pub fn context(&self) -> &GameContext<T> {
                &self.ctx
            }
        }
    };
}

#[derive(Clone)]
pub struct Bshap<T: Scalar = f64> {
    ctx: GameContext<T>,
}

impl<T: Scalar> Bshap<T> {
    pub fn new(ctx: GameContext<T>) -> Result<Self> {
        ctx.fixed_baseline()?;
        Ok(Self { ctx })
    }
}
context_game!(Bshap);

impl<T: Scalar> ValueFunction<T> for Bshap<T> {
    fn value(&self, s: &Coalition) -> Result<T> {
        bshap(&self.ctx, s)
    }

    fn dim(&self) -> usize {
        self.ctx.dim()
    }

    fn kind(&self) -> ValueKind {
        ValueKind::Bshap
    }
}

#[derive(Clone)]
pub struct Jbshap<T: Scalar = f64> {
    ctx: GameContext<T>,
}

impl<T: Scalar> Jbshap<T> {
    pub fn new(ctx: GameContext<T>) -> Result<Self> {
        ctx.fixed_baseline()?;
        ctx.density()?;
        Ok(Self { ctx })
    }
}
context_game!(Jbshap);

impl<T: Scalar> ValueFunction<T> for Jbshap<T> {
    fn value(&self, s: &Coalition) -> Result<T> {
        jbshap(&self.ctx, s)
    }

    fn dim(&self) -> usize {
        self.ctx.dim()
    }

    fn kind(&self) -> ValueKind {
        ValueKind::Jbshap
    }
}

#[derive(Clone)]
pub struct Rbshap<T: Scalar = f64> {
    ctx: GameContext<T>,
    samples: usize,
    seed: u64,
}

impl<T: Scalar> Rbshap<T> {
    pub fn new(ctx: GameContext<T>, samples: usize, seed_value: u64) -> Result<Self> {
        ctx.baseline_distribution()?;
        check_samples(samples)?;
        Ok(Self {
            ctx,
            samples,
            seed: seed_value,
        })
    }
}
context_game!(Rbshap);

impl<T: Scalar> ValueFunction<T> for Rbshap<T> {
    fn value(&self, s: &Coalition) -> Result<T> {
        rbshap(&self.ctx, s, self.samples, self.seed)
    }

    fn dim(&self) -> usize {
        self.ctx.dim()
    }

    fn kind(&self) -> ValueKind {
        ValueKind::Rbshap
    }
}

#[derive(Clone)]
pub struct Rjbshap<T: Scalar = f64> {
    ctx: GameContext<T>,
    samples: usize,
    seed: u64,
}

impl<T: Scalar> Rjbshap<T> {
    pub fn new(ctx: GameContext<T>, samples: usize, seed_value: u64) -> Result<Self> {
        ctx.baseline_distribution()?;
        ctx.density()?;
        check_samples(samples)?;
        Ok(Self {
            ctx,
            samples,
            seed: seed_value,
        })
    }
}
context_game!(Rjbshap);

impl<T: Scalar> ValueFunction<T> for Rjbshap<T> {
    fn value(&self, s: &Coalition) -> Result<T> {
        rjbshap(&self.ctx, s, self.samples, self.seed)
    }

    fn dim(&self) -> usize {
        self.ctx.dim()
    }

    fn kind(&self) -> ValueKind {
        ValueKind::Rjbshap
    }
}

/// Exact-match conditional mean over a fixed dataset. Model outputs on the
/// rows are cached at construction.
#[derive(Clone)]
pub struct CesEmpirical<T: Scalar = f64> {
    ctx: GameContext<T>,
    data: Arc<Dataset<T>>,
    fvals: Vec<T>,
}

impl<T: Scalar> CesEmpirical<T> {
    pub fn new(ctx: GameContext<T>, data: Arc<Dataset<T>>) -> Result<Self> {
        data.require_nonempty("conditional expectation over a dataset")?;
        if data.dim() != ctx.dim() {
            return Err(Error::invalid("dataset dimension differs from the explicand"));
        }
        let fvals = data.rows().iter().map(|r| ctx.field().evaluate(r.values())).collect();
        Ok(Self { ctx, data, fvals })
    }

    pub fn detailed(&self, s: &Coalition) -> Result<ConditionalMean<T>> {
        check_coalition(&self.ctx, s)?;
        Ok(conditional_mean(self.ctx.explicand().values(), self.data.rows(), &self.fvals, s))
    }
}
context_game!(CesEmpirical);

impl<T: Scalar> ValueFunction<T> for CesEmpirical<T> {
    fn value(&self, s: &Coalition) -> Result<T> {
        Ok(self.detailed(s)?.value)
    }

    fn dim(&self) -> usize {
        self.ctx.dim()
    }

    fn kind(&self) -> ValueKind {
        ValueKind::CesEmpirical
    }
}

#[derive(Clone)]
pub struct CesSample<T: Scalar = f64> {
    ctx: GameContext<T>,
    support: SampleSupport<T>,
    samples: usize,
    seed: u64,
}

impl<T: Scalar> CesSample<T> {
    pub fn new(ctx: GameContext<T>, support: SampleSupport<T>, samples: usize, seed_value: u64) -> Result<Self> {
        ctx.density()?;
        check_samples(samples)?;
        support.validate()?;
        if support.dim() != ctx.dim() {
            return Err(Error::invalid("sampling support dimension differs from the explicand"));
        }
        Ok(Self {
            ctx,
            support,
            samples,
            seed: seed_value,
        })
    }
}
context_game!(CesSample);

impl<T: Scalar> ValueFunction<T> for CesSample<T> {
    fn value(&self, s: &Coalition) -> Result<T> {
        ces_sample(&self.ctx, &self.support, s, self.samples, self.seed)
    }

    fn dim(&self) -> usize {
        self.ctx.dim()
    }

    fn kind(&self) -> ValueKind {
        ValueKind::CesSample
    }
}

/// How a surrogate sees a masked input `(x_S, S)`.
#[derive(Debug, Clone, PartialEq)]
pub enum MaskEncoding {
    /// Values with free slots zeroed, followed by the membership indicator.
    ZeroFillIndicator,
    /// One indicator per distinct `(x_S, S)` seen in training plus a final
    /// slot shared by every unseen input; a linear net on top is a lookup table.
    OneHot { index: BTreeMap<Vec<u64>, usize> },
}

impl MaskEncoding {
    fn key<T: Scalar>(x: &[T], s: &Coalition) -> Vec<u64> {
        point_key(&encode_masked(x, s))
    }

    pub fn width(&self, dim: usize) -> usize {
        match self {
            MaskEncoding::ZeroFillIndicator => 2 * dim,
            MaskEncoding::OneHot { index } => index.len() + 1,
        }
    }

    pub fn encode<T: Scalar>(&self, x: &[T], s: &Coalition) -> Vec<T> {
        match self {
            MaskEncoding::ZeroFillIndicator => encode_masked(x, s),
            MaskEncoding::OneHot { index } => {
                let mut out = vec![T::zero(); index.len() + 1];
                let slot = index.get(&Self::key(x, s)).copied().unwrap_or(index.len());
                out[slot] = T::one();
                out
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingChoice {
    Masked,
    OneHot,
}

/// Masks paired with each training row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskSampling {
    /// All `2^d` coalitions, weighted by their Shapley-law probability.
    Exhaustive,
    /// Independent Shapley-law draws per row.
    Sampled { per_row: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    pub hidden: Vec<usize>,
    pub encoding: EncodingChoice,
    pub masks: MaskSampling,
    pub trainer: TrainerConfig,
}

/// Probability of coalition size `k` and a particular subset of that size
/// under the Shapley law (uniform permutation, uniform cut in `0..=d`).
pub fn shapley_law_probability(d: usize, k: usize) -> f64 {
    1.0 / ((d + 1) as f64 * binomial(d, k))
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Draws a coalition from the Shapley law.
pub fn sample_shapley_coalition<R: Rng>(d: usize, rng: &mut R) -> Coalition {
    let mut perm: Vec<usize> = (0..d).collect();
    perm.shuffle(rng);
    let cut = rng.random_range(0..=d);
    Coalition::new(perm[..cut].to_vec(), d).expect("prefix of a permutation is a valid coalition")
}

/// Masked-input surrogate `g(x_S)`.
#[derive(Debug, Clone)]
pub struct SurrogateValueFunction<T: Scalar = f64> {
    net: FeedForwardNet<T>,
    encoding: MaskEncoding,
    dim: usize,
    report: Option<TrainReport>,
}

impl<T: Scalar> SurrogateValueFunction<T> {
    pub fn new(net: FeedForwardNet<T>, encoding: MaskEncoding, dim: usize) -> Result<Self> {
        if net.input_width() != encoding.width(dim) {
            return Err(Error::invalid(format!(
                "surrogate input width {} does not match encoding width {}",
                net.input_width(),
                encoding.width(dim)
            )));
        }
        Ok(Self {
            net,
            encoding,
            dim,
            report: None,
        })
    }

    pub fn net(&self) -> &FeedForwardNet<T> {
        &self.net
    }

    pub fn encoding(&self) -> &MaskEncoding {
        &self.encoding
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn report(&self) -> Option<&TrainReport> {
        self.report.as_ref()
    }

    pub fn with_net(&self, net: FeedForwardNet<T>) -> Result<Self> {
        Self::new(net, self.encoding.clone(), self.dim)
    }

    pub fn predict(&self, x: &[T], s: &Coalition) -> T {
        self.net.predict(&self.encoding.encode(x, s))
    }

    pub fn to_doc(&self) -> SurrogateDoc {
        let one_hot_keys = match &self.encoding {
            MaskEncoding::ZeroFillIndicator => None,
            MaskEncoding::OneHot { index } => {
                let mut keys: Vec<(usize, Vec<f64>)> = index
                    .iter()
                    .map(|(k, &slot)| (slot, k.iter().map(|&b| f64::from_bits(b)).collect()))
                    .collect();
                keys.sort_by_key(|(slot, _)| *slot);
                Some(keys.into_iter().map(|(_, k)| k).collect())
            }
        };
        SurrogateDoc {
            dim: self.dim,
            network: self.net.to_doc(),
            one_hot_keys,
        }
    }

    pub fn from_doc(doc: &SurrogateDoc) -> Result<Self> {
        let encoding = match &doc.one_hot_keys {
            None => MaskEncoding::ZeroFillIndicator,
            Some(keys) => MaskEncoding::OneHot {
                index: keys
                    .iter()
                    .enumerate()
                    .map(|(slot, k)| (point_key(k), slot))
                    .collect(),
            },
        };
        Self::new(FeedForwardNet::from_doc(&doc.network)?, encoding, doc.dim)
    }
}

/// JSON form of a trained surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateDoc {
    pub dim: usize,
    pub network: NetworkDoc,
    /// Encoded `(x_S, S)` keys in slot order, for the one-hot encoding.
    pub one_hot_keys: Option<Vec<Vec<f64>>>,
}

/// Training samples `(encode(x, S), f(x))` for the masked-MSE objective.
pub fn surrogate_samples<T: Scalar>(
    f: &dyn ScalarField<T>,
    data: &Dataset<T>,
    masks: MaskSampling,
    seed_value: u64,
) -> Result<Vec<(Vec<T>, Coalition, T, T)>> {
    data.require_nonempty("surrogate training")?;
    let d = data.dim();
    let mut out = Vec::new();
    match masks {
        MaskSampling::Exhaustive => {
            if d > 16 {
                return Err(Error::Capacity {
                    what: "exhaustive mask dimension",
                    limit: 16,
                    got: d,
                });
            }
            let coalitions: Vec<Coalition> = enumerate_coalitions(d)?.collect();
            for row in data.rows() {
                let target = f.evaluate(row.values());
                for s in &coalitions {
                    let w = T::lit(shapley_law_probability(d, s.len()));
                    out.push((row.values().to_vec(), s.clone(), target, w));
                }
            }
        }
        MaskSampling::Sampled { per_row } => {
            if per_row == 0 {
                return Err(Error::invalid("at least one mask per row is required"));
            }
            let mut rng = seed::rng(seed_value);
            for row in data.rows() {
                let target = f.evaluate(row.values());
                for _ in 0..per_row {
                    let s = sample_shapley_coalition(d, &mut rng);
                    out.push((row.values().to_vec(), s, target, T::one()));
                }
            }
        }
    }
    Ok(out)
}

/// Fits `g` minimizing `E_{x~data} E_{S~Shapley} (f(x) − g(x_S))²`.
pub fn ces_supervised_fit<T: Scalar>(
    f: &dyn ScalarField<T>,
    data: &Dataset<T>,
    cfg: &SurrogateConfig,
    seed_value: u64,
) -> Result<SurrogateValueFunction<T>> {
    let raw = surrogate_samples(f, data, cfg.masks, seed::derive_named(seed_value, "surrogate-masks"))?;
    let d = data.dim();
    let encoding = match cfg.encoding {
        EncodingChoice::Masked => MaskEncoding::ZeroFillIndicator,
        EncodingChoice::OneHot => {
            let mut keys: Vec<Vec<u64>> = raw.iter().map(|(x, s, _, _)| MaskEncoding::key(x, s)).collect();
            keys.sort();
            keys.dedup();
            MaskEncoding::OneHot {
                index: keys.into_iter().enumerate().map(|(i, k)| (k, i)).collect(),
            }
        }
    };
    let samples: Vec<Sample<T>> = raw
        .iter()
        .map(|(x, s, y, w)| Sample::new(encoding.encode(x, s), *y).weighted(*w))
        .collect();
    let mut widths = vec![encoding.width(d)];
    widths.extend(&cfg.hidden);
    widths.push(1);
    let net = net_init::<T>(&widths, seed::derive_named(seed_value, "surrogate-init"))?;
    let mut trainer = cfg.trainer.clone();
    trainer.seed = seed::derive_named(seed_value, "surrogate-order");
    let (net, report) = sgd_train(net, &samples, &trainer)?;
    let mut surrogate = SurrogateValueFunction::new(net, encoding, d)?;
    surrogate.report = Some(report);
    Ok(surrogate)
}

/// `g(x_S)` for the context's explicand.
pub fn ces_supervised<T: Scalar>(surrogate: &SurrogateValueFunction<T>, ctx: &GameContext<T>, s: &Coalition) -> Result<T> {
    check_coalition(ctx, s)?;
    if surrogate.dim != ctx.dim() {
        return Err(Error::invalid(format!(
            "surrogate trained for d={} used on a d={} explicand",
            surrogate.dim,
            ctx.dim()
        )));
    }
    Ok(surrogate.predict(ctx.explicand().values(), s))
}

#[derive(Clone)]
pub struct CesSupervised<T: Scalar = f64> {
    surrogate: Arc<SurrogateValueFunction<T>>,
    ctx: GameContext<T>,
}

impl<T: Scalar> CesSupervised<T> {
    pub fn new(surrogate: Arc<SurrogateValueFunction<T>>, ctx: GameContext<T>) -> Result<Self> {
        if surrogate.dim != ctx.dim() {
            return Err(Error::invalid("surrogate dimension differs from the explicand"));
        }
        Ok(Self { surrogate, ctx })
    }
}

impl<T: Scalar> ValueFunction<T> for CesSupervised<T> {
    fn value(&self, s: &Coalition) -> Result<T> {
        ces_supervised(&self.surrogate, &self.ctx, s)
    }

    fn dim(&self) -> usize {
        self.ctx.dim()
    }

    fn kind(&self) -> ValueKind {
        ValueKind::CesSupervised
    }
}

/// Explicit game given by one value per coalition bitmask.
#[derive(Debug, Clone, PartialEq)]
pub struct TableGame<T = f64> {
    dim: usize,
    values: Vec<T>,
}

impl<T: Scalar> TableGame<T> {
    pub fn new(dim: usize, values: Vec<T>) -> Result<Self> {
        if dim > crate::domain::MAX_ENUMERATION_DIM {
            return Err(Error::Capacity {
                what: "table game dimension",
                limit: crate::domain::MAX_ENUMERATION_DIM,
                got: dim,
            });
        }
        if values.len() != 1usize << dim {
            return Err(Error::invalid(format!(
                "a d={dim} table game needs {} values, got {}",
                1usize << dim,
                values.len()
            )));
        }
        Ok(Self { dim, values })
    }

    pub fn from_fn(dim: usize, mut v: impl FnMut(&Coalition) -> T) -> Result<Self> {
        if dim > crate::domain::MAX_ENUMERATION_DIM {
            return Err(Error::Capacity {
                what: "table game dimension",
                limit: crate::domain::MAX_ENUMERATION_DIM,
                got: dim,
            });
        }
        let values = (0..1u64 << dim)
            .map(|m| v(&Coalition::from_mask(m, dim).expect("mask within dimension")))
            .collect();
        Ok(Self { dim, values })
    }

    /// Tabulates any value function.
    pub fn tabulate(v: &dyn ValueFunction<T>) -> Result<Self> {
        let dim = v.dim();
        let mut err = None;
        let table = Self::from_fn(dim, |s| match v.value(s) {
            Ok(x) => x,
            Err(e) => {
                err.get_or_insert(e);
                T::zero()
            }
        })?;
        match err {
            Some(e) => Err(e),
            None => Ok(table),
        }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

impl<T: Scalar> ValueFunction<T> for TableGame<T> {
    fn value(&self, s: &Coalition) -> Result<T> {
        if s.dim() != self.dim {
            return Err(Error::invalid("coalition dimension differs from the game"));
        }
        Ok(self.values[s.mask().expect("table games have d ≤ 25") as usize])
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn kind(&self) -> ValueKind {
        ValueKind::Table
    }
}

/// Closure-backed game.
#[derive(Clone)]
pub struct FnGame<T = f64> {
    dim: usize,
    func: Arc<dyn Fn(&Coalition) -> T + Send + Sync>,
}

impl<T: Scalar> FnGame<T> {
    pub fn new(dim: usize, func: impl Fn(&Coalition) -> T + Send + Sync + 'static) -> Self {
        Self {
            dim,
            func: Arc::new(func),
        }
    }
}

impl<T: Scalar> ValueFunction<T> for FnGame<T> {
    fn value(&self, s: &Coalition) -> Result<T> {
        Ok((self.func)(s))
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn kind(&self) -> ValueKind {
        ValueKind::Custom
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::{Baseline, BaselineDistribution};
    use crate::density::{ConstantDensity, TableDensity};
    use crate::field::{Field, FnField, LinearField};
    use approx::assert_relative_eq;

    fn p(v: &[f64]) -> DataPoint {
        DataPoint::new(v.to_vec()).unwrap()
    }

    fn c(m: &[usize], d: usize) -> Coalition {
        Coalition::new(m.to_vec(), d).unwrap()
    }

    fn sum_field() -> Field {
        Arc::new(FnField::new(|x: &[f64]| x.iter().sum()))
    }

    #[test]
    fn bshap_examples() {
        let ctx = GameContext::new(sum_field(), p(&[1.0, 1.0]), Baseline::Fixed(p(&[0.0, 0.0]))).unwrap();
        assert_eq!(bshap(&ctx, &c(&[0], 2)).unwrap(), 1.0);
        assert_eq!(bshap(&ctx, &Coalition::full(2)).unwrap(), 2.0);
        assert_eq!(bshap(&ctx, &Coalition::empty(2)).unwrap(), 0.0);
        let dist = GameContext::new(
            sum_field(),
            p(&[1.0, 1.0]),
            Baseline::Distribution(BaselineDistribution::point(p(&[0.0, 0.0]))),
        )
        .unwrap();
        assert!(matches!(bshap(&dist, &c(&[0], 2)), Err(Error::Config(_))));
    }

    #[test]
    fn rbshap_examples() {
        let two = BaselineDistribution::uniform(vec![p(&[0.0, 0.0]), p(&[2.0, 2.0])]).unwrap();
        let ctx = GameContext::new(sum_field(), p(&[1.0, 1.0]), Baseline::Distribution(two)).unwrap();
        assert_eq!(rbshap(&ctx, &c(&[0], 2), 2, 0).unwrap(), 2.0);
        assert!(matches!(rbshap(&ctx, &c(&[0], 2), 0, 0), Err(Error::InvalidInput(_))));

        let one = GameContext::new(
            sum_field(),
            p(&[1.0, 3.0]),
            Baseline::Distribution(BaselineDistribution::point(p(&[0.5, 0.25]))),
        )
        .unwrap();
        let fixed = GameContext::new(sum_field(), p(&[1.0, 3.0]), Baseline::Fixed(p(&[0.5, 0.25]))).unwrap();
        for s in enumerate_coalitions(2).unwrap() {
            assert_eq!(rbshap(&one, &s, 1, 9).unwrap(), bshap(&fixed, &s).unwrap());
        }

        let constant: Field = Arc::new(FnField::new(|_: &[f64]| 4.5));
        let grid = BaselineDistribution::uniform_grid(&[vec![0.0, 1.0, 2.0], vec![0.0, 5.0]]).unwrap();
        let ctx = GameContext::new(constant, p(&[1.0, 1.0]), Baseline::Distribution(grid)).unwrap();
        for s in enumerate_coalitions(2).unwrap() {
            assert_eq!(rbshap(&ctx, &s, 3, 1).unwrap(), 4.5);
        }
    }

    #[test]
    fn sampled_rbshap_is_seeded_by_coalition() {
        let grid = BaselineDistribution::uniform_grid(&[vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 5.0, 7.0]]).unwrap();
        let ctx = GameContext::new(sum_field(), p(&[1.0, 1.0]), Baseline::Distribution(grid)).unwrap();
        let v = Rbshap::new(ctx, 4, 11).unwrap();
        let s = c(&[1], 2);
        assert_eq!(v.value(&s).unwrap(), v.value(&s).unwrap());
    }

    #[test]
    fn jbshap_reduces_to_bshap_under_unit_density() {
        let f: Field = Arc::new(LinearField::new(vec![2.0, -1.0, 0.5], 0.25).unwrap());
        let ctx = GameContext::new(f, p(&[1.0, 2.0, 3.0]), Baseline::Fixed(p(&[0.0, 1.0, -1.0])))
            .unwrap()
            .with_density(Arc::new(ConstantDensity(1.0)));
        for s in enumerate_coalitions(3).unwrap() {
            assert_eq!(jbshap(&ctx, &s).unwrap(), bshap(&ctx, &s).unwrap());
        }
        let zero: Field = Arc::new(FnField::new(|_: &[f64]| 0.0));
        let ctx = ctx.with_field(zero);
        for s in enumerate_coalitions(3).unwrap() {
            assert_eq!(jbshap(&ctx, &s).unwrap(), 0.0);
        }
    }

    #[test]
    fn jbshap_needs_density() {
        let ctx = GameContext::new(sum_field(), p(&[1.0]), Baseline::Fixed(p(&[0.0]))).unwrap();
        assert!(matches!(jbshap(&ctx, &c(&[0], 1)), Err(Error::Config(_))));
        assert!(Jbshap::new(ctx).is_err());
    }

    #[test]
    fn rjbshap_unit_cases() {
        let one: Field = Arc::new(FnField::new(|_: &[f64]| 1.0));
        let grid = BaselineDistribution::uniform_grid(&[vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let ctx = GameContext::new(one, p(&[1.0, 1.0]), Baseline::Distribution(grid))
            .unwrap()
            .with_density(Arc::new(ConstantDensity(1.0)));
        for s in enumerate_coalitions(2).unwrap() {
            assert_eq!(rjbshap(&ctx, &s, 8, 0).unwrap(), 1.0);
        }
    }

    #[test]
    fn ces_empirical_examples() {
        let data = Dataset::from_rows(vec![vec![1.0, 2.0], vec![1.0, 5.0], vec![4.0, 5.0]]).unwrap();
        let ctx = GameContext::new(sum_field(), p(&[1.0, 9.0]), Baseline::Fixed(p(&[0.0, 0.0]))).unwrap();
        let r = ces_empirical(&ctx, &data, &c(&[0], 2)).unwrap();
        assert_eq!((r.value, r.matched, r.sparse_match), (4.5, 2, false));
        let all = ces_empirical(&ctx, &data, &Coalition::empty(2)).unwrap();
        assert_relative_eq!(all.value, 18.0 / 3.0);
        let unseen = ces_empirical(&ctx, &data, &c(&[1], 2)).unwrap();
        assert!(unseen.sparse_match);
        assert_relative_eq!(unseen.value, 6.0);
    }

    #[test]
    fn ces_sample_endpoints() {
        let density = TableDensity::new(2, vec![(vec![0.0, 0.0], 0.5), (vec![1.0, 1.0], 0.5)]).unwrap();
        let ctx = GameContext::new(sum_field(), p(&[1.0, 1.0]), Baseline::Fixed(p(&[0.0, 0.0])))
            .unwrap()
            .with_density(Arc::new(density));
        let support = SampleSupport::Discrete(vec![vec![0.0, 1.0], vec![0.0, 1.0]]);
        assert_eq!(ces_sample(&ctx, &support, &Coalition::full(2), 10, 0).unwrap(), 2.0);
        // Only (1,1) is consistent with x_0 = 1.
        assert_eq!(ces_sample(&ctx, &support, &c(&[0], 2), 10, 0).unwrap(), 2.0);
        assert_eq!(ces_sample(&ctx, &support, &Coalition::empty(2), 10, 0).unwrap(), 1.0);

        let off = ctx.clone().with_explicand(p(&[1.0, 0.0])).unwrap();
        let sparse = SampleSupport::Discrete(vec![vec![0.0, 1.0], vec![0.0]]);
        assert!(matches!(
            ces_sample(&off, &sparse, &c(&[0], 2), 10, 0),
            Err(Error::DegenerateSupport(_))
        ));
    }

    #[test]
    fn ces_sample_uniform_density_is_plain_mean() {
        let ctx = GameContext::new(sum_field(), p(&[1.0, 1.0, 1.0]), Baseline::Fixed(p(&[0.0, 0.0, 0.0])))
            .unwrap()
            .with_density(Arc::new(ConstantDensity(0.3)));
        let support = SampleSupport::Discrete(vec![vec![0.0, 2.0], vec![0.0, 4.0], vec![1.0]]);
        // free coords 1,2 → mean of x1 over {0,4} is 2; value = 1 + 2 + 1.
        assert_relative_eq!(ces_sample(&ctx, &support, &c(&[0], 3), 64, 0).unwrap(), 4.0);
    }

    #[test]
    fn shapley_law_sums_to_one() {
        for d in 1..8 {
            let total: f64 = (0..=d).map(|k| binomial(d, k) * shapley_law_probability(d, k)).sum();
            assert_relative_eq!(total, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn table_game_indexing() {
        let g = TableGame::new(2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(g.value(&c(&[1], 2)).unwrap(), 2.0);
        assert!(TableGame::new(2, vec![0.0; 3]).is_err());
    }
}
