//! Executable axiom checks for value-function builders on exact discrete
//! games.
//!
//! Every check draws its instances from a [`GameInstanceGenerator`], so a
//! report is a pure function of `(seed, trials)`. A failing report carries a
//! [`Witness`] that re-evaluates to the same violation via
//! [`Witness::replay`].

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::context::{product_grid, Baseline, BaselineDistribution, GameContext};
use crate::density::TableDensity;
use crate::domain::{enumerate_coalitions, point_key, splice_into, Coalition, DataPoint, Dataset};
use crate::error::{Error, Result};
use crate::field::TableField;
use crate::seed;
use crate::shapley::exact_shapley;
use crate::value_functions::{Bshap, CesEmpirical, CesSample, Jbshap, Rbshap, Rjbshap, SampleSupport, ValueFunction};

/// A finite game: `f` and `p` tabulated on the product grid of `supports`
/// (first coordinate slowest), an explicand, a fixed baseline and a finite
/// baseline distribution, all on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameInstance {
    pub supports: Vec<Vec<f64>>,
    pub f: Vec<f64>,
    pub p: Vec<f64>,
    pub x: Vec<f64>,
    pub baseline: Vec<f64>,
    pub baseline_points: Vec<Vec<f64>>,
    pub baseline_weights: Vec<f64>,
}

impl GameInstance {
    pub fn dim(&self) -> usize {
        self.supports.len()
    }

    pub fn grid(&self) -> Vec<Vec<f64>> {
        product_grid(&self.supports)
    }

    pub fn index_of(&self, u: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for (values, &ui) in self.supports.iter().zip(u) {
            idx = idx * values.len() + values.iter().position(|&v| v == ui)?;
        }
        Some(idx)
    }

    pub fn f_at(&self, u: &[f64]) -> f64 {
        self.index_of(u).map_or(0.0, |i| self.f[i])
    }

    pub fn p_at(&self, u: &[f64]) -> f64 {
        self.index_of(u).map_or(0.0, |i| self.p[i])
    }

    pub fn with_f(&self, f: Vec<f64>) -> Self {
        Self { f, ..self.clone() }
    }

    pub fn with_p(&self, p: Vec<f64>) -> Self {
        Self { p, ..self.clone() }
    }

    fn validate(&self) -> Result<()> {
        let cells: usize = self.supports.iter().map(Vec::len).product();
        let d = self.dim();
        if d == 0 || self.f.len() != cells || self.p.len() != cells {
            return Err(Error::invalid("instance tables do not cover the grid"));
        }
        if self.p.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::invalid("instance density must be nonnegative"));
        }
        let on_grid = |u: &Vec<f64>| u.len() == d && self.index_of(u).is_some();
        if !on_grid(&self.x) || !on_grid(&self.baseline) || !self.baseline_points.iter().all(on_grid) {
            return Err(Error::invalid("explicand and baselines must lie on the grid"));
        }
        Ok(())
    }

    pub fn field(&self) -> Result<TableField> {
        TableField::new(self.dim(), self.grid().into_iter().zip(self.f.iter().copied()), 0.0)
    }

    pub fn density(&self) -> Result<TableDensity> {
        TableDensity::new(self.dim(), self.grid().into_iter().zip(self.p.iter().copied()))
    }

    /// Context with the fixed baseline and the tabulated density.
    pub fn context(&self) -> Result<GameContext> {
        self.validate()?;
        Ok(GameContext::new(
            Arc::new(self.field()?),
            DataPoint::new(self.x.clone())?,
            Baseline::Fixed(DataPoint::new(self.baseline.clone())?),
        )?
        .with_density(Arc::new(self.density()?)))
    }

    /// Context with the baseline distribution.
    pub fn distribution_context(&self) -> Result<GameContext> {
        self.validate()?;
        let points = self
            .baseline_points
            .iter()
            .map(|b| DataPoint::new(b.clone()))
            .collect::<Result<Vec<_>>>()?;
        let dist = BaselineDistribution::new(points, self.baseline_weights.clone())?;
        Ok(GameContext::new(
            Arc::new(self.field()?),
            DataPoint::new(self.x.clone())?,
            Baseline::Distribution(dist),
        )?
        .with_density(Arc::new(self.density()?)))
    }

    fn swap(u: &[f64], i: usize, j: usize) -> Vec<f64> {
        let mut v = u.to_vec();
        v.swap(i, j);
        v
    }

    /// True when `f`, `p`, `x`, `x'` and the baseline distribution are all
    /// invariant under exchanging coordinates `i` and `j`.
    pub fn is_symmetric(&self, i: usize, j: usize) -> bool {
        if i == j || i >= self.dim() || j >= self.dim() || self.supports[i] != self.supports[j] {
            return false;
        }
        if self.x[i] != self.x[j] || self.baseline[i] != self.baseline[j] {
            return false;
        }
        for (k, u) in self.grid().iter().enumerate() {
            let s = self.index_of(&Self::swap(u, i, j)).expect("swap stays on the grid");
            if self.f[k] != self.f[s] || self.p[k] != self.p[s] {
                return false;
            }
        }
        let mass = |swap: bool| {
            let mut m: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
            for (b, &w) in self.baseline_points.iter().zip(&self.baseline_weights) {
                let key = if swap { point_key(&Self::swap(b, i, j)) } else { point_key(b) };
                *m.entry(key).or_insert(0.0) += w;
            }
            m
        };
        let (a, b) = (mass(false), mass(true));
        a.len() == b.len() && a.iter().zip(&b).all(|((ka, wa), (kb, wb))| ka == kb && (wa - wb).abs() <= 1e-12)
    }
}

/// Maps a game instance to a value function.
pub trait GameBuilder: Send + Sync {
    fn name(&self) -> &str;

    fn build(&self, inst: &GameInstance) -> Result<Box<dyn ValueFunction>>;

    /// Baseline points the builder reads with their weights; drives the Null
    /// and Efficiency targets.
    fn baseline_support(&self, inst: &GameInstance) -> Vec<(Vec<f64>, f64)> {
        vec![(inst.baseline.clone(), 1.0)]
    }

    /// `f(x)p(x) − E_b[f(x')p(x')]`.
    fn efficiency_target(&self, inst: &GameInstance) -> f64 {
        let base: f64 = self
            .baseline_support(inst)
            .iter()
            .map(|(b, w)| w * inst.f_at(b) * inst.p_at(b))
            .sum();
        inst.f_at(&inst.x) * inst.p_at(&inst.x) - base
    }
}

fn distribution_support(inst: &GameInstance) -> Vec<(Vec<f64>, f64)> {
    inst.baseline_points
        .iter()
        .cloned()
        .zip(inst.baseline_weights.iter().copied())
        .collect()
}

pub struct JbshapBuilder;

impl GameBuilder for JbshapBuilder {
    fn name(&self) -> &str {
        "jbshap"
    }

    fn build(&self, inst: &GameInstance) -> Result<Box<dyn ValueFunction>> {
        Ok(Box::new(Jbshap::new(inst.context()?)?))
    }
}

/// Enumerates the baseline distribution exactly.
pub struct RjbshapBuilder;

impl GameBuilder for RjbshapBuilder {
    fn name(&self) -> &str {
        "rjbshap"
    }

    fn build(&self, inst: &GameInstance) -> Result<Box<dyn ValueFunction>> {
        let n = inst.baseline_points.len().max(1);
        Ok(Box::new(Rjbshap::new(inst.distribution_context()?, n, 0)?))
    }

    fn baseline_support(&self, inst: &GameInstance) -> Vec<(Vec<f64>, f64)> {
        distribution_support(inst)
    }
}

pub struct BshapBuilder;

impl GameBuilder for BshapBuilder {
    fn name(&self) -> &str {
        "bshap"
    }

    fn build(&self, inst: &GameInstance) -> Result<Box<dyn ValueFunction>> {
        Ok(Box::new(Bshap::new(inst.context()?)?))
    }
}

pub struct RbshapBuilder;

impl GameBuilder for RbshapBuilder {
    fn name(&self) -> &str {
        "rbshap"
    }

    fn build(&self, inst: &GameInstance) -> Result<Box<dyn ValueFunction>> {
        let n = inst.baseline_points.len().max(1);
        Ok(Box::new(Rbshap::new(inst.distribution_context()?, n, 0)?))
    }

    fn baseline_support(&self, inst: &GameInstance) -> Vec<(Vec<f64>, f64)> {
        distribution_support(inst)
    }
}

/// Conditional expectation under the instance density, by full enumeration
/// of the free coordinates.
pub struct CesBuilder;

impl GameBuilder for CesBuilder {
    fn name(&self) -> &str {
        "ces"
    }

    fn build(&self, inst: &GameInstance) -> Result<Box<dyn ValueFunction>> {
        let cells = inst.f.len();
        Ok(Box::new(CesSample::new(
            inst.context()?,
            SampleSupport::Discrete(inst.supports.clone()),
            cells,
            0,
        )?))
    }
}

/// Exact-match conditional mean over a fixed dataset (one row per grid
/// cell). The instance density is not consulted.
pub struct CesEmpiricalBuilder;

impl GameBuilder for CesEmpiricalBuilder {
    fn name(&self) -> &str {
        "ces_empirical"
    }

    fn build(&self, inst: &GameInstance) -> Result<Box<dyn ValueFunction>> {
        let data = Dataset::from_rows(inst.grid())?;
        Ok(Box::new(CesEmpirical::new(inst.context()?, Arc::new(data))?))
    }
}

pub fn builder_by_name(name: &str) -> Option<Box<dyn GameBuilder>> {
    Some(match name {
        "jbshap" => Box::new(JbshapBuilder),
        "rjbshap" => Box::new(RjbshapBuilder),
        "bshap" => Box::new(BshapBuilder),
        "rbshap" => Box::new(RbshapBuilder),
        "ces" => Box::new(CesBuilder),
        "ces_empirical" => Box::new(CesEmpiricalBuilder),
        _ => return None,
    })
}

/// Which invariance a dummy instance has.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DummyMode {
    /// Neither `f` nor `p` reads the feature.
    FunctionAndDensity,
    /// Only `f` ignores the feature; `p` couples it to the others.
    FunctionOnly,
}

/// Random discrete games. Trial `k` of a family draws from its own stream,
/// so instances do not depend on evaluation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameInstanceGenerator {
    pub min_dim: usize,
    pub max_dim: usize,
    pub min_support: usize,
    pub max_support: usize,
    /// Smallest density value drawn.
    pub density_floor: f64,
    pub seed: u64,
}

impl GameInstanceGenerator {
    pub fn new(seed_value: u64) -> Self {
        Self {
            min_dim: 2,
            max_dim: 4,
            min_support: 2,
            max_support: 3,
            density_floor: 0.0,
            seed: seed_value,
        }
    }

    pub fn with_dims(mut self, min_dim: usize, max_dim: usize) -> Self {
        self.min_dim = min_dim;
        self.max_dim = max_dim;
        self
    }

    pub fn with_density_floor(mut self, floor: f64) -> Self {
        self.density_floor = floor;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.min_dim == 0 || self.min_dim > self.max_dim || self.max_dim > 8 {
            return Err(Error::config("generator dimensions must satisfy 1 ≤ min ≤ max ≤ 8"));
        }
        if self.min_support < 1 || self.min_support > self.max_support || self.max_support > 6 {
            return Err(Error::config("generator support sizes must satisfy 1 ≤ min ≤ max ≤ 6"));
        }
        if !(0.0..1.0).contains(&self.density_floor) {
            return Err(Error::config("density floor must lie in [0, 1)"));
        }
        Ok(())
    }

    pub fn rng(&self, family: &str, k: usize) -> ChaCha8Rng {
        seed::stream(seed::derive_named(self.seed, family), k as u64)
    }

    fn draw_supports(&self, rng: &mut ChaCha8Rng, min_dim: usize) -> Vec<Vec<f64>> {
        let d = rng.random_range(self.min_dim.max(min_dim)..=self.max_dim.max(min_dim));
        (0..d)
            .map(|_| {
                let m = rng.random_range(self.min_support..=self.max_support);
                (0..m).map(|v| v as f64).collect()
            })
            .collect()
    }

    pub fn random_values(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
    }

    pub fn random_density(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(self.density_floor..=1.0)).collect()
    }

    fn assemble(&self, rng: &mut ChaCha8Rng, supports: Vec<Vec<f64>>, f: Vec<f64>, p: Vec<f64>) -> GameInstance {
        let grid = product_grid(&supports);
        let x = grid.choose(rng).expect("grid is nonempty").clone();
        let baseline = grid.choose(rng).expect("grid is nonempty").clone();
        let count = rng.random_range(1..=3usize.min(grid.len()));
        let baseline_points: Vec<Vec<f64>> = grid.choose_multiple(rng, count).cloned().collect();
        let raw: Vec<f64> = (0..count).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let baseline_weights = raw.iter().map(|w| w / total).collect();
        GameInstance {
            supports,
            f,
            p,
            x,
            baseline,
            baseline_points,
            baseline_weights,
        }
    }

    /// Unconstrained instance for trial `k`.
    pub fn instance(&self, k: usize) -> Result<GameInstance> {
        self.validate()?;
        let mut rng = self.rng("instance", k);
        let supports = self.draw_supports(&mut rng, 1);
        let cells: usize = supports.iter().map(Vec::len).product();
        let f = self.random_values(&mut rng, cells);
        let p = self.random_density(&mut rng, cells);
        Ok(self.assemble(&mut rng, supports, f, p))
    }

    /// Instance where feature `i` is a dummy in the requested sense.
    pub fn dummy_instance(&self, k: usize, mode: DummyMode) -> Result<(GameInstance, usize)> {
        self.validate()?;
        let mut rng = self.rng("dummy", k);
        let supports = self.draw_supports(&mut rng, 2);
        let i = rng.random_range(0..supports.len());
        let grid = product_grid(&supports);
        let mut f_of: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
        let mut p_of: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
        let mut f = Vec::with_capacity(grid.len());
        let mut p = Vec::with_capacity(grid.len());
        for u in &grid {
            let mut rest = u.clone();
            rest.remove(i);
            let key = point_key(&rest);
            f.push(*f_of.entry(key.clone()).or_insert_with(|| rng.random_range(-1.0..=1.0)));
            p.push(match mode {
                DummyMode::FunctionAndDensity => {
                    *p_of.entry(key).or_insert_with(|| rng.random_range(self.density_floor..=1.0))
                }
                DummyMode::FunctionOnly => rng.random_range(self.density_floor..=1.0),
            });
        }
        Ok((self.assemble(&mut rng, supports, f, p), i))
    }

    /// Instance symmetric in a pair of features `(i, j)`.
    pub fn symmetric_instance(&self, k: usize) -> Result<(GameInstance, usize, usize)> {
        self.validate()?;
        let mut rng = self.rng("symmetric", k);
        let mut supports = self.draw_supports(&mut rng, 2);
        let d = supports.len();
        let mut pair: Vec<usize> = (0..d).collect();
        pair.shuffle(&mut rng);
        let (i, j) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
        supports[j] = supports[i].clone();
        let cells: usize = supports.iter().map(Vec::len).product();
        let f = self.random_values(&mut rng, cells);
        let p = self.random_density(&mut rng, cells);
        let mut inst = self.assemble(&mut rng, supports, f, p);
        let grid = inst.grid();
        let sym = |t: &[f64]| -> Vec<f64> {
            grid.iter()
                .enumerate()
                .map(|(k, u)| {
                    let s = inst.index_of(&GameInstance::swap(u, i, j)).expect("swap stays on the grid");
                    if s == k {
                        t[k]
                    } else {
                        0.5 * (t[k] + t[s])
                    }
                })
                .collect()
        };
        let (f, p) = (sym(&inst.f), sym(&inst.p));
        inst.f = f;
        inst.p = p;
        inst.x[j] = inst.x[i];
        inst.baseline[j] = inst.baseline[i];
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (b, &w) in inst.baseline_points.iter().zip(&inst.baseline_weights) {
            points.push(b.clone());
            points.push(GameInstance::swap(b, i, j));
            weights.extend([0.5 * w, 0.5 * w]);
        }
        inst.baseline_points = points;
        inst.baseline_weights = weights;
        Ok((inst, i, j))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    Linearity,
    Symmetry,
    Dummy,
    Null,
    Efficiency,
    SetRelevance,
    StrongRobustness,
    Transfer,
}

/// One concrete comparison. Evaluating a probe yields the largest violation
/// and the coalition (or feature list) where it occurs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Probe {
    /// `v(α₁f₁+α₂f₂, p) = α₁v(f₁,p) + α₂v(f₂,p)`.
    FunctionLinearity { inst: GameInstance, f2: Vec<f64>, alphas: [f64; 2] },
    /// `v(f, α₁p₁+α₂p₂) = α₁v(f,p₁) + α₂v(f,p₂)`, `α ≥ 0`.
    DistributionLinearity { inst: GameInstance, p2: Vec<f64>, alphas: [f64; 2] },
    Dummy { inst: GameInstance, feature: usize, mode: DummyMode },
    Null { a: GameInstance, b: GameInstance },
    Efficiency { inst: GameInstance },
    Symmetry { inst: GameInstance, i: usize, j: usize },
    SetRelevance { a: GameInstance, b: GameInstance, coalition: Vec<usize> },
    Robustness { inst: GameInstance, f2: Vec<f64>, t: f64 },
    /// The explanation-level counterpart of the inner probe, evaluated on
    /// exact Shapley values.
    Transfer { inner: Box<Probe> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOutcome {
    pub violation: f64,
    pub location: Vec<usize>,
    /// `max|Δv| / ε` for robustness probes with `ε > 0`.
    pub ratio: Option<f64>,
}

fn all_coalitions(d: usize) -> Result<Vec<Coalition>> {
    Ok(enumerate_coalitions(d)?.collect())
}

fn worst(pairs: impl IntoIterator<Item = (f64, Vec<usize>)>) -> (f64, Vec<usize>) {
    let mut best = (0.0, Vec::new());
    let mut first = true;
    for (v, loc) in pairs {
        // NaN counts as an unbounded violation.
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if first || v > best.0 {
            best = (v, loc);
            first = false;
        }
    }
    best
}

fn outcome(pair: (f64, Vec<usize>)) -> Option<ProbeOutcome> {
    Some(ProbeOutcome {
        violation: pair.0,
        location: pair.1,
        ratio: None,
    })
}

fn combine(a: &[f64], b: &[f64], alphas: [f64; 2]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| alphas[0] * x + alphas[1] * y).collect()
}

impl Probe {
    /// `None` when the probe's precondition does not hold.
    pub fn evaluate(&self, builder: &dyn GameBuilder) -> Result<Option<ProbeOutcome>> {
        match self {
            Probe::FunctionLinearity { inst, f2, alphas } => {
                let v1 = builder.build(inst)?;
                let v2 = builder.build(&inst.with_f(f2.clone()))?;
                let vc = builder.build(&inst.with_f(combine(&inst.f, f2, *alphas)))?;
                let mut pairs = Vec::new();
                for s in all_coalitions(inst.dim())? {
                    let lhs = alphas[0] * v1.value(&s)? + alphas[1] * v2.value(&s)?;
                    pairs.push(((lhs - vc.value(&s)?).abs(), s.members().to_vec()));
                }
                Ok(outcome(worst(pairs)))
            }
            Probe::DistributionLinearity { inst, p2, alphas } => {
                if alphas.iter().any(|&a| a < 0.0) {
                    return Ok(None);
                }
                let v1 = builder.build(inst)?;
                let v2 = builder.build(&inst.with_p(p2.clone()))?;
                let vc = builder.build(&inst.with_p(combine(&inst.p, p2, *alphas)))?;
                let mut pairs = Vec::new();
                for s in all_coalitions(inst.dim())? {
                    let lhs = alphas[0] * v1.value(&s)? + alphas[1] * v2.value(&s)?;
                    pairs.push(((lhs - vc.value(&s)?).abs(), s.members().to_vec()));
                }
                Ok(outcome(worst(pairs)))
            }
            Probe::Dummy { inst, feature, .. } => {
                let v = builder.build(inst)?;
                let mut pairs = Vec::new();
                for s in all_coalitions(inst.dim())? {
                    if s.contains(*feature) {
                        continue;
                    }
                    let delta = (v.value(&s.with(*feature))? - v.value(&s)?).abs();
                    pairs.push((delta, s.members().to_vec()));
                }
                Ok(outcome(worst(pairs)))
            }
            Probe::Null { a, b } => {
                let agree = builder
                    .baseline_support(a)
                    .iter()
                    .all(|(u, _)| a.f_at(u) == b.f_at(u) && a.p_at(u) == b.p_at(u));
                if !agree || a.x != b.x || a.baseline_points != b.baseline_points {
                    return Ok(None);
                }
                let empty = Coalition::empty(a.dim());
                let delta = (builder.build(a)?.value(&empty)? - builder.build(b)?.value(&empty)?).abs();
                Ok(outcome((delta, Vec::new())))
            }
            Probe::Efficiency { inst } => {
                let v = builder.build(inst)?;
                let d = inst.dim();
                let gap = v.value(&Coalition::full(d))? - v.value(&Coalition::empty(d))?;
                Ok(outcome(((gap - builder.efficiency_target(inst)).abs(), (0..d).collect())))
            }
            Probe::Symmetry { inst, i, j } => {
                if !inst.is_symmetric(*i, *j) {
                    return Ok(None);
                }
                let v = builder.build(inst)?;
                let mut pairs = Vec::new();
                for s in all_coalitions(inst.dim())? {
                    if s.contains(*i) || s.contains(*j) {
                        continue;
                    }
                    let delta = (v.value(&s.with(*i))? - v.value(&s.with(*j))?).abs();
                    pairs.push((delta, s.members().to_vec()));
                }
                Ok(outcome(worst(pairs)))
            }
            Probe::SetRelevance { a, b, coalition } => {
                let s = Coalition::new(coalition.clone(), a.dim())?;
                let agree = a.grid().iter().all(|u| {
                    s.members().iter().any(|&m| u[m] != a.x[m]) || (a.f_at(u) == b.f_at(u) && a.p_at(u) == b.p_at(u))
                });
                if !agree || a.x != b.x {
                    return Ok(None);
                }
                let delta = (builder.build(a)?.value(&s)? - builder.build(b)?.value(&s)?).abs();
                Ok(outcome((delta, coalition.clone())))
            }
            Probe::Robustness { inst, f2, t } => {
                let eps = inst
                    .f
                    .iter()
                    .zip(f2)
                    .zip(&inst.p)
                    .map(|((a, b), p)| (a - b).abs() * p)
                    .fold(0.0, f64::max);
                let v1 = builder.build(inst)?;
                let v2 = builder.build(&inst.with_f(f2.clone()))?;
                let mut pairs = Vec::new();
                for s in all_coalitions(inst.dim())? {
                    pairs.push(((v1.value(&s)? - v2.value(&s)?).abs(), s.members().to_vec()));
                }
                let (dv, loc) = worst(pairs);
                Ok(Some(ProbeOutcome {
                    violation: dv - t * eps,
                    location: loc,
                    ratio: (eps > 0.0).then(|| dv / eps),
                }))
            }
            Probe::Transfer { inner } => inner.evaluate_explanation(builder),
        }
    }

    fn shapley(builder: &dyn GameBuilder, inst: &GameInstance) -> Result<Vec<f64>> {
        let v = builder.build(inst)?;
        Ok(exact_shapley(v.as_ref(), inst.dim())?.phi)
    }

    fn evaluate_explanation(&self, builder: &dyn GameBuilder) -> Result<Option<ProbeOutcome>> {
        let per_feature = |lhs: Vec<f64>, rhs: Vec<f64>| {
            worst(lhs.iter().zip(&rhs).enumerate().map(|(i, (a, b))| ((a - b).abs(), vec![i])))
        };
        match self {
            Probe::FunctionLinearity { inst, f2, alphas } => {
                let a = Self::shapley(builder, inst)?;
                let b = Self::shapley(builder, &inst.with_f(f2.clone()))?;
                let c = Self::shapley(builder, &inst.with_f(combine(&inst.f, f2, *alphas)))?;
                Ok(outcome(per_feature(combine(&a, &b, *alphas), c)))
            }
            Probe::DistributionLinearity { inst, p2, alphas } => {
                if alphas.iter().any(|&a| a < 0.0) {
                    return Ok(None);
                }
                let a = Self::shapley(builder, inst)?;
                let b = Self::shapley(builder, &inst.with_p(p2.clone()))?;
                let c = Self::shapley(builder, &inst.with_p(combine(&inst.p, p2, *alphas)))?;
                Ok(outcome(per_feature(combine(&a, &b, *alphas), c)))
            }
            Probe::Dummy { inst, feature, .. } => {
                let phi = Self::shapley(builder, inst)?;
                Ok(outcome((phi[*feature].abs(), vec![*feature])))
            }
            Probe::Symmetry { inst, i, j } => {
                if !inst.is_symmetric(*i, *j) {
                    return Ok(None);
                }
                let phi = Self::shapley(builder, inst)?;
                Ok(outcome(((phi[*i] - phi[*j]).abs(), vec![*i, *j])))
            }
            Probe::Efficiency { inst } => {
                let phi = Self::shapley(builder, inst)?;
                let total: f64 = phi.iter().sum();
                Ok(outcome(((total - builder.efficiency_target(inst)).abs(), (0..inst.dim()).collect())))
            }
            _ => Err(Error::invalid("probe has no explanation-level form")),
        }
    }
}

/// A probe that violated its axiom, with the recorded violation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub probe: Probe,
    pub location: Vec<usize>,
    pub violation: f64,
}

impl Witness {
    /// Re-evaluates the probe from scratch and returns its violation.
    pub fn replay(&self, builder: &dyn GameBuilder) -> Result<f64> {
        self.probe
            .evaluate(builder)?
            .map(|o| o.violation)
            .ok_or_else(|| Error::invalid("witness precondition no longer holds"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub axiom: Axiom,
    pub builder: String,
    pub instances: usize,
    pub skipped: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Largest `max|Δv| / ε` seen by robustness checks.
    pub max_ratio: Option<f64>,
    pub witness: Option<Witness>,
}

fn report(
    axiom: Axiom,
    builder: &dyn GameBuilder,
    probes: Vec<Probe>,
    tol: f64,
) -> Result<AxiomReport> {
    let outcomes: Vec<Option<ProbeOutcome>> = probes
        .par_iter()
        .map(|p| p.evaluate(builder))
        .collect::<Result<_>>()?;
    let mut instances = 0;
    let mut skipped = 0;
    let mut max_violation = f64::NEG_INFINITY;
    let mut max_ratio: Option<f64> = None;
    let mut worst_idx = None;
    for (k, o) in outcomes.iter().enumerate() {
        let Some(o) = o else {
            skipped += 1;
            continue;
        };
        instances += 1;
        let v = if o.violation.is_nan() { f64::INFINITY } else { o.violation };
        if v > max_violation {
            max_violation = v;
            worst_idx = Some(k);
        }
        if let Some(r) = o.ratio {
            max_ratio = Some(max_ratio.map_or(r, |m: f64| m.max(r)));
        }
    }
    if instances == 0 {
        max_violation = 0.0;
    }
    let pass = max_violation <= tol;
    let witness = match (pass, worst_idx) {
        (false, Some(k)) => {
            let o = outcomes[k].as_ref().expect("worst outcome exists");
            Some(Witness {
                probe: probes[k].clone(),
                location: o.location.clone(),
                violation: o.violation,
            })
        }
        _ => None,
    };
    Ok(AxiomReport {
        axiom,
        builder: builder.name().to_string(),
        instances,
        skipped,
        max_violation,
        tolerance: tol,
        pass,
        max_ratio,
        witness,
    })
}

fn linearity_probes(gen: &GameInstanceGenerator, trials: usize) -> Result<Vec<Probe>> {
    let mut probes = Vec::with_capacity(2 * trials);
    for k in 0..trials {
        let inst = gen.instance(k)?;
        let mut rng = gen.rng("linearity", k);
        let n = inst.f.len();
        let f2 = gen.random_values(&mut rng, n);
        let p2 = gen.random_density(&mut rng, n);
        let fa = [rng.random_range(-2.0..=2.0), rng.random_range(-2.0..=2.0)];
        let pa = [rng.random_range(0.0..=2.0), rng.random_range(0.0..=2.0)];
        probes.push(Probe::FunctionLinearity { inst: inst.clone(), f2, alphas: fa });
        probes.push(Probe::DistributionLinearity { inst, p2, alphas: pa });
    }
    Ok(probes)
}

pub fn check_linearity(builder: &dyn GameBuilder, gen: &GameInstanceGenerator, trials: usize, tol: f64) -> Result<AxiomReport> {
    report(Axiom::Linearity, builder, linearity_probes(gen, trials)?, tol)
}

fn dummy_probes(gen: &GameInstanceGenerator, trials: usize, mode: DummyMode) -> Result<Vec<Probe>> {
    (0..trials)
        .map(|k| {
            let (inst, feature) = gen.dummy_instance(k, mode)?;
            Ok(Probe::Dummy { inst, feature, mode })
        })
        .collect()
}

pub fn check_dummy(
    builder: &dyn GameBuilder,
    gen: &GameInstanceGenerator,
    trials: usize,
    tol: f64,
    mode: DummyMode,
) -> Result<AxiomReport> {
    report(Axiom::Dummy, builder, dummy_probes(gen, trials, mode)?, tol)
}

/// Rewrites `f` and `p` at every grid cell except those in `keep`.
fn redraw_except(gen: &GameInstanceGenerator, rng: &mut ChaCha8Rng, inst: &GameInstance, keep: impl Fn(&[f64]) -> bool) -> GameInstance {
    let mut out = inst.clone();
    for (k, u) in inst.grid().iter().enumerate() {
        if !keep(u) {
            out.f[k] = rng.random_range(-1.0..=1.0);
            out.p[k] = rng.random_range(gen.density_floor..=1.0);
        }
    }
    out
}

pub fn check_null(builder: &dyn GameBuilder, gen: &GameInstanceGenerator, trials: usize, tol: f64) -> Result<AxiomReport> {
    let probes = (0..trials)
        .map(|k| {
            let a = gen.instance(k)?;
            let mut rng = gen.rng("null", k);
            let keep: Vec<Vec<f64>> = builder.baseline_support(&a).into_iter().map(|(u, _)| u).collect();
            let b = redraw_except(gen, &mut rng, &a, |u| keep.iter().any(|k| k.as_slice() == u));
            Ok(Probe::Null { a, b })
        })
        .collect::<Result<_>>()?;
    report(Axiom::Null, builder, probes, tol)
}

pub fn check_efficiency(builder: &dyn GameBuilder, gen: &GameInstanceGenerator, trials: usize, tol: f64) -> Result<AxiomReport> {
    let probes = (0..trials)
        .map(|k| Ok(Probe::Efficiency { inst: gen.instance(k)? }))
        .collect::<Result<_>>()?;
    report(Axiom::Efficiency, builder, probes, tol)
}

/// Symmetric instances, plus every other trial with a perturbed explicand
/// so that the precondition check is exercised; those are skipped.
pub fn check_symmetry(builder: &dyn GameBuilder, gen: &GameInstanceGenerator, trials: usize, tol: f64) -> Result<AxiomReport> {
    let probes = (0..trials)
        .map(|k| {
            let (mut inst, i, j) = gen.symmetric_instance(k)?;
            if k % 4 == 3 {
                let values = &inst.supports[j];
                let pos = values.iter().position(|&v| v == inst.x[j]).expect("on grid");
                inst.x[j] = values[(pos + 1) % values.len()];
            }
            Ok(Probe::Symmetry { inst, i, j })
        })
        .collect::<Result<_>>()?;
    report(Axiom::Symmetry, builder, probes, tol)
}

pub fn check_set_relevance(builder: &dyn GameBuilder, gen: &GameInstanceGenerator, trials: usize, tol: f64) -> Result<AxiomReport> {
    let probes = (0..trials)
        .map(|k| {
            let a = gen.instance(k)?;
            let mut rng = gen.rng("set-relevance", k);
            let d = a.dim();
            let mask = rng.random_range(0..1u64 << d);
            let s = Coalition::from_mask(mask, d)?;
            let x = a.x.clone();
            let b = redraw_except(gen, &mut rng, &a, |u| s.members().iter().all(|&m| u[m] == x[m]));
            Ok(Probe::SetRelevance {
                a,
                b,
                coalition: s.members().to_vec(),
            })
        })
        .collect::<Result<_>>()?;
    report(Axiom::SetRelevance, builder, probes, tol)
}

/// Single-instance robustness check: `max_S |v₁(S) − v₂(S)| ≤ T·ε + tol`
/// with `ε = max_u |f₁(u) − f₂(u)|·p(u)` over the whole grid.
pub fn check_strong_t_robustness(
    builder: &dyn GameBuilder,
    inst: &GameInstance,
    f2: &[f64],
    t: f64,
    tol: f64,
) -> Result<AxiomReport> {
    if f2.len() != inst.f.len() {
        return Err(Error::invalid("perturbed table does not cover the grid"));
    }
    let probe = Probe::Robustness {
        inst: inst.clone(),
        f2: f2.to_vec(),
        t,
    };
    report(Axiom::StrongRobustness, builder, vec![probe], tol)
}

/// Random sparse perturbations of random instances.
pub fn robustness_battery(
    builder: &dyn GameBuilder,
    gen: &GameInstanceGenerator,
    trials: usize,
    t: f64,
    tol: f64,
) -> Result<AxiomReport> {
    let probes = (0..trials)
        .map(|k| {
            let inst = gen.instance(k)?;
            let mut rng = gen.rng("robustness", k);
            let scale = rng.random_range(0.01..=2.0);
            let f2 = inst
                .f
                .iter()
                .map(|&v| {
                    if rng.random_bool(0.5) {
                        v + scale * rng.random_range(-1.0..=1.0)
                    } else {
                        v
                    }
                })
                .collect();
            Ok(Probe::Robustness { inst, f2, t })
        })
        .collect::<Result<_>>()?;
    report(Axiom::StrongRobustness, builder, probes, tol)
}

/// Explanation-level properties of the exact Shapley values of the
/// builder's games: linearity in `f` and in `p`, symmetry, dummy (both `f`
/// and `p` invariant) and efficiency.
pub fn check_transfer(builder: &dyn GameBuilder, gen: &GameInstanceGenerator, trials: usize, tol: f64) -> Result<AxiomReport> {
    let mut probes = linearity_probes(gen, trials)?;
    for k in 0..trials {
        let (inst, i, j) = gen.symmetric_instance(k)?;
        probes.push(Probe::Symmetry { inst, i, j });
    }
    probes.extend(dummy_probes(gen, trials, DummyMode::FunctionAndDensity)?);
    for k in 0..trials {
        probes.push(Probe::Efficiency { inst: gen.instance(k)? });
    }
    let probes = probes
        .into_iter()
        .map(|p| Probe::Transfer { inner: Box::new(p) })
        .collect();
    report(Axiom::Transfer, builder, probes, tol)
}

/// The seven set-level checks with `T = 1` robustness and the
/// function-and-density dummy.
pub fn run_battery(builder: &dyn GameBuilder, gen: &GameInstanceGenerator, trials: usize, tol: f64) -> Result<Vec<AxiomReport>> {
    Ok(vec![
        check_linearity(builder, gen, trials, tol)?,
        check_symmetry(builder, gen, trials, tol)?,
        check_dummy(builder, gen, trials, tol, DummyMode::FunctionAndDensity)?,
        check_null(builder, gen, trials, tol)?,
        check_efficiency(builder, gen, trials, tol)?,
        check_set_relevance(builder, gen, trials, tol)?,
        robustness_battery(builder, gen, trials, 1.0, tol)?,
    ])
}

/// Two-feature instance with `p` a standard normal product, `f₁ = x₁` and
/// `f₂ = f₁ + c·1[x₂ = t0]` where `t0` sits far in the tail. Returns the
/// instance (carrying `f₁`) and the `f₂` table.
pub fn tail_trigger_instance(c: f64, t0: f64) -> (GameInstance, Vec<f64>) {
    let body: Vec<f64> = (-2..=2).map(f64::from).collect();
    let mut tail = body.clone();
    tail.push(t0);
    let supports = vec![body, tail];
    let grid = product_grid(&supports);
    let normal = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let f: Vec<f64> = grid.iter().map(|u| u[0]).collect();
    let p: Vec<f64> = grid.iter().map(|u| normal(u[0]) * normal(u[1])).collect();
    let f2 = grid
        .iter()
        .map(|u| u[0] + if u[1] == t0 { c } else { 0.0 })
        .collect();
    let inst = GameInstance {
        supports,
        f,
        p,
        x: vec![1.0, t0],
        baseline: vec![0.0, 0.0],
        baseline_points: vec![vec![0.0, 0.0]],
        baseline_weights: vec![1.0],
    };
    (inst, f2)
}

/// `splice(x, x', S)` on an instance, for tests and reports.
pub fn instance_splice(inst: &GameInstance, s: &Coalition) -> Vec<f64> {
    let mut out = Vec::with_capacity(inst.dim());
    splice_into(&inst.x, &inst.baseline, s, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gen() -> GameInstanceGenerator {
        GameInstanceGenerator::new(5)
    }

    #[test]
    fn generator_is_deterministic_and_valid() {
        let g = gen();
        for k in 0..20 {
            let a = g.instance(k).unwrap();
            assert_eq!(a, g.instance(k).unwrap());
            a.context().unwrap();
            a.distribution_context().unwrap();
            assert!(a.p.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn symmetric_instances_satisfy_precondition() {
        for k in 0..20 {
            let (inst, i, j) = gen().symmetric_instance(k).unwrap();
            assert!(inst.is_symmetric(i, j));
            inst.distribution_context().unwrap();
        }
    }

    #[test]
    fn dummy_instances_ignore_feature() {
        for k in 0..10 {
            let (inst, i) = gen().dummy_instance(k, DummyMode::FunctionAndDensity).unwrap();
            for (idx, u) in inst.grid().iter().enumerate() {
                let mut w = u.clone();
                w[i] = inst.supports[i][0];
                assert_eq!(inst.f[idx], inst.f_at(&w));
                assert_eq!(inst.p[idx], inst.p_at(&w));
            }
        }
    }

    #[test]
    fn jbshap_battery_passes() {
        for r in run_battery(&JbshapBuilder, &gen(), 40, 1e-9).unwrap() {
            assert!(r.pass, "{:?} failed: {}", r.axiom, r.max_violation);
        }
        assert!(check_transfer(&JbshapBuilder, &gen(), 20, 1e-9).unwrap().pass);
    }

    #[test]
    fn symmetry_skips_broken_precondition() {
        let r = check_symmetry(&JbshapBuilder, &gen(), 8, 1e-9).unwrap();
        assert_eq!(r.skipped, 2);
        assert_eq!(r.instances, 6);
    }

    #[test]
    fn bshap_efficiency_fails_with_replayable_witness() {
        let r = check_efficiency(&BshapBuilder, &gen(), 20, 1e-9).unwrap();
        assert!(!r.pass);
        let w = r.witness.unwrap();
        assert_eq!(w.replay(&BshapBuilder).unwrap(), w.violation);
    }

    #[test]
    fn zero_second_function_is_trivially_linear() {
        let inst = gen().instance(0).unwrap();
        let zeros = vec![0.0; inst.f.len()];
        let probe = Probe::FunctionLinearity {
            inst,
            f2: zeros,
            alphas: [1.5, 0.7],
        };
        assert!(probe.evaluate(&JbshapBuilder).unwrap().unwrap().violation < 1e-12);
    }

    #[test]
    fn tail_trigger_separates_bshap_and_jbshap() {
        let (inst, f2) = tail_trigger_instance(1.0, 8.0);
        let b = check_strong_t_robustness(&BshapBuilder, &inst, &f2, 1.0, 1e-12).unwrap();
        assert!(!b.pass);
        assert!(b.max_ratio.unwrap() > 1e3);
        let j = check_strong_t_robustness(&JbshapBuilder, &inst, &f2, 1.0, 1e-12).unwrap();
        assert!(j.pass);
    }
}
