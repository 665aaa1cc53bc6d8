//! The bundle `(f, p, x, baseline)` every value function is derived from.

use std::collections::{BTreeMap, BTreeSet};

use crate::domain::{point_key, Coalition, DataPoint};
use crate::error::{Error, Result};
use crate::field::{Density, Field};
use crate::scalar::Scalar;

/// Finite weighted list of baseline points (`p_b`).
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineDistribution<T = f64> {
    points: Vec<DataPoint<T>>,
    weights: Vec<T>,
}

impl<T: Scalar> BaselineDistribution<T> {
    /// Weights must be nonnegative and sum to one.
    pub fn new(points: Vec<DataPoint<T>>, weights: Vec<T>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("baseline distribution needs at least one point"));
        }
        if points.len() != weights.len() {
            return Err(Error::invalid(format!(
                "{} baseline points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        let d = points[0].dim();
        if points.iter().any(|p| p.dim() != d) {
            return Err(Error::invalid("baseline points differ in dimension"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < T::zero()) {
            return Err(Error::invalid("baseline weights must be finite and nonnegative"));
        }
        let total: T = weights.iter().copied().sum();
        if (total - T::one()).abs() > sum_tolerance::<T>(weights.len()) {
            return Err(Error::invalid(format!("baseline weights sum to {total}, not 1")));
        }
        Ok(Self { points, weights })
    }

    pub fn uniform(points: Vec<DataPoint<T>>) -> Result<Self> {
        let w = T::one() / T::from_count(points.len().max(1));
        let weights = vec![w; points.len()];
        Self::new(points, weights)
    }

    pub fn point(point: DataPoint<T>) -> Self {
        Self {
            points: vec![point],
            weights: vec![T::one()],
        }
    }

    /// Uniform distribution over the Cartesian product of per-coordinate supports.
    pub fn uniform_grid(supports: &[Vec<T>]) -> Result<Self> {
        if supports.iter().any(Vec::is_empty) {
            return Err(Error::invalid("every coordinate support must be nonempty"));
        }
        let points = product_grid(supports)
            .into_iter()
            .map(DataPoint::new)
            .collect::<Result<Vec<_>>>()?;
        Self::uniform(points)
    }

    pub fn points(&self) -> &[DataPoint<T>] {
        &self.points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    /// The constant `C0` taken by the baseline marginal on the free
    /// coordinates `S̄`, if that marginal is uniform over a full grid.
    ///
    /// Returns `None` when the marginal is not constant or does not cover
    /// the product of the observed per-coordinate values.
    pub fn marginal_constant(&self, s: &Coalition) -> Option<T> {
        let free = s.complement();
        let mut groups: BTreeMap<Vec<u64>, T> = BTreeMap::new();
        let mut seen: Vec<BTreeSet<u64>> = vec![BTreeSet::new(); free.len()];
        for (p, &w) in self.points.iter().zip(&self.weights) {
            let proj: Vec<T> = free.members().iter().map(|&i| p.get(i)).collect();
            let key = point_key(&proj);
            for (slot, k) in seen.iter_mut().zip(&key) {
                slot.insert(*k);
            }
            let e = groups.entry(key).or_insert_with(T::zero);
            *e = *e + w;
        }
        let cells: usize = seen.iter().map(BTreeSet::len).product();
        if groups.len() != cells {
            return None;
        }
        let first = *groups.values().next()?;
        let tol = sum_tolerance::<T>(self.points.len());
        groups
            .values()
            .all(|&g| (g - first).abs() <= tol)
            .then(|| T::one() / T::from_count(cells))
    }
}

fn sum_tolerance<T: Scalar>(n: usize) -> T {
    let eps_bound = T::epsilon() * T::from_count(4 * n.max(1));
    eps_bound.max(T::lit(1e-12))
}

/// Every combination of per-coordinate values, first coordinate slowest.
pub fn product_grid<T: Scalar>(supports: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = vec![Vec::with_capacity(supports.len())];
    for support in supports {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                support.iter().map(move |&v| {
                    let mut next = prefix.clone();
                    next.push(v);
                    next
                })
            })
            .collect();
    }
    out
}

/// Either a fixed reference point `x'` or a distribution of them.
#[derive(Debug, Clone, PartialEq)]
pub enum Baseline<T = f64> {
    Fixed(DataPoint<T>),
    Distribution(BaselineDistribution<T>),
}

impl<T: Scalar> Baseline<T> {
    pub fn dim(&self) -> usize {
        match self {
            Baseline::Fixed(p) => p.dim(),
            Baseline::Distribution(d) => d.dim(),
        }
    }
}

/// Model, optional density, explicand and baseline.
#[derive(Clone)]
pub struct GameContext<T: Scalar = f64> {
    field: Field<T>,
    density: Option<Density<T>>,
    explicand: DataPoint<T>,
    baseline: Baseline<T>,
}

impl<T: Scalar> GameContext<T> {
    pub fn new(field: Field<T>, explicand: DataPoint<T>, baseline: Baseline<T>) -> Result<Self> {
        if baseline.dim() != explicand.dim() {
            return Err(Error::invalid(format!(
                "explicand has dimension {} but baseline has {}",
                explicand.dim(),
                baseline.dim()
            )));
        }
        Ok(Self {
            field,
            density: None,
            explicand,
            baseline,
        })
    }

    pub fn with_density(mut self, density: Density<T>) -> Self {
        self.density = Some(density);
        self
    }

    pub fn with_field(mut self, field: Field<T>) -> Self {
        self.field = field;
        self
    }

    pub fn with_explicand(mut self, explicand: DataPoint<T>) -> Result<Self> {
        if explicand.dim() != self.explicand.dim() {
            return Err(Error::invalid("replacement explicand changes the dimension"));
        }
        self.explicand = explicand;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.explicand.dim()
    }

    pub fn field(&self) -> &Field<T> {
        &self.field
    }

    pub fn explicand(&self) -> &DataPoint<T> {
        &self.explicand
    }

    pub fn baseline(&self) -> &Baseline<T> {
        &self.baseline
    }

    pub fn density(&self) -> Result<&Density<T>> {
        self.density
            .as_ref()
            .ok_or_else(|| Error::config("value function needs a density but the context has none"))
    }

    pub fn fixed_baseline(&self) -> Result<&DataPoint<T>> {
        match &self.baseline {
            Baseline::Fixed(p) => Ok(p),
            Baseline::Distribution(_) => Err(Error::config(
                "value function needs a fixed baseline but the context holds a distribution",
            )),
        }
    }

    pub fn baseline_distribution(&self) -> Result<&BaselineDistribution<T>> {
        match &self.baseline {
            Baseline::Distribution(d) => Ok(d),
            Baseline::Fixed(_) => Err(Error::config(
                "value function needs a baseline distribution but the context holds a fixed point",
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FnField;
    use std::sync::Arc;

    fn p(v: &[f64]) -> DataPoint {
        DataPoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn weights_must_sum_to_one() {
        assert!(BaselineDistribution::new(vec![p(&[0.0]), p(&[1.0])], vec![0.5, 0.4]).is_err());
        assert!(BaselineDistribution::new(vec![p(&[0.0]), p(&[1.0])], vec![1.5, -0.5]).is_err());
        assert!(BaselineDistribution::new(vec![p(&[0.0]), p(&[1.0])], vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn grid_marginal_constant() {
        let grid = BaselineDistribution::<f64>::uniform_grid(&[vec![0.0, 1.0], vec![0.0, 1.0, 2.0]]).unwrap();
        assert_eq!(grid.len(), 6);
        let s = Coalition::new(vec![0], 2).unwrap();
        assert!((grid.marginal_constant(&s).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((grid.marginal_constant(&Coalition::empty(2)).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(grid.marginal_constant(&Coalition::full(2)), Some(1.0));

        let diag = BaselineDistribution::uniform(vec![p(&[0.0, 0.0]), p(&[1.0, 1.0])]).unwrap();
        assert_eq!(diag.marginal_constant(&Coalition::empty(2)), None);
    }

    #[test]
    fn context_dimension_checks() {
        let f: Field = Arc::new(FnField::new(|x: &[f64]| x[0]));
        assert!(GameContext::new(f.clone(), p(&[1.0, 2.0]), Baseline::Fixed(p(&[0.0]))).is_err());
        let ctx = GameContext::new(f, p(&[1.0, 2.0]), Baseline::Fixed(p(&[0.0, 0.0]))).unwrap();
        assert!(matches!(ctx.density(), Err(Error::Config(_))));
        assert!(matches!(ctx.baseline_distribution(), Err(Error::Config(_))));
    }
}
