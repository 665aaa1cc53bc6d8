//! Black-box model and density contracts plus the built-in models.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::point_key;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Linear,
    Table,
    Feedforward,
    Composed,
    Perturbed,
    Custom,
}

/// A model `f: R^d → R`. Evaluation must be deterministic and side-effect free.
pub trait ScalarField<T: Scalar = f64>: Send + Sync {
    fn evaluate(&self, x: &[T]) -> T;

    fn kind(&self) -> FieldKind;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    Empirical,
    SmoothedEmpirical,
    CategoricalProduct,
    Nce,
    Table,
    Constant,
    Mixture,
    Scaled,
    Custom,
}

/// A possibly unnormalized density `p: R^d → [0, ∞)`.
pub trait DensityField<T: Scalar = f64>: Send + Sync {
    fn density(&self, x: &[T]) -> T;

    fn kind(&self) -> DensityKind;

    /// Whether the density integrates (or sums) to one.
    fn is_normalized(&self) -> bool;
}

pub type Field<T = f64> = Arc<dyn ScalarField<T>>;
pub type Density<T = f64> = Arc<dyn DensityField<T>>;

/// `f(x) = w·x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearField<T = f64> {
    weights: Vec<T>,
    bias: T,
}

impl<T: Scalar> LinearField<T> {
    pub fn new(weights: Vec<T>, bias: T) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
            return Err(Error::invalid("linear field coefficients must be finite"));
        }
        Ok(Self { weights, bias })
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn bias(&self) -> T {
        self.bias
    }
}

impl<T: Scalar> ScalarField<T> for LinearField<T> {
    fn evaluate(&self, x: &[T]) -> T {
        self.weights
            .iter()
            .zip(x)
            .fold(self.bias, |acc, (&w, &v)| acc + w * v)
    }

    fn kind(&self) -> FieldKind {
        FieldKind::Linear
    }
}

/// Lookup table over exact points with a default for unlisted inputs.
#[derive(Clone, PartialEq)]
pub struct TableField<T = f64> {
    dim: usize,
    entries: HashMap<Vec<u64>, (Vec<T>, T)>,
    default: T,
}

impl<T: Scalar> TableField<T> {
    pub fn new(dim: usize, entries: impl IntoIterator<Item = (Vec<T>, T)>, default: T) -> Result<Self> {
        let mut table = Self {
            dim,
            entries: HashMap::new(),
            default,
        };
        for (point, value) in entries {
            table.insert(point, value)?;
        }
        Ok(table)
    }

    pub fn insert(&mut self, point: Vec<T>, value: T) -> Result<()> {
        if point.len() != self.dim {
            return Err(Error::invalid(format!(
                "table entry of dimension {} in a d={} table",
                point.len(),
                self.dim
            )));
        }
        if !value.is_finite() || point.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("table entries must be finite"));
        }
        self.entries.insert(point_key(&point), (point, value));
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn default_value(&self) -> T {
        self.default
    }

    pub fn lookup(&self, x: &[T]) -> Option<T> {
        self.entries.get(&point_key(x)).map(|(_, v)| *v)
    }

    /// Entries in a deterministic order (sorted by key).
    pub fn entries(&self) -> Vec<(&[T], T)> {
        let mut keyed: Vec<_> = self.entries.iter().collect();
        keyed.sort_by(|a, b| a.0.cmp(b.0));
        keyed.into_iter().map(|(_, (p, v))| (p.as_slice(), *v)).collect()
    }
}

impl<T: Scalar> fmt::Debug for TableField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TableField")
            .field("dim", &self.dim)
            .field("entries", &self.entries.len())
            .field("default", &self.default)
            .finish()
    }
}

impl<T: Scalar> ScalarField<T> for TableField<T> {
    fn evaluate(&self, x: &[T]) -> T {
        self.lookup(x).unwrap_or(self.default)
    }

    fn kind(&self) -> FieldKind {
        FieldKind::Table
    }
}

/// Closure-backed model.
#[derive(Clone)]
pub struct FnField<T = f64> {
    func: Arc<dyn Fn(&[T]) -> T + Send + Sync>,
}

impl<T: Scalar> FnField<T> {
    pub fn new(func: impl Fn(&[T]) -> T + Send + Sync + 'static) -> Self {
        Self { func: Arc::new(func) }
    }
}

impl<T: Scalar> ScalarField<T> for FnField<T> {
    fn evaluate(&self, x: &[T]) -> T {
        (self.func)(x)
    }

    fn kind(&self) -> FieldKind {
        FieldKind::Custom
    }
}

/// `Σ_k α_k f_k`.
#[derive(Clone)]
pub struct LinearCombination<T = f64> {
    terms: Vec<(T, Field<T>)>,
}

impl<T: Scalar> LinearCombination<T> {
    pub fn new(terms: Vec<(T, Field<T>)>) -> Self {
        Self { terms }
    }
}

impl<T: Scalar> ScalarField<T> for LinearCombination<T> {
    fn evaluate(&self, x: &[T]) -> T {
        self.terms
            .iter()
            .fold(T::zero(), |acc, (a, f)| acc + *a * f.evaluate(x))
    }

    fn kind(&self) -> FieldKind {
        FieldKind::Composed
    }
}

/// `x ↦ f(x) p(x)`.
#[derive(Clone)]
pub struct DensityWeighted<T = f64> {
    field: Field<T>,
    density: Density<T>,
}

impl<T: Scalar> DensityWeighted<T> {
    pub fn new(field: Field<T>, density: Density<T>) -> Self {
        Self { field, density }
    }
}

impl<T: Scalar> ScalarField<T> for DensityWeighted<T> {
    fn evaluate(&self, x: &[T]) -> T {
        self.field.evaluate(x) * self.density.density(x)
    }

    fn kind(&self) -> FieldKind {
        FieldKind::Composed
    }
}
