//! Shared domain types: data points, coalitions, datasets, and the splice
//! operation that builds `(x_S; x'_{S̄})`.

use std::fmt;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest dimension accepted by [`enumerate_coalitions`].
pub const MAX_ENUMERATION_DIM: usize = 25;

/// A finite real feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPoint<T = f64> {
    values: Vec<T>,
}

impl<T: Scalar> DataPoint<T> {
    /// Rejects NaN and infinite entries.
    pub fn new(values: Vec<T>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value at coordinate {i}")));
        }
        Ok(Self { values })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            values: vec![T::zero(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn get(&self, i: usize) -> T {
        self.values[i]
    }
}

impl<T: Scalar> AsRef<[T]> for DataPoint<T> {
    fn as_ref(&self) -> &[T] {
        &self.values
    }
}

/// A subset of feature indices `S ⊆ {0, .., d-1}`.
///
/// Members are kept sorted. For `d ≤ 64` a bitmask is cached and used for
/// membership tests and table indexing.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Coalition {
    members: Vec<usize>,
    dim: usize,
    mask: Option<u64>,
}

impl Coalition {
    pub fn new(mut members: Vec<usize>, dim: usize) -> Result<Self> {
        members.sort_unstable();
        if let Some(&bad) = members.iter().find(|&&i| i >= dim) {
            return Err(Error::invalid(format!("feature index {bad} out of range for d={dim}")));
        }
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("duplicate feature index in coalition"));
        }
        Ok(Self::from_sorted(members, dim))
    }

    fn from_sorted(members: Vec<usize>, dim: usize) -> Self {
        let mask = (dim <= 64).then(|| members.iter().fold(0u64, |m, &i| m | (1u64 << i)));
        Self { members, dim, mask }
    }

    pub fn empty(dim: usize) -> Self {
        Self::from_sorted(Vec::new(), dim)
    }

    pub fn full(dim: usize) -> Self {
        Self::from_sorted((0..dim).collect(), dim)
    }

    /// Builds a coalition from a bitmask; bits at or above `dim` are rejected.
    pub fn from_mask(mask: u64, dim: usize) -> Result<Self> {
        if dim > 64 {
            return Err(Error::Capacity {
                what: "bitmask dimension",
                limit: 64,
                got: dim,
            });
        }
        if dim < 64 && mask >> dim != 0 {
            return Err(Error::invalid(format!("mask {mask:#x} has bits outside d={dim}")));
        }
        let members = (0..dim).filter(|&i| mask & (1u64 << i) != 0).collect();
        Ok(Self {
            members,
            dim,
            mask: Some(mask),
        })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.members.len() == self.dim
    }

    /// Cached bitmask, present when `d ≤ 64`.
    pub fn mask(&self) -> Option<u64> {
        self.mask
    }

    pub fn contains(&self, i: usize) -> bool {
        match self.mask {
            Some(m) => i < self.dim && m & (1u64 << i) != 0,
            None => self.members.binary_search(&i).is_ok(),
        }
    }

    pub fn complement(&self) -> Self {
        let members = (0..self.dim).filter(|&i| !self.contains(i)).collect();
        Self::from_sorted(members, self.dim)
    }

    /// `S ∪ {i}`.
    pub fn with(&self, i: usize) -> Self {
        assert!(i < self.dim, "feature index {i} out of range for d={}", self.dim);
        if self.contains(i) {
            return self.clone();
        }
        let mut members = self.members.clone();
        let pos = members.partition_point(|&m| m < i);
        members.insert(pos, i);
        Self::from_sorted(members, self.dim)
    }

    /// `S \ {i}`.
    pub fn without(&self, i: usize) -> Self {
        let members = self.members.iter().copied().filter(|&m| m != i).collect();
        Self::from_sorted(members, self.dim)
    }

    /// `S \ R`.
    pub fn minus(&self, other: &Coalition) -> Self {
        let members = self
            .members
            .iter()
            .copied()
            .filter(|&m| !other.contains(m))
            .collect();
        Self::from_sorted(members, self.dim)
    }

    /// Stable 64-bit key used to derive per-coalition RNG streams.
    pub fn stream_key(&self) -> u64 {
        match self.mask {
            Some(m) => m,
            None => self
                .members
                .iter()
                .fold(0xCBF2_9CE4_8422_2325u64, |h, &i| (h ^ i as u64).wrapping_mul(0x100_0000_01B3)),
        }
    }
}

impl fmt::Debug for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}/{}", self.members.iter().join(","), self.dim)
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.members.iter().join(","))
    }
}

/// All `2^d` coalitions ordered by size, then lexicographically.
pub fn enumerate_coalitions(dim: usize) -> Result<impl Iterator<Item = Coalition>> {
    if dim > MAX_ENUMERATION_DIM {
        return Err(Error::Capacity {
            what: "coalition enumeration dimension",
            limit: MAX_ENUMERATION_DIM,
            got: dim,
        });
    }
    Ok((0..=dim).flat_map(move |k| {
        (0..dim)
            .combinations(k)
            .map(move |members| Coalition::from_sorted(members, dim))
    }))
}

/// `S̄`, the complementary coalition.
pub fn complement(s: &Coalition) -> Coalition {
    s.complement()
}

/// `(x_S; x'_{S̄})`: coordinates in `s` come from `x`, the rest from `x_prime`.
pub fn splice<T: Scalar>(x: &DataPoint<T>, x_prime: &DataPoint<T>, s: &Coalition) -> Result<DataPoint<T>> {
    if x.dim() != x_prime.dim() || s.dim() != x.dim() {
        return Err(Error::invalid(format!(
            "splice dimension mismatch: x={}, x'={}, S over {}",
            x.dim(),
            x_prime.dim(),
            s.dim()
        )));
    }
    let mut out = Vec::with_capacity(x.dim());
    splice_into(x.values(), x_prime.values(), s, &mut out);
    Ok(DataPoint { values: out })
}

/// Unchecked splice into a reusable buffer. Dimensions must already agree.
pub(crate) fn splice_into<T: Scalar>(x: &[T], x_prime: &[T], s: &Coalition, out: &mut Vec<T>) {
    out.clear();
    out.extend(
        x.iter()
            .zip(x_prime)
            .enumerate()
            .map(|(i, (&a, &b))| if s.contains(i) { a } else { b }),
    );
}

/// Equal-dimension rows with optional feature names.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T = f64> {
    rows: Vec<DataPoint<T>>,
    dim: usize,
    names: Option<Vec<String>>,
}

impl<T: Scalar> Dataset<T> {
    /// An empty row list is accepted; operations that need an empirical
    /// distribution reject it themselves.
    pub fn new(rows: Vec<DataPoint<T>>) -> Result<Self> {
        let dim = rows.first().map_or(0, DataPoint::dim);
        if let Some(i) = rows.iter().position(|r| r.dim() != dim) {
            return Err(Error::invalid(format!(
                "row {i} has dimension {} but row 0 has {dim}",
                rows[i].dim()
            )));
        }
        Ok(Self { rows, dim, names: None })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let points = rows.into_iter().map(DataPoint::new).collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if !self.rows.is_empty() && names.len() != self.dim {
            return Err(Error::invalid(format!(
                "{} feature names for {} columns",
                names.len(),
                self.dim
            )));
        }
        if self.rows.is_empty() {
            self.dim = names.len();
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn rows(&self) -> &[DataPoint<T>] {
        &self.rows
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub(crate) fn require_nonempty(&self, what: &str) -> Result<()> {
        if self.rows.is_empty() {
            Err(Error::invalid(format!("{what} requires a nonempty dataset")))
        } else {
            Ok(())
        }
    }

    /// Per-column mean.
    pub fn mean(&self) -> Result<DataPoint<T>> {
        self.require_nonempty("column mean")?;
        let m = T::from_count(self.rows.len());
        let values = (0..self.dim)
            .map(|j| self.rows.iter().map(|r| r.get(j)).sum::<T>() / m)
            .collect();
        DataPoint::new(values)
    }
}

/// Hashable exact key for a point (bit patterns, with `-0.0` folded onto `0.0`).
pub(crate) fn point_key<T: Scalar>(x: &[T]) -> Vec<u64> {
    x.iter()
        .map(|v| {
            let v = v.as_f64();
            if v == 0.0 {
                0
            } else {
                v.to_bits()
            }
        })
        .collect()
}

/// Serializable form of a coalition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoalitionDoc {
    pub members: Vec<usize>,
    pub dim: usize,
}

impl From<&Coalition> for CoalitionDoc {
    fn from(s: &Coalition) -> Self {
        Self {
            members: s.members.clone(),
            dim: s.dim,
        }
    }
}

impl TryFrom<CoalitionDoc> for Coalition {
    type Error = Error;

    fn try_from(doc: CoalitionDoc) -> Result<Self> {
        Coalition::new(doc.members, doc.dim)
    }
}
