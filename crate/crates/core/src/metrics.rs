//! Attribution-quality metrics: deletion curves, their area, and
//! sensitivity-n as a rank correlation.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::context::GameContext;
use crate::domain::{splice_into, Coalition};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed;
use crate::shapley::AttributionVector;
use crate::value_functions::ValueFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeletionTarget {
    /// `f` at the spliced point.
    F,
    /// `f·p` at the spliced point.
    FTimesP,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalOrder {
    /// Largest signed attribution first.
    #[default]
    Signed,
    /// Largest `|φ|` first.
    Magnitude,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeletionCurve<T = f64> {
    pub fractions: Vec<T>,
    pub values: Vec<T>,
    pub target: DeletionTarget,
}

impl<T: Scalar> DeletionCurve<T> {
    /// `fraction,value` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fraction,value\n");
        for (q, v) in self.fractions.iter().zip(&self.values) {
            let _ = writeln!(out, "{},{}", q.as_f64(), v.as_f64());
        }
        out
    }
}

/// Number of features removed at fraction `q` of `d`.
pub fn removal_count(q: f64, d: usize) -> usize {
    ((q * d as f64) + 1e-9).floor().min(d as f64) as usize
}

/// Feature indices sorted for removal; ties go to the lower index.
pub fn removal_ranking<T: Scalar>(phi: &[T], order: RemovalOrder) -> Vec<usize> {
    let key = |i: usize| match order {
        RemovalOrder::Signed => phi[i],
        RemovalOrder::Magnitude => phi[i].abs(),
    };
    let mut idx: Vec<usize> = (0..phi.len()).collect();
    idx.sort_by(|&a, &b| {
        key(b)
            .partial_cmp(&key(a))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx
}

/// Replaces the top `⌊q·d⌋` features by their baseline values at each
/// fraction `q` and evaluates the target there.
pub fn deletion_curve<T: Scalar>(
    attr: &AttributionVector<T>,
    ctx: &GameContext<T>,
    fractions: &[T],
    target: DeletionTarget,
    order: RemovalOrder,
) -> Result<DeletionCurve<T>> {
    let d = ctx.dim();
    if attr.dim() != d {
        return Err(Error::invalid(format!("attribution has {} entries for d={d}", attr.dim())));
    }
    if fractions.first() != Some(&T::zero()) {
        return Err(Error::invalid("deletion fractions must start at 0"));
    }
    if fractions.windows(2).any(|w| !(w[0] < w[1])) || fractions.iter().any(|&q| q > T::one()) {
        return Err(Error::invalid("deletion fractions must increase strictly within [0, 1]"));
    }
    let base = ctx.fixed_baseline()?;
    let density = match target {
        DeletionTarget::F => None,
        DeletionTarget::FTimesP => Some(ctx.density()?),
    };
    let ranking = removal_ranking(&attr.phi, order);
    let mut buf = Vec::with_capacity(d);
    let mut values = Vec::with_capacity(fractions.len());
    for &q in fractions {
        let removed = &ranking[..removal_count(q.as_f64(), d)];
        let kept = Coalition::new((0..d).filter(|i| !removed.contains(i)).collect(), d)?;
        splice_into(ctx.explicand().values(), base.values(), &kept, &mut buf);
        let fv = ctx.field().evaluate(&buf);
        values.push(match density {
            Some(p) => fv * p.density(&buf),
            None => fv,
        });
    }
    Ok(DeletionCurve {
        fractions: fractions.to_vec(),
        values,
        target,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Auc<T = f64> {
    pub value: T,
    /// False when the first value was zero and no normalization happened.
    pub normalized: bool,
}

/// Trapezoidal area under the curve, with values divided by the `q = 0`
/// value when it is nonzero.
pub fn auc<T: Scalar>(curve: &DeletionCurve<T>) -> Result<Auc<T>> {
    if curve.fractions.len() < 2 || curve.fractions.len() != curve.values.len() {
        return Err(Error::invalid("area needs at least two curve points"));
    }
    let v0 = curve.values[0];
    let normalized = v0 != T::zero();
    let scale = if normalized { v0 } else { T::one() };
    let half = T::lit(0.5);
    let value = curve
        .fractions
        .windows(2)
        .zip(curve.values.windows(2))
        .map(|(q, v)| (q[1] - q[0]) * (v[0] + v[1]) * half / scale)
        .sum();
    Ok(Auc { value, normalized })
}

/// Fractional ranks starting at 1; tied entries share their mean rank.
pub fn fractional_ranks<T: Scalar>(a: &[T]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..a.len()).collect();
    idx.sort_by(|&i, &j| a[i].partial_cmp(&a[j]).unwrap_or(std::cmp::Ordering::Equal));
    let mut ranks = vec![0.0; a.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && a[idx[end]] == a[idx[start]] {
            end += 1;
        }
        let mean = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = mean;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation.
pub fn spearman<T: Scalar>(a: &[T], b: &[T]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::invalid("rank correlation needs two equal-length series of length ≥ 2"));
    }
    let ra = fractional_ranks(a);
    let rb = fractional_ranks(b);
    let n = ra.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::UndefinedCorrelation("a series has constant ranks".into()));
    }
    Ok(sab / (saa * sbb).sqrt())
}

/// Mean over `n_fracs` of the rank correlation between `Σ_{i∈R} φ_i` and
/// `v([d]) − v([d]∖R)` for random `R` of size `⌊frac·d⌋`.
pub fn sensitivity_n<T: Scalar>(
    attr: &AttributionVector<T>,
    v: &dyn ValueFunction<T>,
    n_fracs: &[f64],
    trials: usize,
    seed_value: u64,
) -> Result<f64> {
    let d = v.dim();
    if attr.dim() != d {
        return Err(Error::invalid("attribution length differs from the game"));
    }
    if trials < 3 {
        return Err(Error::invalid("sensitivity-n needs at least three trials"));
    }
    if n_fracs.is_empty() {
        return Err(Error::invalid("no removal fractions given"));
    }
    let full = Coalition::full(d);
    let v_full = v.value(&full)?;
    let mut total = 0.0;
    for (k, &frac) in n_fracs.iter().enumerate() {
        if !(0.0..=1.0).contains(&frac) {
            return Err(Error::invalid(format!("fraction {frac} outside [0, 1]")));
        }
        let size = removal_count(frac, d);
        let mut rng = seed::stream(seed_value, k as u64);
        let mut sums = Vec::with_capacity(trials);
        let mut drops = Vec::with_capacity(trials);
        for _ in 0..trials {
            let mut removed = rand::seq::index::sample(&mut rng, d, size).into_vec();
            removed.sort_unstable();
            sums.push(removed.iter().map(|&i| attr.phi[i]).sum::<T>());
            let mut kept = full.clone();
            for &i in &removed {
                kept = kept.without(i);
            }
            drops.push(v_full - v.value(&kept)?);
        }
        total += spearman(&sums, &drops)?;
    }
    Ok(total / n_fracs.len() as f64)
}
