//! Shapley estimators over a [`ValueFunction`].

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::Coalition;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed;
use crate::value_functions::ValueFunction;

pub const MAX_EXACT_DIM: usize = 20;

/// Permutations evaluated per parallel batch; partial sums are folded in
/// index order so the result does not depend on scheduling.
const PERMUTATION_BATCH: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Exact,
    Permutation,
    TruncatedPermutation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionVector<T = f64> {
    pub phi: Vec<T>,
    pub estimator: Estimator,
    #[serde(skip)]
    pub samples: usize,
    pub seed: Option<u64>,
    /// `Σφ − (v([d]) − v(∅))` for the game the estimator evaluated.
    pub residual: T,
}

impl<T: Scalar> AttributionVector<T> {
    pub fn dim(&self) -> usize {
        self.phi.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalAttribution<T = f64> {
    pub phi: Vec<T>,
    pub normalized: bool,
    pub explicands: usize,
}

fn check_dim<T: Scalar>(v: &dyn ValueFunction<T>, d: usize) -> Result<()> {
    if v.dim() != d {
        return Err(Error::invalid(format!("game has d={}, estimator asked for d={d}", v.dim())));
    }
    Ok(())
}

/// `1/(d·C(d−1, s))` for `s = 0..d`, i.e. `s!(d−s−1)!/d!`.
pub fn shapley_weights(d: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(d);
    // C(d-1, s) built incrementally as a ratio of integers.
    let mut binom = 1.0f64;
    for s in 0..d {
        w.push(1.0 / (d as f64 * binom));
        binom = binom * (d - 1 - s) as f64 / (s + 1) as f64;
    }
    w
}

/// Exact Shapley values by full subset enumeration (`d ≤ 20`); each `v(S)`
/// is evaluated once.
pub fn exact_shapley<T: Scalar>(v: &dyn ValueFunction<T>, d: usize) -> Result<AttributionVector<T>> {
    check_dim(v, d)?;
    if d > MAX_EXACT_DIM {
        return Err(Error::Capacity {
            what: "exact Shapley dimension",
            limit: MAX_EXACT_DIM,
            got: d,
        });
    }
    let table: Vec<T> = (0..1u64 << d)
        .into_par_iter()
        .map(|m| v.value(&Coalition::from_mask(m, d)?))
        .collect::<Result<_>>()?;
    let weights: Vec<T> = shapley_weights(d).into_iter().map(T::lit).collect();
    let phi: Vec<T> = (0..d)
        .into_par_iter()
        .map(|i| {
            let bit = 1usize << i;
            let mut acc = T::zero();
            for m in 0..table.len() {
                if m & bit == 0 {
                    let w = weights[m.count_ones() as usize];
                    acc = acc + w * (table[m | bit] - table[m]);
                }
            }
            acc
        })
        .collect();
    let total: T = phi.iter().copied().sum();
    let residual = total - (table[table.len() - 1] - table[0]);
    Ok(AttributionVector {
        phi,
        estimator: Estimator::Exact,
        samples: table.len(),
        seed: None,
        residual,
    })
}

fn permutation_core<T: Scalar>(
    v: &dyn ValueFunction<T>,
    d: usize,
    permutations: usize,
    seed_value: u64,
    threshold: usize,
) -> Result<(Vec<T>, T)> {
    let eval = |s: &Coalition| -> Result<T> {
        if s.len() < threshold {
            Ok(T::zero())
        } else {
            v.value(s)
        }
    };
    let one = |k: usize| -> Result<Vec<T>> {
        let mut order: Vec<usize> = (0..d).collect();
        order.shuffle(&mut seed::stream(seed_value, k as u64));
        let mut contrib = vec![T::zero(); d];
        let mut prefix = Coalition::empty(d);
        let mut prev = eval(&prefix)?;
        for &i in &order {
            prefix = prefix.with(i);
            let cur = eval(&prefix)?;
            contrib[i] = cur - prev;
            prev = cur;
        }
        Ok(contrib)
    };
    let mut sum = vec![T::zero(); d];
    let mut start = 0;
    while start < permutations {
        let end = (start + PERMUTATION_BATCH).min(permutations);
        let batch: Vec<Vec<T>> = (start..end).into_par_iter().map(one).collect::<Result<_>>()?;
        for c in batch {
            for (a, b) in sum.iter_mut().zip(c) {
                *a = *a + b;
            }
        }
        start = end;
    }
    let n = T::from_count(permutations);
    let phi: Vec<T> = sum.into_iter().map(|a| a / n).collect();
    let total: T = phi.iter().copied().sum();
    let residual = total - (eval(&Coalition::full(d))? - eval(&Coalition::empty(d))?);
    Ok((phi, residual))
}

fn check_permutations(permutations: usize) -> Result<()> {
    if permutations == 0 {
        return Err(Error::invalid("at least one permutation is required"));
    }
    Ok(())
}

/// Monte-Carlo Shapley: average marginal contributions along uniformly
/// random orderings. Permutation `k` draws from the `(seed, k)` stream.
pub fn permutation_shapley<T: Scalar>(
    v: &dyn ValueFunction<T>,
    d: usize,
    permutations: usize,
    seed_value: u64,
) -> Result<AttributionVector<T>> {
    check_dim(v, d)?;
    check_permutations(permutations)?;
    let (phi, residual) = permutation_core(v, d, permutations, seed_value, 0)?;
    Ok(AttributionVector {
        phi,
        estimator: Estimator::Permutation,
        samples: permutations,
        seed: Some(seed_value),
        residual,
    })
}

/// Smallest coalition size that keeps its value under truncation.
pub fn truncation_threshold(frac: f64, d: usize) -> usize {
    // Absorb representation error so that e.g. 0.8·10 is 8, not 9.
    ((frac * d as f64) - 1e-12).ceil().max(0.0) as usize
}

/// [`permutation_shapley`] with `v(S)` replaced by zero whenever
/// `|S| < ⌈frac·d⌉`. The substitution is literal; no correction is applied
/// for the discarded prefix mass.
pub fn truncated_permutation_jbshap<T: Scalar>(
    v: &dyn ValueFunction<T>,
    d: usize,
    permutations: usize,
    frac: f64,
    seed_value: u64,
) -> Result<AttributionVector<T>> {
    check_dim(v, d)?;
    check_permutations(permutations)?;
    if !(0.0..=1.0).contains(&frac) {
        return Err(Error::invalid(format!("truncation fraction {frac} outside [0, 1]")));
    }
    let (phi, residual) = permutation_core(v, d, permutations, seed_value, truncation_threshold(frac, d))?;
    Ok(AttributionVector {
        phi,
        estimator: Estimator::TruncatedPermutation,
        samples: permutations,
        seed: Some(seed_value),
        residual,
    })
}

/// Componentwise sum of local attributions, optionally scaled to unit L1 norm.
pub fn global_shapley<T: Scalar>(attrs: &[AttributionVector<T>], normalize: bool) -> Result<GlobalAttribution<T>> {
    let first = attrs
        .first()
        .ok_or_else(|| Error::invalid("global attribution over an empty list"))?;
    let d = first.dim();
    let mut phi = vec![T::zero(); d];
    for a in attrs {
        if a.dim() != d {
            return Err(Error::invalid("attribution vectors differ in length"));
        }
        for (s, &p) in phi.iter_mut().zip(&a.phi) {
            *s = *s + p;
        }
    }
    if normalize {
        let norm: T = phi.iter().map(|p| p.abs()).sum();
        if norm <= T::zero() {
            return Err(Error::DegenerateNormalization(
                "summed attributions are all zero".into(),
            ));
        }
        phi.iter_mut().for_each(|p| *p = *p / norm);
    }
    Ok(GlobalAttribution {
        phi,
        normalized: normalize,
        explicands: attrs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value_functions::TableGame;
    use approx::assert_relative_eq;

    #[test]
    fn weights_match_factorials() {
        let fact = |n: usize| (1..=n).product::<usize>() as f64;
        for d in 1..10 {
            for (s, w) in shapley_weights(d).into_iter().enumerate() {
                assert_relative_eq!(w, fact(s) * fact(d - s - 1) / fact(d), max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn two_feature_games() {
        let jb = TableGame::new(2, vec![0.0, 0.0, 1.0 / 3.0, 1.0 / 3.0]).unwrap();
        let a = exact_shapley(&jb, 2).unwrap();
        assert_relative_eq!(a.phi[0], 0.0);
        assert_relative_eq!(a.phi[1], 1.0 / 3.0);
        let ces = TableGame::new(2, vec![2.0 / 3.0, 1.0, 1.0, 1.0]).unwrap();
        let a = exact_shapley(&ces, 2).unwrap();
        assert_relative_eq!(a.phi[0], 1.0 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(a.phi[1], 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn capacity_and_dimension_errors() {
        let g = TableGame::new(2, vec![0.0; 4]).unwrap();
        assert!(matches!(exact_shapley(&g, 3), Err(Error::InvalidInput(_))));
        assert!(matches!(permutation_shapley(&g, 2, 0, 1), Err(Error::InvalidInput(_))));
        assert!(truncated_permutation_jbshap(&g, 2, 4, 1.5, 1).is_err());
    }

    #[test]
    fn threshold_rounding() {
        assert_eq!(truncation_threshold(0.8, 10), 8);
        assert_eq!(truncation_threshold(1.0, 3), 3);
        assert_eq!(truncation_threshold(0.0, 3), 0);
        assert_eq!(truncation_threshold(0.5, 3), 2);
    }

    #[test]
    fn global_examples() {
        let mk = |phi: Vec<f64>| AttributionVector {
            phi,
            estimator: Estimator::Exact,
            samples: 0,
            seed: None,
            residual: 0.0,
        };
        let g = global_shapley(&[mk(vec![2.0, -2.0])], true).unwrap();
        assert_eq!(g.phi, vec![0.5, -0.5]);
        let g = global_shapley(&[mk(vec![1.0, 0.0]), mk(vec![0.0, 1.0])], false).unwrap();
        assert_eq!(g.phi, vec![1.0, 1.0]);
        assert!(matches!(
            global_shapley(&[mk(vec![0.0, 0.0])], true),
            Err(Error::DegenerateNormalization(_))
        ));
        assert!(global_shapley::<f64>(&[], false).is_err());
    }

    #[test]
    fn json_shape() {
        let a = AttributionVector {
            phi: vec![0.5],
            estimator: Estimator::Permutation,
            samples: 3,
            seed: Some(7),
            residual: 0.0,
        };
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            r#"{"phi":[0.5],"estimator":"permutation","seed":7,"residual":0.0}"#
        );
    }
}
