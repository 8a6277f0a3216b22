//! Symmetric pooling of per-instance vectors into one bag vector.
//!
//! Sums are taken over each coordinate's values in sorted order, so the pooled
//! vector is bit-for-bit independent of instance order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoolKind {
    Mean,
    Max,
    /// `(1/|b|) ln sum_x exp(v(x))`, coordinate-wise.
    SmoothMax,
}

impl PoolKind {
    pub const ALL: [PoolKind; 3] = [PoolKind::Mean, PoolKind::Max, PoolKind::SmoothMax];
}

impl fmt::Display for PoolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            PoolKind::Mean => "mean",
            PoolKind::Max => "max",
            PoolKind::SmoothMax => "smooth-max",
        })
    }
}

impl FromStr for PoolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(PoolKind::Mean),
            "max" => Ok(PoolKind::Max),
            "smooth-max" | "smoothmax" => Ok(PoolKind::SmoothMax),
            other => Err(Error::config(format!(
                "unknown pooling `{other}` (expected mean, max or smoothmax)"
            ))),
        }
    }
}

/// Pools an `n x m` row-major buffer into `out` (length `m`).
///
/// For max pooling, `argmax[j]` receives the lowest instance index attaining the
/// maximum of coordinate `j`; other kinds leave `argmax` untouched.
pub(crate) fn pool_flat(
    values: &[f64],
    n: usize,
    m: usize,
    kind: PoolKind,
    out: &mut [f64],
    argmax: &mut [usize],
    scratch: &mut Vec<i64>,
) {
    debug_assert!(n > 0 && values.len() == n * m);
    for j in 0..m {
        match kind {
            PoolKind::Max => {
                let mut best = 0;
                let mut best_v = values[j];
                for i in 1..n {
                    let v = values[i * m + j];
                    if v > best_v {
                        best = i;
                        best_v = v;
                    }
                }
                out[j] = best_v;
                argmax[j] = best;
            }
            PoolKind::Mean => {
                out[j] = column_sum(values, n, m, j, scratch) / n as f64;
            }
            PoolKind::SmoothMax => {
                let top = sorted_column(values, n, m, j, scratch);
                let s: f64 = scratch.iter().map(|&k| (from_key(k) - top).exp()).sum();
                out[j] = (top + s.ln()) / n as f64;
            }
        }
    }
}

/// Writes `dL/dvalues` (an `n x m` buffer) given `dL/dpooled`.
pub(crate) fn pool_backward_flat(
    values: &[f64],
    n: usize,
    m: usize,
    kind: PoolKind,
    argmax: &[usize],
    upstream: &[f64],
    grad: &mut [f64],
    scratch: &mut Vec<i64>,
) {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let inv_n = 1.0 / n as f64;
    for j in 0..m {
        let u = upstream[j];
        match kind {
            PoolKind::Mean => {
                let share = u / n as f64;
                for i in 0..n {
                    grad[i * m + j] = share;
                }
            }
            PoolKind::Max => {
                grad[argmax[j] * m + j] = u;
            }
            PoolKind::SmoothMax => {
                let top = sorted_column(values, n, m, j, scratch);
                let s: f64 = scratch.iter().map(|&k| (from_key(k) - top).exp()).sum();
                for i in 0..n {
                    let w = (values[i * m + j] - top).exp() / s;
                    grad[i * m + j] = u * w * inv_n;
                }
            }
        }
    }
}

// Maps an f64 to an i64 whose integer order is `f64::total_cmp`; its own inverse.
#[inline]
fn order_key(v: f64) -> i64 {
    let bits = v.to_bits() as i64;
    bits ^ ((((bits >> 63) as u64) >> 1) as i64)
}

#[inline]
fn from_key(k: i64) -> f64 {
    f64::from_bits(order_key(f64::from_bits(k as u64)) as u64)
}

/// Sorts one column into `keys` and returns its largest value.
fn sorted_column(values: &[f64], n: usize, m: usize, j: usize, keys: &mut Vec<i64>) -> f64 {
    keys.clear();
    keys.extend((0..n).map(|i| order_key(values[i * m + j])));
    keys.sort_unstable();
    from_key(keys[n - 1])
}

/// Sum of one column in sorted order. Zeros are skipped; they cannot change a
/// sum, and ReLU outputs are mostly zero.
fn column_sum(values: &[f64], n: usize, m: usize, j: usize, keys: &mut Vec<i64>) -> f64 {
    keys.clear();
    keys.extend((0..n).map(|i| values[i * m + j]).filter(|&v| v != 0.0).map(order_key));
    keys.sort_unstable();
    keys.iter().fold(0.0, |acc, &k| acc + from_key(k))
}

fn flatten(values: &[Vec<f64>]) -> Result<(Vec<f64>, usize, usize)> {
    let m = values.first().ok_or(Error::EmptyBag)?.len();
    let mut flat = Vec::with_capacity(values.len() * m);
    for v in values {
        if v.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: v.len(),
            });
        }
        flat.extend_from_slice(v);
    }
    Ok((flat, values.len(), m))
}

/// Coordinate-wise pooling of a non-empty list of equally sized vectors.
pub fn pool_forward(values: &[Vec<f64>], kind: PoolKind) -> Result<Vec<f64>> {
    let (flat, n, m) = flatten(values)?;
    let mut out = vec![0.0; m];
    let mut argmax = vec![0; m];
    pool_flat(&flat, n, m, kind, &mut out, &mut argmax, &mut Vec::new());
    Ok(out)
}

/// Per-instance gradients of the pooled vector contracted with `upstream`.
///
/// Mean spreads `upstream / |b|` evenly, max routes it to the lowest-index argmax,
/// smooth-max weights it by `softmax(v) / |b|`.
pub fn pool_backward(values: &[Vec<f64>], kind: PoolKind, upstream: &[f64]) -> Result<Vec<Vec<f64>>> {
    let (flat, n, m) = flatten(values)?;
    if upstream.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: upstream.len(),
        });
    }
    let mut out = vec![0.0; m];
    let mut argmax = vec![0; m];
    let mut scratch = Vec::new();
    pool_flat(&flat, n, m, kind, &mut out, &mut argmax, &mut scratch);
    let mut grad = vec![0.0; n * m];
    pool_backward_flat(&flat, n, m, kind, &argmax, upstream, &mut grad, &mut scratch);
    Ok(grad.chunks_exact(m).map(<[f64]>::to_vec).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_max() {
        let v = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
        assert_eq!(pool_forward(&v, PoolKind::Mean).unwrap(), vec![2.0, 3.0]);
        assert_eq!(pool_forward(&v, PoolKind::Max).unwrap(), vec![3.0, 4.0]);
    }

    #[test]
    fn smooth_max_single_instance_is_identity() {
        let v = vec![vec![0.3, -7.25, 120.0]];
        assert_eq!(pool_forward(&v, PoolKind::SmoothMax).unwrap(), v[0]);
    }

    #[test]
    fn smooth_max_matches_definition() {
        let v = vec![vec![0.5], vec![-1.0], vec![2.0]];
        let direct = (0.5f64.exp() + (-1.0f64).exp() + 2.0f64.exp()).ln() / 3.0;
        let got = pool_forward(&v, PoolKind::SmoothMax).unwrap()[0];
        assert!((got - direct).abs() < 1e-15);
    }

    #[test]
    fn empty_list_is_an_error() {
        assert!(matches!(pool_forward(&[], PoolKind::Mean), Err(Error::EmptyBag)));
        assert!(matches!(pool_backward(&[], PoolKind::Max, &[]), Err(Error::EmptyBag)));
    }

    #[test]
    fn mean_backward_spreads_evenly() {
        let v = vec![vec![1.0, 2.0, 3.0]; 4];
        let g = pool_backward(&v, PoolKind::Mean, &[1.0, 1.0, 1.0]).unwrap();
        for row in g {
            assert_eq!(row, vec![0.25, 0.25, 0.25]);
        }
    }

    #[test]
    fn max_backward_routes_to_argmax_lowest_index_on_ties() {
        let v = vec![vec![1.0, 5.0], vec![3.0, 5.0], vec![2.0, 0.0]];
        let g = pool_backward(&v, PoolKind::Max, &[2.0, 7.0]).unwrap();
        assert_eq!(g, vec![vec![0.0, 7.0], vec![2.0, 0.0], vec![0.0, 0.0]]);
    }

    #[test]
    fn parse_names() {
        assert_eq!("smoothmax".parse::<PoolKind>().unwrap(), PoolKind::SmoothMax);
        assert_eq!("max".parse::<PoolKind>().unwrap(), PoolKind::Max);
        assert!("min".parse::<PoolKind>().is_err());
    }
}
