//! Finite-window estimators: upper asymptotic density, the Besicovitch
//! pseudometric `D_B`, the threshold variant `D'_B` and the mismatch density
//! `d̄`.
//!
//! Every limsup is replaced by explicit values at chosen indices; the trace
//! summary reports the maximum over the last half of the evaluated indices.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{distance_from_ball, AdmissibleMetric, Configuration, Interval};
use crate::error::{LabError, Result};
use crate::group::{FiniteSubset, FolnerSequence, GroupPoint};
use crate::scalar::Scalar;

/// Default truncation radius for Besicovitch values.
pub const DEFAULT_RADIUS: u64 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub n: usize,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub running_max: f64,
    /// Max of `value` over the last half of the rows; the limsup proxy.
    pub tail_max: f64,
}

/// Rows `(n, value, lo, hi)` at strictly increasing `n`, with
/// `lo <= value <= hi` in every row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateTrace {
    pub rows: Vec<TraceRow>,
    pub summary: TraceSummary,
}

impl EstimateTrace {
    pub fn from_rows(rows: Vec<TraceRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(LabError::InvalidInput("empty trace".into()));
        }
        if rows.windows(2).any(|w| w[0].n >= w[1].n) {
            return Err(LabError::InvalidInput("trace indices must increase strictly".into()));
        }
        if rows.iter().any(|r| !(r.lo <= r.value && r.value <= r.hi)) {
            return Err(LabError::InvalidInput("trace row with value outside [lo, hi]".into()));
        }
        let running_max = rows.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max);
        let tail_max = rows[rows.len() / 2..].iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max);
        Ok(EstimateTrace { rows, summary: TraceSummary { running_max, tail_max } })
    }

    pub fn last(&self) -> &TraceRow {
        self.rows.last().expect("traces are non-empty")
    }

    /// CSV with header `n,value,lo,hi`; floats use the shortest round-trip
    /// representation.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,value,lo,hi\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.n, r.value, r.lo, r.hi);
        }
        out
    }
}

fn check_indices(n_list: &[usize]) -> Result<()> {
    if n_list.is_empty() {
        return Err(LabError::InvalidInput("empty index list".into()));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::InvalidInput("index list must increase strictly".into()));
    }
    Ok(())
}

fn ratio(num: usize, den: usize) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `D_F(A) = |A ∩ F| / |F|`.
pub fn density_in<A>(set: &A, window: &FiniteSubset) -> BigRational
where
    A: Fn(&[i64]) -> bool + Sync + ?Sized,
{
    ratio(window.count_where(|p| set(p)), window.len())
}

/// `D_{F_n}(A)` at each requested `n`, exactly.
pub fn upper_density<A>(set: &A, folner: &FolnerSequence, n_list: &[usize]) -> Result<EstimateTrace>
where
    A: Fn(&[i64]) -> bool + Sync + ?Sized,
{
    check_indices(n_list)?;
    let rows = n_list
        .iter()
        .map(|&n| {
            let v = Scalar::to_f64(&density_in(set, &folner.set(n)?));
            Ok(TraceRow { n, value: v, lo: v, hi: v })
        })
        .collect::<Result<Vec<_>>>()?;
    EstimateTrace::from_rows(rows)
}

/// Per-point enclosures of `d(gx, gz)` over a window, in window order.
fn pointwise_distances(
    x: &Configuration,
    z: &Configuration,
    window: &FiniteSubset,
    metric: &AdmissibleMetric,
    radius: u64,
) -> Vec<Interval> {
    let ball = metric.weighted_ball(radius);
    let tail = metric.tail_bound(radius);
    let points: Vec<GroupPoint> = window.iter().collect();
    points.par_iter().map(|g| distance_from_ball(x, z, &ball, g.coords(), tail)).collect()
}

/// `(1/|F_n|) Σ_{g ∈ F_n} d(gx, gz)` enclosed in `[lo, hi]` with
/// `hi - lo <= 2^{-R}`.
///
/// Summands are computed in parallel and added in window order, so the result
/// does not depend on the thread count.
pub fn besicovitch_estimate(
    x: &Configuration,
    z: &Configuration,
    folner: &FolnerSequence,
    n: usize,
    metric: &AdmissibleMetric,
    radius: u64,
) -> Result<Interval> {
    if n == 0 {
        return Err(LabError::InvalidInput("n must be at least 1".into()));
    }
    let window = folner.set(n)?;
    let parts = pointwise_distances(x, z, &window, metric, radius);
    let count = parts.len() as f64;
    let lo = parts.iter().map(|i| i.lo).sum::<f64>() / count;
    let hi = parts.iter().map(|i| i.hi).sum::<f64>() / count;
    Ok(Interval { lo, hi })
}

/// Besicovitch enclosures at each `n`; `value` is the midpoint.
pub fn besicovitch_trace(
    x: &Configuration,
    z: &Configuration,
    folner: &FolnerSequence,
    n_list: &[usize],
    metric: &AdmissibleMetric,
    radius: u64,
) -> Result<EstimateTrace> {
    check_indices(n_list)?;
    let rows = n_list
        .iter()
        .map(|&n| {
            let i = besicovitch_estimate(x, z, folner, n, metric, radius)?;
            Ok(TraceRow { n, value: i.midpoint().clamp(i.lo, i.hi), lo: i.lo, hi: i.hi })
        })
        .collect::<Result<Vec<_>>>()?;
    EstimateTrace::from_rows(rows)
}

/// `{1.0001} ∪ {k/200 : 1 <= k <= 200}`, descending.
pub fn default_delta_grid() -> Vec<f64> {
    let mut grid = vec![1.0001];
    grid.extend((1..=200).rev().map(|k| k as f64 / 200.0));
    grid
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DPrimeEstimate {
    pub value: f64,
    /// No grid value was feasible; `value` is the grid maximum.
    pub saturated: bool,
}

/// Smallest grid value `δ` with `|{g ∈ F_n : d(gx, gz) >= δ}| / |F_n| < δ`.
///
/// A point counts toward the threshold set only when the lower end of its
/// truncation interval reaches `δ`.
pub fn besicovitch_prime_estimate(
    x: &Configuration,
    z: &Configuration,
    folner: &FolnerSequence,
    n: usize,
    metric: &AdmissibleMetric,
    radius: u64,
    delta_grid: &[f64],
) -> Result<DPrimeEstimate> {
    if delta_grid.is_empty() {
        return Err(LabError::InvalidInput("empty delta grid".into()));
    }
    if n == 0 {
        return Err(LabError::InvalidInput("n must be at least 1".into()));
    }
    let window = folner.set(n)?;
    let mut lows: Vec<f64> = pointwise_distances(x, z, &window, metric, radius).iter().map(|i| i.lo).collect();
    lows.sort_by(|a, b| a.partial_cmp(b).expect("distances are finite"));
    let total = lows.len() as f64;
    let feasible = |delta: f64| {
        let at_or_above = lows.len() - lows.partition_point(|&v| v < delta);
        (at_or_above as f64) / total < delta
    };
    let best = delta_grid
        .iter()
        .copied()
        .filter(|&d| feasible(d))
        .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.min(d))));
    Ok(match best {
        Some(value) => DPrimeEstimate { value, saturated: false },
        None => DPrimeEstimate { value: delta_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max), saturated: true },
    })
}

/// `|{f ∈ W : x(f) ≠ z(f)}| / |W|`.
pub fn dbar_over(x: &Configuration, z: &Configuration, window: &FiniteSubset) -> BigRational {
    density_in(&|p: &[i64]| x.at(p) != z.at(p), window)
}

/// Exact mismatch density on `F_n`.
pub fn dbar_estimate(x: &Configuration, z: &Configuration, folner: &FolnerSequence, n: usize) -> Result<BigRational> {
    if n == 0 {
        return Err(LabError::InvalidInput("n must be at least 1".into()));
    }
    Ok(dbar_over(x, z, &folner.set(n)?))
}

pub fn dbar_trace(
    x: &Configuration,
    z: &Configuration,
    folner: &FolnerSequence,
    n_list: &[usize],
) -> Result<EstimateTrace> {
    check_indices(n_list)?;
    let rows = n_list
        .iter()
        .map(|&n| {
            let v = Scalar::to_f64(&dbar_estimate(x, z, folner, n)?);
            Ok(TraceRow { n, value: v, lo: v, hi: v })
        })
        .collect::<Result<Vec<_>>>()?;
    EstimateTrace::from_rows(rows)
}
