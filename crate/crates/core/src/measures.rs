//! Empirical measures as finite pattern distributions, and the Prokhorov
//! distance between them.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{restrict_at, AdmissibleMetric, Configuration, Pattern, Symbol};
use crate::error::{LabError, Result};
use crate::flow::MaxFlow;
use crate::group::{FiniteSubset, FolnerSequence, GroupPoint};
use crate::scalar::Scalar;

/// Binary-search resolution of [`prokhorov_distance`].
pub const PROKHOROV_RESOLUTION: f64 = 1e-6;

/// Probability distribution on the patterns of one finite window.
#[derive(Clone, PartialEq)]
pub struct PatternDistribution<S> {
    window: FiniteSubset,
    points: Vec<GroupPoint>,
    weights: BTreeMap<Pattern, S>,
}

impl<S: std::fmt::Debug> std::fmt::Debug for PatternDistribution<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PatternDistribution").field("window", &self.window).field("weights", &self.weights).finish()
    }
}

fn total_is_one<S: Scalar>(total: &S) -> bool {
    if S::is_exact() {
        total.is_one()
    } else {
        (total.to_f64() - 1.0).abs() <= 1e-9
    }
}

impl<S: Scalar> PatternDistribution<S> {
    /// Zero weights are dropped. Weights must be nonnegative and sum to one
    /// (exactly for exact scalars).
    pub fn new(window: FiniteSubset, weights: BTreeMap<Pattern, S>) -> Result<Self> {
        if window.is_empty() {
            return Err(LabError::InvalidInput("empty window".into()));
        }
        let size = window.len();
        let mut total = S::zero();
        for (p, w) in &weights {
            if p.len() != size {
                return Err(LabError::IncompatibleWindows(format!(
                    "pattern of length {} on a window of {size} points",
                    p.len()
                )));
            }
            if w.is_negative_tol() {
                return Err(LabError::InvalidInput(format!("negative weight {w:?}")));
            }
            total = total + w.clone();
        }
        if !total_is_one(&total) {
            return Err(LabError::InvalidInput(format!("weights sum to {}", total.to_f64())));
        }
        let weights = weights.into_iter().filter(|(_, w)| w.is_positive_tol()).collect();
        let points = window.iter().collect();
        Ok(PatternDistribution { window, points, weights })
    }

    pub fn dirac(window: FiniteSubset, pattern: Pattern) -> Result<Self> {
        Self::new(window, BTreeMap::from([(pattern, S::one())]))
    }

    pub fn window(&self) -> &FiniteSubset {
        &self.window
    }

    /// Window points in the order pattern symbols are listed.
    pub fn window_points(&self) -> &[GroupPoint] {
        &self.points
    }

    pub fn weights(&self) -> &BTreeMap<Pattern, S> {
        &self.weights
    }

    pub fn weight(&self, p: &Pattern) -> S {
        self.weights.get(p).cloned().unwrap_or_else(S::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = &Pattern> {
        self.weights.keys()
    }

    pub fn support_len(&self) -> usize {
        self.weights.len()
    }

    pub fn total(&self) -> S {
        self.weights.values().fold(S::zero(), |a, w| a + w.clone())
    }

    fn same_window(&self, other: &Self) -> Result<()> {
        if self.window.to_point_set() == other.window.to_point_set() {
            Ok(())
        } else {
            Err(LabError::IncompatibleWindows(format!("{:?} vs {:?}", self.window, other.window)))
        }
    }

    /// Image under restriction to `sub ⊆ window`.
    pub fn marginalize(&self, sub: &FiniteSubset) -> Result<Self> {
        let positions: Vec<usize> = sub
            .iter()
            .map(|p| {
                self.points
                    .binary_search(&p)
                    .map_err(|_| LabError::IncompatibleWindows(format!("{p:?} is not in {:?}", self.window)))
            })
            .collect::<Result<_>>()?;
        let mut out: BTreeMap<Pattern, S> = BTreeMap::new();
        for (p, w) in &self.weights {
            let symbols: Vec<Symbol> = positions.iter().map(|&i| p.symbols()[i]).collect();
            let e = out.entry(Pattern::new(&symbols)).or_insert_with(S::zero);
            *e = e.clone() + w.clone();
        }
        Ok(PatternDistribution { window: sub.clone(), points: sub.iter().collect(), weights: out })
    }

    /// `½ Σ |μ(p) − ν(p)|`.
    pub fn total_variation(&self, other: &Self) -> Result<S> {
        self.same_window(other)?;
        let mut sum = S::zero();
        for (p, w) in &self.weights {
            sum = sum + (w.clone() - other.weight(p)).abs();
        }
        for (p, w) in &other.weights {
            if !self.weights.contains_key(p) {
                sum = sum + w.clone();
            }
        }
        Ok(sum / S::from_ratio(2, 1))
    }

    /// Same distribution with weights mapped through `f`, unchecked.
    pub fn map_weights<T: Scalar>(&self, f: impl Fn(&S) -> T) -> PatternDistribution<T> {
        PatternDistribution {
            window: self.window.clone(),
            points: self.points.clone(),
            weights: self.weights.iter().map(|(p, w)| (p.clone(), f(w))).collect(),
        }
    }

    pub fn to_literal(&self) -> DistributionLiteral {
        DistributionLiteral {
            window: self.points.clone(),
            entries: self
                .weights
                .iter()
                .map(|(p, w)| {
                    let frac = w.as_fraction();
                    DistributionEntry {
                        pattern: p.symbols().to_vec(),
                        numerator: frac.map(|f| f.0),
                        denominator: frac.map(|f| f.1),
                        value: w.to_f64(),
                    }
                })
                .collect(),
        }
    }

    /// Exact scalars need `numerator`/`denominator` on every entry; floats
    /// fall back to `value`.
    pub fn from_literal(lit: &DistributionLiteral) -> Result<Self> {
        let window = FiniteSubset::from_points(lit.window.iter().cloned())?;
        let order: Vec<GroupPoint> = window.iter().collect();
        let perm: Vec<usize> =
            order.iter().map(|p| lit.window.iter().position(|q| q == p).expect("point from the same list")).collect();
        if order.len() != lit.window.len() {
            return Err(LabError::InvalidInput("repeated window point".into()));
        }
        let mut weights = BTreeMap::new();
        for e in &lit.entries {
            if e.pattern.len() != order.len() {
                return Err(LabError::IncompatibleWindows("pattern length differs from window size".into()));
            }
            let w = match (e.numerator, e.denominator) {
                (Some(n), Some(d)) if d > 0 => S::from_ratio(n, d),
                (Some(_), Some(_)) => return Err(LabError::InvalidInput("nonpositive denominator".into())),
                _ if !S::is_exact() => S::from_f64(e.value),
                _ => return Err(LabError::InvalidInput("exact weights need numerator and denominator".into())),
            };
            let symbols: Vec<Symbol> = perm.iter().map(|&i| e.pattern[i]).collect();
            let slot = weights.entry(Pattern::new(&symbols)).or_insert_with(S::zero);
            *slot = slot.clone() + w;
        }
        Self::new(window, weights)
    }
}

/// JSON form of a [`PatternDistribution`]. Symbols of each pattern are listed
/// in `window` order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionLiteral {
    pub window: Vec<GroupPoint>,
    pub entries: Vec<DistributionEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionEntry {
    pub pattern: Vec<Symbol>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numerator: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub denominator: Option<i64>,
    pub value: f64,
}

/// Non-empty list of distributions over one window.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureSet<S> {
    members: Vec<PatternDistribution<S>>,
}

impl<S: Scalar> MeasureSet<S> {
    pub fn new(members: Vec<PatternDistribution<S>>) -> Result<Self> {
        let first = members.first().ok_or_else(|| LabError::InvalidInput("empty measure set".into()))?;
        for m in &members[1..] {
            first.same_window(m)?;
        }
        Ok(MeasureSet { members })
    }

    pub fn members(&self) -> &[PatternDistribution<S>] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Counts of `restrict(shift(f, x), W)` over `f ∈ F_n`.
pub fn pattern_counts(x: &Configuration, f_n: &FiniteSubset, w: &FiniteSubset) -> Result<BTreeMap<Pattern, usize>> {
    if f_n.is_empty() || w.is_empty() {
        return Err(LabError::InvalidInput("empty Følner set or window".into()));
    }
    if f_n.dim() != x.dim() || w.dim() != x.dim() {
        return Err(LabError::IncompatibleWindows("dimension differs from the configuration".into()));
    }
    let points: Vec<GroupPoint> = w.iter().collect();
    let counts = f_n.par_fold(
        HashMap::<Pattern, usize>::new,
        |acc, f| *acc.entry(restrict_at(x, &points, f)).or_insert(0) += 1,
        |mut a, b| {
            for (p, c) in b {
                *a.entry(p).or_insert(0) += c;
            }
            a
        },
    );
    Ok(counts.into_iter().collect())
}

/// `(1/|F_n|) Σ_{f∈F_n} δ_{restrict(shift(f,x), W)}`.
pub fn empirical_measure<S: Scalar>(
    x: &Configuration,
    f_n: &FiniteSubset,
    w: &FiniteSubset,
) -> Result<PatternDistribution<S>> {
    let total = f_n.len() as i64;
    let weights = pattern_counts(x, f_n, w)?.into_iter().map(|(p, c)| (p, S::from_ratio(c as i64, total))).collect();
    PatternDistribution::new(w.clone(), weights)
}

/// A Prokhorov value with the resolution it was resolved to. The true
/// distance lies in `[value − resolution, value]`; an exact zero is reported
/// with resolution zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prokhorov {
    pub value: f64,
    pub resolution: f64,
}

struct Closeness<'a, S> {
    left: Vec<(&'a Pattern, S)>,
    right: Vec<(&'a Pattern, S)>,
    dist: Vec<Vec<S>>,
}

impl<'a, S: Scalar> Closeness<'a, S> {
    fn new<D>(mu: &'a PatternDistribution<S>, nu: &'a PatternDistribution<S>, dist: D) -> Self
    where
        D: Fn(&Pattern, &Pattern) -> S,
    {
        let left: Vec<_> = mu.weights.iter().map(|(p, w)| (p, w.clone())).collect();
        let right: Vec<_> = nu.weights.iter().map(|(p, w)| (p, w.clone())).collect();
        let dist = left.iter().map(|(a, _)| right.iter().map(|(b, _)| dist(a, b)).collect()).collect();
        Closeness { left, right, dist }
    }

    /// Largest mass movable along pairs at distance `≤ eps`.
    fn matched(&self, eps: &S) -> S {
        let (l, r) = (self.left.len(), self.right.len());
        let (source, sink) = (l + r, l + r + 1);
        let mut net = MaxFlow::new(l + r + 2);
        for (i, (_, w)) in self.left.iter().enumerate() {
            net.add_edge(source, i, w.clone());
        }
        for (j, (_, w)) in self.right.iter().enumerate() {
            net.add_edge(l + j, sink, w.clone());
        }
        for i in 0..l {
            for j in 0..r {
                if self.dist[i][j] <= *eps {
                    net.add_edge(i, l + j, S::one());
                }
            }
        }
        net.max_flow(source, sink)
    }

    /// There is a coupling putting mass `≤ eps` on pairs farther than `eps`.
    fn feasible(&self, eps: &S) -> bool {
        let lack = S::one() - self.matched(eps) - eps.clone();
        !lack.is_positive_tol()
    }
}

/// Prokhorov distance under an arbitrary pattern metric bounded by 1,
/// by binary search on the flow feasibility test.
pub fn prokhorov_with<S, D>(mu: &PatternDistribution<S>, nu: &PatternDistribution<S>, dist: D) -> Result<Prokhorov>
where
    S: Scalar,
    D: Fn(&Pattern, &Pattern) -> S,
{
    mu.same_window(nu)?;
    let graph = Closeness::new(mu, nu, dist);
    if graph.feasible(&S::zero()) {
        return Ok(Prokhorov { value: 0.0, resolution: 0.0 });
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > PROKHOROV_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if graph.feasible(&S::from_f64(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Prokhorov { value: hi, resolution: PROKHOROV_RESOLUTION })
}

/// Prokhorov distance under the truncated admissible metric on the window.
pub fn prokhorov_distance<S: Scalar>(
    mu: &PatternDistribution<S>,
    nu: &PatternDistribution<S>,
    metric: &AdmissibleMetric,
) -> Result<Prokhorov> {
    let points = mu.points.clone();
    prokhorov_with(mu, nu, |p, q| metric.pattern_distance::<S>(&points, p, q))
}

/// Exact Prokhorov distance. Unmatched mass is a step function of `ε`
/// changing only at pairwise distances `D_i`, so the distance is
/// `min_i max(D_i, c_i)` with `c_i` the unmatched mass at `D_i`.
pub fn prokhorov_exact_with<S, D>(mu: &PatternDistribution<S>, nu: &PatternDistribution<S>, dist: D) -> Result<S>
where
    S: Scalar,
    D: Fn(&Pattern, &Pattern) -> S,
{
    mu.same_window(nu)?;
    let graph = Closeness::new(mu, nu, dist);
    let mut levels: Vec<S> = graph.dist.iter().flatten().cloned().collect();
    levels.push(S::zero());
    levels.sort_by(|a, b| a.partial_cmp(b).expect("comparable distances"));
    levels.dedup_by(|a, b| a == b);
    let mut best = S::one();
    for d in levels {
        let unmatched = S::one() - graph.matched(&d);
        best = S::min_of(best, S::max_of(d, unmatched));
    }
    Ok(best)
}

pub fn prokhorov_exact<S: Scalar>(
    mu: &PatternDistribution<S>,
    nu: &PatternDistribution<S>,
    metric: &AdmissibleMetric,
) -> Result<S> {
    let points = mu.points.clone();
    prokhorov_exact_with(mu, nu, |p, q| metric.pattern_distance::<S>(&points, p, q))
}

/// Hausdorff distance between measure sets induced by the Prokhorov metric.
pub fn hausdorff_prokhorov<S: Scalar>(s: &MeasureSet<S>, t: &MeasureSet<S>, metric: &AdmissibleMetric) -> Result<f64> {
    if s.is_empty() || t.is_empty() {
        return Err(LabError::InvalidInput("empty measure set".into()));
    }
    let table: Vec<Vec<f64>> = s
        .members
        .par_iter()
        .map(|a| t.members.iter().map(|b| prokhorov_distance(a, b, metric).map(|p| p.value)).collect())
        .collect::<Result<_>>()?;
    let one_side = table.iter().map(|row| row.iter().cloned().fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
    let other_side =
        (0..t.len()).map(|j| table.iter().map(|row| row[j]).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
    Ok(one_side.max(other_side))
}

fn check_increasing(n_list: &[usize]) -> Result<()> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::InvalidInput("n list must be non-empty and increasing".into()));
    }
    Ok(())
}

/// Empirical measures at each `n`, computed in parallel, in `n_list` order.
pub fn empirical_family<S: Scalar>(
    x: &Configuration,
    folner: &FolnerSequence,
    n_list: &[usize],
    w: &FiniteSubset,
) -> Result<Vec<PatternDistribution<S>>> {
    n_list.par_iter().map(|&n| empirical_measure(x, &folner.set(n)?, w)).collect()
}

/// Greedy clustering of the empirical measures along `n_list`: a measure
/// opens a new cluster unless it is within `merge_tol` of an earlier
/// representative.
pub fn omega_hat_approx<S: Scalar>(
    x: &Configuration,
    folner: &FolnerSequence,
    n_list: &[usize],
    w: &FiniteSubset,
    merge_tol: f64,
    metric: &AdmissibleMetric,
) -> Result<MeasureSet<S>> {
    check_increasing(n_list)?;
    if merge_tol.is_nan() || merge_tol <= 0.0 {
        return Err(LabError::InvalidInput(format!("merge tolerance {merge_tol} must be positive")));
    }
    let mut reps: Vec<PatternDistribution<S>> = Vec::new();
    for m in empirical_family(x, folner, n_list, w)? {
        let mut absorbed = false;
        for r in &reps {
            if prokhorov_distance(&m, r, metric)?.value <= merge_tol {
                absorbed = true;
                break;
            }
        }
        if !absorbed {
            reps.push(m);
        }
    }
    MeasureSet::new(reps)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenericityReport {
    pub pass: bool,
    pub final_distance: f64,
    pub resolution: f64,
    /// `(n, distance)` per requested index.
    pub distances: Vec<(usize, f64)>,
}

/// Distance from the empirical measures to `target` along `n_list`. Passes
/// when the last distance is within `tol` and the last three do not rise by
/// more than `tol / 2`.
pub fn genericity_check<S: Scalar>(
    x: &Configuration,
    folner: &FolnerSequence,
    target: &PatternDistribution<S>,
    n_list: &[usize],
    tol: f64,
    metric: &AdmissibleMetric,
) -> Result<GenericityReport> {
    check_increasing(n_list)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(LabError::InvalidInput(format!("tolerance {tol} must be positive")));
    }
    let family = empirical_family::<S>(x, folner, n_list, target.window())?;
    let values = family.par_iter().map(|m| prokhorov_distance(m, target, metric)).collect::<Result<Vec<_>>>()?;
    let distances: Vec<(usize, f64)> = n_list.iter().copied().zip(values.iter().map(|p| p.value)).collect();
    let last = *values.last().expect("non-empty n list");
    let tail = &distances[distances.len().saturating_sub(3)..];
    let settled = tail.windows(2).all(|w| w[1].1 <= w[0].1 + tol / 2.0);
    Ok(GenericityReport {
        pass: last.value <= tol && settled,
        final_distance: last.value,
        resolution: last.resolution,
        distances,
    })
}
