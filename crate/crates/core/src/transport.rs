//! Couplings, exact optimal transport between pattern distributions, gluing,
//! and the finite-window and periodic estimates of the joining distance ρ̄.

use std::collections::{BTreeMap, HashMap, VecDeque};

use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{restrict_at, AdmissibleMetric, Configuration, Lattice, Pattern, Symbol};
use crate::error::{LabError, Result};
use crate::group::{FiniteSubset, FolnerSequence, GroupPoint};
use crate::measures::{empirical_measure, PatternDistribution};
use crate::metrics::dbar_estimate;
use crate::scalar::{rational, Scalar};
use crate::Rational;

/// Joint distribution of pattern pairs with prescribed marginals.
#[derive(Clone, Debug, PartialEq)]
pub struct Coupling<S> {
    left: PatternDistribution<S>,
    right: PatternDistribution<S>,
    weights: BTreeMap<(Pattern, Pattern), S>,
}

fn same_weights<S: Scalar>(a: &BTreeMap<Pattern, S>, b: &BTreeMap<Pattern, S>) -> bool {
    let keys: std::collections::BTreeSet<&Pattern> = a.keys().chain(b.keys()).collect();
    keys.into_iter().all(|k| {
        let x = a.get(k).cloned().unwrap_or_else(S::zero);
        let y = b.get(k).cloned().unwrap_or_else(S::zero);
        if S::is_exact() {
            x == y
        } else {
            (x.to_f64() - y.to_f64()).abs() <= 1e-9
        }
    })
}

fn sums<S: Scalar>(weights: &BTreeMap<(Pattern, Pattern), S>) -> (BTreeMap<Pattern, S>, BTreeMap<Pattern, S>) {
    let mut rows: BTreeMap<Pattern, S> = BTreeMap::new();
    let mut cols: BTreeMap<Pattern, S> = BTreeMap::new();
    for ((a, b), w) in weights {
        let r = rows.entry(a.clone()).or_insert_with(S::zero);
        *r = r.clone() + w.clone();
        let c = cols.entry(b.clone()).or_insert_with(S::zero);
        *c = c.clone() + w.clone();
    }
    (rows, cols)
}

fn same_distribution<S: Scalar>(a: &PatternDistribution<S>, b: &PatternDistribution<S>) -> bool {
    a.window_points() == b.window_points() && same_weights(a.weights(), b.weights())
}

impl<S: Scalar> Coupling<S> {
    /// Checks that row sums reproduce `left` and column sums reproduce
    /// `right` (exactly for exact scalars). Zero entries are dropped.
    pub fn new(
        left: PatternDistribution<S>,
        right: PatternDistribution<S>,
        weights: BTreeMap<(Pattern, Pattern), S>,
    ) -> Result<Self> {
        if left.window_points() != right.window_points() {
            return Err(LabError::IncompatibleWindows("coupling marginals live on different windows".into()));
        }
        if let Some(w) = weights.values().find(|w| w.is_negative_tol()) {
            return Err(LabError::InvalidInput(format!("negative coupling weight {w:?}")));
        }
        let (rows, cols) = sums(&weights);
        if !same_weights(&rows, left.weights()) || !same_weights(&cols, right.weights()) {
            return Err(LabError::InvalidInput("coupling marginals do not match".into()));
        }
        let weights = weights.into_iter().filter(|(_, w)| w.is_positive_tol()).collect();
        Ok(Coupling { left, right, weights })
    }

    /// Mass of `μ` on the diagonal.
    pub fn diagonal(mu: &PatternDistribution<S>) -> Self {
        let weights = mu.weights().iter().map(|(p, w)| ((p.clone(), p.clone()), w.clone())).collect();
        Coupling { left: mu.clone(), right: mu.clone(), weights }
    }

    pub fn left(&self) -> &PatternDistribution<S> {
        &self.left
    }

    pub fn right(&self) -> &PatternDistribution<S> {
        &self.right
    }

    pub fn weights(&self) -> &BTreeMap<(Pattern, Pattern), S> {
        &self.weights
    }

    pub fn weight(&self, a: &Pattern, b: &Pattern) -> S {
        self.weights.get(&(a.clone(), b.clone())).cloned().unwrap_or_else(S::zero)
    }

    /// `Σ λ(a,b) · cost(a,b)`.
    pub fn cost<C: Fn(&Pattern, &Pattern) -> S>(&self, cost: C) -> S {
        self.weights.iter().fold(S::zero(), |acc, ((a, b), w)| acc + w.clone() * cost(a, b))
    }

    /// Row and column sums, recomputed from the joint weights.
    pub fn marginals(&self) -> (BTreeMap<Pattern, S>, BTreeMap<Pattern, S>) {
        sums(&self.weights)
    }

    pub fn to_literal(&self) -> CouplingLiteral {
        CouplingLiteral {
            window: self.left.window_points().to_vec(),
            entries: self
                .weights
                .iter()
                .map(|((a, b), w)| {
                    let frac = w.as_fraction();
                    CouplingEntry {
                        left: a.symbols().to_vec(),
                        right: b.symbols().to_vec(),
                        numerator: frac.map(|f| f.0),
                        denominator: frac.map(|f| f.1),
                        value: w.to_f64(),
                    }
                })
                .collect(),
        }
    }

    /// Rebuilds the marginals from the entries. The window must be listed in
    /// lexicographic order, as [`Coupling::to_literal`] writes it.
    pub fn from_literal(lit: &CouplingLiteral) -> Result<Self> {
        let window = FiniteSubset::from_points(lit.window.iter().cloned())?;
        if window.iter().collect::<Vec<_>>() != lit.window {
            return Err(LabError::InvalidInput("coupling window must be sorted and distinct".into()));
        }
        let mut weights = BTreeMap::new();
        for e in &lit.entries {
            let w = match (e.numerator, e.denominator) {
                (Some(n), Some(d)) if d > 0 => S::from_ratio(n, d),
                _ if !S::is_exact() => S::from_f64(e.value),
                _ => return Err(LabError::InvalidInput("exact weights need numerator and denominator".into())),
            };
            let key = (Pattern::new(&e.left), Pattern::new(&e.right));
            let slot = weights.entry(key).or_insert_with(S::zero);
            *slot = slot.clone() + w;
        }
        let (rows, cols) = sums(&weights);
        let left = PatternDistribution::new(window.clone(), rows)?;
        let right = PatternDistribution::new(window, cols)?;
        Self::new(left, right, weights)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingLiteral {
    pub window: Vec<GroupPoint>,
    pub entries: Vec<CouplingEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingEntry {
    pub left: Vec<Symbol>,
    pub right: Vec<Symbol>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numerator: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub denominator: Option<i64>,
    pub value: f64,
}

/// Pattern costs used for ρ̄ estimates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostKind {
    /// Mismatched sites divided by the window size.
    Hamming,
    /// Truncated admissible metric: the weights of the mismatched sites.
    Admissible,
}

/// `cost(p, q)` for patterns on `window` (listed in pattern order).
pub fn pattern_cost<S: Scalar>(
    kind: CostKind,
    metric: &AdmissibleMetric,
    window: &[GroupPoint],
    p: &Pattern,
    q: &Pattern,
) -> S {
    match kind {
        CostKind::Hamming => S::from_ratio(p.hamming(q) as i64, window.len() as i64),
        CostKind::Admissible => metric.pattern_distance(window, p, q),
    }
}

/// Optimal plan with the dual potentials that certify it.
#[derive(Clone, Debug)]
pub struct Transport<S> {
    pub coupling: Coupling<S>,
    pub value: S,
    /// Potentials indexed like the supports of `left` and `right`.
    pub row_potentials: Vec<S>,
    pub column_potentials: Vec<S>,
    /// Primal feasibility, dual feasibility and complementary slackness all
    /// hold (exactly, for exact scalars).
    pub certified: bool,
}

/// Solution of a dense transportation problem.
#[derive(Clone, Debug)]
pub struct TransportPlan<S> {
    /// `flow[i][j]`, zero off the final basis.
    pub flow: Vec<Vec<S>>,
    pub u: Vec<S>,
    pub v: Vec<S>,
    pub value: S,
    pub pivots: usize,
}

fn potentials<S: Scalar>(m: usize, n: usize, basis: &BTreeMap<(usize, usize), S>, cost: &[Vec<S>]) -> (Vec<S>, Vec<S>) {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m + n];
    for &(i, j) in basis.keys() {
        adj[i].push(m + j);
        adj[m + j].push(i);
    }
    let mut pot: Vec<Option<S>> = vec![None; m + n];
    pot[0] = Some(S::zero());
    let mut queue = VecDeque::from([0usize]);
    while let Some(a) = queue.pop_front() {
        let pa = pot[a].clone().expect("visited node has a potential");
        for &b in &adj[a] {
            if pot[b].is_none() {
                let (i, j) = if a < m { (a, b - m) } else { (b, a - m) };
                pot[b] = Some(cost[i][j].clone() - pa.clone());
                queue.push_back(b);
            }
        }
    }
    let pot: Vec<S> = pot.into_iter().map(|p| p.expect("basis is a spanning tree")).collect();
    (pot[..m].to_vec(), pot[m..].to_vec())
}

/// Node path from row `i` to column `j` in the basis tree.
fn tree_path(m: usize, n: usize, cells: &[(usize, usize)], i: usize, j: usize) -> Vec<usize> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m + n];
    for &(a, b) in cells {
        adj[a].push(m + b);
        adj[m + b].push(a);
    }
    let mut parent = vec![usize::MAX; m + n];
    parent[i] = i;
    let mut queue = VecDeque::from([i]);
    while let Some(a) = queue.pop_front() {
        if a == m + j {
            break;
        }
        for &b in &adj[a] {
            if parent[b] == usize::MAX {
                parent[b] = a;
                queue.push_back(b);
            }
        }
    }
    let mut path = vec![m + j];
    while *path.last().unwrap() != i {
        path.push(parent[*path.last().unwrap()]);
    }
    path.reverse();
    path
}

/// Transportation simplex: northwest-corner start, MODI potentials, Bland's
/// rule on both the entering and the leaving cell.
pub fn transportation_simplex<S: Scalar>(supply: &[S], demand: &[S], cost: &[Vec<S>]) -> TransportPlan<S> {
    let (m, n) = (supply.len(), demand.len());
    assert!(m > 0 && n > 0, "empty transportation problem");
    let mut basis: BTreeMap<(usize, usize), S> = BTreeMap::new();
    let (mut a, mut b) = (supply.to_vec(), demand.to_vec());
    let (mut i, mut j) = (0, 0);
    loop {
        let x = S::min_of(a[i].clone(), b[j].clone());
        a[i] = a[i].clone() - x.clone();
        b[j] = b[j].clone() - x.clone();
        basis.insert((i, j), x);
        if i == m - 1 && j == n - 1 {
            break;
        }
        if i == m - 1 {
            j += 1;
        } else if j == n - 1 || !a[i].is_positive_tol() {
            i += 1;
        } else {
            j += 1;
        }
    }

    let mut pivots = 0;
    let limit = 50 * (m * n + 1) * (m + n);
    loop {
        let (u, v) = potentials(m, n, &basis, cost);
        let entering = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).find(|&(i, j)| {
            !basis.contains_key(&(i, j)) && (cost[i][j].clone() - u[i].clone() - v[j].clone()).is_negative_tol()
        });
        let Some((ei, ej)) = entering else {
            let mut flow = vec![vec![S::zero(); n]; m];
            let mut value = S::zero();
            for (&(i, j), x) in &basis {
                value = value + x.clone() * cost[i][j].clone();
                flow[i][j] = x.clone();
            }
            return TransportPlan { flow, u, v, value, pivots };
        };
        pivots += 1;
        assert!(pivots <= limit, "transportation simplex failed to terminate");

        let cells: Vec<(usize, usize)> = basis.keys().copied().collect();
        let path = tree_path(m, n, &cells, ei, ej);
        // Edges alternate −, +, −, .. starting at row `ei`; the entering cell is +.
        let cells: Vec<((usize, usize), bool)> = path
            .windows(2)
            .enumerate()
            .map(|(t, w)| {
                let cell = if w[0] < m { (w[0], w[1] - m) } else { (w[1], w[0] - m) };
                (cell, t % 2 == 1)
            })
            .collect();
        let theta = cells
            .iter()
            .filter(|(_, plus)| !plus)
            .map(|(c, _)| basis[c].clone())
            .fold(None, |acc: Option<S>, x| Some(acc.map_or(x.clone(), |a| S::min_of(a, x))))
            .expect("cycle has a decreasing cell");
        let leaving = cells
            .iter()
            .filter(|(c, plus)| !plus && basis[c].approx_eq(&theta))
            .map(|(c, _)| *c)
            .min()
            .expect("some cell attains θ");
        for (c, plus) in &cells {
            let x = basis[c].clone();
            basis.insert(*c, if *plus { x + theta.clone() } else { x - theta.clone() });
        }
        basis.remove(&leaving);
        basis.insert((ei, ej), theta);
    }
}

fn certify<S: Scalar>(supply: &[S], demand: &[S], cost: &[Vec<S>], plan: &TransportPlan<S>) -> bool {
    let (m, n) = (supply.len(), demand.len());
    let tol = |x: &S, y: &S| if S::is_exact() { x == y } else { (x.to_f64() - y.to_f64()).abs() <= 1e-9 };
    let rows_ok = (0..m).all(|i| tol(&plan.flow[i].iter().fold(S::zero(), |a, x| a + x.clone()), &supply[i]));
    let cols_ok = (0..n).all(|j| tol(&(0..m).fold(S::zero(), |a, i| a + plan.flow[i][j].clone()), &demand[j]));
    let cells_ok = (0..m).all(|i| {
        (0..n).all(|j| {
            let reduced = cost[i][j].clone() - plan.u[i].clone() - plan.v[j].clone();
            !plan.flow[i][j].is_negative_tol()
                && !reduced.is_negative_tol()
                && (!plan.flow[i][j].is_positive_tol() || reduced.approx_eq(&S::zero()))
        })
    });
    rows_ok && cols_ok && cells_ok
}

/// Exact optimal coupling of `mu` and `nu` for a nonnegative cost.
pub fn min_cost_transport<S, C>(
    mu: &PatternDistribution<S>,
    nu: &PatternDistribution<S>,
    cost: C,
) -> Result<Transport<S>>
where
    S: Scalar,
    C: Fn(&Pattern, &Pattern) -> S,
{
    if mu.window_points() != nu.window_points() {
        return Err(LabError::IncompatibleWindows(format!("{:?} vs {:?}", mu.window(), nu.window())));
    }
    let rows: Vec<(&Pattern, &S)> = mu.weights().iter().collect();
    let cols: Vec<(&Pattern, &S)> = nu.weights().iter().collect();
    let matrix: Vec<Vec<S>> = rows.iter().map(|(a, _)| cols.iter().map(|(b, _)| cost(a, b)).collect()).collect();
    if matrix.iter().flatten().any(|c| c.is_negative_tol()) {
        return Err(LabError::InvalidInput("transport costs must be nonnegative".into()));
    }
    let supply: Vec<S> = rows.iter().map(|(_, w)| (*w).clone()).collect();
    let demand: Vec<S> = cols.iter().map(|(_, w)| (*w).clone()).collect();
    let plan = transportation_simplex(&supply, &demand, &matrix);
    let certified = certify(&supply, &demand, &matrix, &plan);
    debug_assert!(certified || !S::is_exact(), "exact transport solution failed certification");
    let mut weights = BTreeMap::new();
    for (i, (a, _)) in rows.iter().enumerate() {
        for (j, (b, _)) in cols.iter().enumerate() {
            if plan.flow[i][j].is_positive_tol() {
                weights.insert(((*a).clone(), (*b).clone()), plan.flow[i][j].clone());
            }
        }
    }
    let coupling = Coupling { left: mu.clone(), right: nu.clone(), weights };
    Ok(Transport { coupling, value: plan.value, row_potentials: plan.u, column_potentials: plan.v, certified })
}

/// Optimal transport under a [`CostKind`] on the shared window.
pub fn min_cost_by_kind<S: Scalar>(
    mu: &PatternDistribution<S>,
    nu: &PatternDistribution<S>,
    kind: CostKind,
    metric: &AdmissibleMetric,
) -> Result<Transport<S>> {
    let points = mu.window_points().to_vec();
    min_cost_transport(mu, nu, |p, q| pattern_cost(kind, metric, &points, p, q))
}

/// Lower bounds for ρ̄ from a nested family of block marginals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoChain {
    /// Optimal transport value on each window.
    pub values: Vec<String>,
    /// Running maximum of `values`: nondecreasing, and still a lower bound.
    pub chain: Vec<String>,
    pub values_f64: Vec<f64>,
    pub chain_f64: Vec<f64>,
    #[serde(skip)]
    exact: Vec<Rational>,
}

impl RhoChain {
    /// Running-maximum chain, exactly.
    pub fn chain_exact(&self) -> Vec<Rational> {
        let mut best: Option<Rational> = None;
        self.exact
            .iter()
            .map(|v| {
                let b = match &best {
                    Some(b) if b >= v => b.clone(),
                    _ => v.clone(),
                };
                best = Some(b.clone());
                b
            })
            .collect()
    }

    pub fn values_exact(&self) -> &[Rational] {
        &self.exact
    }
}

/// `(μ_k, ν_k)` on nested windows `W_1 ⊆ W_2 ⊆ ..`. Each pair is solved
/// exactly; every joining of the full measures restricts to a coupling of
/// the block marginals, so each value is a lower bound for ρ̄.
pub fn rho_bar_lower(
    family: &[(PatternDistribution<Rational>, PatternDistribution<Rational>)],
    kind: CostKind,
    metric: &AdmissibleMetric,
) -> Result<RhoChain> {
    if family.is_empty() {
        return Err(LabError::InvalidFamily("empty family".into()));
    }
    for (k, (mu, nu)) in family.iter().enumerate() {
        if mu.window_points() != nu.window_points() {
            return Err(LabError::IncompatibleWindows(format!("pair {k} has mismatched windows")));
        }
        if let Some((next_mu, next_nu)) = family.get(k + 1) {
            let inner = mu.window();
            if !inner.is_subset(next_mu.window()) {
                return Err(LabError::InvalidFamily(format!("window {k} is not inside window {}", k + 1)));
            }
            if next_mu.marginalize(inner)? != *mu || next_nu.marginalize(inner)? != *nu {
                return Err(LabError::InvalidFamily(format!("marginals {k} and {} disagree", k + 1)));
            }
        }
    }
    let exact: Vec<Rational> = family
        .par_iter()
        .map(|(mu, nu)| min_cost_by_kind(mu, nu, kind, metric).map(|t| t.value))
        .collect::<Result<_>>()?;
    let mut chain =
        RhoChain { values: Vec::new(), chain: Vec::new(), values_f64: Vec::new(), chain_f64: Vec::new(), exact };
    let running = chain.chain_exact();
    chain.values = chain.exact.iter().map(|v| v.to_string()).collect();
    chain.values_f64 = chain.exact.iter().map(Scalar::to_f64).collect();
    chain.chain = running.iter().map(|v| v.to_string()).collect();
    chain.chain_f64 = running.iter().map(Scalar::to_f64).collect();
    Ok(chain)
}

/// `π13(a,c) = Σ_b π12(a,b) π23(b,c) / η(b)`.
pub fn glue_couplings<S: Scalar>(pi12: &Coupling<S>, pi23: &Coupling<S>) -> Result<Coupling<S>> {
    if !same_distribution(&pi12.right, &pi23.left) {
        return Err(LabError::IncompatibleMiddle);
    }
    let eta = pi12.right.weights();
    let mut into: HashMap<&Pattern, Vec<(&Pattern, &S)>> = HashMap::new();
    for ((a, b), w) in &pi12.weights {
        into.entry(b).or_default().push((a, w));
    }
    let mut out: BTreeMap<(Pattern, Pattern), S> = BTreeMap::new();
    for ((b, c), w23) in &pi23.weights {
        let mass = eta.get(b).expect("middle pattern with mass lies in the support of η");
        assert!(mass.is_positive_tol(), "gluing through a null middle pattern");
        for (a, w12) in into.get(b).map(Vec::as_slice).unwrap_or(&[]) {
            let add = (*w12).clone() * w23.clone() / mass.clone();
            let slot = out.entry(((*a).clone(), c.clone())).or_insert_with(S::zero);
            *slot = slot.clone() + add;
        }
    }
    Coupling::new(pi12.left.clone(), pi23.right.clone(), out)
}

/// Joint empirical distribution of `(x, z)` patterns along `F_n`.
pub fn pair_empirical_joining<S: Scalar>(
    x: &Configuration,
    z: &Configuration,
    f_n: &FiniteSubset,
    w: &FiniteSubset,
) -> Result<Coupling<S>> {
    if f_n.is_empty() || w.is_empty() {
        return Err(LabError::InvalidInput("empty Følner set or window".into()));
    }
    if x.dim() != z.dim() || f_n.dim() != x.dim() || w.dim() != x.dim() {
        return Err(LabError::IncompatibleWindows("dimension differs from the configurations".into()));
    }
    let points: Vec<GroupPoint> = w.iter().collect();
    let counts = f_n.par_fold(
        HashMap::<(Pattern, Pattern), usize>::new,
        |acc, f| *acc.entry((restrict_at(x, &points, f), restrict_at(z, &points, f))).or_insert(0) += 1,
        |mut a, b| {
            for (k, c) in b {
                *a.entry(k).or_insert(0) += c;
            }
            a
        },
    );
    let total = f_n.len() as i64;
    let mut rows: BTreeMap<Pattern, i64> = BTreeMap::new();
    let mut cols: BTreeMap<Pattern, i64> = BTreeMap::new();
    let mut weights = BTreeMap::new();
    for ((p, q), c) in counts {
        *rows.entry(p.clone()).or_insert(0) += c as i64;
        *cols.entry(q.clone()).or_insert(0) += c as i64;
        weights.insert((p, q), S::from_ratio(c as i64, total));
    }
    let to_dist = |m: BTreeMap<Pattern, i64>| {
        PatternDistribution::new(w.clone(), m.into_iter().map(|(p, c)| (p, S::from_ratio(c, total))).collect())
    };
    Coupling::new(to_dist(rows)?, to_dist(cols)?, weights)
}

/// Uniform measure on the translates of a periodic configuration.
#[derive(Clone, Debug)]
pub struct PeriodicOrbitMeasure {
    config: Configuration,
    lattice: Lattice,
}

impl PeriodicOrbitMeasure {
    /// Uses the configuration's own period lattice.
    pub fn new(config: &Configuration) -> Result<Self> {
        let lattice = config
            .period_lattice()
            .ok_or_else(|| LabError::InvalidInput(format!("{} has no known period lattice", config.describe())))?;
        Ok(PeriodicOrbitMeasure { config: config.clone(), lattice })
    }

    /// Checks directly that every basis vector of `lattice` is a period.
    pub fn with_lattice(config: &Configuration, lattice: Lattice) -> Result<Self> {
        if lattice.dim() != config.dim() {
            return Err(LabError::InvalidDimension(lattice.dim() as i64));
        }
        let domain = lattice.fundamental_domain();
        for v in lattice.basis() {
            let bad = domain.count_where(|p| {
                let moved: Vec<i64> = p.iter().zip(v).map(|(a, b)| a + b).collect();
                config.at(p) != config.at(&moved)
            });
            if bad > 0 {
                return Err(LabError::InvalidInput(format!("{v:?} is not a period of {}", config.describe())));
            }
        }
        Ok(PeriodicOrbitMeasure { config: config.clone(), lattice })
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Exact `W`-marginal: the empirical measure over one fundamental domain.
    pub fn marginal<S: Scalar>(&self, w: &FiniteSubset) -> Result<PatternDistribution<S>> {
        empirical_measure(&self.config, &self.lattice.fundamental_domain(), w)
    }

    /// Marginals on the given nested windows.
    pub fn family<S: Scalar>(&self, windows: &[FiniteSubset]) -> Result<Vec<PatternDistribution<S>>> {
        windows.iter().map(|w| self.marginal(w)).collect()
    }
}

/// `W_k = {0, .., k−1}^d` for `k = 1..=k_max`.
pub fn box_windows(dim: usize, k_max: usize) -> Vec<FiniteSubset> {
    (1..=k_max).map(|k| FiniteSubset::cube(dim, 0, k as i64 - 1)).collect()
}

/// Exact ρ̄ between two periodic orbit measures with per-site Hamming cost.
///
/// Ergodic joinings of two periodic orbits are the orbits of the pairs
/// `(x, shift(s, z))`, one per shift `s` modulo the period lattice of `z`.
/// Each is averaged over the box `{0..e−1}^d`, where `e` is a common exponent
/// of both lattices, hence a union of joint-period cosets.
pub fn periodic_rho_oracle(a: &PeriodicOrbitMeasure, b: &PeriodicOrbitMeasure) -> Result<Rational> {
    let d = a.config.dim();
    if b.config.dim() != d {
        return Err(LabError::InvalidDimension(b.config.dim() as i64));
    }
    let e = a.lattice.exponent().lcm(&b.lattice.exponent());
    let period = FiniteSubset::cube(d, 0, e as i64 - 1);
    let shifts: Vec<GroupPoint> = b.lattice.fundamental_domain().iter().collect();
    let best = shifts
        .par_iter()
        .map(|s| {
            period.count_where(|p| {
                let moved: Vec<i64> = p.iter().zip(s.coords()).map(|(x, y)| x + y).collect();
                a.config.at(p) != b.config.at(&moved)
            })
        })
        .min()
        .expect("fundamental domain is non-empty");
    Ok(rational(best as i64, period.len() as i64))
}

/// Comparison of a d̄ estimate against the exact ρ̄ of two periodic orbits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DbRhoReport {
    pub n: usize,
    pub dbar_estimate: f64,
    pub dbar_exact: String,
    pub oracle: f64,
    pub oracle_exact: String,
    pub chain: RhoChain,
    pub tol: f64,
    pub estimate_ok: bool,
    pub chain_ok: bool,
    pub pass: bool,
}

/// Passes iff the d̄ estimate on `F_n` is at least the oracle minus `tol`,
/// and every Hamming lower bound on `W_1..W_{k_max}` is at most the oracle.
pub fn check_db_ge_rho(
    x: &Configuration,
    z: &Configuration,
    folner: &FolnerSequence,
    n: usize,
    k_max: usize,
    tol: f64,
) -> Result<DbRhoReport> {
    let a = PeriodicOrbitMeasure::new(x)?;
    let b = PeriodicOrbitMeasure::new(z)?;
    let oracle = periodic_rho_oracle(&a, &b)?;
    let dbar = dbar_estimate(x, z, folner, n)?;
    let windows = box_windows(x.dim(), k_max.max(1));
    let family: Vec<_> = a.family::<Rational>(&windows)?.into_iter().zip(b.family::<Rational>(&windows)?).collect();
    let metric = crate::config::default_metric(x.dim() as i64)?;
    let chain = rho_bar_lower(&family, CostKind::Hamming, &metric)?;
    let estimate_ok = Scalar::to_f64(&dbar) >= Scalar::to_f64(&oracle) - tol;
    let chain_ok = chain.values_exact().iter().all(|v| *v <= oracle);
    Ok(DbRhoReport {
        n,
        dbar_estimate: Scalar::to_f64(&dbar),
        dbar_exact: dbar.to_string(),
        oracle: Scalar::to_f64(&oracle),
        oracle_exact: oracle.to_string(),
        chain,
        tol,
        estimate_ok,
        chain_ok,
        pass: estimate_ok && chain_ok,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleReport {
    pub mu_nu: String,
    pub mu_eta: String,
    pub eta_nu: String,
    pub glued_cost: String,
    pub marginals_exact: bool,
    pub bound_holds: bool,
    pub glued_witness: bool,
    pub pass: bool,
}

/// `min_cost(μ,ν) ≤ min_cost(μ,η) + min_cost(η,ν)`, with the glued optimal
/// couplings as witness.
pub fn rho_triangle_check<C>(
    mu: &PatternDistribution<Rational>,
    eta: &PatternDistribution<Rational>,
    nu: &PatternDistribution<Rational>,
    cost: C,
) -> Result<TriangleReport>
where
    C: Fn(&Pattern, &Pattern) -> Rational,
{
    let direct = min_cost_transport(mu, nu, &cost)?;
    let first = min_cost_transport(mu, eta, &cost)?;
    let second = min_cost_transport(eta, nu, &cost)?;
    let glued = glue_couplings(&first.coupling, &second.coupling)?;
    let (rows, cols) = glued.marginals();
    let marginals_exact = same_weights(&rows, mu.weights()) && same_weights(&cols, nu.weights());
    let sum = first.value.clone() + second.value.clone();
    let glued_cost = glued.cost(&cost);
    let bound_holds = direct.value <= sum;
    let glued_witness = direct.value <= glued_cost && glued_cost <= sum;
    Ok(TriangleReport {
        mu_nu: direct.value.to_string(),
        mu_eta: first.value.to_string(),
        eta_nu: second.value.to_string(),
        glued_cost: glued_cost.to_string(),
        marginals_exact,
        bound_holds,
        glued_witness,
        pass: marginals_exact && bound_holds && glued_witness,
    })
}
