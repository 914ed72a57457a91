//! Configurations in 𝒜^{ℤ^d}: finitely described total maps from the group
//! to a finite alphabet, the shift action, sublattices for periodic rules and
//! the default admissible metric.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{LabError, Result};
use crate::group::{FiniteSubset, GroupPoint};
use crate::scalar::Scalar;

pub type Symbol = u8;

/// Largest periodic table that will be materialized.
const MAX_TABLE: u64 = 1 << 26;

/// Symbols `0 .. size`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Alphabet {
    size: u8,
}

impl Alphabet {
    pub fn new(size: u8) -> Result<Self> {
        if size < 2 {
            return Err(LabError::InvalidInput(format!("alphabet size {size} < 2")));
        }
        Ok(Alphabet { size })
    }

    pub fn binary() -> Self {
        Alphabet { size: 2 }
    }

    pub fn size(&self) -> u8 {
        self.size
    }
}

impl TryFrom<u8> for Alphabet {
    type Error = LabError;
    fn try_from(size: u8) -> Result<Self> {
        Alphabet::new(size)
    }
}

impl From<Alphabet> for u8 {
    fn from(a: Alphabet) -> u8 {
        a.size
    }
}

/// Full-rank sublattice of ℤ^d.
///
/// The generators are kept as given; a lower-triangular Hermite form is
/// computed once and used for membership and canonical coset
/// representatives, which live in the box `∏ [0, h_ii)`.
#[derive(Clone, PartialEq, Eq)]
pub struct Lattice {
    basis: Vec<Vec<i64>>,
    /// `hermite[c][r]`: row `r` of column `c`, zero for `r < c`.
    hermite: Vec<Vec<i64>>,
    index: u64,
}

impl fmt::Debug for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Lattice(basis={:?}, index={})", self.basis, self.index)
    }
}

impl Lattice {
    /// Lattice spanned by `generators` (each a vector of length d, d of them).
    #[allow(clippy::needless_range_loop)]
    pub fn new(generators: Vec<Vec<i64>>) -> Result<Self> {
        let d = generators.len();
        if d == 0 || generators.iter().any(|g| g.len() != d) {
            return Err(LabError::InvalidDimension(d as i64));
        }
        let mut cols: Vec<Vec<i128>> = generators.iter().map(|g| g.iter().map(|&v| v as i128).collect()).collect();
        for r in 0..d {
            for c in r + 1..d {
                while cols[c][r] != 0 {
                    let q = Integer::div_floor(&cols[r][r], &cols[c][r]);
                    for k in 0..d {
                        let sub = cols[c][k] * q;
                        cols[r][k] -= sub;
                    }
                    cols.swap(r, c);
                }
            }
            if cols[r][r] == 0 {
                return Err(LabError::InvalidInput(format!("singular lattice basis {generators:?}")));
            }
            if cols[r][r] < 0 {
                cols[r].iter_mut().for_each(|v| *v = -*v);
            }
        }
        let mut index: u64 = 1;
        let mut hermite = Vec::with_capacity(d);
        for (c, col) in cols.iter().enumerate() {
            let mut out = Vec::with_capacity(d);
            for &v in col {
                out.push(i64::try_from(v).map_err(|_| LabError::Overflow("lattice entry".into()))?);
            }
            index = index.checked_mul(out[c] as u64).ok_or_else(|| LabError::Overflow("lattice index".into()))?;
            hermite.push(out);
        }
        Ok(Lattice { basis: generators, hermite, index })
    }

    /// `diag(m_1, .., m_d) ℤ^d`.
    pub fn diagonal(periods: &[i64]) -> Result<Self> {
        let d = periods.len();
        Self::new((0..d).map(|i| (0..d).map(|j| if i == j { periods[i] } else { 0 }).collect()).collect())
    }

    /// `m ℤ^d`.
    pub fn scaled(dim: usize, m: i64) -> Result<Self> {
        Self::diagonal(&vec![m; dim])
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<i64>] {
        &self.basis
    }

    /// `|ℤ^d / L| = |det|`.
    pub fn index(&self) -> u64 {
        self.index
    }

    /// Diagonal of the Hermite form; the coset representatives are
    /// `∏ [0, h_ii)`.
    pub fn diagonal_periods(&self) -> Vec<i64> {
        (0..self.dim()).map(|i| self.hermite[i][i]).collect()
    }

    /// Canonical representative of `p + L`.
    pub fn reduce(&self, p: &[i64]) -> GroupPoint {
        let mut v: SmallVec<[i64; 4]> = SmallVec::from_slice(p);
        self.reduce_in_place(&mut v);
        GroupPoint::new(&v)
    }

    fn reduce_in_place(&self, v: &mut [i64]) {
        for (i, col) in self.hermite.iter().enumerate() {
            let q = v[i].div_euclid(col[i]);
            if q != 0 {
                for r in i..v.len() {
                    v[r] -= q * col[r];
                }
            }
        }
    }

    /// Mixed-radix position of the canonical representative of `p + L`,
    /// in `0 .. index`.
    pub fn coset_index(&self, p: &[i64]) -> usize {
        let mut v: SmallVec<[i64; 4]> = SmallVec::from_slice(p);
        self.reduce_in_place(&mut v);
        let mut idx = 0usize;
        for (i, col) in self.hermite.iter().enumerate() {
            idx = idx * col[i] as usize + v[i] as usize;
        }
        idx
    }

    pub fn contains(&self, p: &[i64]) -> bool {
        let mut v: SmallVec<[i64; 4]> = SmallVec::from_slice(p);
        self.reduce_in_place(&mut v);
        v.iter().all(|&c| c == 0)
    }

    /// Canonical transversal of `ℤ^d / L`, in coset-index order.
    pub fn fundamental_domain(&self) -> FiniteSubset {
        let hi: Vec<i64> = self.diagonal_periods().iter().map(|h| h - 1).collect();
        FiniteSubset::box_set(GroupPoint::zero(self.dim()), GroupPoint::new(&hi)).expect("Hermite diagonal is positive")
    }

    /// Smallest `e >= 1` with `e ℤ^d ⊆ L`.
    pub fn exponent(&self) -> u64 {
        let d = self.dim();
        let mut e: u64 = 1;
        for axis in 0..d {
            let order = divisors(self.index)
                .into_iter()
                .find(|&t| {
                    let mut v = vec![0i64; d];
                    v[axis] = t as i64;
                    self.contains(&v)
                })
                .expect("the index annihilates the quotient");
            e = e.lcm(&order);
        }
        e
    }

    /// `true` if `self ⊆ other`.
    pub fn is_sublattice_of(&self, other: &Lattice) -> bool {
        self.basis.iter().all(|b| other.contains(b))
    }
}

fn divisors(n: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut t = 1u64;
    while t * t <= n {
        if n.is_multiple_of(t) {
            small.push(t);
            if t != n / t {
                large.push(n / t);
            }
        }
        t += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

/// A named total rule `ℤ^d → 𝒜`. Implemented by the example constructions
/// (visible points, prime approximants, substitution stages).
pub trait Rule: Send + Sync {
    fn name(&self) -> String;
    fn value(&self, p: &[i64]) -> Symbol;
    /// Lattice of periods, if the rule is known to be periodic.
    fn period_lattice(&self) -> Option<Lattice> {
        None
    }
}

struct FnRule<F> {
    name: String,
    f: F,
}

impl<F: Fn(&[i64]) -> Symbol + Send + Sync> Rule for FnRule<F> {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn value(&self, p: &[i64]) -> Symbol {
        (self.f)(p)
    }
}

#[derive(Clone)]
enum Repr {
    Constant(Symbol),
    Periodic { lattice: Arc<Lattice>, table: Arc<Vec<Symbol>> },
    Rule(Arc<dyn Rule>),
    Modified { base: Arc<Configuration>, patch: Arc<BTreeMap<GroupPoint, Symbol>> },
    Shifted { base: Arc<Configuration>, offset: GroupPoint },
}

/// Immutable, finitely described element of 𝒜^{ℤ^d}.
#[derive(Clone)]
pub struct Configuration {
    dim: usize,
    alphabet: Alphabet,
    repr: Repr,
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Configuration({})", self.describe())
    }
}

impl Configuration {
    pub fn constant(dim: usize, alphabet: Alphabet, symbol: Symbol) -> Self {
        assert!(symbol < alphabet.size(), "symbol outside alphabet");
        Configuration { dim, alphabet, repr: Repr::Constant(symbol) }
    }

    /// Periodic configuration whose value on each coset is `f` evaluated at
    /// the canonical representative.
    pub fn periodic<F: Fn(&[i64]) -> Symbol>(alphabet: Alphabet, lattice: Lattice, f: F) -> Result<Self> {
        if lattice.index() > MAX_TABLE {
            return Err(LabError::Overflow(format!("period table of size {}", lattice.index())));
        }
        let mut table = Vec::with_capacity(lattice.index() as usize);
        let mut bad = None;
        lattice.fundamental_domain().for_each(|p| {
            let s = f(p);
            if s >= alphabet.size() {
                bad = Some(s);
            }
            table.push(s);
        });
        if let Some(s) = bad {
            return Err(LabError::InvalidInput(format!("symbol {s} outside alphabet")));
        }
        Ok(Configuration {
            dim: lattice.dim(),
            alphabet,
            repr: Repr::Periodic { lattice: Arc::new(lattice), table: Arc::new(table) },
        })
    }

    /// Bi-infinite periodic word on ℤ: `x(i) = word[i mod len]`.
    pub fn periodic_word(alphabet: Alphabet, word: &[Symbol]) -> Result<Self> {
        if word.is_empty() {
            return Err(LabError::InvalidInput("empty periodic word".into()));
        }
        let lattice = Lattice::scaled(1, word.len() as i64)?;
        Self::periodic(alphabet, lattice, |p| word[p[0] as usize])
    }

    pub fn from_rule(dim: usize, alphabet: Alphabet, rule: Arc<dyn Rule>) -> Self {
        Configuration { dim, alphabet, repr: Repr::Rule(rule) }
    }

    /// Configuration given by an arbitrary total rule.
    pub fn from_fn<F>(name: &str, dim: usize, alphabet: Alphabet, f: F) -> Self
    where
        F: Fn(&[i64]) -> Symbol + Send + Sync + 'static,
    {
        Self::from_rule(dim, alphabet, Arc::new(FnRule { name: name.to_string(), f }))
    }

    /// `base` overwritten on finitely many points.
    pub fn modified(base: &Configuration, patch: BTreeMap<GroupPoint, Symbol>) -> Result<Self> {
        if patch.iter().any(|(p, &s)| p.dim() != base.dim || s >= base.alphabet.size()) {
            return Err(LabError::InvalidInput("patch outside dimension or alphabet".into()));
        }
        Ok(Configuration {
            dim: base.dim,
            alphabet: base.alphabet,
            repr: Repr::Modified { base: Arc::new(base.clone()), patch: Arc::new(patch) },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    /// Value at `p`.
    pub fn at(&self, p: &[i64]) -> Symbol {
        match &self.repr {
            Repr::Constant(s) => *s,
            Repr::Periodic { lattice, table } => table[lattice.coset_index(p)],
            Repr::Rule(rule) => rule.value(p),
            Repr::Modified { base, patch } => patch.get(&GroupPoint::new(p)).copied().unwrap_or_else(|| base.at(p)),
            Repr::Shifted { base, offset } => {
                let q: SmallVec<[i64; 4]> = p.iter().zip(offset.coords()).map(|(a, b)| a + b).collect();
                base.at(&q)
            }
        }
    }

    pub fn at_point(&self, p: &GroupPoint) -> Symbol {
        self.at(p.coords())
    }

    /// Lattice of periods when known structurally.
    pub fn period_lattice(&self) -> Option<Lattice> {
        match &self.repr {
            Repr::Constant(_) => Lattice::scaled(self.dim, 1).ok(),
            Repr::Periodic { lattice, .. } => Some((**lattice).clone()),
            Repr::Rule(rule) => rule.period_lattice(),
            Repr::Modified { .. } => None,
            Repr::Shifted { base, .. } => base.period_lattice(),
        }
    }

    pub fn describe(&self) -> String {
        match &self.repr {
            Repr::Constant(s) => format!("constant {s} on Z^{}", self.dim),
            Repr::Periodic { lattice, .. } => format!("periodic under {:?}", lattice.basis()),
            Repr::Rule(rule) => rule.name(),
            Repr::Modified { base, patch } => format!("{} patched on {} points", base.describe(), patch.len()),
            Repr::Shifted { base, offset } => format!("shift by {offset:?} of {}", base.describe()),
        }
    }

    /// Serializable literal, for constant, periodic and patched configurations.
    pub fn to_literal(&self) -> Option<ConfigurationLiteral> {
        match &self.repr {
            Repr::Constant(s) => {
                Some(ConfigurationLiteral::Constant { dim: self.dim, alphabet: self.alphabet.size(), symbol: *s })
            }
            Repr::Periodic { lattice, table } => Some(ConfigurationLiteral::Periodic {
                alphabet: self.alphabet.size(),
                basis: lattice.basis().to_vec(),
                domain: PatternLiteral {
                    window: lattice.fundamental_domain().iter().collect(),
                    symbols: (**table).clone(),
                },
            }),
            Repr::Modified { base, patch } => Some(ConfigurationLiteral::Modified {
                base: Box::new(base.to_literal()?),
                patch: PatternLiteral {
                    window: patch.keys().cloned().collect(),
                    symbols: patch.values().copied().collect(),
                },
            }),
            _ => None,
        }
    }

    pub fn from_literal(lit: &ConfigurationLiteral) -> Result<Self> {
        match lit {
            ConfigurationLiteral::Constant { dim, alphabet, symbol } => {
                let alphabet = Alphabet::new(*alphabet)?;
                if *symbol >= alphabet.size() || *dim == 0 {
                    return Err(LabError::InvalidInput("bad constant literal".into()));
                }
                Ok(Self::constant(*dim, alphabet, *symbol))
            }
            ConfigurationLiteral::Periodic { alphabet, basis, domain } => {
                let lattice = Lattice::new(basis.clone())?;
                let values = domain.to_map()?;
                if values.len() as u64 != lattice.index() {
                    return Err(LabError::InvalidInput("periodic literal does not cover a transversal".into()));
                }
                let mut table = vec![0 as Symbol; lattice.index() as usize];
                let mut seen = vec![false; table.len()];
                for (p, s) in &values {
                    let i = lattice.coset_index(p.coords());
                    if seen[i] {
                        return Err(LabError::InvalidInput(format!("two domain points share the coset of {p:?}")));
                    }
                    seen[i] = true;
                    table[i] = *s;
                }
                let alphabet = Alphabet::new(*alphabet)?;
                if table.iter().any(|&s| s >= alphabet.size()) {
                    return Err(LabError::InvalidInput("symbol outside alphabet".into()));
                }
                Ok(Configuration {
                    dim: lattice.dim(),
                    alphabet,
                    repr: Repr::Periodic { lattice: Arc::new(lattice), table: Arc::new(table) },
                })
            }
            ConfigurationLiteral::Modified { base, patch } => {
                let base = Self::from_literal(base)?;
                Self::modified(&base, patch.to_map()?)
            }
        }
    }
}

/// `(g·x)(h) = x(h·g)`; on ℤ^d a translation by `g`.
pub fn shift(g: &GroupPoint, x: &Configuration) -> Configuration {
    match &x.repr {
        Repr::Constant(_) => x.clone(),
        _ if g.is_zero() => x.clone(),
        Repr::Shifted { base, offset } => Configuration {
            dim: x.dim,
            alphabet: x.alphabet,
            repr: Repr::Shifted { base: base.clone(), offset: offset + g },
        },
        _ => Configuration {
            dim: x.dim,
            alphabet: x.alphabet,
            repr: Repr::Shifted { base: Arc::new(x.clone()), offset: g.clone() },
        },
    }
}

/// Symbols of a configuration on a window, in the window's lexicographic
/// point order. The window itself is carried by whoever holds the pattern.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pattern(SmallVec<[Symbol; 16]>);

impl Pattern {
    pub fn new(symbols: &[Symbol]) -> Self {
        Pattern(SmallVec::from_slice(symbols))
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Positions (indices into the window order) where the patterns differ.
    pub fn mismatches<'a>(&'a self, other: &'a Pattern) -> impl Iterator<Item = usize> + 'a {
        self.0.iter().zip(other.0.iter()).enumerate().filter(|(_, (a, b))| a != b).map(|(i, _)| i)
    }

    pub fn hamming(&self, other: &Pattern) -> usize {
        self.mismatches(other).count()
    }
}

impl fmt::Debug for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// `restrict(shift(offset, x), W)` with `W` given as an ordered point list.
pub fn restrict_at(x: &Configuration, window: &[GroupPoint], offset: &[i64]) -> Pattern {
    let mut buf: SmallVec<[i64; 4]> = SmallVec::from_slice(offset);
    Pattern(
        window
            .iter()
            .map(|w| {
                for (b, (o, c)) in buf.iter_mut().zip(offset.iter().zip(w.coords())) {
                    *b = o + c;
                }
                x.at(&buf)
            })
            .collect(),
    )
}

/// `p(w) = x(w)` for `w ∈ W`.
pub fn restrict(x: &Configuration, window: &FiniteSubset) -> Result<Pattern> {
    if window.is_empty() {
        return Err(LabError::InvalidInput("empty window".into()));
    }
    let points: Vec<GroupPoint> = window.iter().collect();
    Ok(restrict_at(x, &points, &vec![0; x.dim()]))
}

/// JSON literal: window points and symbols in canonical order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternLiteral {
    pub window: Vec<GroupPoint>,
    pub symbols: Vec<Symbol>,
}

impl PatternLiteral {
    pub fn new(window: &FiniteSubset, pattern: &Pattern) -> Self {
        PatternLiteral { window: window.iter().collect(), symbols: pattern.symbols().to_vec() }
    }

    fn to_map(&self) -> Result<BTreeMap<GroupPoint, Symbol>> {
        if self.window.len() != self.symbols.len() {
            return Err(LabError::InvalidInput("window and symbol list lengths differ".into()));
        }
        let map: BTreeMap<GroupPoint, Symbol> = self.window.iter().cloned().zip(self.symbols.iter().copied()).collect();
        if map.len() != self.window.len() {
            return Err(LabError::InvalidInput("duplicate window point".into()));
        }
        Ok(map)
    }

    /// Window as a set and the pattern in canonical order.
    pub fn to_pattern(&self) -> Result<(FiniteSubset, Pattern)> {
        let map = self.to_map()?;
        let window = FiniteSubset::from_points(map.keys().cloned())?;
        let symbols: Vec<Symbol> = map.values().copied().collect();
        Ok((window, Pattern::new(&symbols)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConfigurationLiteral {
    Constant { dim: usize, alphabet: u8, symbol: Symbol },
    Periodic { alphabet: u8, basis: Vec<Vec<i64>>, domain: PatternLiteral },
    Modified { base: Box<ConfigurationLiteral>, patch: PatternLiteral },
}

/// Shell-weighted metric on 𝒜^{ℤ^d}:
/// `d(x, z) = Σ_g weight(g) [x(g) ≠ z(g)]` with `weight(g) = 2^{-r} / (2 s_d(r))`,
/// `r = ‖g‖_∞` and `s_d(r)` the number of points on the sup-norm shell of
/// radius `r`. Each shell carries `2^{-r}/2` and the total is 1. The mass
/// beyond radius `R` is `2^{-(R+1)}`; [`AdmissibleMetric::tail_bound`]
/// reports the rounder `2^{-R}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissibleMetric {
    dim: usize,
}

pub fn default_metric(d: i64) -> Result<AdmissibleMetric> {
    if d < 1 {
        return Err(LabError::InvalidDimension(d));
    }
    Ok(AdmissibleMetric { dim: d as usize })
}

impl AdmissibleMetric {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of points with sup norm exactly `r`.
    pub fn shell_size(&self, r: u64) -> u64 {
        if r == 0 {
            1
        } else {
            let d = self.dim as u32;
            (2 * r + 1).pow(d) - (2 * r - 1).pow(d)
        }
    }

    /// Exact weight of `g`. Needs `‖g‖_∞ <= 61`.
    pub fn weight<S: Scalar>(&self, g: &[i64]) -> S {
        let r = g.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0);
        assert!(r <= 61, "exact weight beyond radius 61");
        S::from_ratio(1, 1i64 << (r + 1)) * S::from_ratio(1, self.shell_size(r) as i64)
    }

    pub fn weight_f64(&self, g: &[i64]) -> f64 {
        let r = g.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0);
        0.5f64.powi(r as i32 + 1) / self.shell_size(r) as f64
    }

    /// Upper bound on the weight outside the sup-norm ball of radius `r`.
    pub fn tail_bound(&self, r: u64) -> f64 {
        0.5f64.powi(r as i32)
    }

    /// Ball of radius `r` with weights, ordered by shell then lexicographically.
    pub fn weighted_ball(&self, r: u64) -> Vec<(GroupPoint, f64)> {
        let mut pts: Vec<(GroupPoint, f64)> = FiniteSubset::cube(self.dim, -(r as i64), r as i64)
            .iter()
            .map(|g| {
                let w = self.weight_f64(g.coords());
                (g, w)
            })
            .collect();
        pts.sort_by(|a, b| a.0.norm_inf().cmp(&b.0.norm_inf()).then_with(|| a.0.cmp(&b.0)));
        pts
    }

    /// Truncated metric between two patterns on `window`: weights of the
    /// mismatched window positions.
    pub fn pattern_distance<S: Scalar>(&self, window: &[GroupPoint], p: &Pattern, q: &Pattern) -> S {
        p.mismatches(q).fold(S::zero(), |acc, i| acc + self.weight::<S>(window[i].coords()))
    }
}

/// Enclosure `[lo, hi]` of a metric value computed by truncation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// `d(x, z)` enclosed by summing the weights up to radius `r` and adding the
/// tail bound.
pub fn config_distance(x: &Configuration, z: &Configuration, m: &AdmissibleMetric, r: u64) -> Interval {
    distance_from_ball(x, z, &m.weighted_ball(r), &vec![0; m.dim()], m.tail_bound(r))
}

/// `d(gx, gz)` enclosure using a precomputed weighted ball.
pub(crate) fn distance_from_ball(
    x: &Configuration,
    z: &Configuration,
    ball: &[(GroupPoint, f64)],
    g: &[i64],
    tail: f64,
) -> Interval {
    let mut buf: SmallVec<[i64; 4]> = SmallVec::from_slice(g);
    let mut lo = 0.0;
    for (h, w) in ball {
        for (b, (a, c)) in buf.iter_mut().zip(g.iter().zip(h.coords())) {
            *b = a + c;
        }
        if x.at(&buf) != z.at(&buf) {
            lo += w;
        }
    }
    Interval { lo, hi: (lo + tail).min(1.0).max(lo) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use num_traits::{One, Zero};

    use crate::scalar::rational;

    fn word(w: &[Symbol]) -> Configuration {
        Configuration::periodic_word(Alphabet::binary(), w).unwrap()
    }

    /// Membership by solving `B c = p` over the rationals.
    #[allow(clippy::needless_range_loop)]
    fn contains_by_solve(basis: &[Vec<i64>], p: &[i64]) -> bool {
        let d = p.len();
        // Augmented matrix rows: row r = [B[r][0..d] | p_r], with B columns = generators.
        let mut m: Vec<Vec<BigRational>> = (0..d)
            .map(|r| {
                let mut row: Vec<BigRational> = (0..d).map(|c| rational(basis[c][r], 1)).collect();
                row.push(rational(p[r], 1));
                row
            })
            .collect();
        for col in 0..d {
            let piv = (col..d).find(|&r| !m[r][col].is_zero()).unwrap();
            m.swap(col, piv);
            let inv = BigRational::one() / m[col][col].clone();
            for k in col..=d {
                m[col][k] = m[col][k].clone() * inv.clone();
            }
            for r in 0..d {
                if r != col && !m[r][col].is_zero() {
                    let f = m[r][col].clone();
                    for k in col..=d {
                        let sub = f.clone() * m[col][k].clone();
                        m[r][k] = m[r][k].clone() - sub;
                    }
                }
            }
        }
        (0..d).all(|r| m[r][d].is_integer())
    }

    #[test]
    fn hermite_membership_matches_rational_solve() {
        let bases = vec![
            vec![vec![2, 1], vec![0, 3]],
            vec![vec![4, 6], vec![2, -2]],
            vec![vec![3, 0], vec![0, 5]],
            vec![vec![1, 2, 0], vec![0, 1, 3], vec![2, 0, 1]],
        ];
        for basis in bases {
            let l = Lattice::new(basis.clone()).unwrap();
            let d = basis.len();
            FiniteSubset::cube(d, -7, 7).for_each(|p| {
                assert_eq!(l.contains(p), contains_by_solve(&basis, p), "{basis:?} {p:?}");
                let rep = l.reduce(p);
                let diff: Vec<i64> = p.iter().zip(rep.coords()).map(|(a, b)| a - b).collect();
                assert!(l.contains(&diff));
                assert!(l.fundamental_domain().contains(rep.coords()));
            });
        }
    }

    #[test]
    fn lattice_index_and_exponent() {
        let l = Lattice::new(vec![vec![2, 1], vec![0, 3]]).unwrap();
        assert_eq!(l.index(), 6);
        assert_eq!(l.fundamental_domain().len(), 6);
        assert_eq!(Lattice::scaled(2, 30).unwrap().exponent(), 30);
        assert_eq!(Lattice::diagonal(&[4, 6]).unwrap().exponent(), 12);
        assert!(Lattice::new(vec![vec![1, 2], vec![2, 4]]).is_err());
        assert!(Lattice::scaled(1, 6).unwrap().is_sublattice_of(&Lattice::scaled(1, 3).unwrap()));
    }

    #[test]
    fn shift_examples() {
        let zero = Configuration::constant(1, Alphabet::binary(), 0);
        let g = GroupPoint::scalar(5);
        assert_eq!(shift(&g, &zero).at(&[17]), 0);
        let x = word(&[0, 1]);
        assert_eq!(shift(&GroupPoint::scalar(1), &x).at(&[0]), 1);
        let (g1, g2) = (GroupPoint::scalar(3), GroupPoint::scalar(-7));
        let lhs = shift(&g1, &shift(&g2, &x));
        let rhs = shift(&(&g1 + &g2), &x);
        for h in -20..20 {
            assert_eq!(lhs.at(&[h]), rhs.at(&[h]));
        }
    }

    #[test]
    fn restrict_examples() {
        let one = Configuration::constant(2, Alphabet::binary(), 1);
        let w = FiniteSubset::cube(2, 0, 2);
        assert!(restrict(&one, &w).unwrap().symbols().iter().all(|&s| s == 1));
        let x = word(&[0, 1]);
        let w = FiniteSubset::from_ints([0, 1, 2]).unwrap();
        assert_eq!(restrict(&x, &w).unwrap(), Pattern::new(&[0, 1, 0]));
        let zero = Configuration::constant(1, Alphabet::binary(), 0);
        let patched = Configuration::modified(&zero, [(GroupPoint::scalar(5), 1)].into_iter().collect()).unwrap();
        let w = FiniteSubset::from_ints([4, 5, 6]).unwrap();
        assert_eq!(restrict(&patched, &w).unwrap(), Pattern::new(&[0, 1, 0]));
    }

    #[test]
    fn restrict_of_shift_is_translated_window() {
        let x = Configuration::periodic(
            Alphabet::new(3).unwrap(),
            Lattice::new(vec![vec![2, 1], vec![0, 3]]).unwrap(),
            |p| ((p[0] * 2 + p[1]) % 3) as Symbol,
        )
        .unwrap();
        let w = FiniteSubset::cube(2, -1, 1);
        for g in FiniteSubset::cube(2, -3, 3).iter() {
            let a = restrict(&shift(&g, &x), &w).unwrap();
            let b = restrict(&x, &w.translate_right(&g)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn periodic_values_depend_on_coset_only() {
        let l = Lattice::new(vec![vec![2, 1], vec![0, 3]]).unwrap();
        let x = Configuration::periodic(Alphabet::binary(), l.clone(), |p| ((p[0] + p[1]) % 2) as Symbol).unwrap();
        FiniteSubset::cube(2, -6, 6).for_each(|p| {
            for b in l.basis() {
                let q: Vec<i64> = p.iter().zip(b).map(|(a, c)| a + c).collect();
                assert_eq!(x.at(p), x.at(&q));
            }
        });
    }

    #[test]
    fn default_metric_weights() {
        let m = default_metric(1).unwrap();
        assert_eq!(m.weight::<BigRational>(&[0]), rational(1, 2));
        assert_eq!(m.weight::<BigRational>(&[1]), rational(1, 8));
        assert_eq!(m.weight::<BigRational>(&[-1]), rational(1, 8));
        for d in 1..=3i64 {
            let m = default_metric(d).unwrap();
            for r in 0..6u64 {
                let total: BigRational = FiniteSubset::cube(d as usize, -(r as i64), r as i64)
                    .iter()
                    .map(|g| m.weight::<BigRational>(g.coords()))
                    .fold(BigRational::zero(), |a, b| a + b);
                assert_eq!(total, BigRational::one() - rational(1, 2 << r));
            }
        }
        assert_eq!(default_metric(0).unwrap_err(), LabError::InvalidDimension(0));
    }

    #[test]
    fn distance_examples() {
        let m = default_metric(1).unwrap();
        let x = word(&[0, 1, 1]);
        let d = config_distance(&x, &x, &m, 7);
        assert_eq!((d.lo, d.hi), (0.0, 0.5f64.powi(7)));
        let zero = Configuration::constant(1, Alphabet::binary(), 0);
        let one = Configuration::constant(1, Alphabet::binary(), 1);
        let d = config_distance(&zero, &one, &m, 10);
        assert_eq!((d.lo, d.hi), (1.0 - 0.5f64.powi(11), 1.0));
        assert!(d.lo >= 1.0 - 0.5f64.powi(10));
        let spike = Configuration::modified(&zero, [(GroupPoint::scalar(0), 1)].into_iter().collect()).unwrap();
        let d = config_distance(&zero, &spike, &m, 5);
        assert_eq!((d.lo, d.hi), (0.5, 0.5 + 0.5f64.powi(5)));
    }

    #[test]
    fn distance_intervals_nest() {
        let m = default_metric(2).unwrap();
        let x = Configuration::from_fn("diag", 2, Alphabet::binary(), |p| ((p[0] * p[1]).rem_euclid(3) == 0) as Symbol);
        let z = Configuration::constant(2, Alphabet::binary(), 1);
        let mut prev = config_distance(&x, &z, &m, 0);
        for r in 1..8 {
            let cur = config_distance(&x, &z, &m, r);
            assert!(cur.lo >= prev.lo - 1e-15 && cur.hi <= prev.hi + 1e-15);
            prev = cur;
        }
    }

    #[test]
    fn literals_round_trip() {
        let x = Configuration::periodic(
            Alphabet::new(3).unwrap(),
            Lattice::new(vec![vec![2, 1], vec![0, 3]]).unwrap(),
            |p| ((p[0] + 2 * p[1]) % 3) as Symbol,
        )
        .unwrap();
        let patched = Configuration::modified(&x, [(GroupPoint::from([9, 9]), 2)].into_iter().collect()).unwrap();
        let lit = patched.to_literal().unwrap();
        let json = serde_json::to_string(&lit).unwrap();
        let back = Configuration::from_literal(&serde_json::from_str(&json).unwrap()).unwrap();
        FiniteSubset::cube(2, -5, 10).for_each(|p| assert_eq!(back.at(p), patched.at(p)));
        let pat = PatternLiteral::new(&FiniteSubset::from_ints([0, 1]).unwrap(), &Pattern::new(&[1, 0]));
        assert_eq!(serde_json::to_string(&pat).unwrap(), r#"{"window":[[0],[1]],"symbols":[1,0]}"#);
    }
}
