//! Group elements of ℤ^d, finite windows, Følner sequences, Følner defects
//! and temperedness ratios.
//!
//! The group law is reached through the [`Group`] trait so that set algebra
//! (`translate_left`, `product`, `inverse`) is written against identity,
//! inverse and composition only. [`IntegerGroup`] is the one instantiation.
//!
//! Set cardinalities are integers, so every ratio returned here is an exact
//! [`BigRational`].

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{LabError, Result};

/// Element of ℤ^d.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupPoint(SmallVec<[i64; 4]>);

impl GroupPoint {
    pub fn new(coords: &[i64]) -> Self {
        GroupPoint(SmallVec::from_slice(coords))
    }

    pub fn zero(dim: usize) -> Self {
        GroupPoint(SmallVec::from_elem(0, dim))
    }

    /// One-dimensional point.
    pub fn scalar(x: i64) -> Self {
        Self::new(&[x])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    /// Sup norm.
    pub fn norm_inf(&self) -> u64 {
        self.0.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }
}

impl fmt::Debug for GroupPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.as_slice())
    }
}

impl From<&[i64]> for GroupPoint {
    fn from(c: &[i64]) -> Self {
        Self::new(c)
    }
}

impl<const N: usize> From<[i64; N]> for GroupPoint {
    fn from(c: [i64; N]) -> Self {
        Self::new(&c)
    }
}

impl Add for &GroupPoint {
    type Output = GroupPoint;
    fn add(self, rhs: &GroupPoint) -> GroupPoint {
        debug_assert_eq!(self.dim(), rhs.dim());
        GroupPoint(self.0.iter().zip(rhs.0.iter()).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &GroupPoint {
    type Output = GroupPoint;
    fn sub(self, rhs: &GroupPoint) -> GroupPoint {
        debug_assert_eq!(self.dim(), rhs.dim());
        GroupPoint(self.0.iter().zip(rhs.0.iter()).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &GroupPoint {
    type Output = GroupPoint;
    fn neg(self) -> GroupPoint {
        GroupPoint(self.0.iter().map(|a| -a).collect())
    }
}

/// Minimal group interface: everything set-theoretic in this module goes
/// through these four operations.
pub trait Group {
    type Element: Clone + Eq + Ord + std::hash::Hash + fmt::Debug;

    fn identity(&self) -> Self::Element;
    fn inverse(&self, g: &Self::Element) -> Self::Element;
    fn compose(&self, a: &Self::Element, b: &Self::Element) -> Self::Element;
    /// All elements of word length (here: sup norm) at most `radius`.
    fn ball(&self, radius: u64) -> Vec<Self::Element>;
}

/// The abelian group ℤ^d.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IntegerGroup {
    dim: usize,
}

impl IntegerGroup {
    pub fn new(dim: i64) -> Result<Self> {
        if dim < 1 {
            return Err(LabError::InvalidDimension(dim));
        }
        Ok(IntegerGroup { dim: dim as usize })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl Group for IntegerGroup {
    type Element = GroupPoint;

    fn identity(&self) -> GroupPoint {
        GroupPoint::zero(self.dim)
    }

    fn inverse(&self, g: &GroupPoint) -> GroupPoint {
        -g
    }

    fn compose(&self, a: &GroupPoint, b: &GroupPoint) -> GroupPoint {
        a + b
    }

    fn ball(&self, radius: u64) -> Vec<GroupPoint> {
        let r = radius as i64;
        FiniteSubset::cube(self.dim, -r, r).iter().collect()
    }
}

#[derive(Clone, PartialEq, Eq)]
enum Repr {
    /// Inclusive coordinate box `lo ..= hi`.
    Box {
        lo: GroupPoint,
        hi: GroupPoint,
    },
    Points {
        dim: usize,
        points: BTreeSet<GroupPoint>,
    },
}

/// Finite subset of ℤ^d.
///
/// Boxes are stored by their corners and iterated lazily; the large Følner
/// windows used for density estimates never materialize. Set algebra on
/// anything other than boxes falls back to an ordered point set.
#[derive(Clone, PartialEq, Eq)]
pub struct FiniteSubset {
    repr: Repr,
}

impl fmt::Debug for FiniteSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Box { lo, hi } => write!(f, "Box({:?}..={:?})", lo, hi),
            Repr::Points { points, .. } => f.debug_set().entries(points.iter()).finish(),
        }
    }
}

impl FiniteSubset {
    /// Inclusive box `lo ..= hi`. Empty boxes are rejected.
    pub fn box_set(lo: GroupPoint, hi: GroupPoint) -> Result<Self> {
        if lo.dim() == 0 || lo.dim() != hi.dim() {
            return Err(LabError::InvalidDimension(lo.dim() as i64));
        }
        if lo.coords().iter().zip(hi.coords()).any(|(a, b)| a > b) {
            return Err(LabError::InvalidInput(format!("empty box {lo:?}..={hi:?}")));
        }
        Ok(FiniteSubset { repr: Repr::Box { lo, hi } })
    }

    /// `{lo, .., hi}^d`; panics if `lo > hi` or `dim == 0`.
    pub fn cube(dim: usize, lo: i64, hi: i64) -> Self {
        assert!(dim >= 1 && lo <= hi, "cube({dim}, {lo}, {hi})");
        FiniteSubset {
            repr: Repr::Box {
                lo: GroupPoint(SmallVec::from_elem(lo, dim)),
                hi: GroupPoint(SmallVec::from_elem(hi, dim)),
            },
        }
    }

    /// Explicit subset. Duplicates collapse; the result must be non-empty and
    /// all points must share one dimension.
    pub fn from_points<I: IntoIterator<Item = GroupPoint>>(points: I) -> Result<Self> {
        let points: BTreeSet<GroupPoint> = points.into_iter().collect();
        let dim = match points.iter().next() {
            Some(p) => p.dim(),
            None => return Err(LabError::InvalidInput("empty point set".into())),
        };
        if dim == 0 || points.iter().any(|p| p.dim() != dim) {
            return Err(LabError::InvalidDimension(dim as i64));
        }
        Ok(FiniteSubset { repr: Repr::Points { dim, points } })
    }

    /// Convenience for one-dimensional sets.
    pub fn from_ints<I: IntoIterator<Item = i64>>(xs: I) -> Result<Self> {
        Self::from_points(xs.into_iter().map(GroupPoint::scalar))
    }

    /// Set algebra results may be empty; they keep the dimension explicitly.
    fn from_set(dim: usize, points: BTreeSet<GroupPoint>) -> Self {
        FiniteSubset { repr: Repr::Points { dim, points } }
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            Repr::Box { lo, .. } => lo.dim(),
            Repr::Points { dim, .. } => *dim,
        }
    }

    pub fn len(&self) -> usize {
        match &self.repr {
            Repr::Box { lo, hi } => lo.coords().iter().zip(hi.coords()).map(|(a, b)| (b - a + 1) as usize).product(),
            Repr::Points { points, .. } => points.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Corners when this set is stored as a box.
    pub fn as_box(&self) -> Option<(&GroupPoint, &GroupPoint)> {
        match &self.repr {
            Repr::Box { lo, hi } => Some((lo, hi)),
            Repr::Points { .. } => None,
        }
    }

    pub fn contains(&self, p: &[i64]) -> bool {
        match &self.repr {
            Repr::Box { lo, hi } => {
                p.len() == lo.dim()
                    && p.iter().zip(lo.coords().iter().zip(hi.coords())).all(|(x, (a, b))| a <= x && x <= b)
            }
            Repr::Points { points, .. } => points.contains(&GroupPoint::new(p)),
        }
    }

    /// Elements in lexicographic coordinate order.
    pub fn iter(&self) -> Box<dyn Iterator<Item = GroupPoint> + '_> {
        match &self.repr {
            Repr::Box { lo, hi } => Box::new(BoxIter::new(lo.clone(), hi.clone())),
            Repr::Points { points, .. } => Box::new(points.iter().cloned()),
        }
    }

    /// Calls `f` on each element in lexicographic order without allocating a
    /// point per element.
    pub fn for_each<F: FnMut(&[i64])>(&self, mut f: F) {
        match &self.repr {
            Repr::Box { lo, hi } => for_each_in_box(lo.coords(), hi.coords(), &mut f),
            Repr::Points { points, .. } => points.iter().for_each(|p| f(p.coords())),
        }
    }

    /// Number of elements satisfying `pred`, evaluated in parallel.
    pub fn count_where<F>(&self, pred: F) -> usize
    where
        F: Fn(&[i64]) -> bool + Sync,
    {
        self.par_fold(
            || 0usize,
            |count, p| {
                if pred(p) {
                    *count += 1;
                }
            },
            |a, b| a + b,
        )
    }

    /// Parallel fold. Boxes are split into slabs along the first axis, each
    /// folded in lexicographic order; `reduce` should be associative and
    /// commutative so the result does not depend on scheduling.
    pub fn par_fold<T, I, F, R>(&self, identity: I, fold: F, reduce: R) -> T
    where
        T: Send,
        I: Fn() -> T + Sync + Send,
        F: Fn(&mut T, &[i64]) + Sync + Send,
        R: Fn(T, T) -> T + Sync + Send,
    {
        match &self.repr {
            Repr::Box { lo, hi } => {
                let (lo, hi) = (lo.coords(), hi.coords());
                (lo[0]..=hi[0])
                    .into_par_iter()
                    .map(|c0| {
                        let mut slab_lo: SmallVec<[i64; 4]> = SmallVec::from_slice(lo);
                        let mut slab_hi: SmallVec<[i64; 4]> = SmallVec::from_slice(hi);
                        slab_lo[0] = c0;
                        slab_hi[0] = c0;
                        let mut acc = identity();
                        for_each_in_box(&slab_lo, &slab_hi, &mut |p| fold(&mut acc, p));
                        acc
                    })
                    .reduce(&identity, &reduce)
            }
            Repr::Points { points, .. } => points
                .par_iter()
                .fold(&identity, |mut acc, p| {
                    fold(&mut acc, p.coords());
                    acc
                })
                .reduce(&identity, &reduce),
        }
    }

    /// Elements collected into an ordered set.
    pub fn to_point_set(&self) -> BTreeSet<GroupPoint> {
        self.iter().collect()
    }

    /// `gF = {g·f : f ∈ F}`.
    pub fn translate_left(&self, g: &GroupPoint) -> Self {
        let group = IntegerGroup { dim: self.dim() };
        match &self.repr {
            Repr::Box { lo, hi } => {
                FiniteSubset { repr: Repr::Box { lo: group.compose(g, lo), hi: group.compose(g, hi) } }
            }
            Repr::Points { dim, points } => Self::from_set(*dim, points.iter().map(|f| group.compose(g, f)).collect()),
        }
    }

    /// `Fg = {f·g : f ∈ F}`.
    pub fn translate_right(&self, g: &GroupPoint) -> Self {
        let group = IntegerGroup { dim: self.dim() };
        match &self.repr {
            Repr::Box { lo, hi } => {
                FiniteSubset { repr: Repr::Box { lo: group.compose(lo, g), hi: group.compose(hi, g) } }
            }
            Repr::Points { dim, points } => Self::from_set(*dim, points.iter().map(|f| group.compose(f, g)).collect()),
        }
    }

    /// `F^{-1}`.
    pub fn inverse(&self) -> Self {
        let group = IntegerGroup { dim: self.dim() };
        match &self.repr {
            Repr::Box { lo, hi } => FiniteSubset { repr: Repr::Box { lo: group.inverse(hi), hi: group.inverse(lo) } },
            Repr::Points { dim, points } => Self::from_set(*dim, points.iter().map(|f| group.inverse(f)).collect()),
        }
    }

    /// Product set `AB = {a·b : a ∈ A, b ∈ B}`.
    pub fn product(&self, other: &Self) -> Self {
        let group = IntegerGroup { dim: self.dim() };
        if let (Repr::Box { lo: a0, hi: a1 }, Repr::Box { lo: b0, hi: b1 }) = (&self.repr, &other.repr) {
            return FiniteSubset { repr: Repr::Box { lo: group.compose(a0, b0), hi: group.compose(a1, b1) } };
        }
        let mut out = BTreeSet::new();
        for a in self.iter() {
            for b in other.iter() {
                out.insert(group.compose(&a, &b));
            }
        }
        Self::from_set(self.dim(), out)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        if let (Repr::Box { lo: a0, hi: a1 }, Repr::Box { lo: b0, hi: b1 }) = (&self.repr, &other.repr) {
            let lo: SmallVec<[i64; 4]> = a0.coords().iter().zip(b0.coords()).map(|(x, y)| *x.max(y)).collect();
            let hi: SmallVec<[i64; 4]> = a1.coords().iter().zip(b1.coords()).map(|(x, y)| *x.min(y)).collect();
            if lo.iter().zip(hi.iter()).all(|(a, b)| a <= b) {
                return FiniteSubset { repr: Repr::Box { lo: GroupPoint(lo), hi: GroupPoint(hi) } };
            }
            return Self::from_set(self.dim(), BTreeSet::new());
        }
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        Self::from_set(self.dim(), small.iter().filter(|p| large.contains(p.coords())).collect())
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut out = self.to_point_set();
        out.extend(other.iter());
        Self::from_set(self.dim(), out)
    }

    pub fn symmetric_difference(&self, other: &Self) -> Self {
        let a = self.to_point_set();
        let b = other.to_point_set();
        Self::from_set(self.dim(), a.symmetric_difference(&b).cloned().collect())
    }

    /// `|A Δ B|`, computed through the intersection.
    pub fn symmetric_difference_len(&self, other: &Self) -> usize {
        self.len() + other.len() - 2 * self.intersection(other).len()
    }

    /// `true` when every element of `self` lies in `other`.
    pub fn is_subset(&self, other: &Self) -> bool {
        if let (Repr::Box { lo: a0, hi: a1 }, Repr::Box { lo: b0, hi: b1 }) = (&self.repr, &other.repr) {
            return a0.coords().iter().zip(b0.coords()).all(|(a, b)| a >= b)
                && a1.coords().iter().zip(b1.coords()).all(|(a, b)| a <= b);
        }
        self.iter().all(|p| other.contains(p.coords()))
    }
}

/// `|⋃ sets|`. Sets contained in another member are dropped first, so nested
/// box families are counted without materializing any points.
pub fn union_len(sets: &[FiniteSubset]) -> usize {
    let mut kept: Vec<&FiniteSubset> = Vec::new();
    'outer: for (i, s) in sets.iter().enumerate() {
        if s.as_box().is_some() {
            for (j, t) in sets.iter().enumerate() {
                if i == j || t.as_box().is_none() {
                    continue;
                }
                // Equal boxes: keep the first copy only.
                if s.is_subset(t) && (!t.is_subset(s) || j < i) {
                    continue 'outer;
                }
            }
        }
        kept.push(s);
    }
    match kept.as_slice() {
        [] => 0,
        [only] => only.len(),
        _ => {
            let mut all: HashSet<GroupPoint> = HashSet::new();
            for s in kept {
                all.extend(s.iter());
            }
            all.len()
        }
    }
}

fn for_each_in_box<F: FnMut(&[i64]) + ?Sized>(lo: &[i64], hi: &[i64], f: &mut F) {
    let d = lo.len();
    let mut cur: SmallVec<[i64; 4]> = SmallVec::from_slice(lo);
    loop {
        f(&cur);
        let mut axis = d;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            if cur[axis] < hi[axis] {
                cur[axis] += 1;
                break;
            }
            cur[axis] = lo[axis];
        }
    }
}

struct BoxIter {
    lo: GroupPoint,
    hi: GroupPoint,
    next: Option<GroupPoint>,
}

impl BoxIter {
    fn new(lo: GroupPoint, hi: GroupPoint) -> Self {
        let next = Some(lo.clone());
        BoxIter { lo, hi, next }
    }
}

impl Iterator for BoxIter {
    type Item = GroupPoint;

    fn next(&mut self) -> Option<GroupPoint> {
        let out = self.next.take()?;
        let mut succ = out.clone();
        let mut axis = succ.dim();
        loop {
            if axis == 0 {
                break;
            }
            axis -= 1;
            if succ.0[axis] < self.hi.0[axis] {
                succ.0[axis] += 1;
                self.next = Some(succ);
                break;
            }
            succ.0[axis] = self.lo.0[axis];
        }
        Some(out)
    }
}

/// Shape of a Følner sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FolnerKind {
    /// `F_n = {0, .., n}^d`.
    Boxes,
    /// `F_n = {-n, .., n}^d`.
    Centered,
    /// Explicit finite list, indexed from 1.
    Custom,
}

/// A Følner sequence `(F_n)` indexed from 1.
///
/// The box kinds also answer `n = 0` (a single point), which is convenient
/// for tests; custom lists start at `F_1`.
#[derive(Clone, Debug)]
pub struct FolnerSequence {
    dim: usize,
    kind: FolnerKind,
    custom: Vec<FiniteSubset>,
}

/// Box or centered-box Følner sequence in ℤ^d.
pub fn make_box_folner(d: i64, kind: FolnerKind) -> Result<FolnerSequence> {
    if d < 1 {
        return Err(LabError::InvalidDimension(d));
    }
    if kind == FolnerKind::Custom {
        return Err(LabError::InvalidInput("custom sequences are built with FolnerSequence::custom".into()));
    }
    Ok(FolnerSequence { dim: d as usize, kind, custom: Vec::new() })
}

impl FolnerSequence {
    /// Explicit list `F_1, F_2, ..` of non-empty sets of one dimension.
    pub fn custom(sets: Vec<FiniteSubset>) -> Result<Self> {
        let dim =
            sets.first().map(FiniteSubset::dim).ok_or_else(|| LabError::InvalidInput("empty Følner list".into()))?;
        if sets.iter().any(|s| s.is_empty() || s.dim() != dim) {
            return Err(LabError::InvalidInput("Følner sets must be non-empty and share a dimension".into()));
        }
        Ok(FolnerSequence { dim, kind: FolnerKind::Custom, custom: sets })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> FolnerKind {
        self.kind
    }

    /// Number of available sets; `None` for the unbounded box kinds.
    pub fn horizon(&self) -> Option<usize> {
        match self.kind {
            FolnerKind::Custom => Some(self.custom.len()),
            _ => None,
        }
    }

    /// `F_n`.
    pub fn set(&self, n: usize) -> Result<FiniteSubset> {
        match self.kind {
            FolnerKind::Boxes => Ok(FiniteSubset::cube(self.dim, 0, n as i64)),
            FolnerKind::Centered => Ok(FiniteSubset::cube(self.dim, -(n as i64), n as i64)),
            FolnerKind::Custom => n
                .checked_sub(1)
                .and_then(|i| self.custom.get(i))
                .cloned()
                .ok_or_else(|| LabError::InvalidInput(format!("F_{n} is outside the custom list"))),
        }
    }

    /// Subsequence `(F_{k_1}, F_{k_2}, ..)` as a custom sequence.
    pub fn subsequence(&self, indices: &[usize]) -> Result<Self> {
        let sets = indices.iter().map(|&k| self.set(k)).collect::<Result<Vec<_>>>()?;
        Self::custom(sets)
    }
}

/// Which side a translate acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Left,
    Right,
}

/// Exact value of the shortest decimal that round-trips to `x`, so that a
/// user-supplied `1.2` compares as `6/5` rather than as its binary neighbour.
pub fn decimal_rational(x: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    let text = format!("{x}");
    let (neg, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.as_str()),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    let numer: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let denom = num_traits::pow(BigInt::from(10), frac_part.len());
    let value = BigRational::new(numer, denom);
    Some(if neg { -value } else { value })
}

fn ratio(num: usize, den: usize) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `|gF Δ F| / |F|` (left) or `|Fg Δ F| / |F|` (right).
pub fn folner_defect(f: &FiniteSubset, g: &GroupPoint, side: Side) -> Result<BigRational> {
    if f.is_empty() {
        return Err(LabError::InvalidInput("Følner defect of an empty set".into()));
    }
    let moved = match side {
        Side::Left => f.translate_left(g),
        Side::Right => f.translate_right(g),
    };
    Ok(ratio(moved.symmetric_difference_len(f), f.len()))
}

/// `|⋃_{k ≤ n} F_k^{-1} F_{n+1}| / |F_{n+1}|`, by explicit set construction.
pub fn temperedness_ratio(seq: &FolnerSequence, n: usize) -> Result<BigRational> {
    if n == 0 {
        return Err(LabError::InvalidInput("temperedness ratio needs n >= 1".into()));
    }
    let next = seq.set(n + 1)?;
    let parts = (1..=n).map(|k| Ok(seq.set(k)?.inverse().product(&next))).collect::<Result<Vec<_>>>()?;
    Ok(ratio(union_len(&parts), next.len()))
}

/// Greedy tempered subsequence of `F_1, .., F_horizon`.
///
/// Starts from index 1 and accepts the next candidate `j` whenever
/// `|⋃_{selected i} F_i^{-1} F_j| <= C |F_j|`. When the whole sequence already
/// satisfies the bound the identity selection `1..=horizon` comes back.
pub fn tempered_subsequence(seq: &FolnerSequence, c: f64, horizon: usize) -> Result<Vec<usize>> {
    if !c.is_finite() || c <= 1.0 {
        return Err(LabError::InvalidConstant(c));
    }
    if horizon == 0 {
        return Err(LabError::InvalidInput("horizon must be at least 1".into()));
    }
    let bound = decimal_rational(c).ok_or(LabError::InvalidConstant(c))?;
    let mut selected = vec![1usize];
    let mut inverses = vec![seq.set(1)?.inverse()];
    for j in 2..=horizon {
        let candidate = seq.set(j)?;
        let parts: Vec<FiniteSubset> = inverses.iter().map(|inv| inv.product(&candidate)).collect();
        if ratio(union_len(&parts), candidate.len()) <= bound {
            selected.push(j);
            inverses.push(candidate.inverse());
        }
    }
    Ok(selected)
}
