//! Example configurations: visible lattice points and their periodic prime
//! approximants, a residually finite substitution sequence over ℤ^d, and a
//! few controls (seeded coin flips, an oscillating set).

use std::collections::HashSet;
use std::sync::Arc;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::config::{Alphabet, Configuration, Lattice, Rule, Symbol};
use crate::error::{LabError, Result};
use crate::group::{FiniteSubset, GroupPoint};
use crate::measures::pattern_counts;

/// The first 25 primes.
pub const PRIMES: [i64; 25] =
    [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97];

/// `Σ_p p^{-2}` over all primes.
pub const PRIME_ZETA_2: f64 = 0.452_247_420_041_065_5;

/// `Σ_{i>n} p_i^{-2}`.
pub fn prime_zeta_tail(n: usize) -> f64 {
    PRIME_ZETA_2 - PRIMES.iter().take(n).map(|&p| 1.0 / (p * p) as f64).sum::<f64>()
}

struct Visible;

impl Rule for Visible {
    fn name(&self) -> String {
        "visible".into()
    }
    fn value(&self, p: &[i64]) -> Symbol {
        (p[0].gcd(&p[1]) == 1) as Symbol
    }
}

/// `v(m, n) = 1` iff `gcd(m, n) = 1`. The origin has `gcd = 0` and is not
/// visible.
pub fn visible_points_config() -> Configuration {
    Configuration::from_rule(2, Alphabet::binary(), Arc::new(Visible))
}

struct PrimeApprox {
    primes: Vec<i64>,
}

impl Rule for PrimeApprox {
    fn name(&self) -> String {
        format!("prime-approx:{}", self.primes.len())
    }
    fn value(&self, p: &[i64]) -> Symbol {
        let hit = self.primes.iter().any(|q| p[0] % q == 0 && p[1] % q == 0);
        (!hit) as Symbol
    }
    fn period_lattice(&self) -> Option<Lattice> {
        let product = self.primes.iter().try_fold(1i64, |a, &q| a.checked_mul(q))?;
        (product as u64).checked_mul(product as u64)?;
        Lattice::scaled(2, product).ok()
    }
}

/// `x^{(n)}(m, k) = 0` iff one of the first `n` primes divides both `m` and
/// `k`. The period lattice `(p_1⋯p_n)ℤ²` is attached while its index fits in
/// 64 bits.
pub fn prime_approx_config(n: usize) -> Result<Configuration> {
    if n == 0 {
        return Err(LabError::InvalidInput("prime approximants start at n = 1".into()));
    }
    if n > PRIMES.len() {
        return Err(LabError::StageExhausted { requested: n, available: PRIMES.len() });
    }
    Ok(Configuration::from_rule(2, Alphabet::binary(), Arc::new(PrimeApprox { primes: PRIMES[..n].to_vec() })))
}

/// Which tile of `F_{k+1}` carries the complemented copy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComplementChoice {
    /// Largest translate in lexicographic order.
    Last,
    First,
    /// Translate with this position in lexicographic order.
    Index(u64),
}

/// Nested lattices `H_k = m_k ℤ^d` with `m_1 = 1`, `m_{k+1} = m_k r_k`, and
/// box fundamental domains `F_k = {0, .., m_k − 1}^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubstitutionStage {
    dim: usize,
    ratios: Vec<i64>,
    moduli: Vec<i64>,
    choice: ComplementChoice,
}

impl SubstitutionStage {
    /// `ratios[k−1] = r_k`. Each stage needs `[H_k : H_{k+1}] = r_k^d > 2^k`.
    pub fn new(dim: usize, ratios: Vec<i64>, choice: ComplementChoice) -> Result<Self> {
        if dim == 0 {
            return Err(LabError::InvalidDimension(0));
        }
        let mut moduli = vec![1i64];
        for (i, &r) in ratios.iter().enumerate() {
            let k = i as u32 + 1;
            let index = (r as i128).checked_pow(dim as u32);
            if r < 2 || index.is_none_or(|x| x <= 1i128 << k) {
                return Err(LabError::InvalidInput(format!("r_{k} = {r} violates [H_k : H_k+1] > 2^{k}")));
            }
            let next = moduli[i]
                .checked_mul(r)
                .filter(|m| (*m as i128).checked_pow(dim as u32).is_some_and(|x| x <= i64::MAX as i128))
                .ok_or_else(|| LabError::Overflow(format!("m_{} exceeds 64 bits", k + 1)))?;
            moduli.push(next);
            if let ComplementChoice::Index(t) = choice {
                if index.is_some_and(|x| t as i128 >= x) {
                    return Err(LabError::InvalidInput(format!("tile index {t} exceeds r_{k}^d")));
                }
            }
        }
        Ok(SubstitutionStage { dim, ratios, moduli, choice })
    }

    /// `r_k = 2^k + 1` on ℤ, last tile complemented, `stages` configurations.
    pub fn default_z(stages: usize) -> Result<Self> {
        let ratios = (1..stages).map(|k| (1i64 << k) + 1).collect();
        Self::new(1, ratios, ComplementChoice::Last)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of configurations `x^{(1)}, .., x^{(K)}` this stage list defines.
    pub fn stages(&self) -> usize {
        self.moduli.len()
    }

    pub fn choice(&self) -> ComplementChoice {
        self.choice
    }

    fn check_stage(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.stages() {
            return Err(LabError::StageExhausted { requested: k, available: self.stages() });
        }
        Ok(())
    }

    /// `r_k`.
    pub fn ratio(&self, k: usize) -> Result<i64> {
        self.ratios
            .get(k.wrapping_sub(1))
            .copied()
            .ok_or(LabError::StageExhausted { requested: k, available: self.ratios.len() })
    }

    /// `m_k`.
    pub fn modulus(&self, k: usize) -> Result<i64> {
        self.check_stage(k)?;
        Ok(self.moduli[k - 1])
    }

    pub fn lattice(&self, k: usize) -> Result<Lattice> {
        Lattice::scaled(self.dim, self.modulus(k)?)
    }

    pub fn domain(&self, k: usize) -> Result<FiniteSubset> {
        Ok(FiniteSubset::cube(self.dim, 0, self.modulus(k)? - 1))
    }

    /// Lexicographic rank of the complemented tile among the `r^d` tiles.
    fn complemented_rank(&self, r: i64) -> i64 {
        match self.choice {
            ComplementChoice::Last => r.pow(self.dim as u32) - 1,
            ComplementChoice::First => 0,
            ComplementChoice::Index(t) => t as i64,
        }
    }

    /// `x^{(k)}(p)`: parity of the levels at which `p` falls in the
    /// complemented tile.
    fn value(&self, k: usize, p: &[i64]) -> Symbol {
        let mk = self.moduli[k - 1];
        let mut flips = 0u32;
        for level in 1..k {
            let (m, r) = (self.moduli[level - 1], self.ratios[level - 1]);
            let rank = p.iter().fold(0i64, |acc, &c| acc * r + c.mod_floor(&mk) / m % r);
            flips += (rank == self.complemented_rank(r)) as u32;
        }
        (flips % 2) as Symbol
    }
}

struct SubstitutionRule {
    stage: SubstitutionStage,
    k: usize,
}

impl Rule for SubstitutionRule {
    fn name(&self) -> String {
        format!("rf-sub:{}", self.k)
    }
    fn value(&self, p: &[i64]) -> Symbol {
        self.stage.value(self.k, p)
    }
    fn period_lattice(&self) -> Option<Lattice> {
        self.stage.lattice(self.k).ok()
    }
}

/// `x^{(k)}`: constant 0 for `k = 1`; `x^{(k+1)}` repeats `x^{(k)}` on every
/// tile `F_k + v` of `F_{k+1}` except the chosen one, which gets the bitwise
/// complement, and is `H_{k+1}`-periodic.
pub fn rf_substitution(stage: &SubstitutionStage, k: usize) -> Result<Configuration> {
    stage.check_stage(k)?;
    if k == 1 {
        return Ok(Configuration::constant(stage.dim, Alphabet::binary(), 0));
    }
    Ok(Configuration::from_rule(stage.dim, Alphabet::binary(), Arc::new(SubstitutionRule { stage: stage.clone(), k })))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TilingReport {
    pub k: usize,
    pub transversal: bool,
    pub tiling: bool,
    /// First violation found, if any.
    pub witness: Option<String>,
    pub pass: bool,
}

/// Checks that `tile` meets every coset of `lattice` exactly once and that
/// the translates `tile + v` partition `big`.
pub fn check_tiling_sets(
    big: &FiniteSubset,
    tile: &FiniteSubset,
    lattice: &Lattice,
    translates: &[GroupPoint],
) -> (bool, bool, Option<String>) {
    let mut witness = None;
    let mut cosets = HashSet::new();
    for p in tile.iter() {
        if !cosets.insert(lattice.reduce(p.coords())) && witness.is_none() {
            witness = Some(format!("{p:?} repeats a coset of the tile"));
        }
    }
    let transversal = witness.is_none() && cosets.len() as u64 == lattice.index();
    if !transversal {
        witness.get_or_insert_with(|| format!("tile meets {} of {} cosets", cosets.len(), lattice.index()));
    }
    let mut seen: HashSet<GroupPoint> = HashSet::with_capacity(big.len());
    let mut tiling = true;
    for v in translates {
        for f in tile.iter() {
            let q = &f + v;
            let problem = if !big.contains(q.coords()) {
                Some(format!("{f:?} + {v:?} = {q:?} leaves the domain"))
            } else if !seen.insert(q.clone()) {
                Some(format!("{q:?} is covered twice (overlap at translate {v:?})"))
            } else {
                None
            };
            if let Some(msg) = problem {
                tiling = false;
                witness.get_or_insert(msg);
            }
        }
    }
    if tiling && seen.len() != big.len() {
        tiling = false;
        let missing = big.iter().find(|p| !seen.contains(p)).expect("some point is uncovered");
        witness.get_or_insert(format!("{missing:?} is not covered"));
    }
    (transversal, tiling, witness)
}

/// Exact check of stage `k`: `F_k` is a transversal of `ℤ^d / H_k`, and
/// `F_{k+1}` is the disjoint union of `F_k + v` over `v ∈ F_{k+1} ∩ H_k`.
/// The last configured stage has no successor, so only (i) is checked there.
pub fn check_tiling(stage: &SubstitutionStage, k: usize) -> Result<TilingReport> {
    stage.check_stage(k)?;
    let tile = stage.domain(k)?;
    let lattice = stage.lattice(k)?;
    let (transversal, tiling, witness) = if k < stage.stages() {
        let big = stage.domain(k + 1)?;
        let translates: Vec<GroupPoint> = big.iter().filter(|p| lattice.contains(p.coords())).collect();
        check_tiling_sets(&big, &tile, &lattice, &translates)
    } else {
        let (t, _, w) = check_tiling_sets(&tile, &tile, &lattice, &[GroupPoint::zero(stage.dim)]);
        (t, true, w)
    };
    Ok(TilingReport { k, transversal, tiling, witness, pass: transversal && tiling })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub k: usize,
    pub distinct_blocks: usize,
    /// Shannon entropy of the `k`-box pattern distribution, in bits.
    pub entropy: f64,
    /// `entropy / |W|`, bits per site.
    pub normalized: f64,
}

/// Block entropy over `F_n` for box windows `{0..k−1}^d`.
pub fn block_entropy(x: &Configuration, f_n: &FiniteSubset, window_sizes: &[usize]) -> Result<Vec<EntropyRow>> {
    window_sizes
        .iter()
        .map(|&k| {
            if k == 0 {
                return Err(LabError::InvalidInput("window sizes must be positive".into()));
            }
            let w = FiniteSubset::cube(x.dim(), 0, k as i64 - 1);
            let counts = pattern_counts(x, f_n, &w)?;
            let total = f_n.len() as f64;
            let entropy = counts
                .values()
                .map(|&c| {
                    let p = c as f64 / total;
                    -p * p.log2()
                })
                .sum::<f64>()
                .max(0.0);
            Ok(EntropyRow { k, distinct_blocks: counts.len(), entropy, normalized: entropy / w.len() as f64 })
        })
        .collect()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

struct Coins {
    seed: u64,
}

impl Rule for Coins {
    fn name(&self) -> String {
        format!("random:{}", self.seed)
    }
    fn value(&self, p: &[i64]) -> Symbol {
        let h = p.iter().fold(splitmix64(self.seed), |h, &c| splitmix64(h ^ c as u64));
        (h >> 63) as Symbol
    }
}

/// Fair coin flips indexed by site: the top bit of a SplitMix64 chain over
/// `(seed, p_1, .., p_d)`. Reproducible and independent of evaluation order.
pub fn random_config(dim: usize, seed: u64) -> Configuration {
    Configuration::from_rule(dim, Alphabet::binary(), Arc::new(Coins { seed }))
}

/// 1 on `[4^k, 2·4^k)` for `k ≥ 0`, 0 elsewhere. Its densities along
/// `{0..2^j}` alternate near 1/3 and 2/3.
pub fn oscillating_config() -> Configuration {
    Configuration::from_fn("oscillating", 1, Alphabet::binary(), |p| {
        let v = p[0];
        (v >= 1 && (63 - v.leading_zeros()) % 2 == 0) as Symbol
    })
}

/// Resolves the example names used on the command line:
/// `visible`, `prime-approx:n`, `rf-sub:k`, `const:s`, `periodic:w`,
/// `oscillating`, `random:seed`. `dim` applies to `const` and `random`.
pub fn resolve_config(name: &str, dim: usize) -> Result<Configuration> {
    let unknown = || LabError::UnknownExample(name.to_string());
    let (head, arg) = match name.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (name, None),
    };
    let number = |a: Option<&str>| a.and_then(|s| s.parse::<u64>().ok()).ok_or_else(unknown);
    match head {
        "visible" if arg.is_none() => Ok(visible_points_config()),
        "oscillating" if arg.is_none() => Ok(oscillating_config()),
        "prime-approx" => prime_approx_config(number(arg)? as usize),
        "rf-sub" => {
            let k = number(arg)? as usize;
            rf_substitution(&SubstitutionStage::default_z(k.max(1))?, k)
        }
        "const" => {
            let s = number(arg)?;
            if s > 1 || dim == 0 {
                return Err(unknown());
            }
            Ok(Configuration::constant(dim, Alphabet::binary(), s as Symbol))
        }
        "periodic" => {
            let word: Vec<Symbol> = arg
                .ok_or_else(unknown)?
                .chars()
                .map(|c| c.to_digit(10).map(|d| d as Symbol))
                .collect::<Option<_>>()
                .ok_or_else(unknown)?;
            let size = word.iter().max().map_or(2, |&m| (m + 1).max(2));
            Configuration::periodic_word(Alphabet::new(size)?, &word)
        }
        "random" => {
            if dim == 0 {
                return Err(unknown());
            }
            Ok(random_config(dim, number(arg)?))
        }
        _ => Err(unknown()),
    }
}
