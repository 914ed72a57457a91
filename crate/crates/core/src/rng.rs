//! Seeded randomness for reproducible experiments.
//!
//! Every draw comes from `ChaCha8Rng::seed_from_u64(seed)`. Bounded integers
//! are taken as `next_u64() % n`, which is slightly biased but trivial to
//! reproduce in any language with a ChaCha8 stream.

use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Alphabet, Configuration, Pattern, Symbol};
use crate::error::Result;
use crate::group::FiniteSubset;
use crate::measures::PatternDistribution;
use crate::scalar::rational;
use crate::Rational;

pub struct LabRng(ChaCha8Rng);

impl LabRng {
    pub fn new(seed: u64) -> Self {
        LabRng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform-ish draw from `0..n`; `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        self.0.next_u64() % n
    }

    /// Draw from `lo..=hi`.
    pub fn range(&mut self, lo: i64, hi: i64) -> i64 {
        lo + self.below((hi - lo + 1) as u64) as i64
    }

    pub fn symbol(&mut self, alphabet: Alphabet) -> Symbol {
        self.below(alphabet.size() as u64) as Symbol
    }
}

/// Word of length uniform in `1..=max_period`.
pub fn random_word(rng: &mut LabRng, alphabet: Alphabet, max_period: usize) -> Vec<Symbol> {
    let len = rng.range(1, max_period as i64) as usize;
    (0..len).map(|_| rng.symbol(alphabet)).collect()
}

/// Two independent binary periodic configurations on ℤ.
pub fn random_periodic_pair(rng: &mut LabRng, max_period: usize) -> Result<(Configuration, Configuration)> {
    let a = random_word(rng, Alphabet::binary(), max_period);
    let b = random_word(rng, Alphabet::binary(), max_period);
    Ok((Configuration::periodic_word(Alphabet::binary(), &a)?, Configuration::periodic_word(Alphabet::binary(), &b)?))
}

/// `total` split into `parts` positive integers, uniformly over compositions.
pub fn random_composition(rng: &mut LabRng, total: i64, parts: usize) -> Vec<i64> {
    assert!(parts >= 1 && total >= parts as i64, "cannot split {total} into {parts} parts");
    // Choose parts − 1 distinct cut points in 1..total.
    let mut cuts: Vec<i64> = (1..total).collect();
    for i in 0..parts - 1 {
        let j = i + rng.below((cuts.len() - i) as u64) as usize;
        cuts.swap(i, j);
    }
    let mut chosen: Vec<i64> = cuts[..parts - 1].to_vec();
    chosen.sort_unstable();
    chosen.push(total);
    let mut prev = 0;
    chosen
        .into_iter()
        .map(|c| {
            let part = c - prev;
            prev = c;
            part
        })
        .collect()
}

/// Distinct patterns on `window`, drawn uniformly; at most as many as exist.
pub fn random_patterns(rng: &mut LabRng, window: &FiniteSubset, alphabet: Alphabet, count: usize) -> Vec<Pattern> {
    let available = (alphabet.size() as u128).checked_pow(window.len() as u32).unwrap_or(u128::MAX);
    let count = count.min(available.min(usize::MAX as u128) as usize);
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let symbols: Vec<Symbol> = (0..window.len()).map(|_| rng.symbol(alphabet)).collect();
        let p = Pattern::new(&symbols);
        if seen.insert(p.clone()) {
            out.push(p);
        }
    }
    out
}

/// Distribution on `1..=max_support` random patterns with masses
/// `k_i / denominator`, where the `k_i` form a random composition.
pub fn random_distribution(
    rng: &mut LabRng,
    window: &FiniteSubset,
    alphabet: Alphabet,
    max_support: usize,
    denominator: i64,
) -> Result<PatternDistribution<Rational>> {
    let support = rng.range(1, max_support.min(denominator as usize) as i64) as usize;
    let patterns = random_patterns(rng, window, alphabet, support);
    let masses = random_composition(rng, denominator, patterns.len());
    let weights: BTreeMap<Pattern, Rational> =
        patterns.into_iter().zip(masses).map(|(p, k)| (p, rational(k, denominator))).collect();
    PatternDistribution::new(window.clone(), weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_streams_repeat() {
        let mut a = LabRng::new(7);
        let mut b = LabRng::new(7);
        let xs: Vec<u64> = (0..5).map(|_| a.below(1000)).collect();
        let ys: Vec<u64> = (0..5).map(|_| b.below(1000)).collect();
        assert_eq!(xs, ys);
        assert_ne!(LabRng::new(8).next_u64(), LabRng::new(7).next_u64());
    }

    #[test]
    fn compositions_sum() {
        let mut rng = LabRng::new(1);
        for total in 1..8 {
            for parts in 1..=total as usize {
                let c = random_composition(&mut rng, total, parts);
                assert_eq!(c.len(), parts);
                assert_eq!(c.iter().sum::<i64>(), total);
                assert!(c.iter().all(|&k| k > 0));
            }
        }
    }

    #[test]
    fn distributions_are_exact() {
        let mut rng = LabRng::new(3);
        let w = FiniteSubset::from_ints([0, 1]).unwrap();
        for _ in 0..20 {
            let d = random_distribution(&mut rng, &w, Alphabet::binary(), 5, 6).unwrap();
            assert!(d.support_len() <= 4);
            assert_eq!(d.total(), rational(1, 1));
        }
    }
}
