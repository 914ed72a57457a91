//! Brute-force oracles shared by the integration tests. None of these call
//! into the library's solvers; they recompute from definitions.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn lcm(a: i64, b: i64) -> i64 {
    a / gcd(a, b) * b
}

/// `2^{−r} / (2 s_d(r))` with `r = |g|_∞` and `s_d(r)` the size of the
/// sup-norm sphere of radius `r`.
pub fn admissible_weight(g: &[i64]) -> Q {
    let d = g.len() as u32;
    let r = g.iter().map(|c| c.abs()).max().unwrap_or(0);
    let shell = if r == 0 { 1 } else { (2 * r + 1).pow(d) - (2 * r - 1).pow(d) };
    let mut w = q(1, 2 * shell);
    for _ in 0..r {
        w /= q(2, 1);
    }
    w
}

/// Minimum of `Σ k_ij c_ij / denom` over nonnegative integer matrices with
/// row sums `rows` and column sums `cols`.
pub fn enumerate_min_cost(rows: &[i64], cols: &[i64], cost: &[Vec<Q>], denom: i64) -> Q {
    fn go(i: usize, j: usize, rows: &mut Vec<i64>, cols: &mut Vec<i64>, cost: &[Vec<Q>], acc: Q, best: &mut Option<Q>) {
        let (m, n) = (rows.len(), cols.len());
        if i == m {
            if cols.iter().all(|&c| c == 0) && best.as_ref().is_none_or(|b| acc < *b) {
                *best = Some(acc);
            }
            return;
        }
        if j == n {
            if rows[i] == 0 {
                go(i + 1, 0, rows, cols, cost, acc, best);
            }
            return;
        }
        let cap = rows[i].min(cols[j]);
        for k in 0..=cap {
            rows[i] -= k;
            cols[j] -= k;
            go(i, j + 1, rows, cols, cost, acc.clone() + cost[i][j].clone() * q(k, 1), best);
            rows[i] += k;
            cols[j] += k;
        }
    }
    let mut best = None;
    go(0, 0, &mut rows.to_vec(), &mut cols.to_vec(), cost, Q::zero(), &mut best);
    best.expect("balanced margins admit a coupling") / q(denom, 1)
}

/// Orbit-measure marginal of the periodic word on the 1-d window `window`.
pub fn orbit_marginal_word(word: &[u8], window: &[i64]) -> BTreeMap<Vec<u8>, Q> {
    let p = word.len() as i64;
    let mut out: BTreeMap<Vec<u8>, Q> = BTreeMap::new();
    for s in 0..p {
        let pat: Vec<u8> = window.iter().map(|w| word[(s + w).rem_euclid(p) as usize]).collect();
        *out.entry(pat).or_insert_with(Q::zero) += q(1, p);
    }
    out
}

/// Orbit marginal of a 2-d configuration with periods `(a, b)` given by a
/// row-major table, on a window of points.
pub fn orbit_marginal_2d(table: &[u8], periods: (i64, i64), window: &[(i64, i64)]) -> BTreeMap<Vec<u8>, Q> {
    let (a, b) = periods;
    let at = |x: i64, y: i64| table[(x.rem_euclid(a) * b + y.rem_euclid(b)) as usize];
    let mut out: BTreeMap<Vec<u8>, Q> = BTreeMap::new();
    for sx in 0..a {
        for sy in 0..b {
            let pat: Vec<u8> = window.iter().map(|(wx, wy)| at(sx + wx, sy + wy)).collect();
            *out.entry(pat).or_insert_with(Q::zero) += q(1, a * b);
        }
    }
    out
}

/// Exact ρ̄ between the orbits of two periodic words: minimum over relative
/// shifts of the mismatch frequency over a common period.
pub fn periodic_rho_words(a: &[u8], b: &[u8]) -> Q {
    let (la, lb) = (a.len() as i64, b.len() as i64);
    let l = lcm(la, lb);
    (0..lb)
        .map(|s| {
            let bad = (0..l).filter(|&i| a[(i % la) as usize] != b[((i + s) % lb) as usize]).count();
            q(bad as i64, l)
        })
        .min()
        .unwrap()
}

/// Primes up to `limit` by trial division.
pub fn primes_up_to(limit: i64) -> Vec<i64> {
    (2..=limit).filter(|&n| (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)).collect()
}

/// Upper estimate of `Σ_{p > p_n} p^{-2}`: explicit sum to `limit` plus the
/// integral tail bound `1/limit`.
pub fn prime_tail_upper(n: usize, limit: i64) -> f64 {
    let ps = primes_up_to(limit);
    ps[n..].iter().map(|&p| 1.0 / (p as f64 * p as f64)).sum::<f64>() + 1.0 / limit as f64
}

pub fn is_one(x: &Q) -> bool {
    x.is_one()
}
