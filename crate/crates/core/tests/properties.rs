mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use folner_lab_core::constructions::{block_entropy, rf_substitution, SubstitutionStage};
use folner_lab_core::group::{folner_defect, tempered_subsequence, temperedness_ratio, Side};
use folner_lab_core::measures::empirical_measure;
use folner_lab_core::metrics::{
    besicovitch_estimate, besicovitch_prime_estimate, dbar_estimate, dbar_over, default_delta_grid,
};
use folner_lab_core::transport::{
    box_windows, glue_couplings, min_cost_transport, pair_empirical_joining, periodic_rho_oracle, rho_bar_lower,
    CostKind, Coupling, PeriodicOrbitMeasure,
};
use folner_lab_core::{
    config::config_distance, default_metric, make_box_folner, restrict, shift, Alphabet, Configuration,
    ExactDistribution, FiniteSubset, FolnerKind, FolnerSequence, GroupPoint, Lattice, Pattern, Rational,
};
use proptest::prelude::*;

fn word_config(w: &[u8]) -> Configuration {
    Configuration::periodic_word(Alphabet::binary(), w).unwrap()
}

fn arb_word(max: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..2, 1..=max)
}

fn arb_set(dim: usize) -> impl Strategy<Value = FiniteSubset> {
    prop::collection::btree_set(prop::collection::vec(-4i64..5, dim), 1..12)
        .prop_map(|pts| FiniteSubset::from_points(pts.into_iter().map(|p| GroupPoint::new(&p))).unwrap())
}

fn arb_point(dim: usize) -> impl Strategy<Value = GroupPoint> {
    prop::collection::vec(-3i64..4, dim).prop_map(|p| GroupPoint::new(&p))
}

/// `|⋃_{k≤n} F_k^{-1} F_{n+1}| / |F_{n+1}|` from explicit point sets.
fn ratio_by_points(seq: &FolnerSequence, n: usize) -> f64 {
    let next: Vec<GroupPoint> = seq.set(n + 1).unwrap().iter().collect();
    let mut union = BTreeSet::new();
    for k in 1..=n {
        for f in seq.set(k).unwrap().iter() {
            for g in &next {
                union.insert(g - &f);
            }
        }
    }
    union.len() as f64 / next.len() as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn left_and_right_defects_agree(dim in 1usize..3, seed in any::<u64>()) {
        let mut rng = folner_lab_core::rng::LabRng::new(seed);
        let pts: Vec<GroupPoint> = (0..8)
            .map(|_| GroupPoint::new(&(0..dim).map(|_| rng.range(-3, 3)).collect::<Vec<_>>()))
            .collect();
        let f = FiniteSubset::from_points(pts).unwrap();
        let g = GroupPoint::new(&(0..dim).map(|_| rng.range(-2, 2)).collect::<Vec<_>>());
        prop_assert_eq!(folner_defect(&f, &g, Side::Left).unwrap(), folner_defect(&f, &g, Side::Right).unwrap());
    }

    #[test]
    fn box_defects_shrink(dim in 1usize..3, g in arb_point(2), kind in prop::sample::select(vec![FolnerKind::Boxes, FolnerKind::Centered])) {
        let g = GroupPoint::new(&g.coords()[..dim]);
        let seq = make_box_folner(dim as i64, kind).unwrap();
        let values: Vec<f64> = [4usize, 8, 16, 32]
            .iter()
            .map(|&n| folner_lab_core::Scalar::to_f64(&folner_defect(&seq.set(n).unwrap(), &g, Side::Left).unwrap()))
            .collect();
        prop_assert!(values.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn tempered_subsequences_recheck(c in prop::sample::select(vec![1.2, 1.5, 2.0, 3.0]), offset in 0usize..4) {
        let base = make_box_folner(1, FolnerKind::Boxes).unwrap();
        let shifted = base.subsequence(&(1 + offset..40 + offset).collect::<Vec<_>>()).unwrap();
        let picked = tempered_subsequence(&shifted, c, 30).unwrap();
        let sub = shifted.subsequence(&picked).unwrap();
        for n in 1..picked.len() {
            prop_assert!(ratio_by_points(&sub, n) <= c + 1e-12);
        }
    }

    #[test]
    fn restrict_commutes_with_shift(w in arb_set(2), g in arb_point(2), seed in any::<u64>()) {
        let config = folner_lab_core::constructions::random_config(2, seed);
        let moved = restrict(&shift(&g, &config), &w).unwrap();
        let translated = w.translate_right(&g);
        // The translate keeps the lexicographic order of w, so symbols line up.
        let direct: Vec<u8> = w.iter().map(|p| config.at((&p + &g).coords())).collect();
        prop_assert_eq!(moved.symbols(), &direct[..]);
        let via_window = restrict(&config, &translated).unwrap();
        prop_assert_eq!(via_window.symbols(), &direct[..]);
    }

    #[test]
    fn periodic_restrict_depends_on_cosets(periods in (1i64..5, 1i64..5), seed in any::<u64>(), w in arb_set(2), v in arb_point(2)) {
        let lattice = Lattice::diagonal(&[periods.0, periods.1]).unwrap();
        let coins = folner_lab_core::constructions::random_config(2, seed);
        let x = Configuration::periodic(Alphabet::binary(), lattice, |p| coins.at(p)).unwrap();
        let lift = GroupPoint::new(&[v.coords()[0] * periods.0, v.coords()[1] * periods.1]);
        prop_assert_eq!(restrict(&x, &w).unwrap(), restrict(&shift(&lift, &x), &w).unwrap());
    }

    #[test]
    fn distance_intervals_nest(a in arb_word(6), b in arb_word(6), g in -5i64..6) {
        let m = default_metric(1).unwrap();
        let x = word_config(&a);
        let z = shift(&GroupPoint::scalar(g), &word_config(&b));
        let mut prev = config_distance(&x, &z, &m, 0);
        for r in 1..9 {
            let next = config_distance(&x, &z, &m, r);
            prop_assert!(next.lo >= prev.lo - 1e-15 && next.hi <= prev.hi + 1e-15);
            prev = next;
        }
    }

    #[test]
    fn dbar_sandwich(a in arb_word(8), b in arb_word(8), n in 10usize..80) {
        let m = default_metric(1).unwrap();
        let f = make_box_folner(1, FolnerKind::Centered).unwrap();
        let (x, z) = (word_config(&a), word_config(&b));
        let radius = 8;
        let db = besicovitch_estimate(&x, &z, &f, n, &m, radius).unwrap();
        let dbar = folner_lab_core::Scalar::to_f64(&dbar_estimate(&x, &z, &f, n).unwrap());
        prop_assert!(0.5 * dbar <= db.lo + m.tail_bound(radius) + 1e-12);
    }

    #[test]
    fn dprime_dominates(a in arb_word(8), b in arb_word(8), n in 10usize..60) {
        let m = default_metric(1).unwrap();
        let f = make_box_folner(1, FolnerKind::Centered).unwrap();
        let (x, z) = (word_config(&a), word_config(&b));
        let radius = 8;
        let db = besicovitch_estimate(&x, &z, &f, n, &m, radius).unwrap();
        let dp = besicovitch_prime_estimate(&x, &z, &f, n, &m, radius, &default_delta_grid()).unwrap();
        prop_assert!(db.midpoint() <= 2.0 * dp.value + m.tail_bound(radius) + 1.0 / 200.0);
    }
}

/// One side of a transport instance: up to 4 two-site binary patterns with
/// positive masses `k / denom`.
fn arb_side(denom: i64) -> impl Strategy<Value = Vec<(Vec<u8>, i64)>> {
    let patterns = vec![vec![0u8, 0], vec![0, 1], vec![1, 0], vec![1, 1]];
    (1usize..=4usize.min(denom as usize)).prop_flat_map(move |support| {
        (
            prop::sample::subsequence(patterns.clone(), support),
            prop::sample::subsequence((1..denom).collect::<Vec<_>>(), support - 1),
        )
            .prop_map(move |(pats, cuts)| {
                let mut bounds = vec![0];
                bounds.extend(cuts);
                bounds.push(denom);
                pats.into_iter().zip(bounds.windows(2).map(|w| w[1] - w[0])).collect()
            })
    })
}

type Instance = (Vec<(Vec<u8>, i64)>, Vec<(Vec<u8>, i64)>, i64, Vec<Vec<i64>>);

/// Two sides sharing a denominator ≤ 6, plus a 4×4 table of costs.
fn arb_instance() -> impl Strategy<Value = Instance> {
    (1i64..=6).prop_flat_map(|denom| {
        (arb_side(denom), arb_side(denom), Just(denom), prop::collection::vec(prop::collection::vec(0i64..10, 4), 4))
    })
}

fn distribution(entries: &[(Vec<u8>, i64)], denom: i64) -> ExactDistribution {
    let w = FiniteSubset::from_ints([0, 1]).unwrap();
    let weights: BTreeMap<Pattern, Rational> = entries.iter().map(|(p, k)| (Pattern::new(p), q(*k, denom))).collect();
    ExactDistribution::new(w, weights).unwrap()
}

fn pattern_index(p: &Pattern) -> usize {
    (p.symbols()[0] * 2 + p.symbols()[1]) as usize
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn transport_matches_enumeration((left, right, denom, table) in arb_instance()) {
        let mu = distribution(&left, denom);
        let nu = distribution(&right, denom);
        let cost = |a: &Pattern, b: &Pattern| q(table[pattern_index(a)][pattern_index(b)], 7);
        let t = min_cost_transport(&mu, &nu, cost).unwrap();
        prop_assert!(t.certified);
        let rows: Vec<i64> = left.iter().map(|e| e.1).collect();
        let cols: Vec<i64> = right.iter().map(|e| e.1).collect();
        let matrix: Vec<Vec<Rational>> = left
            .iter()
            .map(|(a, _)| right.iter().map(|(b, _)| cost(&Pattern::new(a), &Pattern::new(b))).collect())
            .collect();
        prop_assert_eq!(&t.value, &enumerate_min_cost(&rows, &cols, &matrix, denom));
        prop_assert_eq!(t.coupling.cost(cost), t.value);
    }

    #[test]
    fn transport_is_symmetric((left, right, denom, table) in arb_instance()) {
        let mu = distribution(&left, denom);
        let nu = distribution(&right, denom);
        let sym = |a: &Pattern, b: &Pattern| {
            let (i, j) = (pattern_index(a), pattern_index(b));
            q(table[i.min(j)][i.max(j)] * (i != j) as i64, 3)
        };
        prop_assert_eq!(min_cost_transport(&mu, &nu, sym).unwrap().value, min_cost_transport(&nu, &mu, sym).unwrap().value);
    }

    #[test]
    fn gluing_preserves_marginals(
        (a, b, denom, _t) in arb_instance(),
        (c, _, denom2, _t2) in arb_instance(),
    ) {
        let mu = distribution(&a, denom);
        let eta = distribution(&b, denom);
        let nu = distribution(&c, denom2);
        let hamming = |p: &Pattern, r: &Pattern| q(p.hamming(r) as i64, 2);
        let first = min_cost_transport(&mu, &eta, hamming).unwrap();
        let second = min_cost_transport(&eta, &nu, hamming).unwrap();
        let glued = glue_couplings(&first.coupling, &second.coupling).unwrap();
        let mut rows: BTreeMap<Pattern, Rational> = BTreeMap::new();
        let mut cols: BTreeMap<Pattern, Rational> = BTreeMap::new();
        for ((p, r), w) in glued.weights() {
            *rows.entry(p.clone()).or_insert_with(|| q(0, 1)) += w;
            *cols.entry(r.clone()).or_insert_with(|| q(0, 1)) += w;
        }
        prop_assert_eq!(&rows, mu.weights());
        prop_assert_eq!(&cols, nu.weights());
        prop_assert!(glued.cost(hamming) <= first.value + second.value);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rho_chain_below_oracle(a in arb_word(6), b in arb_word(6)) {
        let metric = default_metric(1).unwrap();
        let (x, z) = (PeriodicOrbitMeasure::new(&word_config(&a)).unwrap(), PeriodicOrbitMeasure::new(&word_config(&b)).unwrap());
        let oracle = periodic_rho_oracle(&x, &z).unwrap();
        prop_assert_eq!(&oracle, &periodic_rho_words(&a, &b));
        let windows = box_windows(1, 5);
        let family: Vec<_> = x.family::<Rational>(&windows).unwrap().into_iter().zip(z.family(&windows).unwrap()).collect();
        let chain = rho_bar_lower(&family, CostKind::Hamming, &metric).unwrap();
        prop_assert!(chain.values_exact().iter().all(|v| *v <= oracle));
        let running = chain.chain_exact();
        prop_assert!(running.windows(2).all(|w| w[0] <= w[1]));
        let admissible = rho_bar_lower(&family, CostKind::Admissible, &metric).unwrap();
        prop_assert!(admissible.values_exact().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn pair_joining_marginals(a in arb_word(7), b in arb_word(7), n in 1i64..40, g in -3i64..4) {
        let x = word_config(&a);
        let z = shift(&GroupPoint::scalar(g), &word_config(&b));
        let f = FiniteSubset::cube(1, -n, n);
        let w = FiniteSubset::from_ints([0, 2]).unwrap();
        let joint: Coupling<Rational> = pair_empirical_joining(&x, &z, &f, &w).unwrap();
        prop_assert_eq!(joint.left(), &empirical_measure::<Rational>(&x, &f, &w).unwrap());
        prop_assert_eq!(joint.right(), &empirical_measure::<Rational>(&z, &f, &w).unwrap());
    }

    #[test]
    fn periodic_entropy_bound(a in arb_word(9), k in 1usize..9) {
        let x = word_config(&a);
        let period = a.len() as i64;
        let rows = block_entropy(&x, &FiniteSubset::cube(1, 0, period - 1), &[k]).unwrap();
        prop_assert!(rows[0].normalized <= (period as f64).log2() / k as f64 + 1e-12);
    }
}

#[test]
fn substitution_is_dbar_cauchy() {
    let stage = SubstitutionStage::default_z(7).unwrap();
    for k in 1..=7 {
        for j in k + 1..=7 {
            let a = rf_substitution(&stage, k).unwrap();
            let b = rf_substitution(&stage, j).unwrap();
            let d = dbar_over(&a, &b, &stage.domain(j).unwrap());
            let bound: Rational = (k..j).map(|i| q(1, 1 << i)).sum();
            assert!(d <= bound, "k={k} j={j}");
        }
    }
}

#[test]
fn temperedness_of_boxes() {
    for d in 1..=2usize {
        let seq = make_box_folner(d as i64, FolnerKind::Boxes).unwrap();
        let cap = (1u64 << d) as f64;
        for n in 1..=12 {
            let r = folner_lab_core::Scalar::to_f64(&temperedness_ratio(&seq, n).unwrap());
            assert!(r <= cap + 1e-12);
            assert!((r - ratio_by_points(&seq, n)).abs() < 1e-12);
        }
        let far = folner_lab_core::Scalar::to_f64(&temperedness_ratio(&seq, 100).unwrap());
        assert!((cap - far).abs() <= 0.05 * cap);
    }
}

#[test]
fn visible_density_error_shrinks() {
    use folner_lab_core::constructions::visible_points_config;
    use folner_lab_core::metrics::upper_density;
    let v = visible_points_config();
    let f = make_box_folner(2, FolnerKind::Centered).unwrap();
    let trace = upper_density(&|p: &[i64]| v.at(p) == 1, &f, &[100, 300, 1000]).unwrap();
    let target = 6.0 / (std::f64::consts::PI * std::f64::consts::PI);
    let errors: Vec<f64> = trace.rows.iter().map(|r| (r.value - target).abs()).collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}
