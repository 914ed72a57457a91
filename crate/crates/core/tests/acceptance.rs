//! Acceptance criteria at their stated tolerances. Runs without the libtest
//! harness so every criterion prints exactly one PASS/FAIL line, even when
//! an earlier one fails.

mod common;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use common::*;
use folner_lab_core::constructions::{
    block_entropy, prime_approx_config, prime_zeta_tail, random_config, rf_substitution, visible_points_config,
    SubstitutionStage,
};
use folner_lab_core::group::temperedness_ratio;
use folner_lab_core::measures::{empirical_measure, prokhorov_distance, prokhorov_exact};
use folner_lab_core::metrics::{dbar_estimate, dbar_over, upper_density};
use folner_lab_core::rng::{random_composition, random_distribution, random_patterns, random_word, LabRng};
use folner_lab_core::transport::{check_db_ge_rho, glue_couplings, min_cost_transport, rho_triangle_check};
use folner_lab_core::{
    default_metric, make_box_folner, Alphabet, Configuration, ExactDistribution, FiniteSubset, FolnerKind, GroupPoint,
    Lattice, Pattern, Rational, Scalar,
};

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

fn visible_density() -> Outcome {
    let start = Instant::now();
    let v = visible_points_config();
    let f = make_box_folner(2, FolnerKind::Centered).unwrap();
    let trace = upper_density(&|p: &[i64]| v.at(p) == 1, &f, &[1000]).unwrap();
    let elapsed = start.elapsed();
    let estimate = trace.last().value;
    let target = 6.0 / (PI * PI);
    // Brute gcd count on the same box, independent of the configuration type.
    let brute = {
        let mut hits = 0u64;
        for a in -1000i64..=1000 {
            for b in -1000i64..=1000 {
                hits += (gcd(a, b) == 1) as u64;
            }
        }
        hits as f64 / (2001.0 * 2001.0)
    };
    outcome(
        (estimate - target).abs() <= 0.01 && estimate == brute && within(elapsed, 10),
        format!("estimate {estimate:.6}, brute {brute:.6}, 6/π² {target:.6}, {:.2?}", elapsed),
    )
}

fn approximant_convergence() -> Outcome {
    let v = visible_points_config();
    let f = make_box_folner(2, FolnerKind::Centered).unwrap();
    let mut values = Vec::new();
    let mut ok = true;
    let mut notes = Vec::new();
    for n in 1..=5 {
        let x = prime_approx_config(n).unwrap();
        let d = dbar_estimate(&v, &x, &f, 600).unwrap().to_f64();
        let bound = prime_zeta_tail(n) + 0.01;
        let oracle_bound = prime_tail_upper(n, 20_000) + 0.01;
        ok &= d <= bound && bound <= oracle_bound;
        notes.push(format!("n={n}: {d:.5} ≤ {bound:.5}"));
        values.push(d);
    }
    let monotone = values.windows(2).all(|w| w[1] <= w[0] + 5e-3);
    outcome(ok && monotone, notes.join("; "))
}

fn substitution_cauchy() -> Outcome {
    let start = Instant::now();
    let stage = SubstitutionStage::default_z(6).unwrap();
    let mut ok = true;
    let mut notes = Vec::new();
    for k in 1..=5 {
        let a = rf_substitution(&stage, k).unwrap();
        let b = rf_substitution(&stage, k + 1).unwrap();
        let d = dbar_over(&a, &b, &stage.domain(k + 1).unwrap());
        let r = (1i64 << k) + 1;
        ok &= d == q(1, r) && d < q(1, 1 << k);
        notes.push(format!("k={k}: {d}"));
    }
    let elapsed = start.elapsed();
    outcome(ok && within(elapsed, 1), format!("{} in {:.2?}", notes.join(", "), elapsed))
}

fn temperedness() -> Outcome {
    let line = make_box_folner(1, FolnerKind::Boxes).unwrap();
    let plane = make_box_folner(2, FolnerKind::Boxes).unwrap();
    let r1: Vec<f64> = (1..=100).map(|n| temperedness_ratio(&line, n).unwrap().to_f64()).collect();
    let r2: Vec<f64> = (1..=50).map(|n| temperedness_ratio(&plane, n).unwrap().to_f64()).collect();
    // Closed forms for F_n = {0..n}^d: ((2n+2)/(n+2))^d.
    let closed = |n: usize, d: i32| ((2.0 * n as f64 + 2.0) / (n as f64 + 2.0)).powi(d);
    let exact = r1.iter().enumerate().all(|(i, r)| (r - closed(i + 1, 1)).abs() < 1e-12)
        && r2.iter().enumerate().all(|(i, r)| (r - closed(i + 1, 2)).abs() < 1e-12);
    let (last1, last2) = (r1[99], r2[49]);
    let pass = r1.iter().all(|&r| r <= 2.0)
        && (1.95..=2.0).contains(&last1)
        && r2.iter().all(|&r| r <= 4.0)
        && (3.8..=4.0).contains(&last2)
        && exact;
    outcome(pass, format!("ℤ ratio(100) = {last1:.4}, ℤ² ratio(50) = {last2:.4}"))
}

fn transport_exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = LabRng::new(2024);
    let w = FiniteSubset::from_ints([0, 1]).unwrap();
    let mut instances = 0;
    let mut agree = 0;
    for denom in 1..=6i64 {
        for _ in 0..80 {
            let side = |rng: &mut LabRng| -> (Vec<Pattern>, Vec<i64>) {
                let support = rng.range(1, 4.min(denom)) as usize;
                let pats = random_patterns(rng, &w, Alphabet::binary(), support);
                let masses = random_composition(rng, denom, pats.len());
                (pats, masses)
            };
            let (pa, ma) = side(&mut rng);
            let (pb, mb) = side(&mut rng);
            let costs: Vec<Vec<Rational>> =
                pa.iter().map(|_| pb.iter().map(|_| q(rng.range(0, 12), rng.range(1, 5))).collect()).collect();
            let build = |pats: &[Pattern], masses: &[i64]| {
                let weights: BTreeMap<Pattern, Rational> =
                    pats.iter().cloned().zip(masses.iter().map(|&k| q(k, denom))).collect();
                ExactDistribution::new(w.clone(), weights).unwrap()
            };
            let (mu, nu) = (build(&pa, &ma), build(&pb, &mb));
            let lookup = |a: &Pattern, b: &Pattern| {
                let i = pa.iter().position(|p| p == a).unwrap();
                let j = pb.iter().position(|p| p == b).unwrap();
                costs[i][j].clone()
            };
            let t = min_cost_transport(&mu, &nu, lookup).unwrap();
            instances += 1;
            // Supports are listed in pattern order inside the solver, so the
            // oracle works on its own ordering.
            agree += (t.certified && t.value == enumerate_min_cost(&ma, &mb, &costs, denom)) as usize;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        agree == instances && within(elapsed, 60),
        format!("{agree}/{instances} instances equal the enumeration oracle, {:.2?}", elapsed),
    )
}

fn gluing() -> Outcome {
    let mut rng = LabRng::new(99);
    let metric = default_metric(1).unwrap();
    let w = FiniteSubset::from_ints([0, 1, 2]).unwrap();
    let points: Vec<GroupPoint> = w.iter().collect();
    let cost = |p: &Pattern, r: &Pattern| metric.pattern_distance::<Rational>(&points, p, r);
    let mut passed = 0;
    for _ in 0..100 {
        let draw = |rng: &mut LabRng| {
            let denom = rng.range(1, 12);
            random_distribution(rng, &w, Alphabet::binary(), 5, denom).unwrap()
        };
        let (mu, eta, nu) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
        let report = rho_triangle_check(&mu, &eta, &nu, cost).unwrap();
        // Marginals recomputed here rather than trusted from the report.
        let first = min_cost_transport(&mu, &eta, cost).unwrap();
        let second = min_cost_transport(&eta, &nu, cost).unwrap();
        let glued = glue_couplings(&first.coupling, &second.coupling).unwrap();
        let mut rows: BTreeMap<Pattern, Rational> = BTreeMap::new();
        let mut cols: BTreeMap<Pattern, Rational> = BTreeMap::new();
        for ((a, c), m) in glued.weights() {
            *rows.entry(a.clone()).or_insert_with(|| q(0, 1)) += m;
            *cols.entry(c.clone()).or_insert_with(|| q(0, 1)) += m;
        }
        let direct = min_cost_transport(&mu, &nu, cost).unwrap().value;
        let ok = report.pass
            && &rows == mu.weights()
            && &cols == nu.weights()
            && direct <= first.value.clone() + second.value.clone();
        passed += ok as usize;
    }
    outcome(passed == 100, format!("{passed}/100 triples"))
}

fn db_ge_rho() -> Outcome {
    let start = Instant::now();
    let mut rng = LabRng::new(7);
    let f = make_box_folner(1, FolnerKind::Boxes).unwrap();
    let mut passed = 0;
    let mut worst = f64::INFINITY;
    for _ in 0..20 {
        let a = random_word(&mut rng, Alphabet::binary(), 12);
        let b = random_word(&mut rng, Alphabet::binary(), 12);
        let x = Configuration::periodic_word(Alphabet::binary(), &a).unwrap();
        let z = Configuration::periodic_word(Alphabet::binary(), &b).unwrap();
        let report = check_db_ge_rho(&x, &z, &f, 10_000, 4, 1e-2).unwrap();
        let oracle = periodic_rho_words(&a, &b);
        let chain_ok = report.chain.values_exact().iter().all(|v| *v <= oracle);
        let estimate_ok = report.dbar_estimate >= oracle.to_f64() - 1e-2;
        worst = worst.min(report.dbar_estimate - oracle.to_f64());
        passed += (report.pass && report.oracle_exact == oracle.to_string() && chain_ok && estimate_ok) as usize;
    }
    let elapsed = start.elapsed();
    outcome(passed == 20 && within(elapsed, 60), format!("{passed}/20 pairs, min(d̄ − ρ̄) = {worst:.4}, {:.2?}", elapsed))
}

fn periodic_genericity() -> Outcome {
    let mut rng = LabRng::new(31);
    let metric1 = default_metric(1).unwrap();
    let metric2 = default_metric(2).unwrap();
    let mut passed = 0;
    for i in 0..10 {
        let (distance, exact, equal) = if i < 5 {
            let word = random_word(&mut rng, Alphabet::binary(), 8);
            let x = Configuration::periodic_word(Alphabet::binary(), &word).unwrap();
            let offsets: Vec<i64> = {
                let mut o = vec![0];
                for _ in 0..rng.range(0, 2) {
                    o.push(rng.range(1, 5));
                }
                o.sort_unstable();
                o.dedup();
                o
            };
            let w = FiniteSubset::from_ints(offsets.iter().copied()).unwrap();
            let p = word.len() as i64;
            let aligned = FiniteSubset::cube(1, 0, p * rng.range(3, 30) - 1);
            let emp: ExactDistribution = empirical_measure(&x, &aligned, &w).unwrap();
            let oracle = orbit_marginal_word(&word, &offsets);
            let target =
                ExactDistribution::new(w.clone(), oracle.into_iter().map(|(k, v)| (Pattern::new(&k), v)).collect())
                    .unwrap();
            (
                prokhorov_distance(&emp, &target, &metric1).unwrap(),
                prokhorov_exact(&emp, &target, &metric1).unwrap(),
                emp == target,
            )
        } else {
            let (a, b) = (rng.range(1, 4), rng.range(1, 4));
            let table: Vec<u8> = (0..a * b).map(|_| rng.below(2) as u8).collect();
            let lattice = Lattice::diagonal(&[a, b]).unwrap();
            let x = Configuration::periodic(Alphabet::binary(), lattice, |p| {
                table[(p[0].rem_euclid(a) * b + p[1].rem_euclid(b)) as usize]
            })
            .unwrap();
            let window = vec![(0, 0), (0, 1), (1, 0)];
            let w = FiniteSubset::from_points(window.iter().map(|&(u, v)| GroupPoint::new(&[u, v]))).unwrap();
            let aligned = FiniteSubset::box_set(
                GroupPoint::new(&[-a, 0]),
                GroupPoint::new(&[a * rng.range(2, 6) - 1, b * rng.range(2, 6) - 1]),
            )
            .unwrap();
            let emp: ExactDistribution = empirical_measure(&x, &aligned, &w).unwrap();
            let oracle = orbit_marginal_2d(&table, (a, b), &window);
            let target =
                ExactDistribution::new(w.clone(), oracle.into_iter().map(|(k, v)| (Pattern::new(&k), v)).collect())
                    .unwrap();
            (
                prokhorov_distance(&emp, &target, &metric2).unwrap(),
                prokhorov_exact(&emp, &target, &metric2).unwrap(),
                emp == target,
            )
        };
        passed += (distance.value == 0.0 && distance.resolution == 0.0 && exact == q(0, 1) && equal) as usize;
    }
    outcome(passed == 10, format!("{passed}/10 configurations at Prokhorov distance exactly 0"))
}

fn prokhorov_dirac() -> Outcome {
    let mut rng = LabRng::new(5);
    let mut passed = 0;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let dim = rng.range(1, 2) as usize;
        let metric = default_metric(dim as i64).unwrap();
        let size = rng.range(1, 4) as usize;
        let mut pts = std::collections::BTreeSet::new();
        while pts.len() < size {
            pts.insert(GroupPoint::new(&(0..dim).map(|_| rng.range(-3, 3)).collect::<Vec<_>>()));
        }
        let w = FiniteSubset::from_points(pts.iter().cloned()).unwrap();
        let p: Vec<u8> = (0..size).map(|_| rng.below(2) as u8).collect();
        let r: Vec<u8> = (0..size).map(|_| rng.below(2) as u8).collect();
        let expected: Rational = pts
            .iter()
            .zip(p.iter().zip(&r))
            .filter(|(_, (a, b))| a != b)
            .map(|(g, _)| admissible_weight(g.coords()))
            .sum();
        let expected = expected.to_f64().min(1.0);
        let mu = ExactDistribution::dirac(w.clone(), Pattern::new(&p)).unwrap();
        let nu = ExactDistribution::dirac(w, Pattern::new(&r)).unwrap();
        let got = prokhorov_distance(&mu, &nu, &metric).unwrap().value;
        worst = worst.max((got - expected).abs());
        passed += ((got - expected).abs() <= 1e-6) as usize;
    }
    outcome(passed == 50, format!("{passed}/50 Dirac pairs, max error {worst:.2e}"))
}

fn entropy_evidence() -> Outcome {
    let x3 = prime_approx_config(3).unwrap();
    let period = FiniteSubset::cube(2, 0, 29);
    let rows = block_entropy(&x3, &period, &[1, 2, 3, 4]).unwrap();
    let count = 900f64;
    let bounded = rows.iter().all(|r| r.normalized <= count.log2() / r.k as f64);
    let monotone = rows.windows(2).all(|w| w[1].normalized <= w[0].normalized);
    let control = block_entropy(&random_config(2, 17), &FiniteSubset::cube(2, 0, 99), &[1]).unwrap()[0].normalized;
    let values: Vec<String> = rows.iter().map(|r| format!("k={}: {:.4}", r.k, r.normalized)).collect();
    outcome(bounded && monotone && control >= 0.9, format!("{}; random control {control:.4}", values.join(", ")))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 visible-point density", visible_density),
        ("2 prime approximant convergence", approximant_convergence),
        ("3 substitution Cauchy property", substitution_cauchy),
        ("4 temperedness of boxes", temperedness),
        ("5 transport exactness", transport_exactness),
        ("6 gluing and triangle inequality", gluing),
        ("7 d̄ estimate dominates periodic ρ̄", db_ge_rho),
        ("8 genericity of periodic points", periodic_genericity),
        ("9 Prokhorov distance of Dirac pairs", prokhorov_dirac),
        ("10 block entropy evidence", entropy_evidence),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        let result = run();
        println!("{} criterion {name}: {}", if result.pass { "PASS" } else { "FAIL" }, result.detail);
        failures += (!result.pass) as usize;
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
