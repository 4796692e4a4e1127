use std::collections::BTreeMap;
use std::f64::consts::PI;

use orbitorsion::corpus;
use orbitorsion::holonomy::HolonomyRep;
use orbitorsion::io::{spectrum_cache_key, SpectrumCache};
use orbitorsion::linalg::{cis, CMat};
use orbitorsion::spectra::*;
use orbitorsion::Error;
use proptest::prelude::*;

const T_GRID: [f64; 6] = [0.05, 0.1, 0.5, 1.0, 2.0, 5.0];

fn circle_rep(theta: f64) -> (orbitorsion::orbicryst::CheckedPresentation, HolonomyRep) {
    let p = corpus::presentation("circle").unwrap();
    let rep = HolonomyRep::from_pairs(&p, 1, &[("t1", CMat::from_element(1, 1, cis(theta)))]).unwrap();
    (p, rep)
}

/// Σ_k e^{−4π²t(k+a)²} through its Poisson dual.
fn theta_dual(t: f64, a: f64) -> f64 {
    let s: f64 = (-60i64..=60).map(|m| (-(m * m) as f64 / (4.0 * t)).exp() * (2.0 * PI * m as f64 * a).cos()).sum();
    s / (4.0 * PI * t).sqrt()
}

#[test]
fn twisted_circle_eigenvalues() {
    let theta = 2.0 * PI / 3.0;
    let (p, rep) = circle_rep(theta);
    let table = flat_spectrum(&p, &rep, 0, 6.0).unwrap();
    let a = theta / (2.0 * PI);
    let mut oracle: Vec<f64> = (-10i64..=10).map(|k| 4.0 * PI * PI * (k as f64 + a).powi(2)).filter(|&e| e < 4.0 * PI * PI * 36.0).collect();
    oracle.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let got: Vec<f64> = table.entries.iter().flat_map(|e| std::iter::repeat(e.eigenvalue).take(e.multiplicity as usize)).collect();
    assert_eq!(got.len(), oracle.len());
    for (g, o) in got.iter().zip(&oracle) {
        assert!((g - o).abs() < 1e-9 * o.max(1.0), "{g} vs {o}");
    }
    assert_eq!(table.kernel_dimension(), 0);
}

#[test]
fn pillowcase_multiplicities_count_lattice_pairs() {
    let (p, rep) = corpus::load("pillowcase", "trivial").unwrap();
    let table = flat_spectrum(&p, &rep, 0, 5.0).unwrap();
    let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
    for x in -6i64..=6 {
        for y in -6i64..=6 {
            counts.entry(x * x + y * y).and_modify(|c| *c += 1).or_insert(1);
        }
    }
    for e in &table.entries {
        let n = (e.eigenvalue / (4.0 * PI * PI)).round() as i64;
        // ±ξ pairs give one invariant function each; ξ = 0 gives the constants
        let expected = if n == 0 { 1 } else { counts[&n] / 2 };
        assert_eq!(e.multiplicity, expected, "shell |ξ|² = {n}");
    }
}

#[test]
fn betti_numbers_of_corpus() {
    let cases = [
        ("circle", "trivial", vec![1, 1]),
        ("circle", "theta-pi", vec![0, 0]),
        ("mirrored-interval", "trivial", vec![1, 0]),
        ("mirrored-interval", "sign", vec![0, 1]),
        ("pillowcase", "trivial", vec![1, 0, 1]),
        ("pillowcase", "sign", vec![0, 2, 0]),
        ("torus2", "trivial", vec![1, 2, 1]),
        ("torus3", "trivial", vec![1, 3, 3, 1]),
        ("torus3", "twisted", vec![0, 0, 0, 0]),
        ("t3-z2", "trivial", vec![1, 1, 1, 1]),
    ];
    for (case, rep, betti) in cases {
        let (p, r) = corpus::load(case, rep).unwrap();
        assert_eq!(betti_numbers(&p, &r).unwrap(), betti, "{case}/{rep}");
    }
}

#[test]
fn multiplicities_are_integral_on_corpus() {
    for case in corpus::CORPUS {
        for (r, _) in case.reps {
            let (p, rep) = corpus::load(case.name, r).unwrap();
            for t in spectra_for(&p, &rep, default_cutoff(0.05)).unwrap() {
                assert!(t.max_integrality_residual <= INTEGRALITY_TOL, "{}/{r} degree {}", case.name, t.degree);
            }
        }
    }
}

#[test]
fn mckean_singer_on_corpus() {
    for case in corpus::CORPUS {
        for (r, _) in case.reps {
            let (p, rep) = corpus::load(case.name, r).unwrap();
            let m = mckean_singer_check(&p, &rep, &T_GRID, None, 1e-12).unwrap();
            assert!(m.pass, "{}/{r}: {:?}", case.name, m);
            assert!(m.tail_bounds.iter().all(|&b| b < 1e-12));
        }
    }
}

#[test]
fn signed_trace_limit_is_the_strata_sum() {
    let (p, rep) = corpus::load("mirrored-interval", "trivial").unwrap();
    let g = gbc_limit_check(&p, &rep, &[0.05, 0.1, 0.2], 1e-10).unwrap();
    assert!(g.pass);
    assert_eq!(g.strata_sum_exact, "1");
}

#[test]
fn small_cutoff_is_reported() {
    let (p, rep) = corpus::load("torus2", "trivial").unwrap();
    let tables = spectra_for(&p, &rep, 1.0).unwrap();
    let err = heat_trace(&tables, 0.01, HeatWeight::Plain, Some(1e-12)).unwrap_err();
    assert!(matches!(err, Error::TruncationInsufficient { .. }));
}

#[test]
fn flat_profile_matches_exact_spectrum() {
    let theta = PI;
    let t = circle_numeric_spectrum(&MetricProfile::flat(), theta, 1, 61).unwrap();
    for (i, e) in t.entries.iter().enumerate() {
        // (k + 1/2)² in order 1/4, 1/4, 9/4, 9/4, ...
        let k = (i / 2) as f64;
        let exact = 4.0 * PI * PI * (k + 0.5).powi(2);
        assert!((e.eigenvalue - exact).abs() < 1e-8 * exact, "{i}: {} vs {exact}", e.eigenvalue);
    }
}

#[test]
fn curved_profile_obeys_weyl_law() {
    let prof = MetricProfile::new(1.0, vec![0.3], vec![0.1]).unwrap();
    let t = circle_numeric_spectrum(&prof, 1.0, 0, 201).unwrap();
    let l = prof.length();
    let lam = t.entries.last().unwrap().eigenvalue * 0.9;
    let n = counting_function(&t, lam) as f64;
    let weyl = l * lam.sqrt() / PI;
    assert!((n - weyl).abs() <= 2.0, "N = {n}, Weyl {weyl}");
}

#[test]
fn degree_zero_and_one_are_isospectral_on_the_circle() {
    let prof = MetricProfile::new(1.2, vec![0.2, 0.1], vec![0.3]).unwrap();
    let a = circle_numeric_spectrum(&prof, 2.0, 0, 121).unwrap();
    let b = circle_numeric_spectrum(&prof, 2.0, 1, 121).unwrap();
    for (x, y) in a.entries.iter().zip(&b.entries).take(30) {
        assert!((x.eigenvalue - y.eigenvalue).abs() < 1e-8 * x.eigenvalue.max(1.0));
    }
    let direct = circle_direct_eigenvalues(&prof, 2.0, 1, 121).unwrap();
    for (x, y) in a.entries.iter().zip(&direct).take(30) {
        assert!((x.eigenvalue - y).abs() < 1e-7 * y.max(1.0));
    }
}

#[test]
fn collocation_converges_spectrally() {
    // near-degenerate metric, so low N is visibly unresolved
    let prof = MetricProfile::new(1.0, vec![0.9], vec![]).unwrap();
    let reference = circle_numeric_spectrum_with(&prof, 1.0, 0, 301, None).unwrap();
    let err = |n: usize| {
        let t = circle_numeric_spectrum_with(&prof, 1.0, 0, n, None).unwrap();
        t.entries.iter().zip(&reference.entries).take(3).map(|(a, b)| (a.eigenvalue - b.eigenvalue).abs() / b.eigenvalue).fold(0.0, f64::max)
    };
    let (e1, e2) = (err(15), err(31));
    assert!(e1 / e2.max(1e-16) >= 10.0, "{e1} then {e2}");
}

#[test]
fn negative_metric_rejected() {
    assert!(matches!(MetricProfile::new(0.5, vec![0.7], vec![]), Err(Error::NonPositiveMetric(_))));
}

#[test]
fn cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (p, rep) = corpus::load("pillowcase", "half").unwrap();
    let tables = spectra_for(&p, &rep, 3.0).unwrap();
    let cache = SpectrumCache::new(dir.path());
    let key = spectrum_cache_key(&p, &rep, None, 3.0);
    assert!(cache.load(&key).is_none());
    cache.store(&key, &tables).unwrap();
    let back = cache.load(&key).unwrap();
    assert_eq!(back.len(), tables.len());
    for (a, b) in back.iter().zip(&tables) {
        assert_eq!(a.entries.len(), b.entries.len());
        for (x, y) in a.entries.iter().zip(&b.entries) {
            assert_eq!(x.eigenvalue, y.eigenvalue);
            assert_eq!(x.multiplicity, y.multiplicity);
        }
        for &t in &T_GRID {
            assert_eq!(heat_trace(std::slice::from_ref(a), t, HeatWeight::Plain, None).unwrap().value, heat_trace(std::slice::from_ref(b), t, HeatWeight::Plain, None).unwrap().value);
        }
    }
    assert_ne!(key, spectrum_cache_key(&p, &rep, None, 3.5));
    assert_ne!(key, spectrum_cache_key(&p, &HolonomyRep::trivial(&p, 1), None, 3.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn circle_heat_trace_matches_poisson_dual(theta in 0.0f64..(2.0 * PI), t in 0.05f64..5.0) {
        let (p, rep) = circle_rep(theta);
        let tables = spectra_for(&p, &rep, default_cutoff(0.05)).unwrap();
        let h = heat_trace(&tables[..1], t, HeatWeight::Plain, Some(1e-12)).unwrap();
        let oracle = theta_dual(t, theta / (2.0 * PI));
        prop_assert!((h.value - oracle).abs() < 1e-11 * oracle.max(1.0), "{} vs {}", h.value, oracle);
    }

    #[test]
    fn torus_multiplicities_are_integral(x in 0.0f64..1.0, y in 0.0f64..1.0, z in 0.0f64..1.0) {
        let p = corpus::presentation("torus3").unwrap();
        let ph = |t: f64| CMat::from_element(1, 1, cis(2.0 * PI * t));
        let rep = HolonomyRep::from_pairs(&p, 1, &[("t1", ph(x)), ("t2", ph(y)), ("t3", ph(z))]).unwrap();
        for t in spectra_for(&p, &rep, 2.5).unwrap() {
            prop_assert!(t.max_integrality_residual <= INTEGRALITY_TOL);
            // every shell of a generic twist on T³ carries binom(3, p) per mode
            let unit = [1u64, 3, 3, 1][t.degree];
            prop_assert!(t.entries.iter().all(|e| e.multiplicity % unit == 0));
        }
    }

    #[test]
    fn supertrace_is_constant_in_t(s1 in prop::bool::ANY, sr in prop::bool::ANY, t in 0.05f64..5.0) {
        let p = corpus::presentation("mirrored-interval").unwrap();
        let sign = |b: bool| CMat::from_element(1, 1, cis(if b { 0.0 } else { PI }));
        let rep = HolonomyRep::from_pairs(&p, 1, &[("t1", sign(s1)), ("r", sign(sr))]).unwrap();
        let tables = spectra_for(&p, &rep, default_cutoff(0.05)).unwrap();
        let chi = euler_characteristic(&betti_numbers(&p, &rep).unwrap()) as f64;
        let h = heat_trace(&tables, t, HeatWeight::Signed, None).unwrap();
        prop_assert!((h.value - chi).abs() < 1e-12);
    }
}
