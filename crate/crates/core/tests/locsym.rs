use std::f64::consts::PI;

use orbitorsion::corpus;
use orbitorsion::holonomy::HolonomyRep;
use orbitorsion::linalg::{cis, CMat};
use orbitorsion::locsym::*;
use orbitorsion::orbicryst::CheckedPresentation;
use orbitorsion::spectra::HeatWeight;
use orbitorsion::Error;
use proptest::prelude::*;

fn circle(theta: f64) -> (CheckedPresentation, HolonomyRep) {
    let p = corpus::presentation("circle").unwrap();
    let rep = HolonomyRep::from_pairs(&p, 1, &[("t1", CMat::from_element(1, 1, cis(theta)))]).unwrap();
    (p, rep)
}

#[test]
fn families() {
    assert_eq!(group_family(&corpus::presentation("torus3").unwrap()).unwrap(), GroupFamily::Euclidean(3));
    assert_eq!(group_family(&corpus::presentation("rank-one-z2").unwrap()).unwrap(), GroupFamily::RankOne);
    for name in ["pillowcase", "mirrored-interval", "t3-z2"] {
        let p = corpus::presentation(name).unwrap();
        assert!(matches!(group_family(&p), Err(Error::UnsupportedGroup(_))), "{name}");
    }
}

#[test]
fn circle_classes() {
    let p = corpus::presentation("circle").unwrap();
    let classes = enumerate_classes(&p, 10.0).unwrap();
    assert_eq!(classes.len(), 21);
    assert_eq!(classes.iter().filter(|c| c.elliptic).count(), 1);
    for c in classes.iter().filter(|c| !c.elliptic) {
        assert!(c.cross_check(), "{}", c.rep_word);
        assert!((c.zeta_weight() - 1.0 / c.length).abs() < 1e-14, "{}", c.rep_word);
    }
}

#[test]
fn rank_one_z2_classes() {
    let p = corpus::presentation("rank-one-z2").unwrap();
    let classes = enumerate_classes(&p, default_l_max(&p)).unwrap();
    assert_eq!(classes.len(), 42);
    assert_eq!(classes.iter().filter(|c| c.elliptic).count(), 2);
    assert!(classes.iter().all(|c| c.cross_check()));
    assert!(classes.iter().all(|c| c.length <= default_l_max(&p) + 1e-12));
}

#[test]
fn torus_classes_have_zero_weight() {
    let p = corpus::presentation("torus3").unwrap();
    let classes = enumerate_classes(&p, 2.5).unwrap();
    // lattice points with a² + b² + 3c²/2 ≤ 6.25
    let count = (-2i32..=2)
        .flat_map(|a| (-2i32..=2).flat_map(move |b| (-2i32..=2).map(move |c| (a * a + b * b) as f64 + 1.5 * (c * c) as f64)))
        .filter(|&n| n <= 6.25)
        .count();
    assert_eq!(classes.len(), count);
    assert!(classes.iter().all(|c| c.cross_check() && c.zeta_weight() == 0.0));
}

#[test]
fn classes_csv_has_a_row_per_class() {
    let p = corpus::presentation("rank-one-z3").unwrap();
    let classes = enumerate_classes(&p, 5.0).unwrap();
    let mut buf = Vec::new();
    write_classes_csv(&classes, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), classes.len() + 1);
}

#[test]
fn selberg_on_corpus() {
    let grid = [0.05, 0.1, 0.5, 1.0, 2.0, 5.0];
    for (case, rep) in [("circle", "theta-pi"), ("torus2", "twisted"), ("torus3", "trivial"), ("rank-one-z2", "mixed"), ("rank-one-z3", "swap")] {
        let (p, r) = corpus::load(case, rep).unwrap();
        let s = selberg_trace_check(&p, &r, &grid, 1e-8).unwrap();
        assert!(s.pass, "{case}/{rep}: {}", s.max_deviation);
    }
}

#[test]
fn geometric_heat_rejects_bad_time() {
    let (p, r) = corpus::load("circle", "trivial").unwrap();
    assert!(geometric_heat_side(&p, &r, 0.0, HeatWeight::Plain).is_err());
    assert!(geometric_heat_side(&p, &r, f64::NAN, HeatWeight::Plain).is_err());
}

/// −Σ_{k≠0} e^{ikθ − σ|k|}/|k| summed directly.
fn circle_series(theta: f64, sigma: f64) -> f64 {
    -(1..20000).map(|k| 2.0 * (k as f64 * theta).cos() * (-sigma * k as f64).exp() / k as f64).sum::<f64>()
}

#[test]
fn ruelle_circle_matches_class_series() {
    for theta in [PI, 2.0 * PI / 3.0, 0.4] {
        let (p, r) = circle(theta);
        let z = ruelle_zeta(&p, &r).unwrap();
        assert_eq!(z.exponent, -1);
        for sigma in [0.05, 0.5, 2.0] {
            // the series is Ξ = log R with the sign of the closed form
            let oracle = -circle_series(theta, sigma);
            assert!((z.log_value(sigma) - oracle).abs() < 1e-8, "θ = {theta}, σ = {sigma}");
        }
    }
}

#[test]
fn ruelle_partial_sums_within_tail() {
    let (p, r) = corpus::load("rank-one-z2", "mixed").unwrap();
    let z = ruelle_zeta(&p, &r).unwrap();
    for sigma in [0.5, 1.0, 3.0] {
        let (s, tail) = z.partial_sum(sigma, z.l_max);
        assert!((s - z.log_value(sigma)).abs() <= tail + 1e-12, "σ = {sigma}");
    }
}

#[test]
fn fried_rank_one() {
    let grid = DEFAULT_SIGMA_GRID;
    for (case, rep) in [("circle", "theta-pi"), ("circle", "theta-2pi3"), ("rank-one-z2", "mixed"), ("rank-one-z3", "swap")] {
        let (p, r) = corpus::load(case, rep).unwrap();
        let f = fried_check(&p, &r, &grid, 1e-6, 1e-8).unwrap();
        assert!(f.pass, "{case}/{rep}: {f:?}");
        assert!(f.acyclic);
        assert!(f.relative_error_at_zero.unwrap() < 1e-12);
    }
    let (p, r) = corpus::load("rank-one-z2", "mixed").unwrap();
    let f = fried_check(&p, &r, &grid, 1e-6, 1e-8).unwrap();
    assert!(f.elliptic_term.abs() > 0.5, "{}", f.elliptic_term);
}

#[test]
fn fried_non_acyclic_circle_orders() {
    let (p, r) = corpus::load("circle", "trivial").unwrap();
    let f = fried_check(&p, &r, &DEFAULT_SIGMA_GRID, 1e-6, 1e-8).unwrap();
    assert!(!f.acyclic);
    assert_eq!(f.order_at_zero, f.graded_order);
    assert!(f.pass);
}

#[test]
fn torus3_ruelle_is_one() {
    for rep in ["trivial", "twisted"] {
        let (p, r) = corpus::load("torus3", rep).unwrap();
        let z = ruelle_zeta(&p, &r).unwrap();
        assert!(z.constant_one);
        assert_eq!(z.value(0.0), 1.0);
        assert_eq!(z.value(0.7), 1.0);
    }
    let (p, r) = corpus::load("torus3", "twisted").unwrap();
    let f = fried_check(&p, &r, &DEFAULT_SIGMA_GRID, 1e-6, 1e-8).unwrap();
    assert!(f.pass && f.constant_one);
}

#[test]
fn even_dimension_is_rejected() {
    let (p, r) = corpus::load("torus2", "trivial").unwrap();
    assert!(matches!(ruelle_zeta(&p, &r), Err(Error::EvenDimension(2))));
    let (p, r) = corpus::load("pillowcase", "trivial").unwrap();
    assert!(ruelle_zeta(&p, &r).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn selberg_twisted_circle(theta in 0.0f64..(2.0 * PI), t in 0.05f64..5.0) {
        let (p, r) = circle(theta);
        let s = selberg_trace_check(&p, &r, &[t], 1e-8).unwrap();
        prop_assert!(s.pass, "{}", s.max_deviation);
    }

    #[test]
    fn ruelle_at_zero_is_torsion_squared(theta in 0.1f64..(2.0 * PI - 0.1)) {
        let (p, r) = circle(theta);
        let z = ruelle_zeta(&p, &r).unwrap();
        prop_assert!((z.value(0.0) / (z.torsion * z.torsion) - 1.0).abs() < 1e-9);
    }
}
