use std::f64::consts::PI;

use orbitorsion::corpus;
use orbitorsion::holonomy::HolonomyRep;
use orbitorsion::linalg::{cis, CMat};
use orbitorsion::orbicryst::CheckedPresentation;
use orbitorsion::spectra::{spectra_for, HeatWeight, MetricProfile};
use orbitorsion::torsion::*;
use orbitorsion::Error;
use proptest::prelude::*;

fn circle(theta: f64) -> (CheckedPresentation, HolonomyRep) {
    let p = corpus::presentation("circle").unwrap();
    let rep = HolonomyRep::from_pairs(&p, 1, &[("t1", CMat::from_element(1, 1, cis(theta)))]).unwrap();
    (p, rep)
}

fn closed_form(theta: f64) -> f64 {
    1.0 / (2.0 * (theta / 2.0).sin()).abs()
}

#[test]
fn twisted_circle_closed_form() {
    for (rep, theta) in [("theta-pi", PI), ("theta-2pi3", 2.0 * PI / 3.0)] {
        let (p, r) = corpus::load("circle", rep).unwrap();
        let z = flat_torsion(&p, &r).unwrap();
        assert!((z.torsion - closed_form(theta)).abs() < 1e-12, "{rep}: {}", z.torsion);
        assert!(z.error_budget.total() < 1e-12);
        assert_eq!(z.chi_prime_top, 0);
    }
}

#[test]
fn untwisted_circle_drops_the_zero_mode() {
    // det′ of −d²/dx² on R/Z is 1, so T = 1 with χ′ = −b₁ = −1
    let (p, r) = corpus::load("circle", "trivial").unwrap();
    let z = flat_torsion(&p, &r).unwrap();
    assert!((z.torsion - 1.0).abs() < 1e-12);
    assert_eq!(z.chi_prime_top, -1);
}

#[test]
fn rank_one_circles_reduce_to_twists() {
    // invariant eigenphases of u on the h-fixed part: {π} / {2π/3} / {2π/3, π} / {π/2}
    let cases = [
        ("rank-one-trivial", "theta-pi", closed_form(PI)),
        ("rank-one-trivial", "theta-2pi3", closed_form(2.0 * PI / 3.0)),
        ("rank-one-z2", "mixed", closed_form(2.0 * PI / 3.0) * closed_form(PI)),
        ("rank-one-z3", "swap", closed_form(PI / 2.0)),
    ];
    for (case, rep, expected) in cases {
        let (p, r) = corpus::load(case, rep).unwrap();
        let z = flat_torsion(&p, &r).unwrap();
        assert!((z.torsion - expected).abs() < 1e-12, "{case}/{rep}: {} vs {expected}", z.torsion);
    }
}

#[test]
fn even_dimensional_torsion_is_trivial() {
    for (case, rep) in [("torus2", "trivial"), ("torus2", "twisted"), ("pillowcase", "trivial"), ("pillowcase", "sign"), ("pillowcase", "half")] {
        let (p, r) = corpus::load(case, rep).unwrap();
        let z = flat_torsion(&p, &r).unwrap();
        assert!((z.torsion - 1.0).abs() < 1e-14, "{case}/{rep}: {}", z.torsion);
    }
}

#[test]
fn torus3_acyclic_twist() {
    let (p, r) = corpus::load("torus3", "twisted").unwrap();
    let z = flat_torsion(&p, &r).unwrap();
    assert!((z.torsion - 1.0).abs() < 1e-10, "{}", z.torsion);
}

#[test]
fn frozen_quotient_values() {
    // regression values of the Mellin computation on non-abelian quotients
    let cases = [("mirrored-interval", "dihedral", 1.0 / 3f64.sqrt()), ("t3-z2", "sign", 4.0)];
    for (case, rep, v) in cases {
        let (p, r) = corpus::load(case, rep).unwrap();
        let z = flat_torsion(&p, &r).unwrap();
        assert!((z.torsion - v).abs() < 1e-10, "{case}/{rep}: {}", z.torsion);
    }
}

#[test]
fn graded_determinant_of_twisted_circle() {
    let theta = 2.0 * PI / 3.0;
    let (p, r) = circle(theta);
    let tables = spectra_for(&p, &r, TORSION_CUTOFF).unwrap();
    let small = PoissonSmallTime::for_presentation(&p, &r, HeatWeight::NSigned).unwrap();
    for sigma in [0.01f64, 0.3, 1.0, 4.0] {
        // det(σ + Δ) on R/Z with holonomy e^{iθ} is 2 cosh √σ − 2 cos θ
        let oracle = -(2.0 * sigma.sqrt().cosh() - 2.0 * theta.cos()).ln();
        let got = log_graded_determinant(&tables, &small, sigma).unwrap();
        assert!((got - oracle).abs() < 1e-10, "σ = {sigma}: {got} vs {oracle}");
    }
    let (order, lead) = graded_leading(&tables, &small).unwrap();
    assert_eq!(order, 0);
    assert!((lead - closed_form(theta).powi(2)).abs() < 1e-8);
    let lam = tables[1].entries[0].eigenvalue;
    assert!(matches!(log_graded_determinant(&tables, &small, -lam), Err(Error::SigmaAtPole(_))));
}

#[test]
fn graded_leading_order_is_chi_prime() {
    for (case, rep) in [("circle", "trivial"), ("mirrored-interval", "sign"), ("t3-z2", "trivial"), ("rank-one-z2", "mixed")] {
        let (p, r) = corpus::load(case, rep).unwrap();
        let tables = spectra_for(&p, &r, TORSION_CUTOFF).unwrap();
        let small = PoissonSmallTime::for_presentation(&p, &r, HeatWeight::NSigned).unwrap();
        let t = flat_torsion(&p, &r).unwrap();
        let (order, lead) = graded_leading(&tables, &small).unwrap();
        assert_eq!(order, t.chi_prime_top, "{case}/{rep}");
        assert!((lead - t.torsion.powi(2)).abs() < 1e-7 * lead, "{case}/{rep}: {lead} vs {}", t.torsion.powi(2));
    }
}

#[test]
fn kernel_and_budget_are_enforced() {
    let (p, r) = corpus::load("circle", "trivial").unwrap();
    let tables = spectra_for(&p, &r, TORSION_CUTOFF).unwrap();
    let small = PoissonSmallTime::for_presentation(&p, &r, HeatWeight::NSigned).unwrap();
    assert!(matches!(zeta_determinant_with(&tables, &small, Some(&[0, 0]), None), Err(Error::KernelMismatch(_))));
    assert!(zeta_determinant_with(&tables, &small, Some(&[1, 1]), None).is_ok());
    assert!(matches!(spectra_for(&p, &r, 0.3), Err(Error::CutoffTooSmall(_))));
    // a coarse cutoff leaves a larger truncation tail than the default one
    let fine = zeta_determinant_with(&tables, &small, None, None).unwrap().error_budget.total();
    let coarse = spectra_for(&p, &r, 1.2).unwrap();
    let rough = zeta_determinant_with(&coarse, &small, None, None).unwrap().error_budget.total();
    assert!(rough > fine, "{rough} vs {fine}");
    let b = 0.5 * (rough + fine);
    assert!(zeta_determinant_with(&tables, &small, None, Some(b)).is_ok());
    assert!(matches!(zeta_determinant_with(&coarse, &small, None, Some(b)), Err(Error::BudgetExceeded(_))));
}

#[test]
fn anomaly_coefficient_is_euler_characteristic() {
    let cases = [("pillowcase", "trivial", "2"), ("pillowcase", "sign", "-2"), ("mirrored-interval", "trivial", "1"), ("mirrored-interval", "sign", "-1"), ("t3-z2", "sign", "0")];
    for (case, rep, chi) in cases {
        let (p, r) = corpus::load(case, rep).unwrap();
        let a = anomaly_scale_check(&p, &r, 3.0).unwrap();
        assert!(a.pass, "{case}/{rep}: {a:?}");
        assert_eq!(a.lhs, chi);
        assert_eq!(a.rhs, chi);
    }
}

#[test]
fn ray_singer_bookkeeping() {
    let (p, r) = corpus::load("torus2", "trivial").unwrap();
    let m = ray_singer_metric(&p, &r, 2.0).unwrap();
    assert!(m.bookkeeping_residual() < 1e-12);
    // harmonic forms of T²: 1, dx, dy, dx∧dy
    assert_eq!((0..=2).map(|d| harmonic_basis(&p, &r, d).ncols()).collect::<Vec<_>>(), vec![1, 2, 1]);
}

#[test]
fn curved_circle_small_truncation() {
    let prof = MetricProfile::new(1.0, vec![0.3], vec![]).unwrap();
    let c = curved_circle_torsion(&prof, PI, 96).unwrap();
    assert!((c.torsion - 0.5).abs() < 1e-9, "{}", c.torsion);
    assert!((c.product_torsion - 0.5).abs() < 1e-4, "{}", c.product_torsion);
    assert!(matches!(curved_circle_torsion(&prof, PI, 8), Err(Error::TooFewModes(_))));
}

#[test]
fn metric_invariance_needs_a_twist() {
    let err = metric_invariance_check(&[MetricProfile::flat()], 0.0, 64, 1e-6).unwrap_err();
    assert!(matches!(err, Error::KernelMismatch(_)));
}

#[test]
fn metric_invariance_small() {
    let profiles = standard_profiles();
    let r = metric_invariance_check(&profiles, 2.0 * PI / 3.0, 64, 1e-6).unwrap();
    assert!(r.pass, "{}", r.max_pairwise_deviation);
    assert!((r.flat_value - closed_form(2.0 * PI / 3.0)).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn circle_torsion_times_chord_is_one(theta in 0.05f64..(2.0 * PI - 0.05)) {
        let (p, r) = circle(theta);
        let z = flat_torsion(&p, &r).unwrap();
        prop_assert!((z.torsion * 2.0 * (theta / 2.0).sin().abs() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn torus2_twists_have_unit_torsion(x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let p = corpus::presentation("torus2").unwrap();
        let ph = |t: f64| CMat::from_element(1, 1, cis(2.0 * PI * t));
        let r = HolonomyRep::from_pairs(&p, 1, &[("t1", ph(x)), ("t2", ph(y))]).unwrap();
        prop_assert!((flat_torsion(&p, &r).unwrap().torsion - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rescaling_leaves_torsion_unchanged(c in 0.1f64..10.0) {
        let (p, r) = corpus::load("mirrored-interval", "dihedral").unwrap();
        let a = anomaly_scale_check(&p, &r, c).unwrap();
        prop_assert!(a.torsion_log_ratio.abs() < 1e-12);
        prop_assert!(a.pass || (c - 1.0).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn torus3_acyclic_twists(x in 0.1f64..0.9, y in 0.0f64..1.0, z in 0.0f64..1.0) {
        let p = corpus::presentation("torus3").unwrap();
        let ph = |t: f64| CMat::from_element(1, 1, cis(2.0 * PI * t));
        let r = HolonomyRep::from_pairs(&p, 1, &[("t1", ph(x)), ("t2", ph(y)), ("t3", ph(z))]).unwrap();
        prop_assert!((flat_torsion(&p, &r).unwrap().torsion - 1.0).abs() < 1e-10);
    }
}
