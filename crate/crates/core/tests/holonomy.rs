use std::f64::consts::{PI, TAU};

use orbitorsion::corpus;
use orbitorsion::holonomy::*;
use orbitorsion::linalg::{self, c, cis, CMat};
use orbitorsion::orbicryst::CheckedPresentation;
use orbitorsion::Error;
use proptest::prelude::*;

fn phase(t: f64) -> CMat {
    CMat::from_element(1, 1, cis(2.0 * PI * t))
}

fn round_trip(p: &CheckedPresentation, rep: &HolonomyRep) {
    let b = bundle_from_rep(p, rep).unwrap();
    assert!(b.cocycle_residual(p) < 1e-10);
    let back = holonomy(p, &b).unwrap();
    assert!(reps_equivalent(p, rep, &back, DEFAULT_WORD_BUDGET));
    let b2 = bundle_from_rep(p, &back).unwrap();
    assert!(bundle_isomorphism(p, &b, &b2).unwrap().is_some());
}

#[test]
fn corpus_round_trips() {
    for case in corpus::CORPUS {
        for (r, _) in case.reps {
            let (p, rep) = corpus::load(case.name, r).unwrap();
            round_trip(&p, &rep);
        }
    }
}

#[test]
fn circle_holonomy_is_the_twist() {
    let (p, rep) = corpus::load("circle", "theta-2pi3").unwrap();
    let b = bundle_from_rep(&p, &rep).unwrap();
    let h = holonomy(&p, &b).unwrap();
    let z = h.generator("t1")[(0, 0)];
    assert!((z - cis(2.0 * PI / 3.0)).norm() < 1e-12);
    // no flat sections for a nontrivial twist, one for the trivial bundle
    assert_eq!(b.global_section_dimension(), 0);
    let (p, rep) = corpus::load("circle", "trivial").unwrap();
    assert_eq!(bundle_from_rep(&p, &rep).unwrap().global_section_dimension(), 1);
}

#[test]
fn pillowcase_sections_match_betti_zero() {
    let (p, rep) = corpus::load("pillowcase", "trivial").unwrap();
    assert_eq!(bundle_from_rep(&p, &rep).unwrap().global_section_dimension(), 1);
    let (p, rep) = corpus::load("pillowcase", "sign").unwrap();
    assert_eq!(bundle_from_rep(&p, &rep).unwrap().global_section_dimension(), 0);
}

#[test]
fn inequivalent_twists_are_distinguished() {
    let (p, a) = corpus::load("circle", "theta-pi").unwrap();
    let b = corpus::rep(&p, "circle", "theta-2pi3").unwrap();
    assert!(!reps_equivalent(&p, &a, &b, DEFAULT_WORD_BUDGET));
    let ba = bundle_from_rep(&p, &a).unwrap();
    let bb = bundle_from_rep(&p, &b).unwrap();
    assert!(bundle_isomorphism(&p, &ba, &bb).unwrap().is_none());
}

#[test]
fn relation_violations_are_rejected() {
    let p = corpus::presentation("pillowcase").unwrap();
    // r t1 r⁻¹ = t1⁻¹ fails for a non-real phase with r trivial
    let err = HolonomyRep::validated(
        &p,
        1,
        [("t1".to_string(), phase(0.25)), ("t2".to_string(), phase(0.0)), ("r".to_string(), phase(0.0))].into(),
        1e-10,
    )
    .unwrap_err();
    assert!(matches!(err, Error::RelationViolation { .. }), "{err}");
}

#[test]
fn non_commuting_lattice_images_fail_relations() {
    let p = corpus::presentation("torus2").unwrap();
    let a = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    let b = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
    assert!(HolonomyRep::validated(&p, 2, [("t1".to_string(), a), ("t2".to_string(), b)].into(), 1e-10).is_err());
}

#[test]
fn loops_must_close() {
    let (p, rep) = corpus::load("circle", "theta-pi").unwrap();
    let b = bundle_from_rep(&p, &rep).unwrap();
    let (chart, x0) = b.base(&p);
    let mut open = GPath::constant(&p, chart, x0.clone());
    open.end = vec![x0[0].clone() + orbitorsion::rational::qf(1, 100)];
    let err = holonomy_of(&p, &b, &[("t1".to_string(), open)]).unwrap_err();
    assert!(matches!(err, Error::NotALoop(_)), "{err}");
}

#[test]
fn cocycle_json_lists_charts_and_arrows() {
    let (p, rep) = corpus::load("mirrored-interval", "dihedral").unwrap();
    let b = bundle_from_rep(&p, &rep).unwrap();
    let j = b.to_json();
    assert_eq!(j["charts"].as_array().unwrap().len(), b.atlas.len());
    assert_eq!(j["arrows"].as_array().unwrap().len(), b.arrows.len());
}

fn random_unitary(a: f64, b: f64, phi: f64) -> CMat {
    // exp of a skew-Hermitian 2×2 matrix via its eigen-decomposition
    let u = CMat::from_row_slice(2, 2, &[c(phi.cos(), 0.0), cis(a) * (-phi.sin()), cis(-a) * phi.sin(), c(phi.cos(), 0.0)]);
    let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![cis(b), cis(-0.7 * b)]));
    &u * d * u.adjoint()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn circle_round_trip_rank_two(a in 0.0f64..TAU, b in 0.0f64..TAU, phi in 0.0f64..1.5) {
        let p = corpus::presentation("circle").unwrap();
        let rep = HolonomyRep::from_pairs(&p, 2, &[("t1", random_unitary(a, b, phi))]).unwrap();
        round_trip(&p, &rep);
    }

    #[test]
    fn transport_is_invariant_under_equivalence_moves(x in 0.0f64..1.0, y in 0.0f64..1.0, cut in 0usize..8, sr in prop::bool::ANY) {
        let p = corpus::presentation("pillowcase").unwrap();
        let s = CMat::from_element(1, 1, c(if sr { 1.0 } else { -1.0 }, 0.0));
        let half = |t: f64| phase(if t < 0.5 { 0.0 } else { 0.5 });
        let rep = HolonomyRep::from_pairs(&p, 1, &[("t1", half(x)), ("t2", half(y)), ("r", s)]).unwrap();
        let b = bundle_from_rep(&p, &rep).unwrap();
        for (name, lp) in generator_loops(&p, &b).unwrap() {
            let base = parallel_transport(&p, &b, &lp).unwrap();
            let i = cut % lp.segments.len();
            let sub = lp.subdivide(&p, i);
            let moved = parallel_transport(&p, &b, &sub).unwrap();
            prop_assert!(linalg::max_abs(&(&moved - &base)) < 1e-12, "subdivision changed {}", name);
            let chart = sub.segments[i].chart;
            for h in b.atlas.charts[chart].local_group.clone() {
                let conj = sub.conjugate_segment(&p, i, &h, chart);
                let m = parallel_transport(&p, &b, &conj).unwrap();
                prop_assert!(linalg::max_abs(&(&m - &base)) < 1e-12, "conjugation changed {}", name);
            }
        }
    }

    #[test]
    fn regauging_preserves_holonomy_class(x in 0.0f64..1.0, g in 0.1f64..3.0) {
        let p = corpus::presentation("torus2").unwrap();
        let rep = HolonomyRep::from_pairs(&p, 1, &[("t1", phase(x)), ("t2", phase(0.3))]).unwrap();
        let b = bundle_from_rep(&p, &rep).unwrap();
        let gauges: Vec<CMat> = (0..b.atlas.len()).map(|a| CMat::from_element(1, 1, cis(g * a as f64) * (1.0 + 0.1 * a as f64))).collect();
        let b2 = b.regauge(&gauges).unwrap();
        prop_assert!(b2.cocycle_residual(&p) < 1e-10);
        let h2 = holonomy(&p, &b2).unwrap();
        prop_assert!(reps_equivalent(&p, &rep, &h2, DEFAULT_WORD_BUDGET));
        prop_assert!(bundle_isomorphism(&p, &b, &b2).unwrap().is_some());
    }

    #[test]
    fn conjugate_reps_are_equivalent(a in 0.0f64..TAU, b in 0.0f64..TAU, s in 0.1f64..2.0) {
        let p = corpus::presentation("circle").unwrap();
        let rep = HolonomyRep::from_pairs(&p, 2, &[("t1", random_unitary(a, b, 0.4))]).unwrap();
        let m = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(s, 0.3), c(0.0, 0.0), c(2.0, 0.0)]);
        let conj = rep.conjugated(&p, &m).unwrap();
        prop_assert!(reps_equivalent(&p, &rep, &conj, DEFAULT_WORD_BUDGET));
    }
}
