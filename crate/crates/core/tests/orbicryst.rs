use num::{One, Zero};
use orbitorsion::corpus;
use orbitorsion::holonomy::HolonomyRep;
use orbitorsion::io::parse_presentation;
use orbitorsion::linalg::{self, c, CMat};
use orbitorsion::orbicryst::*;
use orbitorsion::rational::{q, qf, Q};
use orbitorsion::Error;
use proptest::prelude::*;

fn diag_gram(a: Q, b: Q) -> Vec<Vec<Q>> {
    vec![vec![a, Q::zero()], vec![Q::zero(), b]]
}

fn pillowcase_with_gram(a: Q, b: Q) -> CheckedPresentation {
    let id = vec![vec![q(1), q(0)], vec![q(0), q(1)]];
    let els = vec![pg("e", vec![vec![1, 0], vec![0, 1]], vec![q(0), q(0)]), pg("r", vec![vec![-1, 0], vec![0, -1]], vec![q(0), q(0)])];
    validate_presentation(&QuotientPresentation::flat(id, diag_gram(a, b), els)).unwrap()
}

fn scalar(x: f64) -> CMat {
    CMat::from_element(1, 1, c(x, 0.0))
}

#[test]
fn pillowcase_has_four_cone_points() {
    let p = corpus::presentation("pillowcase").unwrap();
    let s = enumerate_strata(&p).unwrap();
    assert_eq!(s.len(), 5);
    assert_eq!((s[0].index, s[0].dimension, s[0].multiplicity), (0, 2, 1));
    for st in &s[1..] {
        assert_eq!(st.dimension, 0);
        assert_eq!(st.multiplicity, 2);
        assert_eq!(chi_orb(&p, st).value, Q::one());
    }
    assert!(chi_orb(&p, &s[0]).value.is_zero());
}

#[test]
fn gauss_bonnet_corpus_values() {
    // (case, rep, χ_top) from the Betti numbers of the quotients
    let expected = [
        ("circle", "trivial", 0),
        ("circle", "theta-pi", 0),
        ("mirrored-interval", "trivial", 1),
        ("mirrored-interval", "sign", -1),
        ("mirrored-interval", "dihedral", 0),
        ("pillowcase", "trivial", 2),
        ("pillowcase", "sign", -2),
        ("pillowcase", "half", 0),
        ("torus2", "trivial", 0),
        ("torus3", "twisted", 0),
        ("t3-z2", "trivial", 0),
        ("t3-z2", "sign", 0),
        ("rank-one-z2", "mixed", 0),
    ];
    for (case, rep, chi) in expected {
        let (p, r) = corpus::load(case, rep).unwrap();
        let g = gauss_bonnet_check(&p, &r).unwrap();
        assert_eq!(g.lhs, chi, "{case}/{rep}");
        assert_eq!(g.rhs, q(chi), "{case}/{rep}");
        assert!(g.pass && g.rhs_exact, "{case}/{rep}");
    }
}

#[test]
fn t3_z2_has_four_fixed_circles() {
    let p = corpus::presentation("t3-z2").unwrap();
    let s = enumerate_strata(&p).unwrap();
    let lines: Vec<_> = s.iter().filter(|x| x.index > 0).collect();
    assert_eq!(lines.len(), 4);
    for l in lines {
        assert_eq!(l.dimension, 1);
        assert_eq!(l.multiplicity, 2);
        assert_eq!(l.fixed_set.directions.len(), 1);
        let ch = chi_orb(&p, l);
        assert!(ch.value.is_zero() && ch.consistent);
    }
}

#[test]
fn torus_cell_counts() {
    assert_eq!(torus_cw_euler(0), 1);
    for k in 1..5 {
        assert_eq!(torus_cw_euler(k), 0);
    }
}

#[test]
fn missing_identity_is_rejected() {
    let bad = "kind = \"flat\"\ndimension = 1\nlattice = [[\"1\"]]\ngram = [[\"1\"]]\n[[elements]]\nname = \"r\"\nlinear = [[-1]]\nshift = [\"1/3\"]\n";
    let err = validate_presentation(&parse_presentation(bad).unwrap()).unwrap_err();
    assert!(matches!(err, Error::NonClosedGroup(_)), "{err}");
    assert!(err.is_validation());
}

#[test]
fn non_closed_products_are_rejected() {
    // a rotation by π/2 alone does not close under composition with itself
    let bad = "kind = \"flat\"\ndimension = 2\nlattice = [[\"1\",\"0\"],[\"0\",\"1\"]]\ngram = [[\"1\",\"0\"],[\"0\",\"1\"]]\n\
        [[elements]]\nname = \"e\"\nlinear = [[1,0],[0,1]]\nshift = [\"0\",\"0\"]\n\
        [[elements]]\nname = \"q\"\nlinear = [[0,-1],[1,0]]\nshift = [\"0\",\"0\"]\n";
    let err = validate_presentation(&parse_presentation(bad).unwrap()).unwrap_err();
    assert!(matches!(err, Error::NonClosedGroup(_)), "{err}");
}

#[test]
fn non_isometric_action_is_rejected() {
    let id = vec![vec![q(1), q(0)], vec![q(0), q(1)]];
    let els = vec![pg("e", vec![vec![1, 0], vec![0, 1]], vec![q(0), q(0)]), pg("s", vec![vec![0, 1], vec![1, 0]], vec![q(0), q(0)])];
    let err = validate_presentation(&QuotientPresentation::flat(id, diag_gram(q(1), q(2)), els)).unwrap_err();
    assert!(matches!(err, Error::NonOrthogonalAction(_)), "{err}");
}

#[test]
fn degenerate_lattice_is_rejected() {
    let basis = vec![vec![q(1), q(2)], vec![q(2), q(4)]];
    let els = vec![pg("e", vec![vec![1, 0], vec![0, 1]], vec![q(0), q(0)])];
    let err = validate_presentation(&QuotientPresentation::flat(basis, diag_gram(q(1), q(1)), els)).unwrap_err();
    assert!(matches!(err, Error::DegenerateLattice(_)), "{err}");
}

#[test]
fn presentation_hash_ignores_element_order() {
    let id = vec![vec![q(1), q(0)], vec![q(0), q(1)]];
    let e = pg("e", vec![vec![1, 0], vec![0, 1]], vec![q(0), q(0)]);
    let r = pg("r", vec![vec![-1, 0], vec![0, -1]], vec![q(0), q(0)]);
    let a = validate_presentation(&QuotientPresentation::flat(id.clone(), diag_gram(q(1), q(1)), vec![e.clone(), r.clone()])).unwrap();
    let b = validate_presentation(&QuotientPresentation::flat(id, diag_gram(q(1), q(1)), vec![r, e])).unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_ne!(a.hash(), pillowcase_with_gram(q(1), q(2)).hash());
}

#[test]
fn group_law_on_pillowcase() {
    let p = corpus::presentation("pillowcase").unwrap();
    let r = p.generator_element("r").unwrap();
    let t = p.translation(&[1, 0]);
    assert!(p.is_identity(&p.mul(&r, &r)));
    // r t r⁻¹ = t⁻¹
    assert_eq!(p.conj(&r, &t), p.inv(&t));
    for rel in p.relators() {
        assert!(p.is_identity(&p.word_element(&rel.word).unwrap()), "{}", rel.label);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pillowcase_sign_characters(s1 in prop::bool::ANY, s2 in prop::bool::ANY, sr in prop::bool::ANY) {
        let sign = |b: bool| if b { 1.0 } else { -1.0 };
        let p = corpus::presentation("pillowcase").unwrap();
        let rep = HolonomyRep::from_pairs(&p, 1, &[("t1", scalar(sign(s1))), ("t2", scalar(sign(s2))), ("r", scalar(sign(sr)))]).unwrap();
        let g = gauss_bonnet_check(&p, &rep).unwrap();
        // cone points r, t1 r, t2 r, t1 t2 r, each weighted 1/2
        let oracle = sign(sr) * (1.0 + sign(s1)) * (1.0 + sign(s2)) / 2.0;
        prop_assert!(g.pass);
        prop_assert_eq!(g.lhs as f64, oracle);
        prop_assert_eq!(g.rhs, q(oracle as i64));
    }

    #[test]
    fn strata_do_not_depend_on_the_metric(a in 1i64..20, b in 1i64..20, d in 1i64..7) {
        let p = pillowcase_with_gram(qf(a, d), qf(b, d));
        let s = enumerate_strata(&p).unwrap();
        prop_assert_eq!(s.len(), 5);
        prop_assert_eq!(s[0].index, 0);
        for (i, st) in s.iter().enumerate() {
            prop_assert_eq!(st.index, i);
            prop_assert!(chi_orb(&p, st).consistent);
        }
        // strata after the main one are ordered by non-increasing dimension
        prop_assert!(s[1..].windows(2).all(|w| w[0].dimension >= w[1].dimension));
        let g = gauss_bonnet_check(&p, &HolonomyRep::trivial(&p, 1)).unwrap();
        prop_assert_eq!(g.rhs, q(2));
    }

    #[test]
    fn torus_characters_have_zero_euler_characteristic(x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let p = corpus::presentation("torus2").unwrap();
        let ph = |t: f64| CMat::from_element(1, 1, linalg::cis(2.0 * std::f64::consts::PI * t));
        let rep = HolonomyRep::from_pairs(&p, 1, &[("t1", ph(x)), ("t2", ph(y))]).unwrap();
        let g = gauss_bonnet_check(&p, &rep).unwrap();
        prop_assert_eq!(g.lhs, 0);
        prop_assert!(g.pass);
    }
}
