//! Singular strata of flat crystallographic quotients.
//!
//! Every component of ΣZ for a global quotient is Z_Γ(γ)\Fix(γ) for a
//! conjugacy class [γ] of nontrivial elements with fixed points; Fix(γ) is an
//! affine subspace, hence connected, so classes and components coincide.

use std::collections::BTreeMap;

use num::{One, Zero};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::holonomy::HolonomyRep;
use crate::rational::*;

use super::presentation::{CheckedPresentation, Element, Kind};

#[derive(Debug, Clone, Serialize)]
pub struct FixedSet {
    #[serde(serialize_with = "ser_qvec")]
    pub base_point: QVec,
    #[serde(serialize_with = "ser_qvecs")]
    pub directions: Vec<QVec>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Stratum {
    pub index: usize,
    pub dimension: usize,
    pub multiplicity: u64,
    #[serde(serialize_with = "ser_q")]
    pub chi_orb: Q,
    #[serde(skip)]
    pub class_rep: Element,
    pub class_label: String,
    /// number of Γ-elements in the class modulo lattice translations
    pub class_size_mod_lattice: usize,
    pub fixed_set: FixedSet,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "ser_opt_c")]
    pub rho_trace: Option<Complex64>,
}

fn ser_q<S: serde::Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&q_to_string(x))
}

fn ser_qvec<S: serde::Serializer>(x: &QVec, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(x.iter().map(q_to_string))
}

fn ser_qvecs<S: serde::Serializer>(x: &[QVec], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(x.iter().map(|v| v.iter().map(q_to_string).collect::<Vec<_>>()))
}

fn ser_opt_c<S: serde::Serializer>(x: &Option<Complex64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(z) => s.collect_seq([z.re, z.im]),
        None => s.serialize_none(),
    }
}

/// Smith data of I − A, cached per coset.
struct CosetSmith {
    u: IMat,
    d: Vec<i64>,
    v: IMat,
    rank: usize,
}

fn coset_smith(a: &IMat) -> CosetSmith {
    let n = a.len();
    let m: IMat = (0..n).map(|i| (0..n).map(|j| i64::from(i == j) - a[i][j]).collect()).collect();
    let (u, dm, v) = smith_normal_form(&m);
    let d: Vec<i64> = (0..n).map(|i| dm[i][i]).collect();
    let rank = d.iter().take_while(|&&x| x != 0).count();
    CosetSmith { u, d, v, rank }
}

/// Canonical key of an element (A|s) with fixed points under conjugation by
/// translations: (coset, U s reduced mod d_j).
fn class_key(sm: &CosetSmith, coset: usize, s: &[Q]) -> Option<(usize, Vec<Q>)> {
    let w = imat_mul_qvec(&sm.u, s);
    for wj in &w[sm.rank..] {
        if !wj.is_zero() {
            return None;
        }
    }
    let red = (0..sm.rank)
        .map(|j| {
            let dj = q(sm.d[j]);
            &w[j] - &dj * (&w[j] / &dj).floor()
        })
        .collect();
    Some((coset, red))
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let nx = parent[y];
        parent[y] = r;
        y = nx;
    }
    r
}

pub fn enumerate_strata(p: &CheckedPresentation) -> Result<Vec<Stratum>> {
    if p.kind != Kind::FlatCrystallographic {
        return Err(Error::UnsupportedGroup("strata are enumerated for flat crystallographic quotients".into()));
    }
    let n = p.n;
    if n > 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    if p.cosets.len() > 48 {
        return Err(Error::PointGroupTooLarge(p.cosets.len()));
    }
    let smith: Vec<CosetSmith> = p.cosets.iter().map(|c| coset_smith(&c.linear)).collect();

    // translation-conjugacy classes with fixed points, per coset
    let mut keys: Vec<(usize, Vec<Q>)> = Vec::new();
    let mut reps: Vec<Element> = Vec::new();
    for (c, sm) in smith.iter().enumerate().skip(1) {
        let w0 = imat_mul_qvec(&sm.u, &p.cosets[c].shift);
        if !w0[sm.rank..].iter().all(|x| x.is_integer()) {
            continue;
        }
        let uinv = imat_inverse(&sm.u).expect("unimodular");
        let ranges: Vec<i64> = sm.d[..sm.rank].to_vec();
        let total: i64 = ranges.iter().product();
        for idx in 0..total {
            let mut rem = idx;
            let mut w = vec![Q::zero(); n];
            for j in 0..sm.rank {
                let a = rem % ranges[j];
                rem /= ranges[j];
                w[j] = frac(&w0[j]) + q(a);
            }
            let s = imat_mul_qvec(&uinv, &w);
            let g = Element { linear: p.cosets[c].linear.clone(), shift: s.clone(), inner: 0 };
            let key = class_key(sm, c, &s).expect("constructed with fixed points");
            if !keys.contains(&key) {
                keys.push(key);
                reps.push(g);
            }
        }
    }

    // merge under conjugation by coset representatives
    let mut parent: Vec<usize> = (0..keys.len()).collect();
    for i in 0..keys.len() {
        for b in 1..p.cosets.len() {
            let gb = p.coset_element(b);
            let h = p.conj(&gb, &reps[i]);
            let c = p.coset_index(&h.linear).expect("closed group");
            let key = class_key(&smith[c], c, &h.shift).expect("conjugate has fixed points");
            let j = keys.iter().position(|k| *k == key).expect("conjugate class enumerated");
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..keys.len() {
        let r = find(&mut parent, i);
        classes.entry(r).or_default().push(i);
    }

    let mut strata = vec![Stratum {
        index: 0,
        dimension: n,
        multiplicity: 1,
        chi_orb: Q::zero(),
        class_rep: p.identity(),
        class_label: "e".into(),
        class_size_mod_lattice: 1,
        fixed_set: FixedSet {
            base_point: vec![Q::zero(); n],
            directions: (0..n).map(|i| (0..n).map(|j| if i == j { Q::one() } else { Q::zero() }).collect()).collect(),
        },
        rho_trace: None,
    }];
    let mut singular = Vec::new();
    for members in classes.values() {
        let mut ms = members.clone();
        ms.sort_by(|a, b| keys[*a].cmp(&keys[*b]));
        let i = ms[0];
        let g = reps[i].clone();
        let c = keys[i].0;
        let sm = &smith[c];
        let fixed = fixed_set(sm, &g.shift);
        let dimension = n - sm.rank;
        let multiplicity = kernel_count(p, &g, &fixed);
        let label = format!(
            "{}|{}",
            p.cosets[c].name,
            g.shift.iter().map(q_to_string).collect::<Vec<_>>().join(",")
        );
        singular.push(Stratum {
            index: 0,
            dimension,
            multiplicity,
            chi_orb: if dimension == 0 { Q::one() } else { Q::zero() },
            class_rep: g,
            class_label: label,
            class_size_mod_lattice: ms.len(),
            fixed_set: fixed,
            rho_trace: None,
        });
    }
    singular.sort_by(|a, b| {
        (std::cmp::Reverse(a.dimension), &a.class_rep.linear, &a.class_rep.shift)
            .cmp(&(std::cmp::Reverse(b.dimension), &b.class_rep.linear, &b.class_rep.shift))
    });
    strata.extend(singular);
    for (i, s) in strata.iter_mut().enumerate() {
        s.index = i;
    }
    Ok(strata)
}

fn fixed_set(sm: &CosetSmith, s: &[Q]) -> FixedSet {
    let n = s.len();
    let w = imat_mul_qvec(&sm.u, s);
    let y: QVec = (0..n).map(|j| if j < sm.rank { &w[j] / q(sm.d[j]) } else { Q::zero() }).collect();
    let base_point = imat_mul_qvec(&sm.v, &y);
    let directions = (sm.rank..n).map(|j| sm.v.iter().map(|row| q(row[j])).collect()).collect();
    FixedSet { base_point, directions }
}

/// m = #{h ∈ Γ : h fixes Fix(γ) pointwise and commutes with γ}.
fn kernel_count(p: &CheckedPresentation, g: &Element, fixed: &FixedSet) -> u64 {
    let x0 = &fixed.base_point;
    let mut count = 0;
    for c in 0..p.cosets.len() {
        let b = &p.cosets[c].linear;
        if fixed.directions.iter().any(|d| imat_mul_qvec(b, d) != *d) {
            continue;
        }
        let shift = qvec_sub(x0, &imat_mul_qvec(b, x0));
        if !is_integer_vec(&qvec_sub(&shift, &p.cosets[c].shift)) {
            continue;
        }
        let h = Element { linear: b.clone(), shift, inner: 0 };
        if p.mul(&h, g) == p.mul(g, &h) {
            count += 1;
        }
    }
    count
}

/// χ_orb of a stratum together with its cross-check against a torus cover.
#[derive(Debug, Clone, Serialize)]
pub struct ChiOrb {
    #[serde(serialize_with = "ser_q")]
    pub value: Q,
    /// Euler characteristic of the torus cover T^k counted on its cube complex
    pub cover_euler: i64,
    /// order of the deck group when the stratum is Z₀ or a point
    pub deck_order: Option<usize>,
    pub consistent: bool,
}

/// Σ_j (−1)^j · #(j-cells) for the one-cube CW structure of T^k.
pub fn torus_cw_euler(k: usize) -> i64 {
    (0u32..(1 << k)).map(|mask| if mask.count_ones() % 2 == 0 { 1 } else { -1 }).sum()
}

pub fn chi_orb(p: &CheckedPresentation, s: &Stratum) -> ChiOrb {
    let cover_euler = torus_cw_euler(s.dimension);
    let deck_order = if s.index == 0 {
        Some(p.point_group_order())
    } else if s.dimension == 0 {
        Some(1)
    } else {
        None
    };
    let value = if s.dimension == 0 { Q::one() } else { Q::zero() };
    let cross = match deck_order {
        Some(d) => Q::new(cover_euler.into(), (d as i64).into()),
        None => q(cover_euler),
    };
    let consistent = if deck_order.is_some() { cross == value } else { cover_euler == 0 && value.is_zero() };
    ChiOrb { value, cover_euler, deck_order, consistent }
}

/// Fills in ρ_i = Tr ρ(γ_i).
pub fn with_traces(p: &CheckedPresentation, strata: &[Stratum], rep: &HolonomyRep) -> Vec<Stratum> {
    strata
        .iter()
        .map(|s| {
            let mut s = s.clone();
            s.rho_trace = Some(rep.trace(p, &s.class_rep));
            s
        })
        .collect()
}
