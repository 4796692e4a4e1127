//! Quotient presentations Γ\X and the group arithmetic of Γ.
//!
//! Flat crystallographic groups are stored in lattice coordinates, so the
//! translation lattice is always Zⁿ and point-group matrices are integral.
//! Rank-one circle groups Γ ⊂ R×U are stored as pairs (k, h) meaning
//! (kℓ, u₀ᵏh); on X = R they act by x ↦ x + k in units of ℓ.

use std::collections::BTreeMap;

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::rational::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kind {
    FlatCrystallographic,
    RankOneCircle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointGroupElement {
    pub name: String,
    /// action on lattice coordinates
    pub linear: IMat,
    /// translation part in lattice coordinates
    pub shift: QVec,
}

#[derive(Debug, Clone)]
pub struct RankOneData {
    pub length: Q,
    pub h_names: Vec<String>,
    /// unitary embedding of the finite group H
    pub h_matrices: Vec<CMat>,
    pub twist: CMat,
}

/// Unvalidated input.
#[derive(Debug, Clone)]
pub struct QuotientPresentation {
    pub kind: Kind,
    pub dimension: usize,
    pub lattice_basis: QMat,
    pub metric_gram: QMat,
    pub point_group_elements: Vec<PointGroupElement>,
    pub rank_one_data: Option<RankOneData>,
}

impl QuotientPresentation {
    pub fn flat(lattice_basis: QMat, metric_gram: QMat, elements: Vec<PointGroupElement>) -> Self {
        QuotientPresentation {
            kind: Kind::FlatCrystallographic,
            dimension: lattice_basis.len(),
            lattice_basis,
            metric_gram,
            point_group_elements: elements,
            rank_one_data: None,
        }
    }

    pub fn rank_one(length: Q, h_names: Vec<String>, h_matrices: Vec<CMat>, twist: CMat) -> Self {
        QuotientPresentation {
            kind: Kind::RankOneCircle,
            dimension: 1,
            lattice_basis: vec![vec![length.clone()]],
            metric_gram: vec![vec![Q::one()]],
            point_group_elements: vec![],
            rank_one_data: Some(RankOneData { length, h_names, h_matrices, twist }),
        }
    }
}

pub fn pg(name: &str, linear: IMat, shift: QVec) -> PointGroupElement {
    PointGroupElement { name: name.to_string(), linear, shift }
}

/// A group element: flat (A | s) with `inner = 0`, or rank-one (k, h) encoded
/// as linear = [[1]], shift = [k], inner = index of h.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element {
    pub linear: IMat,
    pub shift: QVec,
    pub inner: usize,
}

#[derive(Debug, Clone)]
pub struct Coset {
    pub name: String,
    pub linear: IMat,
    /// shift reduced into [0,1)ⁿ
    pub shift: QVec,
    /// integer offset: the input element equals (I|offset)·(A|shift)
    pub offset: Vec<i64>,
}

#[derive(Debug, Clone)]
pub struct RankOneChecked {
    pub length: Q,
    pub h_names: Vec<String>,
    pub h: Vec<CMat>,
    pub twist: CMat,
    pub identity: usize,
    pub mult: Vec<Vec<usize>>,
    pub inv: Vec<usize>,
    /// φ(h) = u₀ h u₀⁻¹
    pub phi: Vec<usize>,
    pub phi_inv: Vec<usize>,
}

impl RankOneChecked {
    pub fn order(&self) -> usize {
        self.h.len()
    }

    /// φᵏ(h) for any integer k
    pub fn phi_pow(&self, h: usize, k: i64) -> usize {
        let map = if k >= 0 { &self.phi } else { &self.phi_inv };
        (0..k.unsigned_abs()).fold(h, |x, _| map[x])
    }
}

#[derive(Debug, Clone)]
pub struct CheckedPresentation {
    pub kind: Kind,
    pub n: usize,
    pub lattice_basis: QMat,
    pub metric_gram: QMat,
    /// metric in lattice coordinates, Bᵀ g B
    pub lattice_gram: QMat,
    /// identity coset first
    pub cosets: Vec<Coset>,
    pub effective: bool,
    pub rank_one: Option<RankOneChecked>,
}

const UNITARY_TOL: f64 = 1e-9;

pub fn validate_presentation(p: &QuotientPresentation) -> Result<CheckedPresentation> {
    match p.kind {
        Kind::FlatCrystallographic => validate_flat(p),
        Kind::RankOneCircle => validate_rank_one(p),
    }
}

fn check_metric(n: usize, basis: &QMat, gram: &QMat) -> Result<QMat> {
    if basis.len() != n || basis.iter().any(|r| r.len() != n) {
        return Err(Error::DegenerateLattice(format!("lattice basis must be {n}×{n}")));
    }
    if gram.len() != n || gram.iter().any(|r| r.len() != n) {
        return Err(Error::DegenerateLattice(format!("metric gram must be {n}×{n}")));
    }
    if qmat_det(basis).is_zero() {
        return Err(Error::DegenerateLattice("lattice basis is singular".into()));
    }
    for i in 0..n {
        for j in 0..n {
            if gram[i][j] != gram[j][i] {
                return Err(Error::DegenerateLattice("metric gram is not symmetric".into()));
            }
        }
    }
    for k in 1..=n {
        let minor: QMat = (0..k).map(|i| gram[i][..k].to_vec()).collect();
        if !qmat_det(&minor).is_positive() {
            return Err(Error::DegenerateLattice("metric gram is not positive definite".into()));
        }
    }
    Ok(qmat_mul(&qmat_mul(&qmat_transpose(basis), gram), basis))
}

fn validate_flat(p: &QuotientPresentation) -> Result<CheckedPresentation> {
    let n = p.dimension;
    if !(1..=3).contains(&n) {
        return Err(Error::UnsupportedDimension(n));
    }
    let lattice_gram = check_metric(n, &p.lattice_basis, &p.metric_gram)?;
    let elems = &p.point_group_elements;
    if elems.len() > 48 {
        return Err(Error::PointGroupTooLarge(elems.len()));
    }
    let mut cosets = Vec::with_capacity(elems.len().max(1));
    for e in elems {
        if e.linear.len() != n || e.linear.iter().any(|r| r.len() != n) || e.shift.len() != n {
            return Err(Error::Parse(format!("element '{}' has wrong shape", e.name)));
        }
        let det = imat_det(&e.linear);
        if det.abs() != 1 {
            return Err(Error::NonClosedGroup(format!(
                "element '{}' has det {det}; its inverse is not integral",
                e.name
            )));
        }
        let a = imat_to_q(&e.linear);
        if qmat_mul(&qmat_mul(&qmat_transpose(&a), &lattice_gram), &a) != lattice_gram {
            return Err(Error::NonOrthogonalAction(format!("element '{}' does not preserve the metric", e.name)));
        }
        let shift: QVec = e.shift.iter().map(frac).collect();
        let offset = e
            .shift
            .iter()
            .zip(&shift)
            .map(|(a, b)| num::ToPrimitive::to_i64(&(a - b).to_integer()).expect("small offset"))
            .collect();
        cosets.push(Coset { name: e.name.clone(), linear: e.linear.clone(), shift, offset });
    }
    let id = imat_identity(n);
    if !cosets.iter().any(|c| c.linear == id) {
        if cosets.is_empty() {
            cosets.push(Coset { name: "e".into(), linear: id.clone(), shift: vec![Q::zero(); n], offset: vec![0; n] });
        } else {
            return Err(Error::NonClosedGroup("identity coset missing".into()));
        }
    }
    for (i, a) in cosets.iter().enumerate() {
        if a.linear == id && a.shift.iter().any(|x| !x.is_zero()) {
            return Err(Error::NonClosedGroup(format!(
                "'{}' is a translation outside the lattice",
                a.name
            )));
        }
        for b in cosets.iter().skip(i + 1) {
            if a.linear == b.linear {
                return Err(Error::NonClosedGroup(format!(
                    "'{}' and '{}' share a linear part; their quotient is a translation outside the lattice",
                    a.name, b.name
                )));
            }
        }
    }
    for a in &cosets {
        for b in &cosets {
            let lin = imat_mul(&a.linear, &b.linear);
            let sh = qvec_add(&imat_mul_qvec(&a.linear, &b.shift), &a.shift);
            let Some(c) = cosets.iter().find(|c| c.linear == lin) else {
                return Err(Error::NonClosedGroup(format!("{}·{} has no coset", a.name, b.name)));
            };
            if !is_integer_vec(&qvec_sub(&sh, &c.shift)) {
                return Err(Error::NonClosedGroup(format!(
                    "{}·{} has translation part inconsistent with '{}'",
                    a.name, b.name, c.name
                )));
            }
        }
    }
    cosets.sort_by(|a, b| {
        let ka = (a.linear != id, a.linear.clone(), a.shift.clone());
        let kb = (b.linear != id, b.linear.clone(), b.shift.clone());
        ka.cmp(&kb)
    });
    Ok(CheckedPresentation {
        kind: Kind::FlatCrystallographic,
        n,
        lattice_basis: p.lattice_basis.clone(),
        metric_gram: p.metric_gram.clone(),
        lattice_gram,
        cosets,
        effective: true,
        rank_one: None,
    })
}

fn find_matrix(set: &[CMat], m: &CMat) -> Option<usize> {
    set.iter().position(|x| linalg::max_abs(&(x - m)) < 1e-8)
}

fn validate_rank_one(p: &QuotientPresentation) -> Result<CheckedPresentation> {
    let d = p
        .rank_one_data
        .as_ref()
        .ok_or_else(|| Error::Parse("rank-one presentation needs a rank_one block".into()))?;
    if !d.length.is_positive() {
        return Err(Error::DegenerateLattice("translation length must be positive".into()));
    }
    let h = &d.h_matrices;
    if h.is_empty() {
        return Err(Error::NonClosedGroup("H must contain the identity".into()));
    }
    if h.len() > 48 {
        return Err(Error::PointGroupTooLarge(h.len()));
    }
    if d.h_names.len() != h.len() {
        return Err(Error::Parse("H names and matrices differ in number".into()));
    }
    let dim = h[0].nrows();
    for (m, name) in h.iter().zip(&d.h_names) {
        if m.nrows() != dim || !linalg::is_unitary(m, UNITARY_TOL) {
            return Err(Error::NonClosedGroup(format!("H element '{name}' is not a {dim}×{dim} unitary")));
        }
    }
    if d.twist.nrows() != dim || !linalg::is_unitary(&d.twist, UNITARY_TOL) {
        return Err(Error::NonClosedGroup("twist u₀ is not unitary of matching size".into()));
    }
    for i in 0..h.len() {
        for j in i + 1..h.len() {
            if linalg::max_abs(&(&h[i] - &h[j])) < 1e-8 {
                return Err(Error::NonClosedGroup(format!("duplicate H elements {} and {}", d.h_names[i], d.h_names[j])));
            }
        }
    }
    let identity = find_matrix(h, &linalg::identity(dim))
        .ok_or_else(|| Error::NonClosedGroup("H must contain the identity".into()))?;
    let mut mult = vec![vec![0; h.len()]; h.len()];
    for i in 0..h.len() {
        for j in 0..h.len() {
            mult[i][j] = find_matrix(h, &(&h[i] * &h[j])).ok_or_else(|| {
                Error::NonClosedGroup(format!("{}·{} leaves H", d.h_names[i], d.h_names[j]))
            })?;
        }
    }
    let inv: Vec<usize> = (0..h.len()).map(|i| (0..h.len()).find(|&j| mult[i][j] == identity).unwrap()).collect();
    let u_inv = d.twist.adjoint();
    let mut phi = vec![0; h.len()];
    for i in 0..h.len() {
        phi[i] = find_matrix(h, &(&d.twist * &h[i] * &u_inv))
            .ok_or_else(|| Error::NonClosedGroup(format!("u₀ does not normalize H ({})", d.h_names[i])))?;
    }
    let mut phi_inv = vec![0; h.len()];
    for (i, &j) in phi.iter().enumerate() {
        phi_inv[j] = i;
    }
    let length = d.length.clone();
    Ok(CheckedPresentation {
        kind: Kind::RankOneCircle,
        n: 1,
        lattice_basis: vec![vec![length.clone()]],
        metric_gram: vec![vec![Q::one()]],
        lattice_gram: vec![vec![&length * &length]],
        cosets: vec![Coset { name: "e".into(), linear: vec![vec![1]], shift: vec![Q::zero()], offset: vec![0] }],
        effective: h.len() == 1,
        rank_one: Some(RankOneChecked {
            length,
            h_names: d.h_names.clone(),
            h: h.clone(),
            twist: d.twist.clone(),
            identity,
            mult,
            inv,
            phi,
            phi_inv,
        }),
    })
}

/// A generator word: letters are (generator name, ±1).
pub type Word = Vec<(String, i32)>;

#[derive(Debug, Clone)]
pub struct Relator {
    pub label: String,
    pub word: Word,
}

impl CheckedPresentation {
    pub fn is_rank_one(&self) -> bool {
        self.kind == Kind::RankOneCircle
    }

    pub fn point_group_order(&self) -> usize {
        self.cosets.len()
    }

    pub fn identity(&self) -> Element {
        Element {
            linear: imat_identity(self.n),
            shift: vec![Q::zero(); self.n],
            inner: self.rank_one.as_ref().map_or(0, |r| r.identity),
        }
    }

    pub fn translation(&self, lambda: &[i64]) -> Element {
        Element {
            linear: imat_identity(self.n),
            shift: lambda.iter().map(|&x| q(x)).collect(),
            inner: self.rank_one.as_ref().map_or(0, |r| r.identity),
        }
    }

    /// Normalized coset representative (shift in [0,1)ⁿ).
    pub fn coset_element(&self, c: usize) -> Element {
        let co = &self.cosets[c];
        Element { linear: co.linear.clone(), shift: co.shift.clone(), inner: self.identity().inner }
    }

    pub fn inner_element(&self, h: usize) -> Element {
        Element { linear: vec![vec![1]], shift: vec![Q::zero()], inner: h }
    }

    pub fn mul(&self, a: &Element, b: &Element) -> Element {
        let linear = imat_mul(&a.linear, &b.linear);
        let shift = qvec_add(&imat_mul_qvec(&a.linear, &b.shift), &a.shift);
        let inner = match &self.rank_one {
            None => 0,
            Some(r) => {
                let k2 = num::ToPrimitive::to_i64(&b.shift[0].to_integer()).unwrap();
                r.mult[r.phi_pow(a.inner, -k2)][b.inner]
            }
        };
        Element { linear, shift, inner }
    }

    pub fn inv(&self, a: &Element) -> Element {
        let linv = imat_inverse(&a.linear).expect("unimodular");
        let shift: QVec = imat_mul_qvec(&linv, &a.shift).iter().map(|x| -x).collect();
        let inner = match &self.rank_one {
            None => 0,
            Some(r) => {
                let k = num::ToPrimitive::to_i64(&a.shift[0].to_integer()).unwrap();
                r.inv[r.phi_pow(a.inner, k)]
            }
        };
        Element { linear: linv, shift, inner }
    }

    pub fn conj(&self, g: &Element, x: &Element) -> Element {
        self.mul(&self.mul(g, x), &self.inv(g))
    }

    pub fn act(&self, g: &Element, x: &[Q]) -> QVec {
        qvec_add(&imat_mul_qvec(&g.linear, x), &g.shift)
    }

    pub fn is_identity(&self, g: &Element) -> bool {
        *g == self.identity()
    }

    /// Acts trivially on X (the ineffective kernel).
    pub fn acts_trivially(&self, g: &Element) -> bool {
        g.linear == imat_identity(self.n) && g.shift.iter().all(|x| x.is_zero())
    }

    pub fn coset_index(&self, linear: &IMat) -> Option<usize> {
        self.cosets.iter().position(|c| &c.linear == linear)
    }

    /// γ = (I|λ)·g_c
    pub fn decompose(&self, g: &Element) -> Option<(Vec<i64>, usize)> {
        let c = self.coset_index(&g.linear)?;
        let lam = qvec_sub(&g.shift, &self.cosets[c].shift);
        if !is_integer_vec(&lam) {
            return None;
        }
        Some((lam.iter().map(|x| num::ToPrimitive::to_i64(&x.to_integer()).unwrap()).collect(), c))
    }

    pub fn contains(&self, g: &Element) -> bool {
        self.decompose(g).is_some()
            && match &self.rank_one {
                None => g.inner == 0,
                Some(r) => g.inner < r.order(),
            }
    }

    /// Names of the generators a representation must provide.
    pub fn generator_names(&self) -> Vec<String> {
        let mut v: Vec<String> = match &self.rank_one {
            Some(r) => {
                let mut v = vec!["u".to_string()];
                v.extend(r.h_names.iter().cloned());
                v
            }
            None => (1..=self.n).map(|i| format!("t{i}")).collect(),
        };
        if self.rank_one.is_none() {
            v.extend(self.cosets.iter().skip(1).map(|c| c.name.clone()));
        }
        v
    }

    /// The group element named by a generator.
    pub fn generator_element(&self, name: &str) -> Option<Element> {
        if let Some(r) = &self.rank_one {
            if name == "u" {
                return Some(Element { linear: vec![vec![1]], shift: vec![Q::one()], inner: r.identity });
            }
            return r.h_names.iter().position(|h| h == name).map(|h| self.inner_element(h));
        }
        if let Some(i) = name.strip_prefix('t').and_then(|s| s.parse::<usize>().ok()) {
            if (1..=self.n).contains(&i) {
                let mut lam = vec![0; self.n];
                lam[i - 1] = 1;
                return Some(self.translation(&lam));
            }
        }
        let c = self.cosets.iter().position(|c| c.name == name)?;
        // the generator is the element as given in the input, before reduction
        let co = &self.cosets[c];
        let offset: QVec = co.offset.iter().map(|&x| q(x)).collect();
        Some(Element { linear: co.linear.clone(), shift: qvec_add(&co.shift, &offset), inner: 0 })
    }

    pub fn word_element(&self, w: &Word) -> Option<Element> {
        let mut acc = self.identity();
        for (name, e) in w {
            let g = self.generator_element(name)?;
            let g = if *e < 0 { self.inv(&g) } else { g };
            for _ in 0..e.unsigned_abs() {
                acc = self.mul(&acc, &g);
            }
        }
        Some(acc)
    }

    /// Word for a lattice translation t^λ.
    pub fn translation_word(&self, lambda: &[i64]) -> Word {
        if self.is_rank_one() {
            return (0..lambda[0].unsigned_abs()).map(|_| ("u".to_string(), lambda[0].signum() as i32)).collect();
        }
        lambda
            .iter()
            .enumerate()
            .flat_map(|(i, &l)| (0..l.unsigned_abs()).map(move |_| (format!("t{}", i + 1), l.signum() as i32)))
            .collect()
    }

    /// Word for an arbitrary element, in the normal form t^λ·g_c (flat) or uᵏ·h (rank-one).
    pub fn element_word(&self, g: &Element) -> Option<Word> {
        if let Some(r) = &self.rank_one {
            let k = num::ToPrimitive::to_i64(&g.shift[0].to_integer())?;
            let mut w = self.translation_word(&[k]);
            if g.inner != r.identity {
                w.push((r.h_names[g.inner].clone(), 1));
            }
            return Some(w);
        }
        let (lam, c) = self.decompose(g)?;
        if c == 0 {
            return Some(self.translation_word(&lam));
        }
        // generator for coset c is (I|offset)·g_c, so g_c = t^{-offset}·gen
        let off = &self.cosets[c].offset;
        let l: Vec<i64> = lam.iter().zip(off).map(|(a, b)| a - b).collect();
        let mut w = self.translation_word(&l);
        w.push((self.cosets[c].name.clone(), 1));
        Some(w)
    }

    /// Defining relators of Γ in terms of `generator_names`.
    pub fn relators(&self) -> Vec<Relator> {
        let mut out = Vec::new();
        let inv_word = |w: &Word| -> Word { w.iter().rev().map(|(n, e)| (n.clone(), -e)).collect() };
        if let Some(r) = &self.rank_one {
            let nm = &r.h_names;
            out.push(Relator { label: format!("{} = 1", nm[r.identity]), word: vec![(nm[r.identity].clone(), 1)] });
            for i in 0..r.order() {
                for j in 0..r.order() {
                    let k = r.mult[i][j];
                    out.push(Relator {
                        label: format!("{}·{} = {}", nm[i], nm[j], nm[k]),
                        word: vec![(nm[i].clone(), 1), (nm[j].clone(), 1), (nm[k].clone(), -1)],
                    });
                }
                out.push(Relator {
                    label: format!("u·{}·u⁻¹ = {}", nm[i], nm[r.phi[i]]),
                    word: vec![("u".into(), 1), (nm[i].clone(), 1), ("u".into(), -1), (nm[r.phi[i]].clone(), -1)],
                });
            }
            return out;
        }
        let n = self.n;
        for i in 1..=n {
            for j in i + 1..=n {
                out.push(Relator {
                    label: format!("[t{i}, t{j}]"),
                    word: vec![(format!("t{i}"), 1), (format!("t{j}"), 1), (format!("t{i}"), -1), (format!("t{j}"), -1)],
                });
            }
        }
        let gens: BTreeMap<usize, Element> =
            (1..self.cosets.len()).map(|c| (c, self.generator_element(&self.cosets[c].name).unwrap())).collect();
        for (&a, ga) in &gens {
            for i in 0..n {
                let mut e = vec![0; n];
                e[i] = 1;
                let img = imat_mul_ivec(&ga.linear, &e);
                let mut w: Word = vec![(self.cosets[a].name.clone(), 1), (format!("t{}", i + 1), 1), (self.cosets[a].name.clone(), -1)];
                w.extend(inv_word(&self.translation_word(&img)));
                out.push(Relator { label: format!("{}·t{}·{}⁻¹ = t^{:?}", self.cosets[a].name, i + 1, self.cosets[a].name, img), word: w });
            }
            for (&b, gb) in &gens {
                let prod = self.mul(ga, gb);
                let mut w: Word = vec![(self.cosets[a].name.clone(), 1), (self.cosets[b].name.clone(), 1)];
                w.extend(inv_word(&self.element_word(&prod).unwrap()));
                out.push(Relator { label: format!("{}·{}", self.cosets[a].name, self.cosets[b].name), word: w });
            }
        }
        out
    }

    /// SHA-256 over a canonical text rendering of all mathematical data.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("{:?}|{}|", self.kind, self.n));
        for m in [&self.lattice_basis, &self.metric_gram] {
            for r in m {
                for x in r {
                    h.update(q_to_string(x));
                    h.update(",");
                }
            }
        }
        for c in &self.cosets {
            h.update(format!("{}:{:?}:{:?}:{:?};", c.name, c.linear, c.shift.iter().map(q_to_string).collect::<Vec<_>>(), c.offset));
        }
        if let Some(r) = &self.rank_one {
            h.update(q_to_string(&r.length));
            for (name, m) in r.h_names.iter().zip(&r.h) {
                h.update(name);
                for z in m.iter() {
                    h.update(format!("{:.15e},{:.15e};", z.re, z.im));
                }
            }
            for z in r.twist.iter() {
                h.update(format!("{:.15e},{:.15e};", z.re, z.im));
            }
        }
        hex::encode(h.finalize())
    }

    /// Covolume √det(G) of the lattice in the metric (lattice coordinates).
    pub fn covolume(&self) -> f64 {
        q_to_f64(&qmat_det(&self.lattice_gram)).sqrt()
    }

    pub fn lattice_gram_f64(&self) -> nalgebra::DMatrix<f64> {
        let g = qmat_to_f64(&self.lattice_gram);
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| g[i][j])
    }
}
