use std::collections::BTreeMap;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::orbicryst::{CheckedPresentation, Element, Word};

pub const DEFAULT_REP_TOL: f64 = 1e-10;

/// Matrices assigned to the named generators of Γ.
#[derive(Debug, Clone)]
pub struct HolonomyRep {
    pub rank: usize,
    pub generator_images: BTreeMap<String, CMat>,
    pub unitary: bool,
    pub relation_residual: f64,
    inverses: BTreeMap<String, CMat>,
}

impl HolonomyRep {
    /// Builds the representation and measures its relation residual without
    /// rejecting it; see [`HolonomyRep::validated`].
    pub fn new(p: &CheckedPresentation, rank: usize, images: BTreeMap<String, CMat>) -> Result<Self> {
        let names = p.generator_names();
        let mut images = images;
        for name in &names {
            if !images.contains_key(name) {
                return Err(Error::Parse(format!("representation lacks generator '{name}'")));
            }
        }
        images.retain(|k, _| names.contains(k));
        let mut inverses = BTreeMap::new();
        for (k, m) in &images {
            if m.nrows() != rank || m.ncols() != rank {
                return Err(Error::Parse(format!("image of '{k}' is not {rank}×{rank}")));
            }
            let inv = linalg::inverse(m).ok_or_else(|| Error::Parse(format!("image of '{k}' is singular")))?;
            inverses.insert(k.clone(), inv);
        }
        let unitary = images.values().all(|m| linalg::is_unitary(m, 1e-9));
        let mut rep = HolonomyRep { rank, generator_images: images, unitary, relation_residual: 0.0, inverses };
        rep.relation_residual = rep.residuals(p).into_iter().map(|(_, r)| r).fold(0.0, f64::max);
        Ok(rep)
    }

    pub fn validated(p: &CheckedPresentation, rank: usize, images: BTreeMap<String, CMat>, tol: f64) -> Result<Self> {
        let rep = Self::new(p, rank, images)?;
        rep.check_relations(p, tol)?;
        Ok(rep)
    }

    pub fn check_relations(&self, p: &CheckedPresentation, tol: f64) -> Result<()> {
        if let Some((label, r)) = self
            .residuals(p)
            .into_iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
        {
            if r > tol {
                return Err(Error::RelationViolation { relation: label, residual: r });
            }
        }
        Ok(())
    }

    pub fn trivial(p: &CheckedPresentation, rank: usize) -> Self {
        let images = p.generator_names().into_iter().map(|n| (n, linalg::identity(rank))).collect();
        Self::new(p, rank, images).expect("trivial representation is well formed")
    }

    /// Builds from (name, matrix) pairs.
    pub fn from_pairs(p: &CheckedPresentation, rank: usize, pairs: &[(&str, CMat)]) -> Result<Self> {
        let images = pairs.iter().map(|(n, m)| (n.to_string(), m.clone())).collect();
        Self::validated(p, rank, images, DEFAULT_REP_TOL)
    }

    pub fn residuals(&self, p: &CheckedPresentation) -> Vec<(String, f64)> {
        p.relators()
            .into_iter()
            .map(|r| (r.label, linalg::deviation_from_identity(&self.word_image(&r.word))))
            .collect()
    }

    pub fn generator(&self, name: &str) -> &CMat {
        &self.generator_images[name]
    }

    pub fn word_image(&self, w: &Word) -> CMat {
        let mut acc = linalg::identity(self.rank);
        for (name, e) in w {
            let m = if *e < 0 { &self.inverses[name] } else { &self.generator_images[name] };
            for _ in 0..e.unsigned_abs() {
                acc *= m;
            }
        }
        acc
    }

    fn power(&self, name: &str, k: i64) -> CMat {
        let base = if k < 0 { &self.inverses[name] } else { &self.generator_images[name] };
        let mut result = linalg::identity(self.rank);
        let mut b = base.clone();
        let mut e = k.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                result *= &b;
            }
            b = &b * &b;
            e >>= 1;
        }
        result
    }

    /// ρ(γ) for an arbitrary group element.
    pub fn image(&self, p: &CheckedPresentation, g: &Element) -> CMat {
        if let Some(r) = &p.rank_one {
            let k = num::ToPrimitive::to_i64(&g.shift[0].to_integer()).expect("integral translation");
            return self.power("u", k) * &self.generator_images[&r.h_names[g.inner]];
        }
        let (lam, c) = p.decompose(g).expect("element of Γ");
        let mut m = linalg::identity(self.rank);
        let off = if c == 0 { vec![0; p.n] } else { p.cosets[c].offset.clone() };
        for (i, (l, o)) in lam.iter().zip(&off).enumerate() {
            let e = l - o;
            if e != 0 {
                m *= self.power(&format!("t{}", i + 1), e);
            }
        }
        if c != 0 {
            m *= &self.generator_images[&p.cosets[c].name];
        }
        m
    }

    pub fn trace(&self, p: &CheckedPresentation, g: &Element) -> Complex64 {
        linalg::trace(&self.image(p, g))
    }

    /// Images of the lattice generators t₁…tₙ (flat) or u (rank-one).
    pub fn lattice_images(&self, p: &CheckedPresentation) -> Vec<CMat> {
        if p.is_rank_one() {
            vec![self.generator_images["u"].clone()]
        } else {
            (1..=p.n).map(|i| self.generator_images[&format!("t{i}")].clone()).collect()
        }
    }

    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("rank={};", self.rank));
        for (k, m) in &self.generator_images {
            h.update(k);
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    let z = m[(i, j)];
                    h.update(format!("{:.15e},{:.15e};", z.re, z.im));
                }
            }
        }
        hex::encode(h.finalize())
    }

    /// Conjugate representation S ρ S⁻¹.
    pub fn conjugated(&self, p: &CheckedPresentation, s: &CMat) -> Result<Self> {
        let sinv = linalg::inverse(s).ok_or_else(|| Error::Parse("conjugating matrix is singular".into()))?;
        let images = self.generator_images.iter().map(|(k, m)| (k.clone(), s * m * &sinv)).collect();
        Self::new(p, self.rank, images)
    }
}
