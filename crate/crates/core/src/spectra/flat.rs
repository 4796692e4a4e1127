//! Exact Hodge spectra of twisted forms on flat quotients.
//!
//! Invariant forms satisfy γ*ω = ρ(γ)ω. Writing ω = Σ c_ξ e^{2πiξ·x} in
//! lattice coordinates, a coset (A|v) sends the mode ξ to Aᵀξ with
//! coefficient map ρ(γ)⁻¹ ⊗ Λᵖ(Aᵀ) · e^{2πiξ·v}. Translations restrict ξ to
//! Zⁿ + μ for the joint characters μ of ρ|_Λ, and the multiplicity of an
//! eigenvalue shell is the trace of the coset-averaging projector on it.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::holonomy::HolonomyRep;
use crate::linalg::{self, CMat};
use crate::numeric::{near_integer, rationalize, Accumulator};
use crate::orbicryst::CheckedPresentation;
use crate::rational::{imat_transpose, IMat, Q};

use super::{SpectrumEntry, SpectrumTable, Truncation};

pub const INTEGRALITY_TOL: f64 = 1e-9;

/// One joint eigenspace of the lattice images.
#[derive(Debug, Clone)]
pub struct CharacterBlock {
    /// character shift μ ∈ [0,1)ⁿ: ρ(t^λ) = e^{2πiμ·λ} on the block
    pub mu: Vec<f64>,
    pub mu_exact: Option<Vec<Q>>,
    pub dim: usize,
    /// Tr of ρ(g_c)⁻¹ on the block, for cosets preserving it
    pub coset_traces: Vec<Option<Complex64>>,
}

#[derive(Debug, Clone)]
pub struct CosetData {
    pub linear: IMat,
    pub transpose: IMat,
    pub shift: Vec<f64>,
    /// e_p(A) for p = 0..n
    pub minor_sums: Vec<i64>,
}

/// Everything needed to enumerate invariant modes.
#[derive(Debug, Clone)]
pub struct ModeModel {
    pub n: usize,
    pub rank: usize,
    /// G⁻¹ in lattice coordinates: eigenvalue of mode ξ is 4π² ξᵀG⁻¹ξ
    pub gram_inv: DMatrix<f64>,
    pub gram: DMatrix<f64>,
    pub blocks: Vec<CharacterBlock>,
    pub cosets: Vec<CosetData>,
    pub covolume: f64,
}

fn wrap01(x: f64) -> f64 {
    let f = x - x.floor();
    if f > 1.0 - 1e-12 {
        0.0
    } else {
        f
    }
}

fn mu_of(eig: &[Complex64]) -> Vec<f64> {
    eig.iter().map(|z| wrap01(z.arg() / (2.0 * PI))).collect()
}

fn exact_mu(mu: &[f64]) -> Option<Vec<Q>> {
    mu.iter().map(|&m| rationalize(m, 10_000, 1e-12)).collect()
}

pub fn mode_model(p: &CheckedPresentation, rep: &HolonomyRep) -> Result<ModeModel> {
    let n = p.n;
    let gram = p.lattice_gram_f64();
    let gram_inv = gram.clone().try_inverse().ok_or_else(|| Error::DegenerateLattice("singular gram".into()))?;
    let covolume = p.covolume();
    let tol = 1e-9;

    if let Some(r1) = &p.rank_one {
        let hs: Vec<CMat> = r1.h_names.iter().map(|h| rep.generator(h).clone()).collect();
        let fixed = linalg::common_fixed_space(&hs, rep.rank, 1e-8);
        let t = fixed.adjoint() * rep.generator("u") * &fixed;
        let blocks = if fixed.ncols() == 0 {
            vec![]
        } else {
            linalg::joint_eigenspaces(&[t], fixed.ncols(), tol)?
                .into_iter()
                .map(|sp| {
                    let mu = mu_of(&sp.eigenvalues);
                    let dim = sp.basis.ncols();
                    CharacterBlock { mu_exact: exact_mu(&mu), mu, dim, coset_traces: vec![Some(Complex64::new(dim as f64, 0.0))] }
                })
                .collect()
        };
        return Ok(ModeModel {
            n,
            rank: fixed.ncols(),
            gram_inv,
            gram,
            blocks,
            cosets: vec![CosetData { linear: vec![vec![1]], transpose: vec![vec![1]], shift: vec![0.0], minor_sums: vec![1, 1] }],
            covolume,
        });
    }

    let lat = rep.lattice_images(p);
    let spaces = linalg::joint_eigenspaces(&lat, rep.rank, tol)?;
    let cosets: Vec<CosetData> = p
        .cosets
        .iter()
        .map(|c| CosetData {
            linear: c.linear.clone(),
            transpose: imat_transpose(&c.linear),
            shift: c.shift.iter().map(crate::rational::q_to_f64).collect(),
            minor_sums: linalg::principal_minor_sums(&c.linear),
        })
        .collect();
    let coset_inv: Vec<CMat> = (0..p.cosets.len())
        .map(|c| linalg::inverse(&rep.image(p, &p.coset_element(c))).expect("invertible image"))
        .collect();
    let mut blocks = Vec::new();
    for sp in spaces {
        let mu = mu_of(&sp.eigenvalues);
        let dim = sp.basis.ncols();
        let coset_traces = cosets
            .iter()
            .zip(&coset_inv)
            .map(|(cd, minv)| {
                // block preserved iff Aᵀμ ≡ μ mod Zⁿ
                let am = apply_f(&cd.transpose, &mu);
                let preserved = am.iter().zip(&mu).all(|(a, b)| {
                    let d = a - b;
                    (d - d.round()).abs() < 1e-9
                });
                preserved.then(|| linalg::trace(&(sp.basis.adjoint() * minv * &sp.basis)))
            })
            .collect();
        blocks.push(CharacterBlock { mu_exact: exact_mu(&mu), mu, dim, coset_traces });
    }
    Ok(ModeModel { n, rank: rep.rank, gram_inv, gram, blocks, cosets, covolume })
}

pub(crate) fn apply_f(a: &IMat, x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(&m, y)| m as f64 * y).sum()).collect()
}

impl ModeModel {
    pub fn point_group_order(&self) -> usize {
        self.cosets.len()
    }

    pub fn dual_norm_sq(&self, xi: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                acc += xi[i] * self.gram_inv[(i, j)] * xi[j];
            }
        }
        acc
    }

    /// Modes ξ ∈ Zⁿ + μ of block `b` with ξᵀG⁻¹ξ ≤ r², ordered deterministically.
    pub fn modes(&self, b: usize, r: f64) -> Vec<Vec<f64>> {
        let mu = &self.blocks[b].mu;
        let bounds: Vec<(i64, i64)> = (0..self.n)
            .map(|i| {
                let ext = r * self.gram[(i, i)].sqrt();
                ((-ext - mu[i]).floor() as i64, (ext - mu[i]).ceil() as i64)
            })
            .collect();
        let mut out = Vec::new();
        let mut m: Vec<i64> = bounds.iter().map(|b| b.0).collect();
        loop {
            let xi: Vec<f64> = m.iter().zip(mu).map(|(&a, b)| a as f64 + b).collect();
            if self.dual_norm_sq(&xi) <= r * r * (1.0 + 1e-12) {
                out.push(xi);
            }
            let mut k = 0;
            loop {
                if k == self.n {
                    return out;
                }
                m[k] += 1;
                if m[k] <= bounds[k].1 {
                    break;
                }
                m[k] = bounds[k].0;
                k += 1;
            }
        }
    }

    /// Projector-trace contribution of one mode, per degree (not yet divided by |P|).
    pub fn mode_weights(&self, b: usize, xi: &[f64]) -> Vec<Complex64> {
        let block = &self.blocks[b];
        let mut w = vec![Complex64::new(0.0, 0.0); self.n + 1];
        for (c, cd) in self.cosets.iter().enumerate() {
            let Some(tr) = block.coset_traces[c] else { continue };
            let axi = apply_f(&cd.transpose, xi);
            if axi.iter().zip(xi).any(|(a, b)| (a - b).abs() > 1e-9) {
                continue;
            }
            let phase: f64 = xi.iter().zip(&cd.shift).map(|(a, b)| a * b).sum();
            let f = Complex64::from_polar(1.0, 2.0 * PI * phase) * tr;
            for (p, wp) in w.iter_mut().enumerate() {
                *wp += f * cd.minor_sums[p] as f64;
            }
        }
        w
    }

    fn exact_eigen_over_4pi2(&self, b: usize, xi: &[f64], gram_inv_q: &crate::rational::QMat) -> Option<Q> {
        let mu = self.blocks[b].mu_exact.as_ref()?;
        let xq: Vec<Q> = xi
            .iter()
            .zip(mu)
            .map(|(x, m)| {
                let int = (x - crate::rational::q_to_f64(m)).round() as i64;
                crate::rational::q(int) + m
            })
            .collect();
        Some(crate::rational::qform(gram_inv_q, &xq, &xq))
    }
}

struct RawMode {
    eig: f64,
    exact: Option<Q>,
    weights: Vec<Complex64>,
}

/// All-degree spectra up to cutoff radius `r` in the dual norm
/// (eigenvalues ≤ 4π²r²).
pub fn flat_spectra_all(p: &CheckedPresentation, rep: &HolonomyRep, r: f64) -> Result<Vec<SpectrumTable>> {
    let model = mode_model(p, rep)?;
    flat_spectra_from_model(p, rep, &model, r)
}

pub fn flat_spectra_from_model(
    p: &CheckedPresentation,
    rep: &HolonomyRep,
    model: &ModeModel,
    r: f64,
) -> Result<Vec<SpectrumTable>> {
    let n = model.n;
    if !(r > 0.0) {
        return Err(Error::CutoffTooSmall(format!("cutoff {r} must be positive")));
    }
    let gram_inv_q = crate::rational::qmat_inverse(&p.lattice_gram).expect("nondegenerate");
    let mut raw: Vec<RawMode> = Vec::new();
    for b in 0..model.blocks.len() {
        for xi in model.modes(b, r) {
            let weights = model.mode_weights(b, &xi);
            if weights.iter().all(|w| w.norm() < 1e-12) {
                continue;
            }
            let eig = 4.0 * PI * PI * model.dual_norm_sq(&xi);
            raw.push(RawMode { eig, exact: model.exact_eigen_over_4pi2(b, &xi, &gram_inv_q), weights });
        }
    }
    // lowest nonzero possible eigenvalue must lie inside the cutoff
    let first_nonzero = raw.iter().map(|m| m.eig).filter(|&e| e > 1e-12).fold(f64::INFINITY, f64::min);
    if !model.blocks.is_empty() && raw.iter().all(|m| m.eig < 1e-12) {
        return Err(Error::CutoffTooSmall(format!(
            "cutoff radius {r} contains no nonzero shell (first nonzero eigenvalue {first_nonzero})"
        )));
    }
    raw.sort_by(|a, b| a.eig.partial_cmp(&b.eig).unwrap());

    let order = model.point_group_order() as f64;
    let mut tables: Vec<SpectrumTable> = (0..=n)
        .map(|deg| SpectrumTable {
            degree: deg,
            dimension: n,
            rank: model.rank,
            entries: Vec::new(),
            truncation: Truncation::Exact { cutoff_radius: r, eigenvalue_cutoff: 4.0 * PI * PI * r * r, covolume: model.covolume, dual_diameter: dual_diameter(model) },
            bundle: rep.hash(),
            presentation: p.hash(),
            max_integrality_residual: 0.0,
        })
        .collect();

    let mut i = 0;
    while i < raw.len() {
        let e0 = raw[i].eig;
        let mut j = i;
        let mut sums: Vec<(Accumulator, Accumulator)> = vec![(Accumulator::new(), Accumulator::new()); n + 1];
        while j < raw.len() && (raw[j].eig - e0).abs() <= 1e-10 * e0.max(1.0) {
            for (deg, w) in raw[j].weights.iter().enumerate() {
                sums[deg].0.add(w.re);
                sums[deg].1.add(w.im);
            }
            j += 1;
        }
        let exact = raw[i].exact.clone().filter(|x| raw[i..j].iter().all(|m| m.exact.as_ref() == Some(x)));
        let eig = if e0 < 1e-12 { 0.0 } else { raw[i..j].iter().map(|m| m.eig).sum::<f64>() / (j - i) as f64 };
        for (deg, (re, im)) in sums.iter().enumerate() {
            let (re, im) = (re.value() / order, im.value() / order);
            let k = near_integer(re, INTEGRALITY_TOL);
            if k.is_none() || im.abs() > INTEGRALITY_TOL || k.unwrap() < 0 {
                return Err(Error::NonIntegralMultiplicity(format!(
                    "degree {deg}, eigenvalue {eig:.12}: averaged multiplicity {re:.3e}{:+.3e}i",
                    im
                )));
            }
            let resid = (re - re.round()).abs().max(im.abs());
            let t = &mut tables[deg];
            t.max_integrality_residual = t.max_integrality_residual.max(resid);
            let m = k.unwrap() as u64;
            if m > 0 {
                t.entries.push(SpectrumEntry { eigenvalue: eig, exact_over_4pi2: exact.clone(), multiplicity: m });
            }
        }
        i = j;
    }
    Ok(tables)
}

fn dual_diameter(model: &ModeModel) -> f64 {
    (0..model.n).map(|i| model.gram_inv[(i, i)].sqrt()).sum()
}

/// Single-degree table.
pub fn flat_spectrum(p: &CheckedPresentation, rep: &HolonomyRep, degree: usize, r: f64) -> Result<SpectrumTable> {
    if degree > p.n {
        return Err(Error::SpectrumUnavailable(format!("degree {degree} exceeds dimension {}", p.n)));
    }
    Ok(flat_spectra_all(p, rep, r)?.swap_remove(degree))
}

/// dim Hᵖ(Z,F) for p = 0..n from the zero modes.
pub fn betti_numbers(p: &CheckedPresentation, rep: &HolonomyRep) -> Result<Vec<usize>> {
    let model = mode_model(p, rep)?;
    let order = model.point_group_order() as f64;
    let mut betti = vec![Complex64::new(0.0, 0.0); model.n + 1];
    for (b, block) in model.blocks.iter().enumerate() {
        if block.mu.iter().any(|&m| m.abs() > 1e-12) {
            continue;
        }
        let zero = vec![0.0; model.n];
        for (deg, w) in model.mode_weights(b, &zero).iter().enumerate() {
            betti[deg] += w;
        }
    }
    betti
        .iter()
        .enumerate()
        .map(|(deg, z)| {
            let v = z / order;
            match near_integer(v.re, INTEGRALITY_TOL) {
                Some(k) if k >= 0 && v.im.abs() < INTEGRALITY_TOL => Ok(k as usize),
                _ => Err(Error::NonIntegralMultiplicity(format!("kernel in degree {deg}: {v}"))),
            }
        })
        .collect()
}
