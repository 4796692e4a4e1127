//! Short-time heat traces on flat quotients from Poisson summation over the
//! fixed modes of each coset.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::holonomy::HolonomyRep;
use crate::orbicryst::CheckedPresentation;
use crate::rational::{imat_identity, integer_affine_solutions, q, q_to_f64, qmat_inverse, qmat_mul_vec, IMat, Q, QMat};
use crate::spectra::{mode_model, HeatWeight, ModeModel};

use super::SmallTimeTrace;

/// Images with (m−u)ᵀS⁻¹(m−u) above this are below e⁻⁵⁰ on t ≤ 1.
const IMAGE_RADIUS_SQ: f64 = 200.0;

/// One (character block, coset) contribution:
/// amp · t^{−k/2} Σ_m e^{2πi m·β} e^{−(m−u)ᵀS⁻¹(m−u)/4t}.
#[derive(Debug, Clone)]
struct PoissonTerm {
    k: usize,
    amp: Complex64,
    /// the m = u term, when u is integral
    power: Option<Complex64>,
    images: Vec<(f64, Complex64)>,
}

#[derive(Debug, Clone, Default)]
pub struct PoissonSmallTime {
    terms: Vec<PoissonTerm>,
}

fn enumerate_images(s_inv: &DMatrix<f64>, s: &DMatrix<f64>, u: &[f64], beta: &[f64]) -> (Vec<(f64, Complex64)>, bool) {
    let k = u.len();
    let bounds: Vec<(i64, i64)> = (0..k)
        .map(|i| {
            let ext = (IMAGE_RADIUS_SQ * s[(i, i)]).sqrt();
            ((u[i] - ext).floor() as i64, (u[i] + ext).ceil() as i64)
        })
        .collect();
    let mut out = Vec::new();
    let mut has_power = false;
    let mut m: Vec<i64> = bounds.iter().map(|b| b.0).collect();
    loop {
        let d: Vec<f64> = m.iter().zip(u).map(|(&a, b)| a as f64 - b).collect();
        let mut d2 = 0.0;
        for i in 0..k {
            for j in 0..k {
                d2 += d[i] * s_inv[(i, j)] * d[j];
            }
        }
        let phase: f64 = m.iter().zip(beta).map(|(&a, b)| a as f64 * b).sum();
        if d2 < 1e-18 {
            has_power = true;
        } else if d2 <= IMAGE_RADIUS_SQ {
            out.push((d2, Complex64::from_polar(1.0, 2.0 * PI * phase)));
        }
        let mut i = 0;
        loop {
            if i == k {
                out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                return (out, has_power);
            }
            m[i] += 1;
            if m[i] <= bounds[i].1 {
                break;
            }
            m[i] = bounds[i].0;
            i += 1;
        }
    }
}

impl PoissonSmallTime {
    /// Weighted trace Σ_p w(p) Tr e^{−tΔ_p} of a flat or rank-one quotient.
    pub fn for_presentation(p: &CheckedPresentation, rep: &HolonomyRep, weight: HeatWeight) -> Result<Self> {
        let model = mode_model(p, rep)?;
        Self::from_model(p, &model, weight)
    }

    pub fn from_model(p: &CheckedPresentation, model: &ModeModel, weight: HeatWeight) -> Result<Self> {
        let n = model.n;
        let order = model.point_group_order() as f64;
        let gram_inv_q: QMat = qmat_inverse(&p.lattice_gram).ok_or_else(|| Error::DegenerateLattice("singular gram".into()))?;
        let mut terms = Vec::new();
        for block in &model.blocks {
            for (c, cd) in model.cosets.iter().enumerate() {
                let Some(tr) = block.coset_traces[c] else { continue };
                let wsum: f64 = (0..=n).map(|deg| weight.weight(deg, n) * cd.minor_sums[deg] as f64).sum();
                let coeff = tr * (wsum / order);
                if coeff.norm() < 1e-15 {
                    continue;
                }
                let identity = cd.linear == imat_identity(n);
                // fixed modes ξ₀ + E·Zᵏ with Aᵀξ = ξ, ξ ∈ Zⁿ + μ
                let (e, beta): (Vec<Vec<i64>>, Vec<f64>) = if identity {
                    ((0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect(), block.mu.clone())
                } else {
                    let mu = block.mu_exact.as_ref().ok_or_else(|| {
                        Error::SpectrumUnavailable("irrational character shift on a non-translation coset".into())
                    })?;
                    let mut m: IMat = cd.transpose.clone();
                    for (i, row) in m.iter_mut().enumerate() {
                        row[i] -= 1;
                    }
                    let rhs: Vec<Q> = m
                        .iter()
                        .map(|row| -row.iter().zip(mu).map(|(&a, b)| q(a) * b).sum::<Q>())
                        .collect();
                    let Some((part, kernel)) = integer_affine_solutions(&m, &rhs) else { continue };
                    let xi0: Vec<Q> = part.iter().zip(mu).map(|(a, b)| a + b).collect();
                    let beta = solve_coordinates(&kernel, &xi0);
                    (kernel, beta)
                };
                let k = e.len();
                let shift_q = &p.cosets[c].shift;
                if k == 0 {
                    terms.push(PoissonTerm { k, amp: coeff, power: Some(coeff), images: vec![] });
                    continue;
                }
                // S = EᵀG⁻¹E, u = Eᵀv
                let ginv: QMat = gram_inv_q.clone();
                let s = DMatrix::from_fn(k, k, |i, j| {
                    let ge = qmat_mul_vec(&ginv, &e[j].iter().map(|&x| q(x)).collect::<Vec<_>>());
                    q_to_f64(&e[i].iter().zip(&ge).map(|(&a, b)| q(a) * b).sum::<Q>())
                });
                let u_q: Vec<Q> = e.iter().map(|col| col.iter().zip(shift_q).map(|(&a, b)| q(a) * b).sum()).collect();
                let u: Vec<f64> = u_q.iter().map(q_to_f64).collect();
                let s_inv = s.clone().try_inverse().ok_or_else(|| Error::DegenerateLattice("singular fixed lattice".into()))?;
                let det = s.determinant();
                let amp = coeff * (det.powf(-0.5) * (4.0 * PI).powf(-(k as f64) / 2.0));
                let (images, has_power) = enumerate_images(&s_inv, &s, &u, &beta);
                let power = has_power.then(|| {
                    let ph: f64 = u.iter().zip(&beta).map(|(a, b)| a * b).sum();
                    amp * Complex64::from_polar(1.0, 2.0 * PI * ph)
                });
                terms.push(PoissonTerm { k, amp, power, images });
            }
        }
        Ok(PoissonSmallTime { terms })
    }

    /// Twisted circle of length `length` with holonomy e^{iθ}, degree-one
    /// forms weighted by `w1` and functions by `w0`.
    pub fn circle(length: f64, theta: f64, w0: f64, w1: f64) -> Self {
        let coeff = Complex64::new(w0 + w1, 0.0);
        let s = DMatrix::from_element(1, 1, 1.0 / (length * length));
        let s_inv = DMatrix::from_element(1, 1, length * length);
        let beta = [theta / (2.0 * PI)];
        let (images, has_power) = enumerate_images(&s_inv, &s, &[0.0], &beta);
        let amp = coeff * (length / (4.0 * PI).sqrt());
        PoissonSmallTime { terms: vec![PoissonTerm { k: 1, amp, power: has_power.then_some(amp), images }] }
    }

    /// Full short-time trace (power terms plus remainder).
    pub fn trace(&self, t: f64) -> f64 {
        self.power_terms().iter().map(|(a, c)| c * t.powf(*a)).sum::<f64>() + self.remainder(t)
    }
}

/// β with E·β = ξ₀ (ξ₀ lies in the span of the columns of E).
fn solve_coordinates(e: &[Vec<i64>], xi0: &[Q]) -> Vec<f64> {
    let k = e.len();
    if k == 0 {
        return vec![];
    }
    let gram: QMat = (0..k)
        .map(|i| (0..k).map(|j| e[i].iter().zip(&e[j]).map(|(&a, &b)| q(a * b)).sum()).collect())
        .collect();
    let rhs: Vec<Q> = e.iter().map(|col| col.iter().zip(xi0).map(|(&a, b)| q(a) * b).sum()).collect();
    let inv = qmat_inverse(&gram).expect("kernel basis is independent");
    qmat_mul_vec(&inv, &rhs).iter().map(q_to_f64).collect()
}

impl SmallTimeTrace for PoissonSmallTime {
    fn power_terms(&self) -> Vec<(f64, f64)> {
        let kmax = self.terms.iter().map(|t| t.k).max().unwrap_or(0);
        (0..=kmax)
            .filter_map(|k| {
                let c: Complex64 = self.terms.iter().filter(|t| t.k == k).filter_map(|t| t.power).sum();
                (c.norm() > 0.0).then_some((-(k as f64) / 2.0, c.re))
            })
            .collect()
    }

    fn remainder(&self, t: f64) -> f64 {
        let mut acc = crate::numeric::Accumulator::new();
        for term in &self.terms {
            let mut s = Complex64::new(0.0, 0.0);
            for (d2, ph) in &term.images {
                let x = d2 / (4.0 * t);
                if x > 745.0 {
                    break;
                }
                s += ph * (-x).exp();
            }
            acc.add((term.amp * s).re * t.powf(-(term.k as f64) / 2.0));
        }
        acc.value()
    }

    fn gap(&self) -> f64 {
        self.terms.iter().filter_map(|t| t.images.first().map(|i| i.0)).fold(f64::INFINITY, f64::min)
    }
}
