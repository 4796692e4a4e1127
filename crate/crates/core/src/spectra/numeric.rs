//! Twisted Laplacian on a circle with a curved metric, by Fourier
//! collocation.
//!
//! The metric is h(x)dx² on R/Z with h a positive trigonometric polynomial
//! and w = √h. For f with f(x+1) = e^{iθ}f(x) the Laplacian is
//! Δf = −w⁻¹(w⁻¹f′)′ on L²(w dx); with u = w^{1/2}f it becomes the Hermitian
//! operator S = −W^{-1/2} D W⁻¹ D W^{-1/2} on L²(dx). The 1-form Laplacian in
//! the coordinate v = w^{-1/2}φ (ω = φ dx) has the same quadratic form, so
//! both degrees share S.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::numeric::compensated_sum;

use super::{SpectrumEntry, SpectrumTable, Truncation};

/// h(x) = c₀ + Σ_k a_k cos 2πkx + b_k sin 2πkx
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricProfile {
    pub constant: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl MetricProfile {
    pub fn flat() -> Self {
        MetricProfile { constant: 1.0, cos: vec![], sin: vec![] }
    }

    pub fn new(constant: f64, cos: Vec<f64>, sin: Vec<f64>) -> Result<Self> {
        let p = MetricProfile { constant, cos, sin };
        p.validate()?;
        Ok(p)
    }

    pub fn h(&self, x: f64) -> f64 {
        let mut v = self.constant;
        for (k, a) in self.cos.iter().enumerate() {
            v += a * (2.0 * PI * (k + 1) as f64 * x).cos();
        }
        for (k, b) in self.sin.iter().enumerate() {
            v += b * (2.0 * PI * (k + 1) as f64 * x).sin();
        }
        v
    }

    pub fn w(&self, x: f64) -> f64 {
        self.h(x).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let bound = self.constant - self.cos.iter().chain(&self.sin).map(|c| c.abs()).sum::<f64>();
        if bound > 0.0 {
            return Ok(());
        }
        let m = (0..8192).map(|j| self.h(j as f64 / 8192.0)).fold(f64::INFINITY, f64::min);
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::NonPositiveMetric(format!("conformal factor reaches {m:.3e}")));
        }
        Ok(())
    }

    /// Length ∫₀¹ w dx (trapezoid rule, spectrally accurate for periodic w).
    pub fn length(&self) -> f64 {
        let m = 4096;
        compensated_sum((0..m).map(|j| self.w(j as f64 / m as f64))) / m as f64
    }

    pub fn degree(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }
}

fn wavenumbers(n: usize, theta: f64) -> Vec<f64> {
    let half = (n as i64 - 1) / 2;
    (-half..=half).map(|k| 2.0 * PI * k as f64 + theta).collect()
}

/// Twisted spectral differentiation matrix on N equispaced points (N odd).
fn diff_matrix(n: usize, theta: f64) -> CMat {
    let kappa = wavenumbers(n, theta);
    // D_{jl} = (1/N) Σ_k iκ_k e^{iκ_k (x_j − x_l)} depends only on j − l
    let offsets: Vec<Complex64> = (0..2 * n - 1)
        .map(|m| {
            let d = (m as f64 - (n as f64 - 1.0)) / n as f64;
            kappa.iter().map(|&k| Complex64::new(0.0, k) * Complex64::from_polar(1.0, k * d)).sum::<Complex64>()
                / n as f64
        })
        .collect();
    CMat::from_fn(n, n, |j, l| offsets[j + n - 1 - l])
}

fn hermitian_operator(profile: &MetricProfile, theta: f64, n: usize) -> CMat {
    let d = diff_matrix(n, theta);
    let w: Vec<f64> = (0..n).map(|j| profile.w(j as f64 / n as f64)).collect();
    // S = −(W^{-1/2} D)(W⁻¹ D W^{-1/2})
    let mut left = d.clone();
    for j in 0..n {
        for l in 0..n {
            left[(j, l)] /= w[j].sqrt();
        }
    }
    let mut right = d;
    for j in 0..n {
        for l in 0..n {
            right[(j, l)] /= w[j] * w[l].sqrt();
        }
    }
    let s = -(left * right);
    // symmetrize rounding
    (&s + s.adjoint()) * Complex64::new(0.5, 0.0)
}

fn sorted_eigenvalues(profile: &MetricProfile, theta: f64, n: usize) -> Vec<f64> {
    let s = hermitian_operator(profile, theta, n);
    let mut ev: Vec<f64> = s.symmetric_eigenvalues().iter().cloned().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

fn odd(n: usize) -> usize {
    if n % 2 == 0 {
        n + 1
    } else {
        n
    }
}

/// Size of the comparison discretization used for the error estimate.
pub fn refinement_size(n: usize) -> usize {
    if n <= 401 {
        odd(2 * n)
    } else {
        odd(4 * n / 3)
    }
}

/// First K = N/3 eigenvalues of the twisted Laplacian in degree 0 or 1.
pub fn circle_numeric_spectrum(profile: &MetricProfile, theta: f64, degree: usize, n: usize) -> Result<SpectrumTable> {
    circle_numeric_spectrum_with(profile, theta, degree, n, Some(refinement_size(n)))
}

pub fn circle_numeric_spectrum_with(
    profile: &MetricProfile,
    theta: f64,
    degree: usize,
    n: usize,
    refine: Option<usize>,
) -> Result<SpectrumTable> {
    profile.validate()?;
    if degree > 1 {
        return Err(Error::SpectrumUnavailable(format!("degree {degree} on a circle")));
    }
    if n < 9 {
        return Err(Error::TooFewModes(format!("N = {n} < 9")));
    }
    let n = odd(n);
    let k = n / 3;
    let ev = sorted_eigenvalues(profile, theta, n);
    let error_estimate = match refine {
        Some(m) => {
            let ev2 = sorted_eigenvalues(profile, theta, odd(m));
            ev[..k].iter().zip(&ev2[..k]).map(|(a, b)| (a - b).abs() / b.abs().max(1.0)).fold(0.0, f64::max)
        }
        None => f64::NAN,
    };
    let scale = ev[k - 1].abs().max(1.0);
    let entries = ev[..k]
        .iter()
        .map(|&e| SpectrumEntry {
            eigenvalue: if e.abs() < 1e-8 * scale.sqrt() { 0.0 } else { e },
            exact_over_4pi2: None,
            multiplicity: 1,
        })
        .collect();
    Ok(SpectrumTable {
        degree,
        dimension: 1,
        rank: 1,
        entries,
        truncation: Truncation::Numeric { n, modes: k, error_estimate, length: profile.length() },
        bundle: format!("circle-twist:{theta:.17e}"),
        presentation: format!("circle-profile:{:?}", profile),
        max_integrality_residual: 0.0,
    })
}

/// Eigenvalues of the non-symmetrized operators L₀ = −W⁻¹DW⁻¹D (functions) and
/// L₁ = −DW⁻¹DW⁻¹ (coefficients of 1-forms), for independent duality checks.
pub fn circle_direct_eigenvalues(profile: &MetricProfile, theta: f64, degree: usize, n: usize) -> Result<Vec<f64>> {
    profile.validate()?;
    let n = odd(n);
    let d = diff_matrix(n, theta);
    let winv = DMatrix::from_fn(n, n, |j, l| {
        if j == l {
            Complex64::new(1.0 / profile.w(j as f64 / n as f64), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let l = match degree {
        0 => -(&winv * &d * &winv * &d),
        1 => -(&d * &winv * &d * &winv),
        _ => return Err(Error::SpectrumUnavailable(format!("degree {degree} on a circle"))),
    };
    let schur = l.schur();
    let ev = schur.eigenvalues().ok_or_else(|| Error::SpectrumUnavailable("Schur form not triangular".into()))?;
    let mut out: Vec<f64> = ev.iter().map(|z| z.re).collect();
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(out)
}
