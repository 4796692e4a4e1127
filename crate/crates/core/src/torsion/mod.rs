//! Zeta-regularized determinants, analytic torsion T(F) = exp(θ′(0)/2), the
//! graded determinant Π det(σ+Δᵢ)^{(−1)ⁱi}, Ray–Singer metrics and the
//! constant-rescaling anomaly.
//!
//! θ(s) = −ζ_N(s) with ζ_N(s) = Γ(s)⁻¹∫ t^{s−1} Trs[N e^{−tΔ}(1−P)] dt. The
//! integral is split at t = 1: for t ≥ 1 the spectrum is summed
//! (Σ w(λ)E₁(λ)); for t ≤ 1 the trace is written as its power terms
//! Σ c_α t^α plus an exponentially small remainder R(t), so that
//!
//! ζ_N′(0) = Σ_{α≠0} c_α/α + γ_E (c₀ − h) + ∫₀¹ R(t) dt/t + Σ_{λ>0} w(λ)E₁(λ),
//!
//! where h = Σ (−1)ᵖ p bₚ is the kernel contribution removed by 1 − P.

mod anomaly;
mod circle;
mod poisson;

pub use anomaly::*;
pub use circle::*;
pub use poisson::*;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::holonomy::HolonomyRep;
use crate::numeric::{expint_e1, integrate, Accumulator, EULER_GAMMA};
use crate::orbicryst::CheckedPresentation;
use crate::spectra::{spectra_for, HeatWeight, SpectrumTable};

/// Short-time side of a weighted heat trace on 0 < t ≤ 1.
pub trait SmallTimeTrace {
    /// (α, c_α): coefficients of t^α in the short-time expansion
    fn power_terms(&self) -> Vec<(f64, f64)>;
    /// what remains after the power terms, for 0 < t ≤ 1
    fn remainder(&self, t: f64) -> f64;
    /// smallest exponent scale d²: R(t) = O(e^{−d²/4t})
    fn gap(&self) -> f64;
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct ErrorBudget {
    /// neglected eigenvalues in the large-t sum
    pub truncation: f64,
    /// difference between two quadrature resolutions of ∫₀¹ R dt/t
    pub quadrature: f64,
    /// Richardson / refinement spread (numeric spectra only)
    pub extrapolation: f64,
    /// |spectral − short-time| trace at the split point t = 1
    pub split_mismatch: f64,
}

impl ErrorBudget {
    pub fn total(&self) -> f64 {
        self.truncation + self.quadrature + self.extrapolation
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ZetaResult {
    pub theta_prime_at_zero: f64,
    pub torsion: f64,
    pub chi_prime_top: i64,
    pub error_budget: ErrorBudget,
}

/// Σ (−1)ᵖ p dim ker Δₚ
pub fn chi_prime(tables: &[SpectrumTable]) -> i64 {
    tables
        .iter()
        .map(|t| {
            let s = if t.degree % 2 == 0 { 1 } else { -1 };
            s * t.degree as i64 * t.kernel_dimension() as i64
        })
        .sum()
}

/// ∫₀¹ e^{−σt} R(t) dt/t by t = e^{−u}; R decays like exp(−d²eᵘ/4).
fn remainder_integral(small: &dyn SmallTimeTrace, sigma: f64, panels: usize) -> f64 {
    let d2 = small.gap().max(1e-6);
    let upper = (4.0 * 60.0 / d2).ln().max(1.0);
    integrate(
        |u| {
            let t = (-u).exp();
            (-sigma * t).exp() * small.remainder(t)
        },
        0.0,
        upper,
        panels,
        16,
    )
}

fn spectral_terms(tables: &[SpectrumTable], weight: HeatWeight) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for t in tables {
        let w = weight.weight(t.degree, t.dimension);
        if w == 0.0 {
            continue;
        }
        out.extend(t.entries.iter().map(|e| (e.eigenvalue, w * e.multiplicity as f64)));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

fn large_t_tail(tables: &[SpectrumTable], weight: HeatWeight) -> f64 {
    tables.iter().map(|t| weight.weight(t.degree, t.dimension).abs() * t.tail_bound(1.0)).sum()
}

/// ζ_N′(0) from spectral tables (large t) and a short-time model (small t).
/// With `expected_kernel`, the tables' zero modes are checked against it.
pub fn zeta_determinant_with(
    tables: &[SpectrumTable],
    small: &dyn SmallTimeTrace,
    expected_kernel: Option<&[usize]>,
    budget: Option<f64>,
) -> Result<ZetaResult> {
    if let Some(k) = expected_kernel {
        let got: Vec<usize> = tables.iter().map(|t| t.kernel_dimension() as usize).collect();
        if got.as_slice() != k {
            return Err(Error::KernelMismatch(format!("tables have kernel {got:?}, expected {k:?}")));
        }
    }
    let weight = HeatWeight::NSigned;
    let h = chi_prime(tables) as f64;
    let terms = spectral_terms(tables, weight);

    let mut acc = Accumulator::new();
    let mut c0 = 0.0;
    for (alpha, c) in small.power_terms() {
        if alpha.abs() < 1e-12 {
            c0 += c;
        } else {
            acc.add(c / alpha);
        }
    }
    acc.add(EULER_GAMMA * (c0 - h));
    let quad = remainder_integral(small, 0.0, 48);
    let quad_coarse = remainder_integral(small, 0.0, 24);
    acc.add(quad);
    for &(lambda, w) in &terms {
        if lambda > 0.0 {
            acc.add(w * expint_e1(lambda));
        }
    }
    let zeta_prime = acc.value();

    // consistency at the split point: spectral and short-time traces must agree
    let spectral_at_1: f64 = terms.iter().map(|(l, w)| w * (-l).exp()).sum();
    let small_at_1: f64 = small.power_terms().iter().map(|(_, c)| c).sum::<f64>() + small.remainder(1.0);
    let eb = ErrorBudget {
        truncation: large_t_tail(tables, weight),
        quadrature: (quad - quad_coarse).abs(),
        extrapolation: 0.0,
        split_mismatch: (spectral_at_1 - small_at_1).abs(),
    };
    if let Some(b) = budget {
        if eb.total() > b {
            return Err(Error::BudgetExceeded(format!("error budget {:.3e} exceeds {b:.3e}", eb.total())));
        }
    }
    let theta_prime = -zeta_prime;
    Ok(ZetaResult {
        theta_prime_at_zero: theta_prime,
        torsion: (theta_prime / 2.0).exp(),
        chi_prime_top: h as i64,
        error_budget: eb,
    })
}

pub fn zeta_determinant(tables: &[SpectrumTable], small: &dyn SmallTimeTrace) -> Result<ZetaResult> {
    zeta_determinant_with(tables, small, None, None)
}

/// Cutoff radius used for torsion computations: E₁(4π²R²) is far below
/// double precision.
pub const TORSION_CUTOFF: f64 = 2.5;

/// T(F) for a flat or rank-one presentation.
pub fn flat_torsion(p: &CheckedPresentation, rep: &HolonomyRep) -> Result<ZetaResult> {
    let tables = spectra_for(p, rep, TORSION_CUTOFF)?;
    let small = PoissonSmallTime::for_presentation(p, rep, HeatWeight::NSigned)?;
    zeta_determinant_with(&tables, &small, None, Some(1e-9))
}

/// log Π_i det(σ+Δᵢ)^{(−1)ⁱi} for σ > 0, or for σ = 0 on acyclic tables
/// (the value is then θ′(0) = log T²).
pub fn log_graded_determinant(tables: &[SpectrumTable], small: &dyn SmallTimeTrace, sigma: f64) -> Result<f64> {
    let weight = HeatWeight::NSigned;
    let terms = spectral_terms(tables, weight);
    let has_kernel = terms.iter().any(|&(l, w)| l == 0.0 && w != 0.0);
    if let Some(&(l, _)) = terms.iter().find(|&&(l, w)| w != 0.0 && l + sigma <= 0.0) {
        if l > 0.0 || sigma < 0.0 || has_kernel {
            return Err(Error::SigmaAtPole(format!("σ = {sigma} meets the spectrum at −{l}")));
        }
    }
    let mut acc = Accumulator::new();
    for (alpha, c) in small.power_terms() {
        // Σ_j c_α (−σ)ʲ/(j!(α+j)), with γ_E in place of the pole when α+j = 0
        let mut term = 1.0;
        for j in 0..200 {
            if j > 0 {
                term *= -sigma / j as f64;
            }
            let a = alpha + j as f64;
            if a.abs() < 1e-12 {
                acc.add(EULER_GAMMA * c * term);
            } else {
                acc.add(c * term / a);
            }
            if term.abs() < 1e-18 && j as f64 > sigma.abs() {
                break;
            }
        }
    }
    acc.add(remainder_integral(small, sigma, 48));
    for &(lambda, w) in &terms {
        if lambda + sigma > 0.0 {
            acc.add(w * expint_e1(lambda + sigma));
        } else if sigma == 0.0 && lambda == 0.0 {
            // projected out: the kernel enters through −γ_E·h
            acc.add(-EULER_GAMMA * w);
        }
    }
    Ok(-acc.value())
}

#[derive(Debug, Clone, Serialize)]
pub struct GradedDeterminant {
    pub sigma: f64,
    pub value: f64,
    pub log_value: f64,
    /// χ′_top from kernel counts
    pub leading_order: i64,
    /// lim σ^{−χ′} · det, extrapolated from small σ
    pub leading_coefficient: f64,
}

pub fn graded_determinant(tables: &[SpectrumTable], small: &dyn SmallTimeTrace, sigma: f64) -> Result<GradedDeterminant> {
    let log_value = log_graded_determinant(tables, small, sigma)?;
    let order = chi_prime(tables);
    let lead = leading_coefficient(tables, small, order)?;
    Ok(GradedDeterminant { sigma, value: log_value.exp(), log_value, leading_order: order, leading_coefficient: lead })
}

/// Extrapolates log det(σ) − χ′ log σ to σ = 0 (Richardson in σ).
fn leading_coefficient(tables: &[SpectrumTable], small: &dyn SmallTimeTrace, order: i64) -> Result<f64> {
    let f = |s: f64| -> Result<f64> { Ok(log_graded_determinant(tables, small, s)? - order as f64 * s.ln()) };
    let h = 1e-3;
    let (a, b, c) = (f(h)?, f(2.0 * h)?, f(4.0 * h)?);
    Ok(((8.0 * a - 6.0 * b + c) / 3.0).exp())
}

/// Leading order and coefficient of σ ↦ graded determinant near 0.
pub fn graded_leading(tables: &[SpectrumTable], small: &dyn SmallTimeTrace) -> Result<(i64, f64)> {
    let order = chi_prime(tables);
    Ok((order, leading_coefficient(tables, small, order)?))
}
