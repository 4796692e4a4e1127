//! Ruelle dynamical zeta function R_ρ(σ) = exp Ξ_ρ(σ) and the Fried identity.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::holonomy::HolonomyRep;
use crate::orbicryst::CheckedPresentation;
use crate::spectra::{betti_numbers, mode_model, spectra_for, HeatWeight};
use crate::torsion::{chi_prime, flat_torsion, log_graded_determinant, PoissonSmallTime, TORSION_CUTOFF};

use super::{attach_traces, default_l_max, enumerate_classes, group_family, GroupFamily};

/// One eigenphase e^{iθ} of the translation generator on the invariant part
/// of the fibre.
#[derive(Debug, Clone, Serialize)]
pub struct RuelleFactor {
    pub theta: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExponentCheck {
    pub sigma: f64,
    pub partial_sum: f64,
    /// log R from the closed form with exponent −1 and +1
    pub closed_minus: f64,
    pub closed_plus: f64,
}

/// R_ρ(σ) = Π_j |1 − e^{iθ_j − σℓ}|^{2w·mult_j}, or ≡ 1 when δ(G) ≥ 2.
#[derive(Debug, Clone, Serialize)]
pub struct RuelleZeta {
    pub family: GroupFamily,
    pub constant_one: bool,
    pub length: f64,
    pub factors: Vec<RuelleFactor>,
    pub exponent: i32,
    pub exponent_check: Option<ExponentCheck>,
    pub order_at_zero: i64,
    /// lim σ^{−r} R(σ) = C_ρ T(F)²
    pub leading_value: f64,
    pub leading_coeff: f64,
    pub torsion: f64,
    pub l_max: f64,
    /// (ℓ_[γ], Re Tr ρ(γ)·χ_orb(S¹\B)/m) for the non-elliptic classes up to l_max
    #[serde(skip)]
    pub series: Vec<(f64, f64)>,
    #[serde(skip)]
    rank: usize,
}

fn is_zero_phase(theta: f64) -> bool {
    let r = theta / (2.0 * PI);
    (r - r.round()).abs() < 1e-12
}

impl RuelleZeta {
    /// log R_ρ(σ) from the closed form.
    pub fn log_value(&self, sigma: f64) -> f64 {
        if self.constant_one {
            return 0.0;
        }
        let x = (-sigma * self.length).exp();
        self.factors
            .iter()
            .map(|f| {
                let mod_sq = 1.0 - 2.0 * x * f.theta.cos() + x * x;
                self.exponent as f64 * f.multiplicity as f64 * mod_sq.ln()
            })
            .sum()
    }

    pub fn value(&self, sigma: f64) -> f64 {
        if self.constant_one {
            1.0
        } else {
            self.log_value(sigma).exp()
        }
    }

    /// Ξ_ρ(σ) summed over classes with ℓ ≤ l_max, and a bound for the rest.
    pub fn partial_sum(&self, sigma: f64, l_max: f64) -> (f64, f64) {
        let value: f64 = self.series.iter().filter(|(l, _)| *l <= l_max).map(|(l, w)| w * (-sigma * l).exp()).sum();
        if self.constant_one || self.length == 0.0 {
            return (value, 0.0);
        }
        // ±k classes together carry at most 2·rank/k at length kℓ
        let k0 = (l_max / self.length).floor() + 1.0;
        let x = (-sigma * self.length).exp();
        let tail = 2.0 * self.rank as f64 * x.powf(k0) / (k0 * (1.0 - x));
        (value, tail)
    }
}

pub fn ruelle_zeta(p: &CheckedPresentation, rep: &HolonomyRep) -> Result<RuelleZeta> {
    ruelle_zeta_with(p, rep, default_l_max(p))
}

pub fn ruelle_zeta_with(p: &CheckedPresentation, rep: &HolonomyRep, l_max: f64) -> Result<RuelleZeta> {
    let family = group_family(p)?;
    if p.n % 2 == 0 {
        return Err(Error::EvenDimension(p.n));
    }
    let mut classes = enumerate_classes(p, l_max)?;
    attach_traces(p, rep, &mut classes)?;
    let series: Vec<(f64, f64)> = classes
        .iter()
        .filter(|c| !c.elliptic)
        .map(|c| (c.length, c.rho_trace.unwrap()[0] * c.zeta_weight()))
        .collect();
    let torsion = flat_torsion(p, rep)?.torsion;

    if family.fundamental_rank() >= 2 {
        return Ok(RuelleZeta {
            family,
            constant_one: true,
            length: 0.0,
            factors: vec![],
            exponent: -1,
            exponent_check: None,
            order_at_zero: 0,
            leading_value: 1.0,
            leading_coeff: 1.0 / (torsion * torsion),
            torsion,
            l_max,
            series,
            rank: rep.rank,
        });
    }

    let model = mode_model(p, rep)?;
    let length = p.covolume();
    let factors: Vec<RuelleFactor> = model
        .blocks
        .iter()
        .map(|b| RuelleFactor { theta: 2.0 * PI * b.mu[0], multiplicity: b.dim })
        .collect();
    let mut zeta = RuelleZeta {
        family,
        constant_one: false,
        length,
        factors,
        exponent: -1,
        exponent_check: None,
        order_at_zero: 0,
        leading_value: 1.0,
        leading_coeff: 1.0,
        torsion,
        l_max,
        series,
        rank: rep.rank,
    };
    // fix the exponent against the class series where both converge fast
    let sigma = 3.0 / length;
    let (partial, _) = zeta.partial_sum(sigma, l_max);
    zeta.exponent = -1;
    let minus = zeta.log_value(sigma);
    zeta.exponent = 1;
    let plus = zeta.log_value(sigma);
    zeta.exponent = if (partial - minus).abs() <= (partial - plus).abs() { -1 } else { 1 };
    zeta.exponent_check = Some(ExponentCheck { sigma, partial_sum: partial, closed_minus: minus, closed_plus: plus });

    let w = zeta.exponent as f64;
    let mut order = 0i64;
    let mut lead = 0.0f64;
    for f in &zeta.factors {
        if is_zero_phase(f.theta) {
            // 1 − e^{−σℓ} ~ σℓ
            order += zeta.exponent as i64 * 2 * f.multiplicity as i64;
            lead += w * 2.0 * f.multiplicity as f64 * length.ln();
        } else {
            lead += w * f.multiplicity as f64 * (2.0 - 2.0 * f.theta.cos()).ln();
        }
    }
    zeta.order_at_zero = order;
    zeta.leading_value = lead.exp();
    zeta.leading_coeff = zeta.leading_value / (torsion * torsion);
    Ok(zeta)
}

#[derive(Debug, Clone, Serialize)]
pub struct FriedRow {
    pub sigma: f64,
    pub log_ruelle: f64,
    /// log Π det(σ² + Δᵢ)^{(−1)ⁱi}
    pub log_graded_det: f64,
    pub elliptic_exponent: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FriedReport {
    pub constant_one: bool,
    pub acyclic: bool,
    pub torsion: f64,
    pub torsion_sq: f64,
    pub ruelle_at_zero: Option<f64>,
    pub relative_error_at_zero: Option<f64>,
    /// E = Σ_elliptic Tr ρ(γ)·vol(Γ(γ)\X(γ))/|δ(γ)|
    pub elliptic_term: f64,
    pub rows: Vec<FriedRow>,
    pub max_functional_deviation: f64,
    /// r_ρ from the closed form
    pub order_at_zero: i64,
    /// order of σ ↦ graded det(σ²) at 0, i.e. 2χ′
    pub graded_order: i64,
    pub leading_coeff: f64,
    pub tolerance_at_zero: f64,
    pub tolerance_functional: f64,
    pub pass: bool,
}

pub const DEFAULT_SIGMA_GRID: [f64; 5] = [0.05, 0.1, 0.2, 0.3, 0.5];

pub fn fried_check(
    p: &CheckedPresentation,
    rep: &HolonomyRep,
    sigma_grid: &[f64],
    tolerance_at_zero: f64,
    tolerance_functional: f64,
) -> Result<FriedReport> {
    let zeta = ruelle_zeta(p, rep)?;
    let betti = betti_numbers(p, rep)?;
    let acyclic = betti.iter().all(|&b| b == 0);
    let torsion = zeta.torsion;
    let torsion_sq = torsion * torsion;

    if zeta.constant_one {
        let exact_one = sigma_grid.iter().all(|&s| zeta.value(s) == 1.0) && zeta.value(0.0) == 1.0;
        let rel = (1.0 - torsion_sq).abs() / torsion_sq;
        return Ok(FriedReport {
            constant_one: true,
            acyclic,
            torsion,
            torsion_sq,
            ruelle_at_zero: Some(1.0),
            relative_error_at_zero: Some(rel),
            elliptic_term: 0.0,
            rows: vec![],
            max_functional_deviation: 0.0,
            order_at_zero: 0,
            graded_order: 0,
            leading_coeff: zeta.leading_coeff,
            tolerance_at_zero,
            tolerance_functional,
            pass: exact_one && (!acyclic || rel <= tolerance_at_zero) && zeta.series.iter().all(|(_, w)| *w == 0.0),
        });
    }

    let mut classes = enumerate_classes(p, 0.0)?;
    attach_traces(p, rep, &mut classes)?;
    let elliptic_term: f64 = classes
        .iter()
        .filter(|c| c.elliptic)
        .map(|c| c.rho_trace.unwrap()[0] * c.vol_centralizer_quotient / c.delta_gamma as f64)
        .sum();

    let tables = spectra_for(p, rep, TORSION_CUTOFF)?;
    let small = PoissonSmallTime::for_presentation(p, rep, HeatWeight::NSigned)?;
    let mut rows = Vec::new();
    for &s in sigma_grid {
        let lr = zeta.log_value(s);
        let gd = log_graded_determinant(&tables, &small, s * s)?;
        let e = s * elliptic_term;
        rows.push(FriedRow { sigma: s, log_ruelle: lr, log_graded_det: gd, elliptic_exponent: e, deviation: (lr - gd - e).abs() });
    }
    let max_dev = rows.iter().map(|r| r.deviation).fold(0.0, f64::max);
    let graded_order = 2 * chi_prime(&tables);
    let (r0, rel) = if acyclic {
        let r0 = zeta.value(0.0);
        (Some(r0), Some((r0 - torsion_sq).abs() / torsion_sq))
    } else {
        (None, None)
    };
    let pass = max_dev <= tolerance_functional
        && zeta.order_at_zero == graded_order
        && rel.map_or(true, |r| r <= tolerance_at_zero);
    Ok(FriedReport {
        constant_one: false,
        acyclic,
        torsion,
        torsion_sq,
        ruelle_at_zero: r0,
        relative_error_at_zero: rel,
        elliptic_term,
        rows,
        max_functional_deviation: max_dev,
        order_at_zero: zeta.order_at_zero,
        graded_order,
        leading_coeff: zeta.leading_coeff,
        tolerance_at_zero,
        tolerance_functional,
        pass,
    })
}
