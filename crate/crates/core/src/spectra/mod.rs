//! Hodge spectra of twisted forms, weighted heat traces, McKean–Singer and
//! the small-time Gauss–Bonnet limit.

mod flat;
mod numeric;

pub use flat::*;
pub use numeric::*;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::holonomy::HolonomyRep;
use crate::numeric::{binomial, integrate, Accumulator};
use crate::orbicryst::{self, CheckedPresentation};
use crate::rational::{q_to_f64, Q};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub eigenvalue: f64,
    /// eigenvalue / 4π² as an exact rational when the character shifts are rational
    #[serde(skip)]
    pub exact_over_4pi2: Option<Q>,
    pub multiplicity: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Truncation {
    /// exact below the eigenvalue cutoff 4π²R²
    Exact { cutoff_radius: f64, eigenvalue_cutoff: f64, covolume: f64, dual_diameter: f64 },
    /// spectral collocation with N points; `modes` eigenvalues kept
    Numeric { n: usize, modes: usize, error_estimate: f64, length: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub degree: usize,
    pub dimension: usize,
    /// fibre dimension of the (properized) bundle
    pub rank: usize,
    pub entries: Vec<SpectrumEntry>,
    pub truncation: Truncation,
    /// hash of the representation used
    pub bundle: String,
    pub presentation: String,
    pub max_integrality_residual: f64,
}

impl SpectrumTable {
    pub fn is_exact(&self) -> bool {
        matches!(self.truncation, Truncation::Exact { .. })
    }

    pub fn kernel_dimension(&self) -> u64 {
        self.entries.iter().filter(|e| e.eigenvalue == 0.0).map(|e| e.multiplicity).sum()
    }

    /// Upper bound for Σ_{λ beyond truncation} mult·e^{−tλ}.
    pub fn tail_bound(&self, t: f64) -> f64 {
        match &self.truncation {
            Truncation::Exact { cutoff_radius, covolume, dual_diameter, .. } => {
                let n = self.dimension;
                let unit_ball = PI.powf(n as f64 / 2.0) / gamma_half_integer(n);
                let k = self.rank as f64 * binomial(n, self.degree) * unit_ball * covolume;
                let a = 4.0 * PI * PI * t;
                let (s0, d) = (*cutoff_radius, *dual_diameter);
                let width = 14.0 / a.sqrt() + 2.0;
                // ∫_{s0}^∞ 2as e^{−as²} k (s+d)ⁿ ds
                integrate(|s| 2.0 * a * s * (-a * s * s).exp() * k * (s + d).powi(n as i32), s0, s0 + width, 200, 16)
            }
            Truncation::Numeric { modes, length, .. } => {
                let lmax = self.entries.last().map_or(0.0, |e| e.eigenvalue);
                let step = 2.0 * PI / length;
                let _ = modes;
                // remaining eigenvalues come in pairs beyond √λ_max with spacing ≥ 2π/L asymptotically
                (0..200)
                    .map(|j| {
                        let s = lmax.sqrt() + step * (j as f64) * 0.5;
                        2.0 * (-t * s * s).exp()
                    })
                    .sum()
            }
        }
    }
}

/// Γ(n/2 + 1)
fn gamma_half_integer(n: usize) -> f64 {
    let mut g = if n % 2 == 0 { 1.0 } else { PI.sqrt() / 2.0 };
    let mut x = if n % 2 == 0 { 1.0 } else { 1.5 };
    while x < n as f64 / 2.0 + 1.0 - 1e-9 {
        g *= x;
        x += 1.0;
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatWeight {
    Plain,
    Signed,
    NSigned,
    NMinusHalfDimSigned,
}

impl HeatWeight {
    pub fn weight(self, p: usize, n: usize) -> f64 {
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        match self {
            HeatWeight::Plain => 1.0,
            HeatWeight::Signed => sign,
            HeatWeight::NSigned => sign * p as f64,
            HeatWeight::NMinusHalfDimSigned => sign * (p as f64 - n as f64 / 2.0),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Self::Plain),
            "signed" => Ok(Self::Signed),
            "n_signed" | "N_signed" => Ok(Self::NSigned),
            "n_minus_half_dim_signed" | "N_minus_half_dim_signed" => Ok(Self::NMinusHalfDimSigned),
            _ => Err(Error::Parse(format!("unknown heat weight '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HeatTrace {
    pub value: f64,
    pub tail_bound: f64,
}

/// Σ_p w(p) Σ_λ mult·e^{−tλ}, summed in ascending eigenvalue order.
pub fn heat_trace(tables: &[SpectrumTable], t: f64, weight: HeatWeight, tolerance: Option<f64>) -> Result<HeatTrace> {
    if !(t > 0.0) {
        return Err(Error::Parse(format!("heat trace needs t > 0, got {t}")));
    }
    let mut acc = Accumulator::new();
    let mut tail = 0.0;
    for table in tables {
        let w = weight.weight(table.degree, table.dimension);
        if w == 0.0 {
            continue;
        }
        for e in &table.entries {
            acc.add(w * e.multiplicity as f64 * (-t * e.eigenvalue).exp());
        }
        tail += w.abs() * table.tail_bound(t);
    }
    if let Some(tol) = tolerance {
        if tail > tol {
            return Err(Error::TruncationInsufficient { bound: tail, tolerance: tol });
        }
    }
    Ok(HeatTrace { value: acc.value(), tail_bound: tail })
}

/// Cutoff radius making the neglected heat-trace tail negligible at `t_min`.
pub fn default_cutoff(t_min: f64) -> f64 {
    (45.0 / (4.0 * PI * PI * t_min)).sqrt() + 1.5
}

/// All-degree spectra for flat or rank-one presentations.
pub fn spectra_for(p: &CheckedPresentation, rep: &HolonomyRep, cutoff: f64) -> Result<Vec<SpectrumTable>> {
    flat_spectra_all(p, rep, cutoff)
}

pub fn euler_characteristic(betti: &[usize]) -> i64 {
    betti.iter().enumerate().map(|(i, &b)| if i % 2 == 0 { b as i64 } else { -(b as i64) }).sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct McKeanSingerReport {
    pub chi_top: i64,
    pub t_grid: Vec<f64>,
    pub supertraces: Vec<f64>,
    pub tail_bounds: Vec<f64>,
    pub max_deviation: f64,
    pub pass: bool,
}

pub fn mckean_singer_check(
    p: &CheckedPresentation,
    rep: &HolonomyRep,
    t_grid: &[f64],
    cutoff: Option<f64>,
    tolerance: f64,
) -> Result<McKeanSingerReport> {
    let tmin = t_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let tables = spectra_for(p, rep, cutoff.unwrap_or_else(|| default_cutoff(tmin)))?;
    let chi_top = euler_characteristic(&betti_numbers(p, rep)?);
    let mut supertraces = Vec::new();
    let mut tails = Vec::new();
    let mut max_dev: f64 = 0.0;
    let mut pass = true;
    for &t in t_grid {
        let h = heat_trace(&tables, t, HeatWeight::Signed, None)?;
        let dev = (h.value - chi_top as f64).abs();
        max_dev = max_dev.max(dev);
        pass &= dev <= tolerance.max(h.tail_bound) && h.tail_bound <= tolerance;
        supertraces.push(h.value);
        tails.push(h.tail_bound);
    }
    Ok(McKeanSingerReport { chi_top, t_grid: t_grid.to_vec(), supertraces, tail_bounds: tails, max_deviation: max_dev, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct GbcLimitReport {
    pub t_grid: Vec<f64>,
    pub supertraces: Vec<f64>,
    /// intercept of a least-squares line through the smallest-t half of the grid
    pub fitted_limit: f64,
    pub strata_sum: f64,
    pub strata_sum_exact: String,
    pub max_deviation: f64,
    pub pass: bool,
}

pub fn gbc_limit_check(p: &CheckedPresentation, rep: &HolonomyRep, t_grid: &[f64], tolerance: f64) -> Result<GbcLimitReport> {
    let mut grid = t_grid.to_vec();
    grid.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let tmin = grid.last().copied().ok_or_else(|| Error::Parse("empty t grid".into()))?;
    let tables = spectra_for(p, rep, default_cutoff(tmin))?;
    let gb = orbicryst::gauss_bonnet_check(p, rep)?;
    let target = q_to_f64(&gb.rhs);
    let mut values = Vec::new();
    for &t in &grid {
        values.push(heat_trace(&tables, t, HeatWeight::Signed, None)?.value);
    }
    let k = values.len().div_ceil(2).max(1);
    let (ts, vs) = (&grid[grid.len() - k..], &values[values.len() - k..]);
    let fitted = if k >= 2 {
        let mt = ts.iter().sum::<f64>() / k as f64;
        let mv = vs.iter().sum::<f64>() / k as f64;
        let sxx: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
        let sxy: f64 = ts.iter().zip(vs).map(|(t, v)| (t - mt) * (v - mv)).sum();
        let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        mv - slope * mt
    } else {
        vs[0]
    };
    let max_dev = values.iter().map(|v| (v - target).abs()).fold((fitted - target).abs(), f64::max);
    Ok(GbcLimitReport {
        t_grid: grid,
        supertraces: values,
        fitted_limit: fitted,
        strata_sum: target,
        strata_sum_exact: crate::rational::q_to_string(&gb.rhs),
        max_deviation: max_dev,
        pass: max_dev <= tolerance,
    })
}

/// Multiplicity sum of all entries with eigenvalue below `lambda`.
pub fn counting_function(table: &SpectrumTable, lambda: f64) -> u64 {
    table.entries.iter().filter(|e| e.eigenvalue <= lambda).map(|e| e.multiplicity).sum()
}
