//! Quotient presentations, singular strata, orbifold Euler characteristics and
//! the Gauss–Bonnet identity χ_top(Z,F) = Σ ρ_i χ_orb(Z_i)/m_i.

mod presentation;
mod strata;

pub use presentation::*;
pub use strata::*;

use num::{One, Zero};
use serde::Serialize;

use crate::error::Result;
use crate::holonomy::HolonomyRep;
use crate::numeric::{near_integer, rationalize};
use crate::rational::{q, q_to_string, Q};
use crate::spectra;

#[derive(Debug, Clone, Serialize)]
pub struct GaussBonnetTerm {
    pub stratum: usize,
    pub rho_trace: [f64; 2],
    pub chi_orb: String,
    pub multiplicity: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GaussBonnetReport {
    pub lhs: i64,
    #[serde(serialize_with = "ser_q")]
    pub rhs: Q,
    /// false when some stratum trace was not an integer and the sum was
    /// recognised from floating point
    pub rhs_exact: bool,
    pub pass: bool,
    pub betti: Vec<usize>,
    pub terms: Vec<GaussBonnetTerm>,
}

fn ser_q<S: serde::Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&q_to_string(x))
}

pub fn gauss_bonnet_check(p: &CheckedPresentation, rep: &HolonomyRep) -> Result<GaussBonnetReport> {
    let betti = spectra::betti_numbers(p, rep)?;
    let lhs: i64 = betti.iter().enumerate().map(|(i, &b)| if i % 2 == 0 { b as i64 } else { -(b as i64) }).sum();

    let strata = if p.is_rank_one() {
        // the effective quotient is a circle: only the main stratum, χ_orb = 0
        Vec::new()
    } else {
        with_traces(p, &enumerate_strata(p)?, rep)
    };
    let mut exact = Q::zero();
    let mut float = 0.0f64;
    let mut all_exact = true;
    let mut terms = Vec::new();
    for s in &strata {
        let chi = chi_orb(p, s).value;
        let tr = s.rho_trace.expect("traces filled");
        terms.push(GaussBonnetTerm {
            stratum: s.index,
            rho_trace: [tr.re, tr.im],
            chi_orb: q_to_string(&chi),
            multiplicity: s.multiplicity,
        });
        if chi.is_zero() {
            continue;
        }
        let weight = &chi / q(s.multiplicity as i64);
        match (near_integer(tr.re, 1e-9), tr.im.abs() < 1e-9) {
            (Some(k), true) => exact += weight * q(k),
            _ => {
                all_exact = false;
                float += tr.re * crate::rational::q_to_f64(&weight);
            }
        }
    }
    let rhs = if all_exact {
        exact
    } else {
        let f = crate::rational::q_to_f64(&exact) + float;
        rationalize(f, 10_000, 1e-9).unwrap_or_else(|| Q::new(((f * 1e9).round() as i64).into(), 1_000_000_000i64.into()))
    };
    let pass = rhs == q(lhs) && (all_exact || rhs.denom().is_one());
    Ok(GaussBonnetReport { lhs, rhs, rhs_exact: all_exact, pass, betti, terms })
}
