//! Ray–Singer metric on the determinant line and its behaviour under a
//! constant rescaling g^F → c·g^F.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::holonomy::HolonomyRep;
use crate::linalg::{self, CMat};
use crate::numeric::rationalize;
use crate::orbicryst::{gauss_bonnet_check, CheckedPresentation};
use crate::rational::{q_to_string, Q};

use super::flat_torsion;

/// ‖·‖²_RS of the wedge of a fixed harmonic basis in every degree.
#[derive(Debug, Clone, Serialize)]
pub struct RaySingerMetricValue {
    pub log_rs_norm_sq: f64,
    /// log det of the L² Gram matrix of the harmonic basis, per degree
    pub l2_gram_logdets: Vec<f64>,
    pub log_torsion: f64,
}

impl RaySingerMetricValue {
    pub fn bookkeeping_residual(&self) -> f64 {
        let gram: f64 = self.l2_gram_logdets.iter().enumerate().map(|(i, g)| if i % 2 == 0 { *g } else { -g }).sum();
        (self.log_rs_norm_sq - 2.0 * self.log_torsion - gram).abs()
    }
}

/// Orthonormal (in C^r ⊗ Λᵖ) basis of invariant constant p-forms, i.e. the
/// harmonic forms, as columns.
pub fn harmonic_basis(p: &CheckedPresentation, rep: &HolonomyRep, degree: usize) -> CMat {
    let n = p.n;
    let r = rep.rank;
    let lambda_dim = crate::numeric::binomial(n, degree) as usize;
    let id_l = linalg::identity(lambda_dim);
    let mut ops: Vec<CMat> = Vec::new();
    if let Some(r1) = &p.rank_one {
        for h in &r1.h_names {
            ops.push(linalg::kron(&linalg::inverse(rep.generator(h)).unwrap(), &id_l));
        }
        ops.push(linalg::kron(&linalg::inverse(rep.generator("u")).unwrap(), &id_l));
    } else {
        for t in rep.lattice_images(p) {
            ops.push(linalg::kron(&linalg::inverse(&t).unwrap(), &id_l));
        }
        for (c, coset) in p.cosets.iter().enumerate() {
            let at = DMatrix::from_fn(n, n, |i, j| coset.linear[j][i] as f64);
            let comp = linalg::compound(&at, degree).map(|x| Complex64::new(x, 0.0));
            let g = linalg::inverse(&rep.image(p, &p.coset_element(c))).unwrap();
            ops.push(linalg::kron(&g, &comp));
        }
    }
    linalg::common_fixed_space(&ops, r * lambda_dim, 1e-8)
}

/// Gram matrix of `basis` for the L² product of constant forms with bundle
/// metric c·g^F.
pub fn l2_gram(p: &CheckedPresentation, basis: &CMat, degree: usize, c: f64) -> CMat {
    let gram_inv = p.lattice_gram_f64().try_inverse().expect("nondegenerate");
    let form = linalg::compound(&gram_inv, degree).map(|x| Complex64::new(x, 0.0));
    let r = basis.nrows() / form.nrows().max(1);
    let vol = p.covolume() / p.point_group_order() as f64;
    let metric = linalg::kron(&linalg::identity(r), &form);
    basis.adjoint() * metric * basis * Complex64::new(c * vol, 0.0)
}

fn log_det_hermitian(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone().symmetric_eigenvalues().iter().map(|x| x.ln()).sum()
}

pub fn ray_singer_metric(p: &CheckedPresentation, rep: &HolonomyRep, c: f64) -> Result<RaySingerMetricValue> {
    let log_torsion = flat_torsion(p, rep)?.torsion.ln();
    let l2_gram_logdets: Vec<f64> =
        (0..=p.n).map(|d| log_det_hermitian(&l2_gram(p, &harmonic_basis(p, rep, d), d, c))).collect();
    let gram: f64 = l2_gram_logdets.iter().enumerate().map(|(i, g)| if i % 2 == 0 { *g } else { -g }).sum();
    Ok(RaySingerMetricValue { log_rs_norm_sq: 2.0 * log_torsion + gram, l2_gram_logdets, log_torsion })
}

#[derive(Debug, Clone, Serialize)]
pub struct AnomalyReport {
    pub c: f64,
    /// log c coefficient of each degree's Gram determinant
    pub degree_coefficients: Vec<String>,
    /// log T(c·g^F) − log T(g^F)
    pub torsion_log_ratio: f64,
    /// log c coefficient of log(‖·‖′²/‖·‖²)
    pub lhs: String,
    /// Σ ρ_i χ_orb(Z_i)/m_i
    pub rhs: String,
    pub harmonic_dimensions: Vec<usize>,
    pub pass: bool,
}

pub fn anomaly_scale_check(p: &CheckedPresentation, rep: &HolonomyRep, c: f64) -> Result<AnomalyReport> {
    let base = ray_singer_metric(p, rep, 1.0)?;
    let scaled = ray_singer_metric(p, rep, c)?;
    let log_c = c.ln();
    let dims: Vec<usize> = (0..=p.n).map(|d| harmonic_basis(p, rep, d).ncols()).collect();
    let coeff = |a: f64, b: f64| -> Option<Q> {
        if log_c.abs() < 1e-12 {
            // c = 1 leaves nothing to measure; fall back to the dimension count
            return None;
        }
        rationalize((b - a) / log_c, 1000, 1e-8)
    };
    let mut degree_coefficients = Vec::new();
    let mut lhs: Option<Q> = Some(Q::from_integer(0.into()));
    for d in 0..=p.n {
        let k = coeff(base.l2_gram_logdets[d], scaled.l2_gram_logdets[d])
            .or_else(|| (log_c.abs() < 1e-12).then(|| Q::from_integer((dims[d] as i64).into())));
        degree_coefficients.push(k.as_ref().map_or("?".into(), q_to_string));
        lhs = match (lhs, k) {
            (Some(acc), Some(k)) => Some(if d % 2 == 0 { acc + k } else { acc - k }),
            _ => None,
        };
    }
    let torsion_log_ratio = scaled.log_torsion - base.log_torsion;
    let rhs = gauss_bonnet_check(p, rep)?.rhs;
    let pass = lhs.as_ref() == Some(&rhs) && torsion_log_ratio.abs() < 1e-12;
    Ok(AnomalyReport {
        c,
        degree_coefficients,
        torsion_log_ratio,
        lhs: lhs.as_ref().map_or("?".into(), q_to_string),
        rhs: q_to_string(&rhs),
        harmonic_dimensions: dims,
        pass,
    })
}
