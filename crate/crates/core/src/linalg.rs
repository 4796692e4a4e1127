//! Complex matrix helpers built on nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rational::{imat_det, IMat};

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn identity(r: usize) -> CMat {
    CMat::identity(r, r)
}

pub fn deviation_from_identity(m: &CMat) -> f64 {
    max_abs(&(m - identity(m.nrows())))
}

pub fn is_unitary(m: &CMat, tol: f64) -> bool {
    m.is_square() && deviation_from_identity(&(m.adjoint() * m)) <= tol
}

pub fn trace(m: &CMat) -> Complex64 {
    m.diagonal().iter().sum()
}

pub fn inverse(m: &CMat) -> Option<CMat> {
    m.clone().try_inverse()
}

/// Orthonormal basis (columns) of {x : M x = 0}, singular values below `tol`
/// counted as zero.
pub fn null_space(m: &CMat, tol: f64) -> CMat {
    let cols = m.ncols();
    let mut a = m.clone();
    if a.nrows() < cols {
        a = a.resize_vertically(cols, Complex64::new(0.0, 0.0));
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let idx: Vec<usize> = (0..cols).filter(|&i| svd.singular_values[i] <= tol).collect();
    let mut out = CMat::zeros(cols, idx.len());
    for (k, &i) in idx.iter().enumerate() {
        for j in 0..cols {
            out[(j, k)] = vt[(i, j)].conj();
        }
    }
    out
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    DMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Orthonormal basis of the common fixed space of `mats`.
pub fn common_fixed_space(mats: &[CMat], r: usize, tol: f64) -> CMat {
    if mats.is_empty() {
        return identity(r);
    }
    let mut stacked = CMat::zeros(r * mats.len(), r);
    for (k, m) in mats.iter().enumerate() {
        let d = m - identity(r);
        stacked.view_mut((k * r, 0), (r, r)).copy_from(&d);
    }
    null_space(&stacked, tol)
}

/// A joint eigenspace of a commuting family of normal matrices.
#[derive(Debug, Clone)]
pub struct JointEigenspace {
    pub eigenvalues: Vec<Complex64>,
    /// r × d orthonormal columns
    pub basis: CMat,
}

/// Simultaneous diagonalization of commuting normal matrices.
pub fn joint_eigenspaces(mats: &[CMat], r: usize, tol: f64) -> Result<Vec<JointEigenspace>> {
    for (i, a) in mats.iter().enumerate() {
        for (j, b) in mats.iter().enumerate().skip(i + 1) {
            let comm = a * b - b * a;
            if max_abs(&comm) > tol {
                return Err(Error::NonCommutingLatticeImages(format!(
                    "images {i} and {j} fail to commute (residual {:.2e})",
                    max_abs(&comm)
                )));
            }
        }
    }
    if mats.is_empty() {
        return Ok(vec![JointEigenspace { eigenvalues: vec![], basis: identity(r) }]);
    }
    // a generic combination separates joint eigenvalues
    let coeffs = [c(1.0, 0.342), c(0.577, -0.211), c(-0.413, 0.733), c(0.29, 0.97)];
    let mut comb = CMat::zeros(r, r);
    for (k, m) in mats.iter().enumerate() {
        comb += m * (coeffs[k % coeffs.len()] * (1.0 + k as f64 * 0.137));
    }
    let (qmat, _) = comb.schur().unpack();
    let mut spaces: Vec<(Vec<Complex64>, Vec<usize>)> = Vec::new();
    for j in 0..r {
        let v = qmat.column(j);
        let eig: Vec<Complex64> = mats.iter().map(|m| (v.adjoint() * m * v)[(0, 0)]).collect();
        match spaces.iter_mut().find(|(e, _)| e.iter().zip(&eig).all(|(a, b)| (a - b).norm() < 1e-7)) {
            Some((_, cols)) => cols.push(j),
            None => spaces.push((eig, vec![j])),
        }
    }
    let mut out = Vec::new();
    for (eig, cols) in spaces {
        let basis = CMat::from_fn(r, cols.len(), |i, k| qmat[(i, cols[k])]);
        for (m, l) in mats.iter().zip(&eig) {
            let res = max_abs(&(m * &basis - &basis * *l));
            if res > 1e-7_f64.max(tol) {
                return Err(Error::NonCommutingLatticeImages(format!(
                    "lattice images not simultaneously diagonalizable (residual {res:.2e})"
                )));
            }
        }
        out.push(JointEigenspace { eigenvalues: eig, basis });
    }
    Ok(out)
}

/// All p-element subsets of 0..n in lexicographic order.
pub fn subsets(n: usize, p: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, p: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == p {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, p, &mut Vec::new(), &mut out);
    out
}

/// e_p(A): sum of the p×p principal minors, i.e. Tr Λᵖ(A).
pub fn principal_minor_sums(a: &IMat) -> Vec<i64> {
    let n = a.len();
    (0..=n)
        .map(|p| {
            subsets(n, p)
                .iter()
                .map(|s| {
                    if s.is_empty() {
                        return 1;
                    }
                    let minor: IMat = s.iter().map(|&i| s.iter().map(|&j| a[i][j]).collect()).collect();
                    imat_det(&minor)
                })
                .sum()
        })
        .collect()
}

/// p-th compound matrix of a real square matrix, rows/columns indexed by
/// lexicographically ordered p-subsets.
pub fn compound(a: &DMatrix<f64>, p: usize) -> DMatrix<f64> {
    let n = a.nrows();
    let idx = subsets(n, p);
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| {
        if p == 0 {
            return 1.0;
        }
        let minor = DMatrix::from_fn(p, p, |r, s| a[(idx[i][r], idx[j][s])]);
        minor.determinant()
    })
}
