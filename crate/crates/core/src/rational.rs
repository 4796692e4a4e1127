//! Exact rational and integer linear algebra for small matrices.
//!
//! Matrices are row-major `Vec<Vec<_>>`; dimensions here never exceed 3 or 4,
//! so nothing is tuned for size.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Integer, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;
pub type IMat = Vec<Vec<i64>>;
pub type QMat = Vec<Vec<Q>>;
pub type QVec = Vec<Q>;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `"3"`, `"-1/2"` or a decimal such as `"0.25"`.
pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().map_err(|_| Error::Parse(format!("bad rational '{s}'")))?;
        let b: BigInt = b.trim().parse().map_err(|_| Error::Parse(format!("bad rational '{s}'")))?;
        if b.is_zero() {
            return Err(Error::Parse(format!("zero denominator in '{s}'")));
        }
        return Ok(Q::new(a, b));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        let neg = ip.trim_start().starts_with('-');
        let digits = format!("{}{}", ip.trim_start_matches(['-', '+']), fp);
        let n: BigInt = digits.parse().map_err(|_| Error::Parse(format!("bad decimal '{s}'")))?;
        let d = num::pow(BigInt::from(10), fp.len());
        let v = Q::new(n, d);
        return Ok(if neg { -v } else { v });
    }
    let n: BigInt = s.parse().map_err(|_| Error::Parse(format!("bad integer '{s}'")))?;
    Ok(Q::from_integer(n))
}

pub fn q_to_f64(x: &Q) -> f64 {
    let n = x.numer().to_f64().unwrap_or(f64::NAN);
    let d = x.denom().to_f64().unwrap_or(f64::NAN);
    n / d
}

pub fn q_to_string(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Fractional part in [0, 1).
pub fn frac(x: &Q) -> Q {
    x - x.floor()
}

pub fn is_integer_vec(v: &[Q]) -> bool {
    v.iter().all(|x| x.is_integer())
}

/// Exact square root of a nonnegative rational if it is a perfect square.
pub fn sqrt_exact(x: &Q) -> Option<Q> {
    if x.is_negative() {
        return None;
    }
    let n = x.numer().sqrt();
    let d = x.denom().sqrt();
    if &(&n * &n) == x.numer() && &(&d * &d) == x.denom() {
        Some(Q::new(n, d))
    } else {
        None
    }
}

pub fn imat_identity(n: usize) -> IMat {
    (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect()
}

pub fn imat_mul(a: &IMat, b: &IMat) -> IMat {
    let (n, m, p) = (a.len(), b.len(), b.first().map_or(0, |r| r.len()));
    let mut c = vec![vec![0i64; p]; n];
    for i in 0..n {
        for k in 0..m {
            if a[i][k] == 0 {
                continue;
            }
            for j in 0..p {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

pub fn imat_transpose(a: &IMat) -> IMat {
    let n = a.len();
    let m = a.first().map_or(0, |r| r.len());
    (0..m).map(|j| (0..n).map(|i| a[i][j]).collect()).collect()
}

pub fn imat_to_q(a: &IMat) -> QMat {
    a.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect()
}

pub fn imat_det(a: &IMat) -> i64 {
    let d = qmat_det(&imat_to_q(a));
    d.to_integer().to_i64().expect("integer determinant")
}

/// Inverse of a unimodular integer matrix.
pub fn imat_inverse(a: &IMat) -> Option<IMat> {
    let inv = qmat_inverse(&imat_to_q(a))?;
    let mut out = vec![vec![0i64; a.len()]; a.len()];
    for (i, row) in inv.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            if !x.is_integer() {
                return None;
            }
            out[i][j] = x.to_integer().to_i64()?;
        }
    }
    Some(out)
}

pub fn imat_mul_qvec(a: &IMat, v: &[Q]) -> QVec {
    a.iter()
        .map(|row| row.iter().zip(v).fold(Q::zero(), |acc, (&x, y)| acc + y * q(x)))
        .collect()
}

pub fn imat_mul_ivec(a: &IMat, v: &[i64]) -> Vec<i64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

pub fn qmat_identity(n: usize) -> QMat {
    (0..n).map(|i| (0..n).map(|j| if i == j { Q::one() } else { Q::zero() }).collect()).collect()
}

pub fn qmat_mul(a: &QMat, b: &QMat) -> QMat {
    let (n, m, p) = (a.len(), b.len(), b.first().map_or(0, |r| r.len()));
    let mut c = vec![vec![Q::zero(); p]; n];
    for i in 0..n {
        for k in 0..m {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..p {
                c[i][j] += &a[i][k] * &b[k][j];
            }
        }
    }
    c
}

pub fn qmat_transpose(a: &QMat) -> QMat {
    let n = a.len();
    let m = a.first().map_or(0, |r| r.len());
    (0..m).map(|j| (0..n).map(|i| a[i][j].clone()).collect()).collect()
}

pub fn qmat_mul_vec(a: &QMat, v: &[Q]) -> QVec {
    a.iter().map(|row| row.iter().zip(v).fold(Q::zero(), |acc, (x, y)| acc + x * y)).collect()
}

pub fn qvec_sub(a: &[Q], b: &[Q]) -> QVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn qvec_add(a: &[Q], b: &[Q]) -> QVec {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn qvec_scale(a: &[Q], s: &Q) -> QVec {
    a.iter().map(|x| x * s).collect()
}

/// xᵀ G y
pub fn qform(g: &QMat, x: &[Q], y: &[Q]) -> Q {
    let gy = qmat_mul_vec(g, y);
    x.iter().zip(&gy).fold(Q::zero(), |acc, (a, b)| acc + a * b)
}

pub fn qmat_to_f64(a: &QMat) -> Vec<Vec<f64>> {
    a.iter().map(|r| r.iter().map(q_to_f64).collect()).collect()
}

/// Gaussian elimination to reduced row echelon form; returns pivot columns.
pub fn qmat_rref(a: &mut QMat) -> Vec<usize> {
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for x in a[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..cols {
                    let d = &f * &a[r][j];
                    a[i][j] -= d;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn qmat_rank(a: &QMat) -> usize {
    let mut b = a.clone();
    qmat_rref(&mut b).len()
}

pub fn qmat_det(a: &QMat) -> Q {
    let n = a.len();
    let mut m = a.clone();
    let mut det = Q::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !m[i][c].is_zero()) else { return Q::zero() };
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= &m[c][c];
        for i in c + 1..n {
            if m[i][c].is_zero() {
                continue;
            }
            let f = &m[i][c] / &m[c][c];
            for j in c..n {
                let d = &f * &m[c][j];
                m[i][j] -= d;
            }
        }
    }
    det
}

pub fn qmat_inverse(a: &QMat) -> Option<QMat> {
    let n = a.len();
    let mut aug: QMat = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            row
        })
        .collect();
    let piv = qmat_rref(&mut aug);
    if piv.len() < n || piv[n - 1] != n - 1 {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Basis of the right kernel {x : A x = 0}.
pub fn qmat_kernel(a: &QMat, cols: usize) -> Vec<QVec> {
    let mut m = a.clone();
    let piv = qmat_rref(&mut m);
    let free: Vec<usize> = (0..cols).filter(|c| !piv.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Q::zero(); cols];
            v[f] = Q::one();
            for (r, &pc) in piv.iter().enumerate() {
                v[pc] = -m[r][f].clone();
            }
            v
        })
        .collect()
}

/// One solution of A x = b over Q, if any.
pub fn qmat_solve(a: &QMat, b: &[Q]) -> Option<QVec> {
    let cols = a.first().map_or(0, |r| r.len());
    let mut aug: QMat = a
        .iter()
        .zip(b)
        .map(|(r, bi)| {
            let mut row = r.clone();
            row.push(bi.clone());
            row
        })
        .collect();
    let piv = qmat_rref(&mut aug);
    if piv.contains(&cols) {
        return None;
    }
    let mut x = vec![Q::zero(); cols];
    for (r, &pc) in piv.iter().enumerate() {
        x[pc] = aug[r][cols].clone();
    }
    Some(x)
}

/// Smith normal form: returns (U, D, V) with U·M·V = D diagonal,
/// d₀ | d₁ | …, nonnegative, U and V unimodular.
pub fn smith_normal_form(m: &IMat) -> (IMat, IMat, IMat) {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut d: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut u: Vec<Vec<i128>> = (0..rows).map(|i| (0..rows).map(|j| (i == j) as i128).collect()).collect();
    let mut v: Vec<Vec<i128>> = (0..cols).map(|i| (0..cols).map(|j| (i == j) as i128).collect()).collect();

    let mut t = 0;
    while t < rows.min(cols) {
        // smallest nonzero entry in the trailing block becomes the pivot
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if d[i][j] != 0 && best.map_or(true, |(bi, bj)| d[i][j].abs() < d[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        d.swap(t, pi);
        u.swap(t, pi);
        for row in d.iter_mut() {
            row.swap(t, pj);
        }
        for row in v.iter_mut() {
            row.swap(t, pj);
        }

        let mut clean = true;
        for i in t + 1..rows {
            let f = d[i][t].div_euclid(d[t][t]);
            if f != 0 {
                for j in 0..cols {
                    d[i][j] -= f * d[t][j];
                }
                for j in 0..rows {
                    u[i][j] -= f * u[t][j];
                }
            }
            if d[i][t] != 0 {
                clean = false;
            }
        }
        for j in t + 1..cols {
            let f = d[t][j].div_euclid(d[t][t]);
            if f != 0 {
                for i in 0..rows {
                    d[i][j] -= f * d[i][t];
                }
                for i in 0..cols {
                    v[i][j] -= f * v[i][t];
                }
            }
            if d[t][j] != 0 {
                clean = false;
            }
        }
        if !clean {
            continue;
        }
        // divisibility: fold an offending row into the pivot row and retry
        let mut offender = None;
        'outer: for i in t + 1..rows {
            for j in t + 1..cols {
                if d[i][j] % d[t][t] != 0 {
                    offender = Some(i);
                    break 'outer;
                }
            }
        }
        if let Some(i) = offender {
            for j in 0..cols {
                d[t][j] += d[i][j];
            }
            for j in 0..rows {
                u[t][j] += u[i][j];
            }
            continue;
        }
        if d[t][t] < 0 {
            for j in 0..cols {
                d[t][j] = -d[t][j];
            }
            for j in 0..rows {
                u[t][j] = -u[t][j];
            }
        }
        t += 1;
    }
    let cast = |a: Vec<Vec<i128>>| -> IMat { a.into_iter().map(|r| r.into_iter().map(|x| x as i64).collect()).collect() };
    (cast(u), cast(d), cast(v))
}

/// Integer solutions of M x = b (b rational): a particular solution and a
/// basis of the integer kernel, or None if no integer solution exists.
pub fn integer_affine_solutions(m: &IMat, b: &[Q]) -> Option<(QVec, Vec<Vec<i64>>)> {
    let cols = m.first().map_or(0, |r| r.len());
    let (u, d, v) = smith_normal_form(m);
    let ub = imat_mul_qvec(&u, b);
    let r = (0..d.len().min(cols)).take_while(|&i| d[i][i] != 0).count();
    let mut y = vec![Q::zero(); cols];
    for (i, ubi) in ub.iter().enumerate() {
        if i < r {
            let yi = ubi / q(d[i][i]);
            if !yi.is_integer() {
                return None;
            }
            y[i] = yi;
        } else if !ubi.is_zero() {
            return None;
        }
    }
    let x = imat_mul_qvec(&v, &y);
    let kernel = (r..cols).map(|j| v.iter().map(|row| row[j]).collect()).collect();
    Some((x, kernel))
}

pub fn gcd_slice(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |g, &x| g.gcd(&x))
}

pub fn lcm_q_denominators(v: &[Q]) -> BigInt {
    v.iter().fold(BigInt::one(), |l, x| l.lcm(x.denom()))
}
