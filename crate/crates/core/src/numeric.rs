//! Small numerical kernels: compensated summation, E₁, Gauss–Legendre
//! quadrature and rational recognition of floats.

use num::bigint::BigInt;

use crate::rational::Q;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut acc = Accumulator::new();
    for x in it {
        acc.add(x);
    }
    acc.value()
}

/// Exponential integral E₁(x) = ∫₁^∞ e^{-xt}/t dt for x > 0.
pub fn expint_e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1 needs x > 0, got {x}");
    if x <= 1.0 {
        // −γ − ln x − Σ_{k≥1} (−x)^k / (k·k!)
        let mut term = 1.0;
        let mut acc = Accumulator::new();
        for k in 1..200 {
            term *= -x / k as f64;
            let t = term / k as f64;
            acc.add(t);
            if t.abs() < 1e-18 {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - acc.value()
    } else if x > 700.0 {
        0.0
    } else {
        // modified Lentz on the continued fraction e^{-x}/(x+1-1/(x+3-4/(x+5-…)))
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss–Legendre rule on [a, b] with `panels` equal panels.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut acc = Accumulator::new();
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            acc.add(wi * 0.5 * h * f(lo + 0.5 * h * (xi + 1.0)));
        }
    }
    acc.value()
}

/// Best rational approximation with denominator ≤ `max_den`, accepted only
/// if it lies within `tol` of x.
pub fn rationalize(x: f64, max_den: i64, tol: f64) -> Option<Q> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i64;
        let h2 = ai.checked_mul(h1)?.checked_add(h0)?;
        let k2 = ai.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (x - h1 as f64 / k1 as f64).abs() <= tol {
            return Some(Q::new(BigInt::from(h1), BigInt::from(k1)));
        }
        let f = r - a;
        if f.abs() < 1e-300 {
            break;
        }
        r = 1.0 / f;
    }
    if k1 > 0 && (x - h1 as f64 / k1 as f64).abs() <= tol {
        Some(Q::new(BigInt::from(h1), BigInt::from(k1)))
    } else {
        None
    }
}

/// Rounds to the nearest integer when within `tol`.
pub fn near_integer(x: f64, tol: f64) -> Option<i64> {
    let r = x.round();
    ((x - r).abs() <= tol).then_some(r as i64)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
