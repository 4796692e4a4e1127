//! Working atlas: open metric balls around rational points of the
//! fundamental cube, each small enough that only its stabilizer maps it to
//! itself.

use num::{Signed, Zero};

use crate::error::{Error, Result};
use crate::orbicryst::{enumerate_strata, CheckedPresentation, Element};
use crate::rational::*;

#[derive(Debug, Clone)]
pub struct Chart {
    pub center: QVec,
    pub radius_sq: Q,
    /// stabilizer of the centre, identity first
    pub local_group: Vec<Element>,
}

#[derive(Debug, Clone)]
pub struct Atlas {
    pub gram: QMat,
    pub charts: Vec<Chart>,
    pub grid: usize,
}

pub(crate) fn dist_sq(g: &QMat, a: &[Q], b: &[Q]) -> Q {
    let d = qvec_sub(a, b);
    qform(g, &d, &d)
}

/// |a−b| < r₁ + r₂ decided exactly from squared quantities.
pub(crate) fn balls_meet(d2: &Q, r1: &Q, r2: &Q) -> bool {
    let lhs = d2 - r1 - r2;
    if lhs.is_negative() {
        return true;
    }
    &lhs * &lhs < q(4) * r1 * r2
}

fn round_q(x: &Q) -> i64 {
    num::ToPrimitive::to_i64(&x.round().to_integer()).expect("small coordinate")
}

fn box_offsets(n: usize, r: i64) -> Vec<Vec<i64>> {
    let w = (2 * r + 1) as usize;
    (0..w.pow(n as u32))
        .map(|mut idx| {
            (0..n)
                .map(|_| {
                    let v = (idx % w) as i64 - r;
                    idx /= w;
                    v
                })
                .collect()
        })
        .collect()
}

/// Elements γ = (I|λ)·g_c (or (λ, h) for rank-one) such that γ·x lands
/// within a unit box of `target`.
pub(crate) fn candidates_near(p: &CheckedPresentation, x: &[Q], target: &[Q], spread: i64) -> Vec<Element> {
    let n = p.n;
    let mut out = Vec::new();
    let inner: Vec<usize> = match &p.rank_one {
        Some(r) => (0..r.order()).collect(),
        None => vec![0],
    };
    for c in 0..p.cosets.len() {
        let g = p.coset_element(c);
        let y = p.act(&g, x);
        let base: Vec<i64> = target.iter().zip(&y).map(|(t, yi)| round_q(&(t - yi))).collect();
        for off in box_offsets(n, spread) {
            let lam: Vec<i64> = base.iter().zip(&off).map(|(a, b)| a + b).collect();
            let t = p.translation(&lam);
            for &h in &inner {
                let mut e = p.mul(&t, &g);
                if p.is_rank_one() {
                    e.inner = h;
                }
                out.push(e);
            }
        }
    }
    out
}

fn stabilizer(p: &CheckedPresentation, x: &[Q]) -> Vec<Element> {
    let mut out = vec![p.identity()];
    for e in candidates_near(p, x, x, 1) {
        if p.act(&e, x) == x && !out.contains(&e) {
            out.push(e);
        }
    }
    out
}

impl Atlas {
    pub fn build(p: &CheckedPresentation) -> Result<Self> {
        let start = if p.n >= 3 { 2 } else { 4 };
        let mut grid = start;
        loop {
            match Self::with_grid(p, grid) {
                Ok(a) => return Ok(a),
                Err(e) if grid >= 16 => return Err(e),
                Err(_) => grid *= 2,
            }
        }
    }

    pub fn with_grid(p: &CheckedPresentation, grid: usize) -> Result<Self> {
        let n = p.n;
        let gram = p.lattice_gram.clone();
        let mut centers: Vec<QVec> = Vec::new();
        for idx in 0..grid.pow(n as u32) {
            let mut k = idx;
            let c: QVec = (0..n)
                .map(|_| {
                    let v = k % grid;
                    k /= grid;
                    qf(v as i64, grid as i64)
                })
                .collect();
            centers.push(c);
        }
        if !p.is_rank_one() {
            for s in enumerate_strata(p)?.iter().skip(1) {
                let c: QVec = s.fixed_set.base_point.iter().map(frac).collect();
                if !centers.contains(&c) {
                    centers.push(c);
                }
            }
        }
        let mut charts = Vec::with_capacity(centers.len());
        for c in centers {
            let local_group = stabilizer(p, &c);
            let mut dmin: Option<Q> = None;
            for e in candidates_near(p, &c, &c, 2) {
                if local_group.contains(&e) {
                    continue;
                }
                let y = p.act(&e, &c);
                let d = dist_sq(&gram, &y, &c);
                if d.is_zero() {
                    // acts like a stabilizer element on X (ineffective kernel)
                    continue;
                }
                if dmin.as_ref().map_or(true, |m| d < *m) {
                    dmin = Some(d);
                }
            }
            let dmin = dmin.ok_or_else(|| Error::AtlasConstruction("no displacement found".into()))?;
            let radius_sq = dmin * qf(225, 1024);
            charts.push(Chart { center: c, radius_sq, local_group });
        }
        let atlas = Atlas { gram, charts, grid };
        atlas.check_coverage(p)?;
        Ok(atlas)
    }

    pub fn contains(&self, chart: usize, x: &[Q]) -> bool {
        let c = &self.charts[chart];
        dist_sq(&self.gram, x, &c.center) < c.radius_sq
    }

    /// Every cell of the grid lies in the union of translates of chart balls.
    fn check_coverage(&self, p: &CheckedPresentation) -> Result<()> {
        let n = p.n;
        let g = self.grid as i64;
        // half-diagonal of a cell, maximized over sign patterns
        let mut h2 = Q::zero();
        for signs in box_offsets(n, 1) {
            if signs.iter().any(|&s| s == 0) {
                continue;
            }
            let v: QVec = signs.iter().map(|&s| qf(s, 2 * g)).collect();
            let val = qform(&self.gram, &v, &v);
            if val > h2 {
                h2 = val;
            }
        }
        let grid_charts = self.grid.pow(n as u32);
        if self.charts[..grid_charts].iter().all(|c| c.radius_sq > h2) {
            return Ok(());
        }
        // slow path: each deficient cell must fit in a single translated ball
        for idx in 0..grid_charts {
            let corner = &self.charts[idx].center;
            let corners: Vec<QVec> = box_offsets(n, 1)
                .into_iter()
                .filter(|o| o.iter().all(|&x| x >= 0))
                .map(|o| corner.iter().zip(&o).map(|(c, &d)| c + qf(d, g)).collect())
                .collect();
            let corner_charts: Vec<usize> = corners.iter().map(|x| self.grid_index(x)).collect();
            if corner_charts.iter().all(|&i| self.charts[i].radius_sq > h2) {
                continue;
            }
            let mut ok = false;
            'search: for (ci, ch) in self.charts.iter().enumerate() {
                for off in box_offsets(n, 1) {
                    let center: QVec = ch.center.iter().zip(&off).map(|(c, &o)| c + q(o)).collect();
                    if corners.iter().all(|x| dist_sq(&self.gram, x, &center) < self.charts[ci].radius_sq) {
                        ok = true;
                        break 'search;
                    }
                }
            }
            if !ok {
                return Err(Error::AtlasConstruction(format!("cell at {:?} not covered at grid {}", corner, self.grid)));
            }
        }
        Ok(())
    }

    fn grid_index(&self, x: &[Q]) -> usize {
        let g = self.grid as i64;
        let mut idx = 0;
        let mut mul = 1;
        for xi in x {
            let k = num::ToPrimitive::to_i64(&(frac(xi) * q(g)).round().to_integer()).unwrap().rem_euclid(g);
            idx += k as usize * mul;
            mul *= self.grid;
        }
        idx
    }

    /// A chart and an element mapping `x` into it, searching translates.
    pub fn locate(&self, p: &CheckedPresentation, x: &[Q]) -> Option<(usize, Element)> {
        for (ci, ch) in self.charts.iter().enumerate() {
            for e in candidates_near(p, x, &ch.center, 1) {
                if p.is_rank_one() && e.inner != p.identity().inner {
                    continue;
                }
                if self.contains(ci, &p.act(&e, x)) {
                    return Some((ci, e));
                }
            }
        }
        None
    }

    /// Chart whose (untranslated) ball contains both points, with an element
    /// mapping them there.
    pub fn locate_segment(&self, p: &CheckedPresentation, a: &[Q], b: &[Q]) -> Option<(usize, Element)> {
        let mid: QVec = a.iter().zip(b).map(|(x, y)| (x + y) / q(2)).collect();
        for (ci, ch) in self.charts.iter().enumerate() {
            for e in candidates_near(p, &mid, &ch.center, 1) {
                if p.is_rank_one() && e.inner != p.identity().inner {
                    continue;
                }
                if self.contains(ci, &p.act(&e, a)) && self.contains(ci, &p.act(&e, b)) {
                    return Some((ci, e));
                }
            }
        }
        None
    }

    /// Index of the first chart with trivial effective stabilizer.
    pub fn generic_chart(&self, p: &CheckedPresentation) -> usize {
        self.charts
            .iter()
            .position(|c| c.local_group.iter().all(|g| p.acts_trivially(g)))
            .unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.charts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.charts.is_empty()
    }
}
