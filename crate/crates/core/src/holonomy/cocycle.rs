//! Flat orbifold bundles as constant cocycles on the working atlas.

use std::collections::{BTreeMap, HashMap, VecDeque};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::orbicryst::{CheckedPresentation, Element, Word};
use crate::rational::{q_to_string, QVec};

use super::atlas::{balls_meet, candidates_near, dist_sq, Atlas};
use super::path::{compose_paths, generator_loop, GPath};
use super::rep::HolonomyRep;

const COCYCLE_TOL: f64 = 1e-9;

/// Representative of a double coset G_b·γ·G_a of arrows a → b.
#[derive(Debug, Clone)]
pub struct Arrow {
    pub source: usize,
    pub target: usize,
    pub element: Element,
    pub matrix: CMat,
}

#[derive(Debug, Clone)]
pub struct FlatBundleCocycle {
    pub rank: usize,
    pub atlas: Atlas,
    pub arrows: Vec<Arrow>,
    /// ρ_U on each chart's local group, in `atlas.charts[a].local_group` order
    pub local_reps: Vec<Vec<CMat>>,
    pub proper: bool,
    index: HashMap<(usize, usize, Element), (usize, usize, usize)>,
}

fn arrow_elements(p: &CheckedPresentation, atlas: &Atlas, a: usize, b: usize) -> Vec<Element> {
    let (ca, cb) = (&atlas.charts[a], &atlas.charts[b]);
    let mut out: Vec<Element> = candidates_near(p, &ca.center, &cb.center, 1)
        .into_iter()
        .filter(|g| balls_meet(&dist_sq(&atlas.gram, &p.act(g, &ca.center), &cb.center), &ca.radius_sq, &cb.radius_sq))
        .collect();
    out.sort();
    out.dedup();
    out
}

impl FlatBundleCocycle {
    /// Assembles a cocycle from per-chart local representations and a
    /// matrix for every arrow; `matrix_of` is queried once per double coset.
    pub fn assemble<F>(p: &CheckedPresentation, atlas: Atlas, rank: usize, local_reps: Vec<Vec<CMat>>, mut matrix_of: F) -> Self
    where
        F: FnMut(usize, usize, &Element) -> CMat,
    {
        let mut arrows = Vec::new();
        let mut index = HashMap::new();
        for a in 0..atlas.len() {
            for b in 0..atlas.len() {
                for g in arrow_elements(p, &atlas, a, b) {
                    if index.contains_key(&(a, b, g.clone())) {
                        continue;
                    }
                    let idx = arrows.len();
                    for (ib, hb) in atlas.charts[b].local_group.iter().enumerate() {
                        for (ia, ha) in atlas.charts[a].local_group.iter().enumerate() {
                            let e = p.mul(&p.mul(hb, &g), ha);
                            index.entry((a, b, e)).or_insert((idx, ib, ia));
                        }
                    }
                    let matrix = matrix_of(a, b, &g);
                    arrows.push(Arrow { source: a, target: b, element: g, matrix });
                }
            }
        }
        let mut out = FlatBundleCocycle { rank, atlas, arrows, local_reps, proper: false, index };
        out.proper = out.kernel_deviation(p) <= COCYCLE_TOL;
        out
    }

    /// Matrix of an arbitrary arrow γ: a → b.
    pub fn transition(&self, a: usize, b: usize, g: &Element) -> Option<CMat> {
        let &(idx, ib, ia) = self.index.get(&(a, b, g.clone()))?;
        Some(&self.local_reps[b][ib] * &self.arrows[idx].matrix * &self.local_reps[a][ia])
    }

    /// Largest ‖ρ_U(k) − I‖ over ineffective local group elements.
    fn kernel_deviation(&self, p: &CheckedPresentation) -> f64 {
        let mut worst: f64 = 0.0;
        for (chart, reps) in self.atlas.charts.iter().zip(&self.local_reps) {
            for (g, m) in chart.local_group.iter().zip(reps) {
                if p.acts_trivially(g) {
                    worst = worst.max(linalg::deviation_from_identity(m));
                }
            }
        }
        worst
    }

    /// Max residual of M(δγ) = M(δ)M(γ) over composable stored arrows with
    /// pairwise overlapping charts, and of the local representations.
    pub fn cocycle_residual(&self, p: &CheckedPresentation) -> f64 {
        let mut worst: f64 = 0.0;
        for (chart, reps) in self.atlas.charts.iter().zip(&self.local_reps) {
            for (i, gi) in chart.local_group.iter().enumerate() {
                for (j, gj) in chart.local_group.iter().enumerate() {
                    let prod = p.mul(gi, gj);
                    if let Some(k) = chart.local_group.iter().position(|g| *g == prod) {
                        worst = worst.max(linalg::max_abs(&(&reps[i] * &reps[j] - &reps[k])));
                    }
                }
            }
        }
        for g in &self.arrows {
            for d in self.arrows.iter().filter(|d| d.source == g.target) {
                let dg = p.mul(&d.element, &g.element);
                if let Some(m) = self.transition(g.source, d.target, &dg) {
                    worst = worst.max(linalg::max_abs(&(&d.matrix * &g.matrix - m)));
                }
            }
        }
        worst
    }

    /// New cocycle in the gauge s_a on each chart.
    pub fn regauge(&self, s: &[CMat]) -> Result<Self> {
        let inv: Vec<CMat> = s
            .iter()
            .map(|m| linalg::inverse(m).ok_or_else(|| Error::Parse("singular gauge matrix".into())))
            .collect::<Result<_>>()?;
        let mut out = self.clone();
        for (a, reps) in out.local_reps.iter_mut().enumerate() {
            for m in reps.iter_mut() {
                *m = &s[a] * &*m * &inv[a];
            }
        }
        for arrow in &mut out.arrows {
            arrow.matrix = &s[arrow.target] * &arrow.matrix * &inv[arrow.source];
        }
        Ok(out)
    }

    /// Chart index and base point used for holonomy computations.
    pub fn base(&self, p: &CheckedPresentation) -> (usize, QVec) {
        let a = self.atlas.generic_chart(p);
        (a, self.atlas.charts[a].center.clone())
    }

    /// Dimension of the space of global flat sections: vectors v_a with
    /// v_b = M(γ)v_a for every arrow and v_a = ρ_a(h)v_a.
    pub fn global_section_dimension(&self) -> usize {
        let r = self.rank;
        let m = self.atlas.len();
        let mut rows: Vec<Vec<Complex64>> = Vec::new();
        let zero = Complex64::new(0.0, 0.0);
        let mut push_block = |src: usize, tgt: usize, mat: &CMat| {
            for i in 0..r {
                let mut row = vec![zero; r * m];
                for j in 0..r {
                    row[src * r + j] += mat[(i, j)];
                }
                row[tgt * r + i] -= Complex64::new(1.0, 0.0);
                rows.push(row);
            }
        };
        for (a, reps) in self.local_reps.iter().enumerate() {
            for mat in reps {
                push_block(a, a, mat);
            }
        }
        for arrow in &self.arrows {
            push_block(arrow.source, arrow.target, &arrow.matrix);
        }
        if rows.is_empty() {
            return r * m;
        }
        let a = DMatrix::from_fn(rows.len(), r * m, |i, j| rows[i][j]);
        linalg::null_space(&a, 1e-8).ncols()
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct ChartOut {
            center: Vec<String>,
            radius_sq: String,
            local_group: Vec<String>,
            local_reps: Vec<Vec<[f64; 2]>>,
        }
        #[derive(Serialize)]
        struct ArrowOut {
            source: usize,
            target: usize,
            element: String,
            matrix: Vec<[f64; 2]>,
        }
        let flat = |m: &CMat| -> Vec<[f64; 2]> {
            (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| (i, j))).map(|(i, j)| [m[(i, j)].re, m[(i, j)].im]).collect()
        };
        let charts: Vec<ChartOut> = self
            .atlas
            .charts
            .iter()
            .zip(&self.local_reps)
            .map(|(c, reps)| ChartOut {
                center: c.center.iter().map(q_to_string).collect(),
                radius_sq: q_to_string(&c.radius_sq),
                local_group: c.local_group.iter().map(element_label).collect(),
                local_reps: reps.iter().map(flat).collect(),
            })
            .collect();
        let arrows: Vec<ArrowOut> = self
            .arrows
            .iter()
            .map(|a| ArrowOut { source: a.source, target: a.target, element: element_label(&a.element), matrix: flat(&a.matrix) })
            .collect();
        serde_json::json!({ "rank": self.rank, "proper": self.proper, "charts": charts, "arrows": arrows })
    }
}

pub fn element_label(g: &Element) -> String {
    format!("({:?}|{})#{}", g.linear, g.shift.iter().map(q_to_string).collect::<Vec<_>>().join(","), g.inner)
}

/// The cocycle of X ×_Γ Cʳ on the working atlas.
pub fn bundle_from_rep(p: &CheckedPresentation, rep: &HolonomyRep) -> Result<FlatBundleCocycle> {
    rep.check_relations(p, 1e-8)?;
    let atlas = Atlas::build(p)?;
    let local_reps = atlas.charts.iter().map(|c| c.local_group.iter().map(|g| rep.image(p, g)).collect()).collect();
    Ok(FlatBundleCocycle::assemble(p, atlas, rep.rank, local_reps, |_, _, g| rep.image(p, g)))
}

/// τ_c = g_{k,*}⋯g_{0,*}
pub fn parallel_transport(p: &CheckedPresentation, b: &FlatBundleCocycle, c: &GPath) -> Result<CMat> {
    c.validate(p, &b.atlas)?;
    let mut acc = linalg::identity(b.rank);
    for (g, (src, tgt)) in c.arrows.iter().zip(c.arrow_charts()) {
        let m = b
            .transition(src, tgt, g)
            .ok_or_else(|| Error::PathLeavesAtlas(format!("no arrow {} from chart {src} to chart {tgt}", element_label(g))))?;
        acc = m * acc;
    }
    Ok(acc)
}

/// Generator loops at the cocycle's base point, keyed by generator name.
pub fn generator_loops(p: &CheckedPresentation, b: &FlatBundleCocycle) -> Result<Vec<(String, GPath)>> {
    let (chart, x0) = b.base(p);
    p.generator_names()
        .into_iter()
        .map(|name| {
            let g = p.generator_element(&name).expect("known generator");
            Ok((name, generator_loop(p, &b.atlas, chart, &x0, &g)?))
        })
        .collect()
}

/// Loop representing the word s₁⋯s_m: the loops run in reverse order.
pub fn word_loop(p: &CheckedPresentation, loops: &BTreeMap<String, GPath>, base: &GPath, w: &Word) -> Result<GPath> {
    let mut acc = GPath::constant(p, base.start_chart, base.start.clone());
    for (name, e) in w.iter().rev() {
        let l = loops.get(name).ok_or_else(|| Error::Parse(format!("no loop for generator '{name}'")))?;
        let piece = if *e < 0 { l.inverse(p) } else { l.clone() };
        for _ in 0..e.unsigned_abs() {
            acc = compose_paths(p, &acc, &piece)?;
        }
    }
    Ok(acc)
}

/// Holonomy representation from loops at a common base point.
pub fn holonomy_of(p: &CheckedPresentation, b: &FlatBundleCocycle, generators: &[(String, GPath)]) -> Result<HolonomyRep> {
    let first = generators.first().ok_or_else(|| Error::NotALoop("no generator loops given".into()))?;
    let mut images = BTreeMap::new();
    let mut loops = BTreeMap::new();
    for (name, c) in generators {
        if !c.is_loop() || c.start != first.1.start || c.start_chart != first.1.start_chart {
            return Err(Error::NotALoop(format!("path for '{name}' is not a loop at the common base point")));
        }
        images.insert(name.clone(), parallel_transport(p, b, c)?);
        loops.insert(name.clone(), c.clone());
    }
    let mut rep = HolonomyRep::new(p, b.rank, images)?;
    let mut worst: f64 = 0.0;
    let mut worst_label = String::new();
    for rel in p.relators() {
        let c = word_loop(p, &loops, &first.1, &rel.word)?;
        let r = linalg::deviation_from_identity(&parallel_transport(p, b, &c)?);
        if r > worst {
            worst = r;
            worst_label = rel.label.clone();
        }
    }
    rep.relation_residual = worst;
    if worst > 1e-8 {
        return Err(Error::RelationViolation { relation: worst_label, residual: worst });
    }
    Ok(rep)
}

/// Holonomy along the standard generator loops.
pub fn holonomy(p: &CheckedPresentation, b: &FlatBundleCocycle) -> Result<HolonomyRep> {
    holonomy_of(p, b, &generator_loops(p, b)?)
}

/// Restriction of every fibre to the invariants of the ineffective kernel.
pub fn properize(p: &CheckedPresentation, b: &FlatBundleCocycle) -> Result<FlatBundleCocycle> {
    if b.proper {
        return Ok(b.clone());
    }
    let mut q: Vec<CMat> = Vec::new();
    for (chart, reps) in b.atlas.charts.iter().zip(&b.local_reps) {
        let kernel: Vec<CMat> =
            chart.local_group.iter().zip(reps).filter(|(g, _)| p.acts_trivially(g)).map(|(_, m)| m.clone()).collect();
        q.push(linalg::common_fixed_space(&kernel, b.rank, 1e-9));
    }
    let rank = q[0].ncols();
    if q.iter().any(|m| m.ncols() != rank) {
        return Err(Error::KernelMismatch("kernel invariants differ in dimension between charts".into()));
    }
    let mut out = b.clone();
    out.rank = rank;
    for (a, reps) in out.local_reps.iter_mut().enumerate() {
        for m in reps.iter_mut() {
            *m = q[a].adjoint() * &*m * &q[a];
        }
    }
    for arrow in &mut out.arrows {
        arrow.matrix = q[arrow.target].adjoint() * &arrow.matrix * &q[arrow.source];
    }
    out.proper = out.kernel_deviation(p) <= COCYCLE_TOL;
    Ok(out)
}

/// Chartwise constant S_a with S_b M₁(γ) = M₂(γ) S_a, if one exists.
pub fn bundle_isomorphism(p: &CheckedPresentation, b1: &FlatBundleCocycle, b2: &FlatBundleCocycle) -> Result<Option<Vec<CMat>>> {
    if b1.rank != b2.rank || b1.atlas.len() != b2.atlas.len() || b1.arrows.len() != b2.arrows.len() {
        return Ok(None);
    }
    let h1 = holonomy(p, b1)?;
    let h2 = holonomy(p, b2)?;
    let Some(a0) = super::intertwiner(p, &h1, &h2) else { return Ok(None) };
    let (base, _) = b1.base(p);
    let m = b1.atlas.len();
    let mut s: Vec<Option<CMat>> = vec![None; m];
    s[base] = Some(a0);
    let mut queue = VecDeque::from([base]);
    while let Some(a) = queue.pop_front() {
        for (i, arrow) in b1.arrows.iter().enumerate() {
            let m1 = &arrow.matrix;
            let m2 = &b2.arrows[i].matrix;
            let (next, value) = if arrow.source == a && s[arrow.target].is_none() {
                let Some(inv) = linalg::inverse(m1) else { continue };
                (arrow.target, m2 * s[a].as_ref().unwrap() * inv)
            } else if arrow.target == a && s[arrow.source].is_none() {
                let Some(inv) = linalg::inverse(m2) else { continue };
                (arrow.source, inv * s[a].as_ref().unwrap() * m1)
            } else {
                continue;
            };
            s[next] = Some(value);
            queue.push_back(next);
        }
    }
    let Some(s): Option<Vec<CMat>> = s.into_iter().collect() else { return Ok(None) };
    let scale = s.iter().map(linalg::max_abs).fold(1.0, f64::max);
    let tol = 1e-8 * scale;
    for (i, arrow) in b1.arrows.iter().enumerate() {
        let lhs = &s[arrow.target] * &arrow.matrix;
        let rhs = &b2.arrows[i].matrix * &s[arrow.source];
        if linalg::max_abs(&(lhs - rhs)) > tol {
            return Ok(None);
        }
    }
    for a in 0..m {
        for (r1, r2) in b1.local_reps[a].iter().zip(&b2.local_reps[a]) {
            if linalg::max_abs(&(&s[a] * r1 - r2 * &s[a])) > tol {
                return Ok(None);
            }
        }
    }
    Ok(Some(s))
}
