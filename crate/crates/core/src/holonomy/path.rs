//! Piecewise-linear 𝒢-paths with rational breakpoints.

use num::{One, Zero};

use crate::error::{Error, Result};
use crate::orbicryst::{CheckedPresentation, Element};
use crate::rational::*;

use super::atlas::Atlas;

/// A polyline b_i inside one chart, parametrized uniformly per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub chart: usize,
    pub vertices: Vec<QVec>,
}

impl Segment {
    pub fn first(&self) -> &QVec {
        &self.vertices[0]
    }

    pub fn last(&self) -> &QVec {
        self.vertices.last().unwrap()
    }
}

/// c = (b₁,…,b_k; g₀,…,g_k) over 0 = t₀ < … < t_k = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct GPath {
    pub start: QVec,
    pub start_chart: usize,
    pub end: QVec,
    pub end_chart: usize,
    pub partition: Vec<Q>,
    pub segments: Vec<Segment>,
    pub arrows: Vec<Element>,
}

impl GPath {
    pub fn constant(p: &CheckedPresentation, chart: usize, x: QVec) -> Self {
        GPath {
            start: x.clone(),
            start_chart: chart,
            end: x.clone(),
            end_chart: chart,
            partition: vec![Q::zero(), Q::one()],
            segments: vec![Segment { chart, vertices: vec![x] }],
            arrows: vec![p.identity(), p.identity()],
        }
    }

    pub fn is_loop(&self) -> bool {
        self.start == self.end && self.start_chart == self.end_chart
    }

    /// Checks chart membership and endpoint compatibility of every arrow.
    pub fn validate(&self, p: &CheckedPresentation, atlas: &Atlas) -> Result<()> {
        let k = self.segments.len();
        if k == 0 || self.arrows.len() != k + 1 || self.partition.len() != k + 1 {
            return Err(Error::PathLeavesAtlas("malformed path".into()));
        }
        if !self.partition[0].is_zero() || !self.partition[k].is_one() || self.partition.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::PathLeavesAtlas("partition must increase from 0 to 1".into()));
        }
        let inside = |chart: usize, x: &QVec| chart < atlas.len() && atlas.contains(chart, x);
        if !inside(self.start_chart, &self.start) || !inside(self.end_chart, &self.end) {
            return Err(Error::PathLeavesAtlas("endpoint outside its chart".into()));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if s.vertices.is_empty() {
                return Err(Error::PathLeavesAtlas(format!("segment {i} is empty")));
            }
            // balls are convex, so vertices suffice
            if let Some(v) = s.vertices.iter().find(|v| !inside(s.chart, v)) {
                return Err(Error::PathLeavesAtlas(format!("segment {i} leaves chart {} at {:?}", s.chart, v)));
            }
        }
        let mismatch = |i: usize| Error::EndpointMismatch(format!("arrow {i} does not match its endpoints"));
        if p.act(&self.arrows[0], &self.start) != *self.segments[0].first() {
            return Err(mismatch(0));
        }
        for i in 1..k {
            if p.act(&self.arrows[i], self.segments[i - 1].last()) != *self.segments[i].first() {
                return Err(mismatch(i));
            }
        }
        if p.act(&self.arrows[k], self.segments[k - 1].last()) != self.end {
            return Err(mismatch(k));
        }
        Ok(())
    }

    /// Chart sequence (source, target) of each arrow.
    pub fn arrow_charts(&self) -> Vec<(usize, usize)> {
        let k = self.segments.len();
        (0..=k)
            .map(|i| {
                let src = if i == 0 { self.start_chart } else { self.segments[i - 1].chart };
                let tgt = if i == k { self.end_chart } else { self.segments[i].chart };
                (src, tgt)
            })
            .collect()
    }

    pub fn inverse(&self, p: &CheckedPresentation) -> GPath {
        let segments = self
            .segments
            .iter()
            .rev()
            .map(|s| Segment { chart: s.chart, vertices: s.vertices.iter().rev().cloned().collect() })
            .collect();
        let arrows = self.arrows.iter().rev().map(|g| p.inv(g)).collect();
        let partition = self.partition.iter().rev().map(|t| Q::one() - t).collect();
        GPath {
            start: self.end.clone(),
            start_chart: self.end_chart,
            end: self.start.clone(),
            end_chart: self.start_chart,
            partition,
            segments,
            arrows,
        }
    }

    /// Splits segment `i` at its parametric midpoint, inserting an identity arrow.
    pub fn subdivide(&self, p: &CheckedPresentation, i: usize) -> GPath {
        let mut out = self.clone();
        let s = &self.segments[i];
        let m = s.vertices.len();
        let (a, b) = if m == 1 {
            (s.vertices.clone(), s.vertices.clone())
        } else if (m - 1) % 2 == 0 {
            let mid = (m - 1) / 2;
            (s.vertices[..=mid].to_vec(), s.vertices[mid..].to_vec())
        } else {
            let mid = (m - 1) / 2;
            let x: QVec = s.vertices[mid].iter().zip(&s.vertices[mid + 1]).map(|(u, v)| (u + v) / q(2)).collect();
            let mut a = s.vertices[..=mid].to_vec();
            a.push(x.clone());
            let mut b = vec![x];
            b.extend_from_slice(&s.vertices[mid + 1..]);
            (a, b)
        };
        let t = (&self.partition[i] + &self.partition[i + 1]) / q(2);
        out.segments[i] = Segment { chart: s.chart, vertices: a };
        out.segments.insert(i + 1, Segment { chart: s.chart, vertices: b });
        out.partition.insert(i + 1, t);
        out.arrows.insert(i + 1, p.identity());
        out
    }

    /// Replaces b_i by h·b_i in `chart`, adjusting the neighbouring arrows.
    pub fn conjugate_segment(&self, p: &CheckedPresentation, i: usize, h: &Element, chart: usize) -> GPath {
        let mut out = self.clone();
        out.segments[i] = Segment { chart, vertices: self.segments[i].vertices.iter().map(|v| p.act(h, v)).collect() };
        out.arrows[i] = p.mul(h, &self.arrows[i]);
        out.arrows[i + 1] = p.mul(&self.arrows[i + 1], &p.inv(h));
        out
    }

    /// Elementary homotopy inside a chart: route segment `i` through `via`.
    pub fn detour(&self, i: usize, via: QVec) -> GPath {
        let mut out = self.clone();
        let s = &mut out.segments[i];
        let at = if s.vertices.len() == 1 { 1 } else { s.vertices.len() / 2 };
        if s.vertices.len() == 1 {
            s.vertices.push(s.vertices[0].clone());
        }
        s.vertices.insert(at, via);
        out
    }
}

/// c₁ followed by c₂.
pub fn compose_paths(p: &CheckedPresentation, c1: &GPath, c2: &GPath) -> Result<GPath> {
    if c1.end != c2.start || c1.end_chart != c2.start_chart {
        return Err(Error::EndpointMismatch(format!(
            "first path ends at {:?} in chart {}, second starts at {:?} in chart {}",
            c1.end, c1.end_chart, c2.start, c2.start_chart
        )));
    }
    let half = qf(1, 2);
    let mut partition: Vec<Q> = c1.partition.iter().map(|t| t * &half).collect();
    partition.extend(c2.partition.iter().skip(1).map(|t| &half + t * &half));
    let mut segments = c1.segments.clone();
    segments.extend(c2.segments.iter().cloned());
    let k1 = c1.segments.len();
    let mut arrows = c1.arrows[..k1].to_vec();
    arrows.push(p.mul(&c2.arrows[0], &c1.arrows[k1]));
    arrows.extend(c2.arrows[1..].iter().cloned());
    Ok(GPath {
        start: c1.start.clone(),
        start_chart: c1.start_chart,
        end: c2.end.clone(),
        end_chart: c2.end_chart,
        partition,
        segments,
        arrows,
    })
}

fn lerp(a: &[Q], b: &[Q], t: &Q) -> QVec {
    a.iter().zip(b).map(|(x, y)| x + (y - x) * t).collect()
}

/// Loop at x₀ (in `chart`) representing γ: the straight line from x₀ to
/// γ⁻¹x₀, closed by the arrow γ. Transport along it is ρ(γ) in the bundle
/// X ×_ρ Cʳ.
pub fn generator_loop(p: &CheckedPresentation, atlas: &Atlas, chart: usize, x0: &QVec, gamma: &Element) -> Result<GPath> {
    if !atlas.contains(chart, x0) {
        return Err(Error::PathLeavesAtlas("base point outside its chart".into()));
    }
    let y = p.act(&p.inv(gamma), x0);
    // pieces [t_j, t_{j+1}] each carried into one chart by k_j
    let mut pieces: Vec<(Q, Q, usize, Element)> = Vec::new();
    let mut stack = vec![(Q::zero(), Q::one(), 0usize)];
    while let Some((a, b, depth)) = stack.pop() {
        let (pa, pb) = (lerp(x0, &y, &a), lerp(x0, &y, &b));
        match atlas.locate_segment(p, &pa, &pb) {
            Some((c, k)) => pieces.push((a, b, c, k)),
            None if depth < 24 => {
                let m = (&a + &b) / q(2);
                stack.push((m.clone(), b, depth + 1));
                stack.push((a, m, depth + 1));
            }
            None => return Err(Error::PathLeavesAtlas(format!("cannot cover the segment near t = {}", q_to_string(&a)))),
        }
    }
    let mut partition = vec![Q::zero()];
    let mut segments = Vec::new();
    let mut arrows = Vec::new();
    let mut prev: Option<Element> = None;
    for (a, b, c, k) in &pieces {
        let (pa, pb) = (lerp(x0, &y, a), lerp(x0, &y, b));
        segments.push(Segment { chart: *c, vertices: vec![p.act(k, &pa), p.act(k, &pb)] });
        partition.push(b.clone());
        arrows.push(match &prev {
            None => k.clone(),
            Some(kp) => p.mul(k, &p.inv(kp)),
        });
        prev = Some(k.clone());
    }
    arrows.push(p.mul(gamma, &p.inv(prev.as_ref().unwrap())));
    let path = GPath { start: x0.clone(), start_chart: chart, end: x0.clone(), end_chart: chart, partition, segments, arrows };
    path.validate(p, atlas)?;
    Ok(path)
}
