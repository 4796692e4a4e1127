//! 𝒢-paths, parallel transport and the correspondence between proper flat
//! orbifold bundles and representations of the orbifold fundamental group.
//!
//! Conventions: Γ acts on the left; invariant sections satisfy
//! f(γx) = ρ(γ)f(x). A loop at x₀ for γ runs from x₀ to γ⁻¹x₀ and is closed by
//! the arrow γ, so transport along "c_γ then c_δ" is ρ(δ)ρ(γ) = ρ(δγ).

mod atlas;
mod cocycle;
mod path;
mod rep;

pub use atlas::*;
pub use cocycle::*;
pub use path::*;
pub use rep::*;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::linalg::{self, CMat};
use crate::orbicryst::{CheckedPresentation, Word};

pub const DEFAULT_WORD_BUDGET: usize = 8;
const MAX_WORDS: usize = 20_000;

/// Kronecker product a ⊗ b.
/// An invertible A with A·r₁(g) = r₂(g)·A on every generator, if the joint
/// linear system has one.
pub fn intertwiner(p: &CheckedPresentation, r1: &HolonomyRep, r2: &HolonomyRep) -> Option<CMat> {
    let r = r1.rank;
    if r2.rank != r {
        return None;
    }
    let id = linalg::identity(r);
    let names = p.generator_names();
    // vec(A X − Y A) = (Xᵀ ⊗ I − I ⊗ Y) vec(A), column-major vec
    let mut blocks: Vec<CMat> = Vec::new();
    for name in &names {
        blocks.push(linalg::kron(&r1.generator(name).transpose(), &id) - linalg::kron(&id, r2.generator(name)));
    }
    let rows = blocks.len() * r * r;
    let sys = DMatrix::from_fn(rows.max(1), r * r, |i, j| {
        if blocks.is_empty() {
            Complex64::new(0.0, 0.0)
        } else {
            blocks[i / (r * r)][(i % (r * r), j)]
        }
    });
    let kernel = linalg::null_space(&sys, 1e-8);
    if kernel.ncols() == 0 {
        return None;
    }
    // deterministic pseudo-random combinations of the kernel basis
    for attempt in 0..6u32 {
        let mut v = DMatrix::<Complex64>::zeros(r * r, 1);
        for k in 0..kernel.ncols() {
            let phase = 0.7548776662 * (k as f64 + 1.0) * (attempt as f64 + 1.0) + 0.3 * attempt as f64;
            let w = Complex64::from_polar(1.0 + 0.1 * k as f64, 2.0 * std::f64::consts::PI * phase.fract());
            v += kernel.column(k) * w;
        }
        let a = CMat::from_fn(r, r, |i, j| v[(j * r + i, 0)]);
        let sv = a.clone().svd(false, false).singular_values;
        let (smax, smin) = (sv.max(), sv.min());
        if smax > 0.0 && smin / smax > 1e-6 {
            return Some(a);
        }
    }
    None
}

/// Words in the generators and their inverses, shortest first, up to `budget` letters.
pub fn words_up_to(p: &CheckedPresentation, budget: usize) -> Vec<Word> {
    let mut letters: Vec<(String, i32)> = Vec::new();
    for n in p.generator_names() {
        letters.push((n.clone(), 1));
        letters.push((n, -1));
    }
    let mut out: Vec<Word> = vec![vec![]];
    let mut frontier: Vec<Word> = vec![vec![]];
    for _ in 0..budget {
        let mut next = Vec::new();
        for w in &frontier {
            for l in &letters {
                if let Some(last) = w.last() {
                    if last.0 == l.0 && last.1 == -l.1 {
                        continue;
                    }
                }
                let mut w2 = w.clone();
                w2.push(l.clone());
                next.push(w2);
                if out.len() + next.len() >= MAX_WORDS {
                    out.extend(next);
                    return out;
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Semi-decision for equivalence: an intertwiner from the generators,
/// validated on all reduced words up to `word_budget` letters (capped), plus
/// character equality on those words for unitary inputs.
pub fn reps_equivalent(p: &CheckedPresentation, r1: &HolonomyRep, r2: &HolonomyRep, word_budget: usize) -> bool {
    let Some(a) = intertwiner(p, r1, r2) else { return false };
    let scale = linalg::max_abs(&a).max(1.0);
    for w in words_up_to(p, word_budget) {
        let (m1, m2) = (r1.word_image(&w), r2.word_image(&w));
        let mag = linalg::max_abs(&m1).max(linalg::max_abs(&m2)).max(1.0);
        if linalg::max_abs(&(&a * &m1 - &m2 * &a)) > 1e-8 * scale * mag {
            return false;
        }
        if r1.unitary && r2.unitary && (linalg::trace(&m1) - linalg::trace(&m2)).norm() > 1e-8 * mag * r1.rank as f64 {
            return false;
        }
    }
    true
}
