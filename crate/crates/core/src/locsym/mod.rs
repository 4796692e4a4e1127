//! Conjugacy classes, orbital integrals, the Selberg trace formula and the
//! Ruelle dynamical zeta function for G = Rⁿ (lattice quotients) and
//! G = R × U (rank-one circles with a finite inner part).
//!
//! Heat normalization: the geometric side is written for e^{−tC/2}, which
//! on flat spaces is e^{−(t/2)Δ}. The heat kernel of Rⁿ at displacement a is
//! then (2πt)^{−n/2} e^{−|a|²/2t}.

mod ruelle;

pub use ruelle::*;

use std::collections::BTreeSet;
use std::f64::consts::PI;

use num::{Signed, Zero};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::holonomy::HolonomyRep;
use crate::linalg;
use crate::numeric::{binomial, integrate, Accumulator};
use crate::orbicryst::{torus_cw_euler, CheckedPresentation, Element};
use crate::rational::{gcd_slice, q, q_to_f64, q_to_string, qform, qmat_det, sqrt_exact, Q};
use crate::spectra::{default_cutoff, heat_trace, mode_model, spectra_for, HeatWeight, ModeModel};

/// Supported groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupFamily {
    /// Γ = lattice in Rⁿ, δ(G) = n
    Euclidean(usize),
    /// Γ ⊂ R × U with U acting through a finite group H, δ(G) = 1
    RankOne,
}

impl GroupFamily {
    pub fn fundamental_rank(self) -> usize {
        match self {
            GroupFamily::Euclidean(n) => n,
            GroupFamily::RankOne => 1,
        }
    }
}

pub fn group_family(p: &CheckedPresentation) -> Result<GroupFamily> {
    if p.is_rank_one() {
        return Ok(GroupFamily::RankOne);
    }
    if p.point_group_order() != 1 {
        return Err(Error::UnsupportedGroup(format!(
            "point group of order {}; only lattices and rank-one circles are supported",
            p.point_group_order()
        )));
    }
    Ok(GroupFamily::Euclidean(p.n))
}

fn ser_q<S: serde::Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&q_to_string(x))
}

fn ser_opt_q<S: serde::Serializer>(x: &Option<Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_str(&q_to_string(v)),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConjugacyClassRecord {
    pub rep_word: String,
    #[serde(skip)]
    pub element: Element,
    pub elliptic: bool,
    pub length: f64,
    #[serde(serialize_with = "ser_q")]
    pub length_sq: Q,
    /// χ_orb(S¹\B_[γ]), non-elliptic classes only
    #[serde(serialize_with = "ser_opt_q")]
    pub chi_orb_quotient: Option<Q>,
    pub m_class: u64,
    pub vol_centralizer_quotient: f64,
    pub delta_gamma: u64,
    /// number of elements in the class
    pub class_size: usize,
    pub rho_trace: Option<[f64; 2]>,
    /// χ_orb(S¹\B)/m from the S¹-action data
    #[serde(serialize_with = "ser_opt_q")]
    pub orbifold_side: Option<Q>,
    /// vol(Γ(γ)\X(γ))·[e(TX^{a,⊥})]^max/(|a|·|δ|) from the metric data
    #[serde(serialize_with = "ser_opt_q")]
    pub metric_side: Option<Q>,
}

impl ConjugacyClassRecord {
    pub fn cross_check(&self) -> bool {
        self.elliptic || (self.orbifold_side.is_some() && self.orbifold_side == self.metric_side)
    }

    /// χ_orb(S¹\B)/m as a float (zero for elliptic classes).
    pub fn zeta_weight(&self) -> f64 {
        self.orbifold_side.as_ref().map_or(0.0, q_to_f64)
    }
}

pub fn word_string(w: &[(String, i32)]) -> String {
    if w.is_empty() {
        return "e".into();
    }
    let mut parts: Vec<(String, i32)> = Vec::new();
    for (n, e) in w {
        match parts.last_mut() {
            Some((m, k)) if m == n => *k += e,
            _ => parts.push((n.clone(), *e)),
        }
    }
    parts
        .iter()
        .filter(|(_, k)| *k != 0)
        .map(|(n, k)| if *k == 1 { n.clone() } else { format!("{n}^{k}") })
        .collect::<Vec<_>>()
        .join(" ")
}

fn lattice_points(p: &CheckedPresentation, l_max: f64) -> Vec<(Vec<i64>, Q)> {
    let n = p.n;
    let gi = p.lattice_gram_f64().try_inverse().expect("nondegenerate");
    let ext: Vec<i64> = (0..n).map(|i| (l_max * gi[(i, i)].sqrt()).floor() as i64 + 1).collect();
    let bound = l_max * l_max * (1.0 + 1e-12);
    let mut out = Vec::new();
    let mut m: Vec<i64> = ext.iter().map(|e| -e).collect();
    loop {
        let lq: Vec<Q> = m.iter().map(|&x| q(x)).collect();
        let len_sq = qform(&p.lattice_gram, &lq, &lq);
        if q_to_f64(&len_sq) <= bound {
            out.push((m.clone(), len_sq));
        }
        let mut i = 0;
        loop {
            if i == n {
                out.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
                return out;
            }
            m[i] += 1;
            if m[i] <= ext[i] {
                break;
            }
            m[i] = -ext[i];
            i += 1;
        }
    }
}

fn euclidean_classes(p: &CheckedPresentation, l_max: f64) -> Vec<ConjugacyClassRecord> {
    let n = p.n;
    let covol_sq = qmat_det(&p.lattice_gram);
    let covol = q_to_f64(&covol_sq).sqrt();
    lattice_points(p, l_max)
        .into_iter()
        .map(|(lam, len_sq)| {
            let elliptic = lam.iter().all(|&x| x == 0);
            let element = p.translation(&lam);
            let rep_word = word_string(&p.translation_word(&lam));
            // Γ is abelian: Γ(γ) = Λ acts freely on X(γ) = Rⁿ
            let delta = 1u64;
            let (chi, m, orbifold_side, metric_side) = if elliptic {
                (None, delta, None, None)
            } else {
                // the closed geodesics in the class sweep out B = Tⁿ; the
                // circle action x ↦ x + sλ has kernel of order gcd(λ)
                let g = gcd_slice(&lam).unsigned_abs();
                let chi = q(torus_cw_euler(n - 1));
                let m = delta * g;
                let orb = &chi / q(m as i64);
                // [e(TX^{a,⊥})]^max vanishes unless X^{a,⊥} is a point
                let metric = if n == 1 {
                    sqrt_exact(&(&covol_sq / &len_sq)).map(|r| r / q(delta as i64))
                } else {
                    Some(Q::zero())
                };
                (Some(chi), m, Some(orb), metric)
            };
            ConjugacyClassRecord {
                rep_word,
                element,
                elliptic,
                length: q_to_f64(&len_sq).sqrt(),
                length_sq: len_sq,
                chi_orb_quotient: chi,
                m_class: m,
                vol_centralizer_quotient: covol,
                delta_gamma: delta,
                class_size: 1,
                rho_trace: None,
                orbifold_side,
                metric_side,
            }
        })
        .collect()
}

fn rank_one_classes(p: &CheckedPresentation, l_max: f64) -> Result<Vec<ConjugacyClassRecord>> {
    let r1 = p.rank_one.as_ref().expect("rank-one");
    let ell = r1.length.clone();
    let order = r1.order();
    let kmax = (l_max / q_to_f64(&ell) * (1.0 + 1e-12)).floor() as i64;
    let mut generators: Vec<Element> = vec![p.translation(&[1]), p.translation(&[-1])];
    generators.extend((0..order).map(|h| p.inner_element(h)));
    let commute = |a: &Element, b: &Element| p.mul(a, b) == p.mul(b, a);

    let mut out = Vec::new();
    let mut ks: Vec<i64> = (-kmax..=kmax).collect();
    ks.sort_by_key(|k| (k.abs(), *k));
    for k in ks {
        let mut seen: BTreeSet<usize> = BTreeSet::new();
        for h0 in 0..order {
            if seen.contains(&h0) {
                continue;
            }
            let start = Element { linear: vec![vec![1]], shift: vec![q(k)], inner: h0 };
            // conjugacy class inside the finite set {(k, h)}
            let mut class = vec![start.clone()];
            seen.insert(h0);
            let mut i = 0;
            while i < class.len() {
                for g in &generators {
                    let c = p.conj(g, &class[i]);
                    if seen.insert(c.inner) {
                        class.push(c);
                    }
                }
                i += 1;
            }
            let rep = class.iter().min().unwrap().clone();
            let delta = (0..order).filter(|&h| commute(&p.inner_element(h), &rep)).count() as u64;
            // d_γ: generator of the image of Z_Γ(γ) in the translation part Z
            let bound = (k.unsigned_abs() as i64).max(1) * (order * order) as i64 + order as i64;
            let d = (1..=bound)
                .find(|&j| (0..order).any(|h| commute(&Element { linear: vec![vec![1]], shift: vec![q(j)], inner: h }, &rep)))
                .ok_or_else(|| Error::UnsupportedGroup(format!("no centralizing translation found for class of {}", k)))?;
            let elliptic = k == 0;
            let vol_unit = q(d);
            let vol = q_to_f64(&(&vol_unit * &ell));
            let (chi, m, orbifold_side, metric_side) = if elliptic {
                (None, delta, None, None)
            } else {
                if k % d != 0 {
                    return Err(Error::UnsupportedGroup(format!("centralizer step {d} does not divide {k}")));
                }
                let kernel = (k.abs() / d) as u64;
                let m = delta * kernel;
                let chi = q(1);
                let orb = &chi / q(m as i64);
                // vol/(|a|·|δ|) with vol = d·ℓ, |a| = |k|·ℓ
                let metric = (&vol_unit * &ell) / (q(k.abs()) * &ell * q(delta as i64));
                (Some(chi), m, Some(orb), Some(metric))
            };
            let len = &ell * q(k.abs());
            out.push(ConjugacyClassRecord {
                rep_word: word_string(&p.element_word(&rep).unwrap_or_default()),
                element: rep,
                elliptic,
                length: q_to_f64(&len),
                length_sq: &len * &len,
                chi_orb_quotient: chi,
                m_class: m,
                vol_centralizer_quotient: vol,
                delta_gamma: delta,
                class_size: class.len(),
                rho_trace: None,
                orbifold_side,
                metric_side,
            });
        }
    }
    Ok(out)
}

/// All classes with ℓ ≤ `l_max` (every elliptic class included).
pub fn enumerate_classes(p: &CheckedPresentation, l_max: f64) -> Result<Vec<ConjugacyClassRecord>> {
    match group_family(p)? {
        GroupFamily::Euclidean(_) => Ok(euclidean_classes(p, l_max)),
        GroupFamily::RankOne => rank_one_classes(p, l_max),
    }
}

/// Default L_max: ten times the shortest translation length.
pub fn default_l_max(p: &CheckedPresentation) -> f64 {
    if let Some(r1) = &p.rank_one {
        return 10.0 * q_to_f64(&r1.length);
    }
    let g = p.lattice_gram_f64();
    10.0 * (0..p.n).map(|i| g[(i, i)].sqrt()).fold(f64::INFINITY, f64::min)
}

/// Tr ρ(γ) for each record.
pub fn attach_traces(p: &CheckedPresentation, rep: &HolonomyRep, classes: &mut [ConjugacyClassRecord]) -> Result<()> {
    let chars = Characters::new(p, rep)?;
    for c in classes {
        let tr = chars.trace(p, rep, &c.element);
        c.rho_trace = Some([tr.re, tr.im]);
    }
    Ok(())
}

/// Tr ρ on translations from the joint characters of the lattice images.
struct Characters {
    model: Option<ModeModel>,
}

impl Characters {
    fn new(p: &CheckedPresentation, rep: &HolonomyRep) -> Result<Self> {
        Ok(Characters { model: if p.is_rank_one() { None } else { Some(mode_model(p, rep)?) } })
    }

    fn trace(&self, p: &CheckedPresentation, rep: &HolonomyRep, g: &Element) -> Complex64 {
        match &self.model {
            Some(m) => {
                let lam: Vec<f64> = g.shift.iter().map(q_to_f64).collect();
                m.blocks
                    .iter()
                    .map(|b| {
                        let ph: f64 = b.mu.iter().zip(&lam).map(|(x, y)| x * y).sum();
                        Complex64::from_polar(b.dim as f64, 2.0 * PI * ph)
                    })
                    .sum()
            }
            None => linalg::trace(&rep.image(p, g)),
        }
    }
}

pub fn write_classes_csv<W: std::io::Write>(classes: &[ConjugacyClassRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(e.to_string());
    out.write_record([
        "rep_word",
        "elliptic",
        "length",
        "chi_orb_quotient",
        "m_class",
        "vol_centralizer_quotient",
        "delta_gamma",
        "class_size",
        "rho_trace_re",
        "rho_trace_im",
        "orbifold_side",
        "metric_side",
    ])
    .map_err(io)?;
    let opt = |x: &Option<Q>| x.as_ref().map_or(String::new(), q_to_string);
    for c in classes {
        let tr = c.rho_trace.unwrap_or([f64::NAN, f64::NAN]);
        out.write_record([
            c.rep_word.clone(),
            c.elliptic.to_string(),
            format!("{:.17e}", c.length),
            opt(&c.chi_orb_quotient),
            c.m_class.to_string(),
            format!("{:.17e}", c.vol_centralizer_quotient),
            c.delta_gamma.to_string(),
            c.class_size.to_string(),
            format!("{:.17e}", tr[0]),
            format!("{:.17e}", tr[1]),
            opt(&c.orbifold_side),
            opt(&c.metric_side),
        ])
        .map_err(io)?;
    }
    out.flush().map_err(|e| Error::Io(e.to_string()))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GeometricHeat {
    pub value: f64,
    pub tail_bound: f64,
    pub classes: usize,
}

/// Σ_{[γ]} Tr ρ(γ)·vol(Γ(γ)\X(γ))/|δ(γ)|·(2πt)^{−d/2}e^{−ℓ²/2t}, times Σ_p w(p)·C(n,p).
pub fn geometric_heat_side(p: &CheckedPresentation, rep: &HolonomyRep, t: f64, weight: HeatWeight) -> Result<GeometricHeat> {
    if !(t > 0.0) {
        return Err(Error::Parse(format!("heat trace needs t > 0, got {t}")));
    }
    let family = group_family(p)?;
    let d = match family {
        GroupFamily::Euclidean(n) => n,
        GroupFamily::RankOne => 1,
    };
    let n = p.n;
    let forms: f64 = (0..=n).map(|k| weight.weight(k, n) * binomial(n, k)).sum();
    // e^{−ℓ²/2t} < e^{−60} beyond this length
    let l_max = (120.0 * t).sqrt() + 1e-9;
    let mut classes = enumerate_classes(p, l_max)?;
    attach_traces(p, rep, &mut classes)?;
    let norm = (2.0 * PI * t).powf(-(d as f64) / 2.0);
    let mut re = Accumulator::new();
    let mut im = Accumulator::new();
    for c in &classes {
        let [tr_re, tr_im] = c.rho_trace.unwrap();
        let w = c.vol_centralizer_quotient / c.delta_gamma as f64 * norm * (-c.length * c.length / (2.0 * t)).exp();
        re.add(tr_re * w);
        im.add(tr_im * w);
    }
    let tail = forms.abs() * rep.rank as f64 * norm * class_tail(p, l_max, t);
    Ok(GeometricHeat { value: forms * re.value(), tail_bound: tail + forms.abs() * im.value().abs(), classes: classes.len() })
}

/// Bound for Σ_{ℓ > L} vol·e^{−ℓ²/2t} over translation classes.
fn class_tail(p: &CheckedPresentation, l: f64, t: f64) -> f64 {
    if let Some(r1) = &p.rank_one {
        let ell = q_to_f64(&r1.length);
        // Σ vol/|δ| over the classes with translation part k is ℓ; allow |H| for slack
        let order = r1.order() as f64;
        let k0 = (l / ell).floor() as i64 + 1;
        return (k0..k0 + 400).map(|k| 2.0 * order * ell * (-(k as f64 * ell).powi(2) / (2.0 * t)).exp()).sum();
    }
    let n = p.n;
    let g = p.lattice_gram_f64();
    let diam: f64 = (0..n).map(|i| g[(i, i)].sqrt()).sum();
    let unit_ball = PI.powf(n as f64 / 2.0) / gamma_half(n);
    // covol·N(s) ≤ ω_n (s + diam)ⁿ, then sum by parts
    integrate(
        |s| unit_ball * (s + diam).powi(n as i32) * (s / t) * (-s * s / (2.0 * t)).exp(),
        l,
        l + 20.0 * t.sqrt() + 2.0,
        200,
        16,
    )
}

fn gamma_half(n: usize) -> f64 {
    // Γ(n/2 + 1)
    let mut g = if n % 2 == 0 { 1.0 } else { PI.sqrt() / 2.0 };
    let mut x = if n % 2 == 0 { 1.0 } else { 1.5 };
    while x < n as f64 / 2.0 + 1.0 - 1e-9 {
        g *= x;
        x += 1.0;
    }
    g
}

#[derive(Debug, Clone, Serialize)]
pub struct SelbergRow {
    pub t: f64,
    pub spectral: f64,
    pub geometric: f64,
    pub deviation: f64,
    pub spectral_tail: f64,
    pub geometric_tail: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelbergReport {
    pub rows: Vec<SelbergRow>,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Tr e^{−(t/2)Δ} (all degrees) from the spectrum against the class sum.
pub fn selberg_trace_check(p: &CheckedPresentation, rep: &HolonomyRep, t_grid: &[f64], tolerance: f64) -> Result<SelbergReport> {
    group_family(p)?;
    let t_min = t_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let tables = spectra_for(p, rep, default_cutoff(t_min / 2.0))?;
    let mut rows = Vec::new();
    for &t in t_grid {
        let spec = heat_trace(&tables, t / 2.0, HeatWeight::Plain, None)?;
        let geo = geometric_heat_side(p, rep, t, HeatWeight::Plain)?;
        rows.push(SelbergRow {
            t,
            spectral: spec.value,
            geometric: geo.value,
            deviation: (spec.value - geo.value).abs(),
            spectral_tail: spec.tail_bound,
            geometric_tail: geo.tail_bound,
        });
    }
    let max_deviation = rows.iter().map(|r| r.deviation).fold(0.0, f64::max);
    Ok(SelbergReport { pass: max_deviation <= tolerance, max_deviation, tolerance, rows })
}
