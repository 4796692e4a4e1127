//! File formats: TOML presentations, JSON representations, CSV spectra with
//! a JSON sidecar, and the hash-keyed spectrum cache.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::holonomy::{HolonomyRep, DEFAULT_REP_TOL};
use crate::linalg::CMat;
use crate::orbicryst::{pg, validate_presentation, CheckedPresentation, QuotientPresentation};
use crate::rational::{parse_q, Q, QMat};
use crate::spectra::{SpectrumEntry, SpectrumTable};

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Rat {
    Int(i64),
    Str(String),
}

impl Rat {
    fn to_q(&self) -> Result<Q> {
        match self {
            Rat::Int(i) => Ok(crate::rational::q(*i)),
            Rat::Str(s) => parse_q(s),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Cplx {
    Real(f64),
    Pair([f64; 2]),
}

impl Cplx {
    fn value(&self) -> Complex64 {
        match *self {
            Cplx::Real(x) => Complex64::new(x, 0.0),
            Cplx::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ElementFile {
    name: String,
    linear: Vec<Vec<i64>>,
    shift: Vec<Rat>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RankOneFile {
    length: Rat,
    h_names: Vec<String>,
    h: Vec<Vec<Vec<Cplx>>>,
    twist: Vec<Vec<Cplx>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PresentationFile {
    kind: String,
    dimension: usize,
    #[serde(default)]
    lattice: Option<Vec<Vec<Rat>>>,
    #[serde(default)]
    gram: Option<Vec<Vec<Rat>>>,
    #[serde(default)]
    elements: Vec<ElementFile>,
    #[serde(default)]
    rank_one: Option<RankOneFile>,
}

fn qmat(rows: &[Vec<Rat>]) -> Result<QMat> {
    rows.iter().map(|r| r.iter().map(Rat::to_q).collect()).collect()
}

fn cmat(rows: &[Vec<Cplx>]) -> Result<CMat> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Parse("ragged matrix".into()));
    }
    Ok(CMat::from_fn(n, m, |i, j| rows[i][j].value()))
}

pub fn parse_presentation(text: &str) -> Result<QuotientPresentation> {
    let f: PresentationFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    match f.kind.as_str() {
        "flat" | "FlatCrystallographic" => {
            let lattice = qmat(f.lattice.as_deref().ok_or_else(|| Error::Parse("missing `lattice`".into()))?)?;
            let gram = qmat(f.gram.as_deref().ok_or_else(|| Error::Parse("missing `gram`".into()))?)?;
            let elements = f
                .elements
                .iter()
                .map(|e| Ok(pg(&e.name, e.linear.clone(), e.shift.iter().map(Rat::to_q).collect::<Result<_>>()?)))
                .collect::<Result<Vec<_>>>()?;
            let mut p = QuotientPresentation::flat(lattice, gram, elements);
            p.dimension = f.dimension;
            Ok(p)
        }
        "rank-one" | "RankOneCircle" => {
            if f.dimension != 1 {
                return Err(Error::UnsupportedDimension(f.dimension));
            }
            let r = f.rank_one.ok_or_else(|| Error::Parse("missing [rank_one] block".into()))?;
            let h = r.h.iter().map(|m| cmat(m)).collect::<Result<Vec<_>>>()?;
            Ok(QuotientPresentation::rank_one(r.length.to_q()?, r.h_names, h, cmat(&r.twist)?))
        }
        other => Err(Error::Parse(format!("unknown kind '{other}' (expected \"flat\" or \"rank-one\")"))),
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn load_presentation(path: &Path) -> Result<CheckedPresentation> {
    validate_presentation(&parse_presentation(&read_text(path)?)?)
}

#[derive(Debug, Deserialize)]
struct RepFile {
    rank: usize,
    generators: BTreeMap<String, Vec<Vec<Cplx>>>,
}

pub fn parse_rep(p: &CheckedPresentation, text: &str) -> Result<HolonomyRep> {
    let f: RepFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let images = f.generators.iter().map(|(k, m)| Ok((k.clone(), cmat(m)?))).collect::<Result<BTreeMap<_, _>>>()?;
    HolonomyRep::validated(p, f.rank, images, DEFAULT_REP_TOL.max(1e-9))
}

pub fn load_rep(p: &CheckedPresentation, path: &Path) -> Result<HolonomyRep> {
    parse_rep(p, &read_text(path)?)
}

pub fn rep_to_json(rep: &HolonomyRep) -> serde_json::Value {
    let gens: BTreeMap<&String, Vec<Vec<[f64; 2]>>> = rep
        .generator_images
        .iter()
        .map(|(k, m)| (k, (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()))
        .collect();
    serde_json::json!({ "rank": rep.rank, "generators": gens })
}

pub fn write_spectrum_csv<W: std::io::Write>(tables: &[SpectrumTable], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["degree", "eigenvalue", "multiplicity"]).map_err(|e| Error::Io(e.to_string()))?;
    for t in tables {
        for e in &t.entries {
            out.write_record([t.degree.to_string(), format!("{:.17e}", e.eigenvalue), e.multiplicity.to_string()])
                .map_err(|e| Error::Io(e.to_string()))?;
        }
    }
    out.flush().map_err(|e| Error::Io(e.to_string()))
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    degree: usize,
    eigenvalue: f64,
    multiplicity: u64,
}

/// Metadata written next to the CSV file.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Sidecar {
    key: String,
    tables: Vec<SpectrumTable>,
}

pub fn spectrum_cache_key(p: &CheckedPresentation, rep: &HolonomyRep, degree: Option<usize>, cutoff: f64) -> String {
    let mut h = Sha256::new();
    h.update(p.hash());
    h.update(rep.hash());
    h.update(format!("{degree:?}|{cutoff:.17e}"));
    hex::encode(h.finalize())
}

pub struct SpectrumCache {
    dir: PathBuf,
}

impl SpectrumCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        SpectrumCache { dir: dir.into() }
    }

    fn paths(&self, key: &str) -> (PathBuf, PathBuf) {
        (self.dir.join(format!("{key}.csv")), self.dir.join(format!("{key}.json")))
    }

    pub fn load(&self, key: &str) -> Option<Vec<SpectrumTable>> {
        let (csv_path, json_path) = self.paths(key);
        let side: Sidecar = serde_json::from_str(&std::fs::read_to_string(json_path).ok()?).ok()?;
        if side.key != key {
            return None;
        }
        let mut rdr = csv::Reader::from_path(csv_path).ok()?;
        let mut tables = side.tables;
        for t in &mut tables {
            t.entries.clear();
        }
        for row in rdr.deserialize::<CsvRow>() {
            let row = row.ok()?;
            let t = tables.iter_mut().find(|t| t.degree == row.degree)?;
            t.entries.push(SpectrumEntry { eigenvalue: row.eigenvalue, exact_over_4pi2: None, multiplicity: row.multiplicity });
        }
        Some(tables)
    }

    pub fn store(&self, key: &str, tables: &[SpectrumTable]) -> Result<()> {
        std::fs::create_dir_all(&self.dir).map_err(|e| Error::Io(e.to_string()))?;
        let (csv_path, json_path) = self.paths(key);
        let file = std::fs::File::create(&csv_path).map_err(|e| Error::Io(e.to_string()))?;
        write_spectrum_csv(tables, file)?;
        let side = Sidecar {
            key: key.to_string(),
            tables: tables.iter().map(|t| SpectrumTable { entries: vec![], ..t.clone() }).collect(),
        };
        std::fs::write(json_path, serde_json::to_string_pretty(&side).unwrap()).map_err(|e| Error::Io(e.to_string()))
    }
}
