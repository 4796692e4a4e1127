//! Example presentations and representations shipped with the crate.

use crate::error::{Error, Result};
use crate::holonomy::HolonomyRep;
use crate::io::{parse_presentation, parse_rep};
use crate::orbicryst::{validate_presentation, CheckedPresentation};

pub struct CorpusCase {
    pub name: &'static str,
    pub presentation: &'static str,
    pub reps: &'static [(&'static str, &'static str)],
}

macro_rules! corpus_file {
    ($f:literal) => {
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/corpus/", $f))
    };
}

pub const CORPUS: &[CorpusCase] = &[
    CorpusCase {
        name: "circle",
        presentation: corpus_file!("circle.toml"),
        reps: &[
            ("trivial", corpus_file!("circle-trivial.json")),
            ("theta-pi", corpus_file!("circle-theta-pi.json")),
            ("theta-2pi3", corpus_file!("circle-theta-2pi3.json")),
        ],
    },
    CorpusCase {
        name: "mirrored-interval",
        presentation: corpus_file!("mirrored-interval.toml"),
        reps: &[
            ("trivial", corpus_file!("mirrored-interval-trivial.json")),
            ("sign", corpus_file!("mirrored-interval-sign.json")),
            ("dihedral", corpus_file!("mirrored-interval-dihedral.json")),
        ],
    },
    CorpusCase {
        name: "pillowcase",
        presentation: corpus_file!("pillowcase.toml"),
        reps: &[
            ("trivial", corpus_file!("pillowcase-trivial.json")),
            ("sign", corpus_file!("pillowcase-sign.json")),
            ("half", corpus_file!("pillowcase-half.json")),
        ],
    },
    CorpusCase {
        name: "torus2",
        presentation: corpus_file!("torus2.toml"),
        reps: &[("trivial", corpus_file!("torus2-trivial.json")), ("twisted", corpus_file!("torus2-twisted.json"))],
    },
    CorpusCase {
        name: "torus3",
        presentation: corpus_file!("torus3.toml"),
        reps: &[("trivial", corpus_file!("torus3-trivial.json")), ("twisted", corpus_file!("torus3-twisted.json"))],
    },
    CorpusCase {
        name: "t3-z2",
        presentation: corpus_file!("t3-z2.toml"),
        reps: &[("trivial", corpus_file!("t3-z2-trivial.json")), ("sign", corpus_file!("t3-z2-sign.json"))],
    },
    CorpusCase {
        name: "rank-one-trivial",
        presentation: corpus_file!("rank-one-trivial.toml"),
        reps: &[("theta-pi", corpus_file!("rank-one-trivial-pi.json")), ("theta-2pi3", corpus_file!("rank-one-trivial-2pi3.json"))],
    },
    CorpusCase {
        name: "rank-one-z2",
        presentation: corpus_file!("rank-one-z2.toml"),
        reps: &[("mixed", corpus_file!("rank-one-z2-mixed.json"))],
    },
    CorpusCase {
        name: "rank-one-z3",
        presentation: corpus_file!("rank-one-z3.toml"),
        reps: &[("swap", corpus_file!("rank-one-z3-swap.json"))],
    },
];

pub fn case(name: &str) -> Result<&'static CorpusCase> {
    CORPUS.iter().find(|c| c.name == name).ok_or_else(|| Error::Parse(format!("no corpus case '{name}'")))
}

pub fn presentation(name: &str) -> Result<CheckedPresentation> {
    validate_presentation(&parse_presentation(case(name)?.presentation)?)
}

pub fn rep(p: &CheckedPresentation, case_name: &str, rep_name: &str) -> Result<HolonomyRep> {
    let c = case(case_name)?;
    let text = c
        .reps
        .iter()
        .find(|(n, _)| *n == rep_name)
        .map(|(_, t)| *t)
        .ok_or_else(|| Error::Parse(format!("no representation '{rep_name}' for '{case_name}'")))?;
    parse_rep(p, text)
}

/// Validated presentation together with one of its representations.
pub fn load(case_name: &str, rep_name: &str) -> Result<(CheckedPresentation, HolonomyRep)> {
    let p = presentation(case_name)?;
    let r = rep(&p, case_name, rep_name)?;
    Ok((p, r))
}
