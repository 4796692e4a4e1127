//! Flat and rank-one locally symmetric orbifolds: singular strata, flat
//! bundle holonomy, twisted Hodge spectra, analytic torsion, Selberg-type
//! trace formulas and Ruelle zeta functions.

pub mod error;
pub mod cli;
pub mod corpus;
pub mod holonomy;
pub mod io;
pub mod locsym;
pub mod linalg;
pub mod numeric;
pub mod orbicryst;
pub mod rational;
pub mod spectra;
pub mod torsion;

pub use error::{Error, Result};
