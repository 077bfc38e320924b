//! Transverse-mode coupling of light in a Kerr medium, in free space and in
//! a ring cavity, together with the quantum noise of the output field.

pub mod cavity;
pub mod continuation;
pub mod coupling;
pub mod error;
pub mod freespace;
pub mod modes;
pub mod ode;
pub mod perturbative;
pub mod presets;
pub mod spectra;
pub mod twomode;

pub use error::{Error, Result};

/// Selects between formulas as published and their re-derived counterparts
/// where the two differ.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Form {
    #[default]
    Printed,
    Rederived,
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/coefficients.md")]
    mod coefficients {}
    #[doc = include_str!("../../../book/src/free-space.md")]
    mod free_space {}
    #[doc = include_str!("../../../book/src/bistability.md")]
    mod bistability {}
    #[doc = include_str!("../../../book/src/two-mode.md")]
    mod two_mode {}
    #[doc = include_str!("../../../book/src/spectra.md")]
    mod spectra {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
