//! Exact diagonalization of quantum spin systems on finite graphs. The
//! guide in `book/` walks through each module.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod droplets;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod lattice;
pub mod linalg;
pub mod models;
pub mod perturbation;
pub mod spectral;
pub mod ssep;
pub mod symmetry;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/lattices.md")]
    mod lattices {}
    #[doc = include_str!("../../../book/src/hilbert.md")]
    mod hilbert {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/spectra.md")]
    mod spectra {}
    #[doc = include_str!("../../../book/src/symmetry.md")]
    mod symmetry {}
    #[doc = include_str!("../../../book/src/exclusion.md")]
    mod exclusion {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/perturbation.md")]
    mod perturbation {}
    #[doc = include_str!("../../../book/src/droplets.md")]
    mod droplets {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
