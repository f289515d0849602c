//! Quantized consensus ADMM over connected agent networks.
//!
//! Agents jointly minimize a sum of local convex objectives `f_i = g_i + h_i`
//! by exchanging iterates with their neighbors. Two synchronous engines are
//! provided: the exact consensus recursion ([`admm::c_admm_step`]) and its
//! quantized variant ([`admm::qc_admm_step`]) in which every transmitted (and
//! own) iterate is snapped to the lattice `{t·Δ}` first. The [`analysis`]
//! module evaluates the closed-form convergence certificates (contraction
//! rate, consensus-error bound, iteration-count bound) that the quantized
//! recursion satisfies, and [`oracle`] produces the centralized ground truth
//! the distributed runs are measured against.
//!
//! The crate is `no_std` (with `alloc`); IO, file formats and the CLI live in
//! the companion `qcadmm` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod admm;
pub mod analysis;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod objectives;
pub mod oracle;
pub mod quantizer;

pub use error::{Error, Result};
