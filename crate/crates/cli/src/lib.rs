//! Experiment orchestration and file formats for the quantized consensus
//! ADMM simulator. The numerical engines live in `qcadmm-core`; this crate
//! adds seeded sweeps, CSV/JSON emission and the `qcadmm` binary.

pub mod experiments;
pub mod formats;
