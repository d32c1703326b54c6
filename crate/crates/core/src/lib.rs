//! Continuous-Galerkin spectral elements coupled to semi-infinite
//! absorbing layers built from scaled Laguerre functions.

pub mod assembly;
pub mod basis;
pub mod cases;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod equations;
pub mod helmholtz;
pub mod filter;
pub mod mesh;
pub mod output;
pub mod simulation;
pub mod timeint;
pub mod linalg;
