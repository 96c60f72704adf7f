//! Explicit sofic approximations of products of free groups through the finite
//! groups A_p ⋊ PSL2(F_p), with exact and sampled checks of their properties.

pub mod algebra;
pub mod cli;
pub mod error;
pub mod f3vectors;
pub mod groups;
pub mod partition;
pub mod report;
pub mod sofic;
pub mod spectral;
pub mod suites;

pub use error::{Error, Result};
