//! Finite-depth toolkit for stationary 0-1 Bratteli diagrams and the
//! Cuntz-Krieger representations built from their semibranching function
//! systems.
//!
//! Every identity is checked on the span of depth-`k` cylinder indicators,
//! where it becomes an exact matrix identity over [`number::Value`].

pub mod admissible;
pub mod diagram;
pub mod error;
pub mod io;
pub mod measure;
pub mod number;
pub mod par;
pub mod representation;
pub mod sfs;

pub use error::{Error, Result};
