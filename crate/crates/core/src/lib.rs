//! First-order convex optimization built on auxiliary functions, with
//! per-iteration convergence certificates.

pub mod auxfunc;
pub mod certify;
pub mod cli;
pub mod error;
pub mod methods;
pub mod oracle;
pub mod reference;
pub mod schedule;
pub mod space;
pub mod verify;

pub use error::{Error, Result};
