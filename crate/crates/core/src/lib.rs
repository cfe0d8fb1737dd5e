//! Random-code vector quantisation: exact distortion, extreme-value
//! approximations, deterministic designs and Monte Carlo checks.

pub mod designs;
pub mod error;
pub mod evt;
pub mod exact;
pub mod ks;
pub mod mc;
pub mod models;
pub mod poly;
pub mod quad;
pub mod search;
pub mod specfun;

pub use error::{Error, Result};
