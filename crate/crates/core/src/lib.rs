//! Rational matrix symbols with poles on the unit circle, their block
//! Toeplitz operators, essential spectra and resolvent membership.

pub mod cli;
pub mod config;
pub mod error;
pub mod hokalman;
pub mod io;
pub mod linalg;
pub mod pencil;
pub mod poly;
pub mod ratsym;
pub mod reproduce;
pub mod riccati;

pub use config::Config;
pub use error::{Error, Result};
