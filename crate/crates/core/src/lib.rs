//! Green-function toolkit for time-varying ARMA processes.
//!
//! The central object is the principal determinant `ξ(t, s)`: the Green
//! function of the AR recursion with coefficients that change over time.
//! Everything else (explicit solutions, moments, forecasts, inversion,
//! operator algebra, random-coefficient moments, break models) is built on
//! top of it.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod breaks;
pub mod coefficients;
pub mod error;
pub mod forecast;
pub mod green;
pub mod inversion;
pub mod linalg;
pub mod mc;
pub mod moments;
pub mod path;
pub mod polyops;
pub mod process;
pub mod stochastic;
pub mod tail;

pub use error::{Error, ErrorKind, Result};
pub use path::{CoefficientPath, Regime, Time, Window};
