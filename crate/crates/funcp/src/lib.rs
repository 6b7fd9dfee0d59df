//! Change-point detection for functional time series.
//!
//! The crate tests for a change in the mean of a sequence of curves with the
//! fully functional CUSUM statistic. Critical values come from one of three
//! engines: a functional sieve bootstrap (principal-component scores driven
//! through a fitted vector autoregression, plus resampled remainder curves),
//! a sequential non-overlapping block bootstrap, or simulation of the
//! Gaussian limit distribution with an estimated long-run covariance.
//! A study driver reproduces size and size-corrected power experiments with
//! reproducible parallel Monte Carlo.

pub mod cusum;
pub mod dgp;
pub mod error;
pub mod funspace;
pub mod resample;
pub mod rng;
pub mod studio;
pub mod varsieve;

pub use error::{Error, Result};
pub use funspace::{FunctionSeries, Grid};
pub use rng::RngStream;
