//! Multi-scale time-series regression toolkit.
//!
//! Builds scale-dependent variance and covariance functions by detrended
//! fluctuation analysis, turns them into a bivariate regression whose
//! coefficients, variances, and evaluation indices are all functions of
//! the time scale, and tests their significance against shuffle-based
//! Monte Carlo critical curves. Includes the classical OLS baseline,
//! DCCA / partial-DCCA correlation coefficients, synthetic generators
//! (ARFIMA fractional noise, binomial multifractal cascades), and CSV
//! ingestion with seasonal splitting.

pub mod coefficients;
pub mod error;
pub mod fluctuation;
pub mod ingestion;
pub mod regression;
pub mod series;
pub mod significance;
pub mod synthgen;

pub use error::{Error, Result};
pub use series::{build_profile, Profile, ScaleGrid, TimeSeries};
