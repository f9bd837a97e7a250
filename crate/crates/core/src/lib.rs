//! Continued-fraction digits under the Gauss measure.
//!
//! The crate is organised bottom-up:
//!
//! * [`cf_core`]: Gauss map, digit extraction, convergents, the derived variables `r_n`, `y_n`, `u_n`.
//! * [`gauss_measure`]: closed-form measures of digit events, cylinders and the `γ_a` family.
//! * [`digit_sampler`]: samplers whose digit law is exactly `γ` (big-integer cylinder chain) or `γ_a`.
//! * [`zero_one`]: event families, series criteria and hit counting for limsup events.
//! * [`clt_lab`]: the counting process `S_n`, its conditions and Monte Carlo normality checks.
//! * [`mixing_lab`]: the discrepancy `f(a, x)`, `η = φ(1)` and the ψ/φ bounds.
//!
//! The `cf-limits-lab` binary wraps all of the above.

pub mod cf_core;
pub mod clt_lab;
pub mod digit_sampler;
pub mod error;
pub mod expr;
pub mod gauss_measure;
pub mod mixing_lab;
pub mod stats;
pub mod zero_one;

pub(crate) mod bignum;

pub use error::{Error, Result};
