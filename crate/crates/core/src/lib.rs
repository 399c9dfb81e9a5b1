//! Energy-efficient data collection from a wireless sensor network by a
//! UAV: joint optimization of the sensors' wake-up schedule and the UAV
//! trajectory under Rician fading with an outage-probability target.
//!
//! The pipeline is
//! [`scenario`] → [`channel`] rates → [`lp`] schedule ⇄ [`sca`] trajectory
//! (alternated by [`bcd`]) → block rounding → [`mc_verify`].

pub mod baselines;
pub mod bcd;
pub mod bundle;
pub mod channel;
pub mod error;
pub mod lp;
pub mod mc_verify;
pub mod sca;
pub mod scenario;
pub mod trajectory;

pub use error::{Error, Result};
