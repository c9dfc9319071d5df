//! Energy-aware adaptive modulation for a solar-powered software-defined radio link.
//!
//! The crate is organised bottom-up:
//!
//! - [`modem`]: M-PSK error-rate math over AWGN, a Monte Carlo cross-check and
//!   derivation of per-modulation SNR operating ranges from a BER target.
//! - [`battery`]: coulomb-counting state of charge and voltage lookup tables.
//! - [`solar`]: off-grid PV sizing chain and irradiance-driven charge current.
//! - [`powermodel`]: transmitter current draw versus gain and RF power, plus a
//!   link budget that maps modulation order to the gain it needs.
//! - [`controller`]: the energy-aware modulation selection policy.
//! - [`linksim`]: the closed-loop discrete-time simulator tying it all together.

pub mod battery;
pub mod controller;
pub mod error;
pub mod linksim;
pub mod modem;
pub mod powermodel;
pub mod rng;
pub mod solar;

pub use error::{Error, Result};
pub use modem::ModOrder;
