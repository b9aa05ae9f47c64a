//! Dual-domain joint communication and sensing simulator.
//!
//! OFDM data is placed on the frequency-time (FT) grid, a sparse radar pulse
//! is designed on the delay-Doppler (DD) grid and mapped to FT with the
//! inverse symplectic transform, and both share every FT bin. The crate
//! provides the transmit chain, doubly-selective channels, the UE
//! communication receiver, the monostatic sensing receiver and a Monte
//! Carlo sweep driver.

pub mod channel;
pub mod config;
pub mod error;
pub mod experiments;
pub mod numerics;
pub mod rx_comm;
pub mod rx_sense;
pub mod waveform;

pub use config::{power_split, resolutions, validate, PowerSplit, Resolutions, SystemConfig, UserScenario, UserSpec};
pub use error::{Error, Result};
pub use experiments::{run_sweep, run_trial, Case, SweepPoint, SweepResult, SweepSpec, TrialOptions, TrialResult};
pub use numerics::ComplexGrid;
