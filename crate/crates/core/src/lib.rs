//! Coding-aware bit and energy loading for DMT and linear-precoded DMT
//! (LP-DMT) over multipath power-line channels.
//!
//! * [`channel`]: multipath frequency response and length profiles.
//! * [`coding`]: SNR-gap tables for uncoded QAM and RS + 4D trellis coding.
//! * [`loading`]: per-subset bit/energy allocation under a PSD budget.
//! * [`scenario`]: end-to-end runs, sweeps and throughput accounting.
//! * [`config`]: scenario files and overrides.
//!
//! The numeric modules are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`.

// `!(x >= 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Reference values in tests are quoted at full published precision.
#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod channel;
pub mod coding;
pub mod config;
pub mod error;
pub mod loading;
pub mod params;
pub mod scalar;
pub mod scenario;
pub mod special;
pub mod table;

pub use error::{Error, Result};
pub use scalar::{from_db, to_db, Scalar};

pub type Channel = channel::MultipathChannelModel<f64>;
pub type Grid = channel::FrequencyGrid<f64>;
pub type GapTable = coding::GapTable<f64>;
pub type CodingConfig = coding::CodingConfig<f64>;
pub type TrellisCodeParams = coding::TrellisCodeParams<f64>;
pub type Subset = loading::Subset<f64>;
pub type SubsetAllocation = loading::SubsetAllocation<f64>;
pub type LoadingInputs = loading::LoadingInputs<f64>;
pub type SystemAllocation = loading::SystemAllocation<f64>;
pub type SystemConfig = scenario::SystemConfig<f64>;
pub type ScenarioResult = scenario::ScenarioResult<f64>;

pub type Channel32 = channel::MultipathChannelModel<f32>;
pub type GapTable32 = coding::GapTable<f32>;
pub type SystemConfig32 = scenario::SystemConfig<f32>;
