//! Baseband simulation of narrowband power-line OFDM links under impulse noise.
//!
//! The crate covers the noise models (Mixed Gaussian, Middleton Class-A,
//! bursty impulse trains and periodic trains), the CENELEC/FCC OFDM chain,
//! channel-capacity formulas with and without channel-state information,
//! nulling/clipping mitigation and the experiment drivers behind the
//! `plcsim` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod chain;
pub mod dsp;
pub mod error;
pub mod experiment;
pub mod mitigation;
pub mod noise;
pub mod ofdm;
pub mod stats;

pub use capacity::{CapacityInputs, CapacityReport};
pub use chain::{NoiseSource, Scenario, Tally};
pub use dsp::{Complex, DftPlan, RandomStream};
pub use error::{Error, Result};
pub use noise::{ImpulseTrain, ImpulseTrainParams, MiddletonAParams, MixedGaussianParams, PeriodicNoiseParams};
pub use ofdm::{Band, BandConfig, Constellation, OfdmFrame, OfdmModem};
