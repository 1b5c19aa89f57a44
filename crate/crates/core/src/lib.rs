// SPDX-License-Identifier: Apache-2.0

//! Simulation toolkit for MRAM timing attacks and hardware Trojan detection.
//!
//! * [`mtj`] models MTJ cells whose switching delay grows with free-layer
//!   thickness.
//! * [`bist`] runs CRC-protected write/sense rounds against an MTJ array on a
//!   configurable clock, flagging transition delay faults.
//! * [`trace`] turns bit-level circuit activity into supply-current traces.
//! * [`detector`] classifies traces with a cross-correlation detector.
//! * [`katan`] and [`trojan`] provide KATAN-32 and the Trojan variants of
//!   both circuits.
//! * [`experiment`] wires everything into the two dataset experiments.

pub mod bist;
pub mod bits;
pub mod config;
pub mod crc;
pub mod csvio;
pub mod detector;
pub mod error;
pub mod experiment;
pub mod katan;
pub mod mtj;
pub mod trace;
pub mod trojan;

pub use error::{Error, Result};
