//! Event retrieval over multi-dimensional numeric time series via Z-order
//! (Morton) codes.
//!
//! Samples are quantized onto an unsigned integer lattice and reduced to a
//! single Morton code by bit-interleaving. The sorted codes act as a
//! secondary index into a timestamp-keyed sample store; axis-aligned value
//! boxes translate into inclusive code ranges that never miss an in-box
//! point, so range scans plus a per-candidate filter retrieve exactly the
//! relevant time points. Multi-stage search masks combine such boxes with
//! temporal constraints to describe events (e.g. driving maneuvers), and
//! three detectors — two brute-force baselines and the index-backed one —
//! are guaranteed to return identical event lists.
//!
//! This crate is `no_std` (with `alloc`) and holds the pure algorithmic
//! parts; persistence, CSV formats, synthetic data generation and the CLI
//! live in the companion `zebra-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod detect;
pub mod mask;
pub mod morton;
pub mod quant;
pub mod segment;
pub mod store;

pub use detect::{detect, Detector};
pub use mask::{Event, SearchMask, StageBox, TemporalParams};
pub use morton::MortonCode;
pub use quant::{DimSpec, LatticePoint, QuantizationConfig};
pub use store::{IndexEntry, Store, StoreBuilder};
