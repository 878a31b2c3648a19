//! Strategic priority purchase in a two-class M|G|1 queue.
//!
//! Customers arriving to an unobservable single-server queue may pay a fee
//! to join a premium class served ahead of the ordinary class, under either
//! preemptive-resume or non-preemptive priority. This crate computes the
//! resulting mean waits, the equilibrium premium fractions and their
//! stability, the social optimum and the price of anarchy, and provides a
//! discrete-event simulator and best-response dynamics to check those closed
//! forms independently.
//!
//! ```
//! use premq::model::{ModelParams, PhiFraction};
//! use premq::analytic::cost_gap_pr;
//! use premq::equilibrium::equilibria_pr;
//!
//! let params = ModelParams::new(0.25, 1.0, 4.0, 0.6).unwrap();
//! let gap = cost_gap_pr(&params, PhiFraction::new(2.0 / 3.0).unwrap());
//! assert!((gap - 0.6).abs() < 1e-12);
//! assert!(equilibria_pr(&params).unique_mixed());
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod dynamics;
pub mod equilibrium;
pub mod model;
pub mod simulator;
pub mod verify;
pub mod welfare;

pub use analytic::{Discipline, WaitTimes};
pub use equilibrium::{CostCurveShape, EquilibriumSet};
pub use model::{ModelParams, PhiFraction, ServiceSpec};
pub use simulator::{SimConfig, SimEstimate, SimResult};
