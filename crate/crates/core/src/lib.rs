//! Simulator for a hybrid active-passive RIS-aided mobile edge computing
//! system.
//!
//! Users split computation tasks between local execution and offloading to an
//! edge server through a reconfigurable intelligent surface whose units switch
//! individually between passive (phase-only) and active (phase + amplify)
//! modes. The library covers:
//!
//! - [`channel`]: seeded path-loss + fading channel generation
//! - [`model`]: system state, SINR/rate/energy metrics, constraint checking
//! - [`beamforming`]: closed-form MMSE receive combining
//! - [`timepower`]: the convex transmission-time/power/offload-ratio
//!   subproblem, solved by a log-barrier interior point method
//! - [`sca`]: the successive-convex-approximation machinery for the RIS
//!   configuration subproblem (binary relaxation, Big-M coupling, PSD
//!   lifting, SVD noise decomposition, exponential slacks)
//! - [`closedform`]: analytical latency- and energy-minimization solvers for
//!   the single-antenna line-of-sight regime
//! - [`orchestrator`]: the alternating-optimization loop, baselines, a
//!   brute-force grid oracle, and the Monte Carlo sweep harness
//!
//! Trials in the sweep harness run data-parallel via rayon when the default
//! `parallel` feature is enabled; disabling it falls back to a sequential
//! driver with bit-identical output.

pub mod beamforming;
pub mod channel;
pub mod closedform;
pub mod config;
pub mod error;
pub mod exec;
pub mod model;
pub mod orchestrator;
pub mod rng;
pub mod sca;
pub mod timepower;
pub mod units;
pub mod validate;

pub use error::Error;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;
/// Dynamically sized complex vector.
pub type CVector = nalgebra::DVector<C64>;
/// Dynamically sized complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
