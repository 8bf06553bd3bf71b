//! Simulator and optimizer for joint phase-time array (JPTA) beamforming:
//! a single-RF-chain transmitter drives true-time-delay units and
//! phase-shifter subarrays to form frequency-dependent beams that serve
//! several near- and far-field users over a wideband OFDM channel.
//!
//! The crate covers scenario generation and line-of-sight channel synthesis,
//! the beamformer algebra, a three-step alternating optimizer (subband
//! allocation by successive convex approximation, analog beamformer fitting
//! by block coordinate descent, and water-filling / proportional-fair power
//! allocation), fully-digital and phased-array baselines, and a batch
//! harness with gain maps, rate CDFs, and spectral/energy efficiency
//! metrics.
//!
//! All numerics are generic over the scalar type via [`Float`]; `f64`
//! aliases for the main types live at the crate root.

// Validations use `!(x > 0)` so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod arrays;
pub mod baselines;
pub mod batch;
pub mod config;
pub mod error;
pub mod float;
pub mod metrics;
pub mod optimizer;
pub mod scenario;

pub use arrays::{AllocationPlan, JptaBeamformer, PhaseShifterBank, TtdBank, UtilityKind};
pub use baselines::{Architecture, Beamformer, FdBeamformer, PaBeamformer};
pub use error::{Error, Result};
pub use float::Float;
pub use scenario::{ChannelSet, FieldTag, SystemConfig, UserPosition};

/// Complex sample type used by the `f64` aliases.
pub type Complex64 = num_complex::Complex<f64>;

pub type SystemConfig64 = SystemConfig<f64>;
pub type UserPosition64 = UserPosition<f64>;
pub type ChannelSet64 = ChannelSet<f64>;
pub type JptaBeamformer64 = JptaBeamformer<f64>;
pub type AllocationPlan64 = AllocationPlan<f64>;
pub type Beamformer64 = Beamformer<f64>;
pub type SolverState64 = optimizer::SolverState<f64>;
