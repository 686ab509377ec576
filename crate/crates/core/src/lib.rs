//! Numerical simulator for photonic reservoir computing.
//!
//! Two reservoir families share one readout and evaluation stack:
//!
//! * [`esn`] — discrete-time echo-state networks with random internal,
//!   injection and bias weights behind a nonlinear activation.
//! * [`delay`] — a single nonlinear node with delayed feedback,
//!   time-multiplexed into virtual nodes by an input mask, simulated either as
//!   a delay differential equation (transient regime) or as the equivalent
//!   discrete map (settled regime).
//!
//! On top of these: ridge / online-LMS / Boolean-search readout training
//! ([`readout`]), feedforward cascades with a manufacturing-tolerance transfer
//! experiment ([`deep`]), and benchmark tasks with a uniform evaluation
//! protocol ([`tasks`]). Everything is deterministic under a fixed seed; see
//! [`rng`] for the generator contract.

pub mod delay;
pub mod deep;
pub mod error;
pub mod esn;
pub mod io;
pub mod linalg;
pub mod readout;
pub mod rng;
pub mod series;
pub mod tasks;

pub use error::{Error, Result};
pub use esn::{Activation, EsnParams, EsnReservoir};
pub use readout::{ReadoutKind, ReadoutWeights, RidgeConfig};
pub use rng::RandomSource;
pub use series::{StateMatrix, TimeSeries};
