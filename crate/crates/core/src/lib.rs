//! Analytic pulse design for selective population transfer between two
//! levels of an N-level quantum system, with a non-RWA Schrödinger
//! propagator to verify the designs.
//!
//! Atomic units throughout.

pub mod designer;
pub mod error;
pub mod levels;
pub mod ode;
pub mod output;
pub mod propagator;
pub mod pulse;
pub mod quadrature;
pub mod runner;
pub mod scenario;

pub use designer::{
    chirp_design, delta, design_pulse, epsilon, optimized_duration, pi_pulse_duration, sigma,
    DesignOptions, DesignReport, DetuningMode, DriveMode, IterationOptions, PerturberAnalysis,
};
pub use error::{Error, Result};
pub use levels::{LevelSystem, PerturberSpec, Side, TargetPair, TransitionData};
pub use propagator::{
    integrate, integrate_reduced, interaction_matrix, predicted_perturber_population, Sampling,
    StateVector, Tolerances, Trajectory,
};
pub use pulse::{Carrier, ChirpProfile, Envelope, EnvelopeShape, PulseSpec, ScaledClock};
