//! Cramér-Rao bounds on the 6-DoF pose (position and Euler-angle orientation)
//! of a reconfigurable intelligent surface (RIS) mounted on a sensing target.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: rotations, element lattices and local spherical frames.
//! * [`channel`]: delays, radar-equation path loss, transmit spectrum, the
//!   frequency-dependent RIS reflection coefficient and the noiseless model
//!   vector for the four near/far-field x wide/narrow-band variants.
//! * [`phase_config`]: near-field (focusing) and far-field (beam-steering)
//!   RIS phase profiles.
//! * [`fim`]: model Jacobians, Fisher information by Gauss-Legendre
//!   quadrature over the band, and the position/orientation error bounds.
//! * [`oracle`]: brute-force finite-difference and trapezoid references used
//!   to certify [`fim`].

pub mod channel;
pub mod error;
pub mod fim;
pub mod geometry;
pub mod linalg;
pub mod oracle;
pub mod phase_config;

pub use channel::{Band, ModelVariant, Scene, SignalSpec, Wavefront};
pub use error::{CrbError, Result};
pub use fim::{Fim, QuadratureSpec};
pub use geometry::{EulerAngles, Pose, RisLattice, TerminalGeometry};
pub use phase_config::{PhaseConfig, PhaseMode};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub type Complex = num_complex::Complex64;
pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
