//! Simulator and verification toolkit for a Teichmüller-type harmonic map
//! flow from hyperbolic cylinders with Plateau boundary conditions.

pub mod bubbles;
pub mod contour;
pub mod curves;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod flow;
pub mod geometry;
pub mod hopf;
pub mod moebius;
pub mod oracles;
pub mod quad;
pub mod scenario;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{Cx, Real};

/// Concrete aliases at the default `f64` precision used by the CLI.
pub type Cylinder = geometry::HyperbolicCylinder<f64>;
pub type Moebius = moebius::MoebiusParams<f64>;
pub type Complex = Cx<f64>;
