//! Constant mean curvature surfaces in the Heisenberg group built from
//! solutions of a constrained sinh-Gordon equation, together with the
//! residual suites that check every identity along the way.

pub mod artifacts;
pub mod cfld;
pub mod error;
pub mod grid;
pub mod immersion;
pub mod mesh;
pub mod nil;
pub mod ode;
pub mod pipeline;
pub mod reality;
pub mod report;
pub mod sinh_gordon;
pub mod spinor;
pub mod stencil;

pub use error::{Error, Result};
pub use grid::{ComplexField, ConformalGrid};
pub use num_complex::Complex64;
pub use report::{empirical_order, ResidualReport, Rim};
