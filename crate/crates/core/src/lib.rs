//! Subspace enumeration plus degree-2 SDP for approximating 2CSPs, MAX-CUT
//! and Boolean quadratic programs on low threshold rank instances.

pub mod csp;
pub mod error;
pub mod generate;
pub mod io;
pub mod matrix;
pub mod net;
pub mod oracle;
pub mod sdp;
pub mod solver;
pub mod spectral;

pub use csp::{Assignment, Constraint, CspInstance};
pub use error::{Error, Result};
pub use io::Graph;
pub use matrix::SymMatrix;
pub use solver::{solve_2csp, solve_boolean_quadratic, solve_maxcut, SolveOptions, SolveReport, Solver};
