//! Early-exercise boundary and price of the American put under the
//! finite-horizon, constant-elasticity scaling `P_t = S P_SS + ρ S P_S − ρ P`.

pub mod asymptotics;
pub mod error;
pub mod ie_solver;
pub mod interp;
pub mod io;
pub mod methods;
pub mod model;
pub mod pde;
pub mod pricer;
pub mod quadrature;
pub mod registry;
pub mod specfun;

pub use error::{Error, Result};
pub use model::{make_params, BoundaryCurve, ModelParams};
