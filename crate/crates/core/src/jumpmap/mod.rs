//! Class-G staircases, the measures they generate, and the jump-map equation
//! that resolves the state across a jump of the driver.

mod bounds;
mod measure;
mod sigma;
mod solve;

pub use bounds::{check_phi_bounds, random_bound_trials, BoundCheck, BoundTrials, SOLVER_BUDGET};
pub use measure::{sigma_staircase, JumpMeasure, XiGrid};
pub use sigma::{SigmaG, FIT_ROUND_TRIP_TOL};
pub use solve::{flow, phi_explicit_ramp, phi_recursion, phi_solve, ramp_z, RK4_SUBSTEP};
