//! Small numerical routines shared across the fitting modules: quadratic
//! least squares on centered normal equations, a bounded Nelder-Mead
//! simplex search, and bisection root finding.

mod polyfit;
mod root;
mod simplex;

pub use polyfit::{quadratic_fit, QuadraticFit};
pub use root::bisect_decreasing;
pub use simplex::{nelder_mead, NelderMeadOptions, NelderMeadResult};
