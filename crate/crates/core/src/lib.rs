//! Synthesis of explicit two-stage Runge-Kutta methods for the two-body problem.
//!
//! A single RK step on the circular Kepler orbit is written as a fixed
//! computational graph whose only trainable weights are the tableau entries
//! `a21`, `b1` and `b2`. Training that graph against the analytic solution
//! yields a method tuned to the problem; the remaining modules turn the
//! trained coefficients into an exact rational tableau, verify its order
//! conditions and benchmark it against the classical 2-stage methods.

pub mod bench;
pub mod datagen;
pub mod error;
pub mod optimizer;
pub mod rational;
pub mod rationalize;
pub mod rk2;
pub mod traingraph;
pub mod twobody;

pub use error::{Error, Result};
pub use rational::Rational;
pub use rk2::Tableau2;
pub use twobody::{Deriv4, State4};

/// Formats a float with 17 significant digits, enough for a bit-exact round trip.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
