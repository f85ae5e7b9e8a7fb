//! Explicit two-stage Runge-Kutta methods.
//!
//! ```text
//!  c2 | a21
//!  ---+----------
//!     | b1    b2
//! ```
//!
//! `k1 = f(v)`, `k2 = f(v + h*a21*k1)`, `v' = v + h*(b1*k1 + b2*k2)`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::twobody::{analytic_state, rhs, State4};

/// Scalar type a tableau can be stored in.
pub trait Coefficient:
    Copy + PartialEq + fmt::Debug + fmt::Display + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self>
{
    const ZERO: Self;
    const ONE: Self;
    const HALF: Self;

    fn to_f64(self) -> f64;
}

impl Coefficient for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    const HALF: Self = 0.5;

    fn to_f64(self) -> f64 {
        self
    }
}

impl Coefficient for Rational {
    const ZERO: Self = Rational::ZERO;
    const ONE: Self = Rational::ONE;
    const HALF: Self = Rational::HALF;

    fn to_f64(self) -> f64 {
        Rational::to_f64(self)
    }
}

/// Butcher tableau of an explicit 2-stage method. `c2 == a21` holds by
/// construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tableau2<T> {
    c2: T,
    a21: T,
    b1: T,
    b2: T,
}

impl<T: Coefficient> Tableau2<T> {
    pub fn new(a21: T, b1: T, b2: T) -> Self {
        Self { c2: a21, a21, b1, b2 }
    }

    /// Builds a tableau from all four entries, rejecting `c2 != a21`.
    pub fn from_butcher(c2: T, a21: T, b1: T, b2: T) -> Result<Self> {
        if c2 != a21 {
            return Err(Error::InconsistentTableau {
                c2: c2.to_string(),
                a21: a21.to_string(),
            });
        }
        Ok(Self::new(a21, b1, b2))
    }

    pub fn c2(&self) -> T {
        self.c2
    }

    pub fn a21(&self) -> T {
        self.a21
    }

    pub fn b1(&self) -> T {
        self.b1
    }

    pub fn b2(&self) -> T {
        self.b2
    }

    pub fn to_f64(&self) -> Tableau2<f64> {
        Tableau2::new(self.a21.to_f64(), self.b1.to_f64(), self.b2.to_f64())
    }

    pub fn order_residuals(&self) -> OrderResidual<T> {
        order_residuals(self)
    }
}

impl Tableau2<Rational> {
    /// `a21 = 11/26`, `b = (-2/11, 13/11)`: the method tuned to the circular orbit.
    pub fn tuned() -> Self {
        Self::new(q(11, 26), q(-2, 11), q(13, 11))
    }

    pub fn heun() -> Self {
        Self::new(Rational::ONE, Rational::HALF, Rational::HALF)
    }

    pub fn midpoint() -> Self {
        Self::new(Rational::HALF, Rational::ZERO, Rational::ONE)
    }

    /// `a21 = 2/3`, `b = (1/4, 3/4)`.
    pub fn two_thirds() -> Self {
        Self::new(q(2, 3), q(1, 4), q(3, 4))
    }
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n, d).expect("constant fraction")
}

impl<T: Coefficient> fmt::Display for Tableau2<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c2 = a21 = {}, b1 = {}, b2 = {}", self.a21, self.b1, self.b2)
    }
}

/// Residuals of `b1 + b2 = 1` and `b2*c2 = 1/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderResidual<T> {
    pub r1: T,
    pub r2: T,
}

impl<T: Coefficient> OrderResidual<T> {
    /// Algebraic order implied by the residuals: 2 if both vanish, 1 if only
    /// the first does, otherwise 0.
    pub fn order(&self) -> u32 {
        match (self.r1 == T::ZERO, self.r2 == T::ZERO) {
            (true, true) => 2,
            (true, false) => 1,
            _ => 0,
        }
    }
}

pub fn order_residuals<T: Coefficient>(t: &Tableau2<T>) -> OrderResidual<T> {
    OrderResidual {
        r1: t.b1 + t.b2 - T::ONE,
        r2: t.b2 * t.c2 - T::HALF,
    }
}

/// One step of size `h` from `s`.
pub fn rk_step(t: &Tableau2<f64>, s: &State4, h: f64) -> Result<State4> {
    let ha = h * t.a21;
    let k1 = rhs(s)?;
    let k2 = rhs(&s.shifted(ha, &k1))?;
    Ok(State4::new(
        s.x + h * (t.b1 * k1.dx + t.b2 * k2.dx),
        s.y + h * (t.b1 * k1.dy + t.b2 * k2.dy),
        s.vx + h * (t.b1 * k1.ax + t.b2 * k2.ax),
        s.vy + h * (t.b1 * k1.ay + t.b2 * k2.ay),
    ))
}

fn check_interval(t0: f64, t_end: f64, n_steps: usize) -> Result<f64> {
    if n_steps == 0 {
        return Err(Error::InvalidGrid("n_steps must be at least 1".into()));
    }
    if !(t_end > t0) || !t0.is_finite() || !t_end.is_finite() {
        return Err(Error::InvalidGrid(format!("need finite t_end > t0, got [{t0}, {t_end}]")));
    }
    Ok((t_end - t0) / n_steps as f64)
}

/// Fixed-step integration of `n_steps` steps over `[t0, t_end]`, propagating
/// the numerical solution. Returns all `n_steps + 1` states.
pub fn integrate(
    t: &Tableau2<f64>,
    s0: State4,
    t0: f64,
    t_end: f64,
    n_steps: usize,
) -> Result<Vec<State4>> {
    let h = check_interval(t0, t_end, n_steps)?;
    let mut traj = Vec::with_capacity(n_steps + 1);
    traj.push(s0);
    let mut s = s0;
    for i in 0..n_steps {
        s = rk_step(t, &s, h).map_err(|e| e.at(i))?;
        traj.push(s);
    }
    Ok(traj)
}

/// Max over steps and components of the deviation from the circular orbit,
/// where `trajectory[i]` is taken to be the state at `t0 + i*h`.
pub fn max_abs_error(trajectory: &[State4], t0: f64, h: f64) -> f64 {
    trajectory
        .iter()
        .enumerate()
        .map(|(i, s)| s.max_abs_diff(&analytic_state(t0 + i as f64 * h)))
        .fold(0.0, f64::max)
}

/// Same result as `max_abs_error(&integrate(..)?, t0, h)` without storing the
/// trajectory.
pub fn integrate_max_error(
    t: &Tableau2<f64>,
    s0: State4,
    t0: f64,
    t_end: f64,
    n_steps: usize,
) -> Result<f64> {
    let h = check_interval(t0, t_end, n_steps)?;
    let mut err = s0.max_abs_diff(&analytic_state(t0));
    let mut s = s0;
    for i in 0..n_steps {
        s = rk_step(t, &s, h).map_err(|e| e.at(i))?;
        err = err.max(s.max_abs_diff(&analytic_state(t0 + (i + 1) as f64 * h)));
    }
    Ok(err)
}
