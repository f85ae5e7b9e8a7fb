//! Planar two-body problem with unit gravitational parameter.
//!
//! The second-order system `x'' = -x/r^3, y'' = -y/r^3` is carried as the
//! first-order state `(x, y, vx, vy)`. The circular orbit `(cos t, sin t)` is
//! the analytic reference used for training data and error measurement.

use crate::error::{Error, Result};

/// States with a radius below this are rejected by [`rhs`].
pub const SINGULAR_RADIUS: f64 = 1e-8;

/// Position and velocity of the orbiting body.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct State4 {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

/// Time derivative of a [`State4`]: velocity followed by acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Deriv4 {
    pub dx: f64,
    pub dy: f64,
    pub ax: f64,
    pub ay: f64,
}

impl State4 {
    pub const fn new(x: f64, y: f64, vx: f64, vy: f64) -> Self {
        Self { x, y, vx, vy }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.vx, self.vy]
    }

    pub fn radius(&self) -> f64 {
        (self.x * self.x + self.y * self.y).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// `self + scale * d`, componentwise.
    pub fn shifted(&self, scale: f64, d: &Deriv4) -> Self {
        Self::new(
            self.x + scale * d.dx,
            self.y + scale * d.dy,
            self.vx + scale * d.ax,
            self.vy + scale * d.ay,
        )
    }

    /// Largest componentwise absolute difference.
    pub fn max_abs_diff(&self, other: &State4) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Deriv4 {
    pub fn to_array(self) -> [f64; 4] {
        [self.dx, self.dy, self.ax, self.ay]
    }
}

fn check_radius(x: f64, y: f64) -> Result<f64> {
    let r = (x * x + y * y).sqrt();
    // `!(r >= ..)` also catches NaN
    if !(r >= SINGULAR_RADIUS) {
        return Err(Error::SingularState { radius: r });
    }
    Ok(r)
}

/// Gravitational acceleration `(-x/r^3, -y/r^3)` at a position.
pub fn acceleration(x: f64, y: f64) -> Result<(f64, f64)> {
    let r = check_radius(x, y)?;
    let r3 = r * r * r;
    Ok((-x / r3, -y / r3))
}

/// Right-hand side of the first-order system. The problem is autonomous, so
/// no time argument is taken.
pub fn rhs(s: &State4) -> Result<Deriv4> {
    let (ax, ay) = acceleration(s.x, s.y)?;
    Ok(Deriv4 {
        dx: s.vx,
        dy: s.vy,
        ax,
        ay,
    })
}

/// Partial derivatives of the acceleration with respect to position,
/// `[[dax/dx, dax/dy], [day/dx, day/dy]]`.
pub fn accel_jacobian(x: f64, y: f64) -> Result<[[f64; 2]; 2]> {
    let r = check_radius(x, y)?;
    let r2 = r * r;
    let r3 = r2 * r;
    let r5 = r3 * r2;
    let cross = 3.0 * x * y / r5;
    Ok([
        [-1.0 / r3 + 3.0 * x * x / r5, cross],
        [cross, -1.0 / r3 + 3.0 * y * y / r5],
    ])
}

/// The circular orbit `(cos t, sin t, -sin t, cos t)`.
pub fn analytic_state(t: f64) -> State4 {
    let (s, c) = t.sin_cos();
    State4::new(c, s, -s, c)
}
