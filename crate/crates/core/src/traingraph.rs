//! The fixed 13-layer graph that replicates one RK step, its loss, and the
//! hand-derived reverse-mode subgradient of that loss.
//!
//! Inputs per row are `x, y, vx, vy, h, 1`. Every neuron has the identity
//! activation, so each layer is just its net-input expression:
//!
//! | layer | value                      | depends on           |
//! |-------|----------------------------|----------------------|
//! | 1, 2  | `k1` acceleration          | x, y                 |
//! | 3     | `h*a21`                    | h                    |
//! | 4, 5  | `b1`, `b2`                 | dummy input          |
//! | 6, 7  | `k2` acceleration          | x, y, vx, vy, 1, 2, 3|
//! | 8, 9  | `k2` velocity              | vx, vy, 1, 2, 3      |
//! | 10-13 | `v + h*(b1*k1 + b2*k2)`    | everything above     |
//!
//! Layers 6 and 7 evaluate the acceleration at the position shifted by the
//! `k1` velocity; layers 8 and 9 shift the velocity by the `k1` acceleration.
//! This is the usual RK stage argument, so the graph output equals
//! [`rk_step`](crate::rk2::rk_step) bit for bit.

use crate::datagen::Dataset;
use crate::error::Result;
use crate::rk2::Tableau2;
use crate::twobody::{accel_jacobian, acceleration, Deriv4};

/// The three trainable weights. `c2` is tied to `a21` and not stored.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ParamVector {
    pub a21: f64,
    pub b1: f64,
    pub b2: f64,
}

impl ParamVector {
    pub const fn new(a21: f64, b1: f64, b2: f64) -> Self {
        Self { a21, b1, b2 }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.a21, self.b1, self.b2]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub fn to_tableau(self) -> Tableau2<f64> {
        Tableau2::new(self.a21, self.b1, self.b2)
    }
}

impl From<Tableau2<f64>> for ParamVector {
    fn from(t: Tableau2<f64>) -> Self {
        Self::new(t.a21(), t.b1(), t.b2())
    }
}

/// Cached intermediates of one row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowTrace {
    /// Layer 3.
    pub h_a21: f64,
    /// Inputs 3, 4 and layers 1, 2.
    pub k1: Deriv4,
    /// Stage-2 position fed to layers 6 and 7.
    pub shifted: (f64, f64),
    pub shifted_radius: f64,
    /// Layers 8, 9, 6, 7 in state order.
    pub k2: Deriv4,
    /// Layers 10 to 13.
    pub output: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub params: ParamVector,
    pub h: f64,
    pub rows: Vec<RowTrace>,
}

impl ForwardTrace {
    pub fn outputs(&self) -> Vec<[f64; 4]> {
        self.rows.iter().map(|r| r.output).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GradientVector {
    pub d_a21: f64,
    pub d_b1: f64,
    pub d_b2: f64,
}

impl GradientVector {
    pub fn to_array(self) -> [f64; 3] {
        [self.d_a21, self.d_b1, self.d_b2]
    }
}

/// Evaluates the graph on one input row.
pub fn forward_row(p: &ParamVector, row: &[f64; 6]) -> Result<RowTrace> {
    let [x, y, vx, vy, h, one] = *row;

    let (k1_ax, k1_ay) = acceleration(x, y)?; // layers 1, 2
    let h_a21 = h * p.a21; // layer 3
    let (b1, b2) = (one * p.b1, one * p.b2); // layers 4, 5

    let sx = x + h_a21 * vx;
    let sy = y + h_a21 * vy;
    let (k2_ax, k2_ay) = acceleration(sx, sy)?; // layers 6, 7
    let k2_dx = vx + h_a21 * k1_ax; // layer 8
    let k2_dy = vy + h_a21 * k1_ay; // layer 9

    let output = [
        x + h * (b1 * vx + b2 * k2_dx),       // layer 10
        y + h * (b1 * vy + b2 * k2_dy),       // layer 11
        vx + h * (b1 * k1_ax + b2 * k2_ax),   // layer 12
        vy + h * (b1 * k1_ay + b2 * k2_ay),   // layer 13
    ];

    Ok(RowTrace {
        h_a21,
        k1: Deriv4 {
            dx: vx,
            dy: vy,
            ax: k1_ax,
            ay: k1_ay,
        },
        shifted: (sx, sy),
        shifted_radius: (sx * sx + sy * sy).sqrt(),
        k2: Deriv4 {
            dx: k2_dx,
            dy: k2_dy,
            ax: k2_ax,
            ay: k2_ay,
        },
        output,
    })
}

/// Runs every dataset row through the graph.
pub fn forward(p: &ParamVector, ds: &Dataset) -> Result<(Vec<[f64; 4]>, ForwardTrace)> {
    let rows = ds
        .inputs()
        .iter()
        .enumerate()
        .map(|(n, row)| forward_row(p, row).map_err(|e| e.at(n)))
        .collect::<Result<Vec<_>>>()?;
    let trace = ForwardTrace {
        params: *p,
        h: ds.h(),
        rows,
    };
    Ok((trace.outputs(), trace))
}

/// The terms of the loss, with the location of the infinity-norm maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    pub data: f64,
    /// `|b1 + b2 - 1|`
    pub sum_penalty: f64,
    /// `|a21*b2 - 1/2|`
    pub order_penalty: f64,
    /// `(row, component)` of the largest deviation; the first one on ties.
    pub argmax: (usize, usize),
    /// `output - target` at `argmax`.
    pub signed_diff: f64,
}

impl LossTerms {
    pub fn total(&self) -> f64 {
        self.data + self.sum_penalty + self.order_penalty
    }
}

pub fn loss_terms(p: &ParamVector, output: &[[f64; 4]], targets: &[[f64; 4]]) -> LossTerms {
    assert_eq!(output.len(), targets.len(), "output/target row count mismatch");
    let mut data = 0.0;
    let mut argmax = (0, 0);
    let mut signed_diff = 0.0;
    for (n, (o, t)) in output.iter().zip(targets).enumerate() {
        for j in 0..4 {
            let d = o[j] - t[j];
            // strict comparison keeps the lowest index on ties; `!(<=)` lets a NaN through
            if !(d.abs() <= data) {
                data = d.abs();
                argmax = (n, j);
                signed_diff = d;
            }
        }
    }
    LossTerms {
        data,
        sum_penalty: (p.b1 + p.b2 - 1.0).abs(),
        order_penalty: (p.a21 * p.b2 - 0.5).abs(),
        argmax,
        signed_diff,
    }
}

/// `||output - target||_inf + |b1 + b2 - 1| + |a21*b2 - 1/2|`, the norm taken
/// over all entries of the matrix.
pub fn loss(p: &ParamVector, output: &[[f64; 4]], targets: &[[f64; 4]]) -> f64 {
    loss_terms(p, output, targets).total()
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Subgradient of [`loss`] at `trace.params`.
///
/// Only the argmax entry of the infinity norm contributes a data term.
/// With `o_j = v_j + h*(b1*k1_j + b2*k2_j)`:
/// `do_j/db1 = h*k1_j`, `do_j/db2 = h*k2_j`, `do_j/da21 = h*b2*dk2_j/da21`,
/// where the `k2` velocity moves with `h*k1` acceleration and the `k2`
/// acceleration moves through the position Jacobian times `h*k1` velocity.
pub fn grad(p: &ParamVector, ds: &Dataset, trace: &ForwardTrace) -> GradientVector {
    debug_assert_eq!(trace.params, *p);
    let outputs = trace.outputs();
    let terms = loss_terms(p, &outputs, ds.targets());
    let h = trace.h;

    let mut g = GradientVector::default();

    let s = sign(terms.signed_diff);
    if s != 0.0 {
        let (n, j) = terms.argmax;
        let row = &trace.rows[n];
        let k1 = row.k1.to_array();
        let k2 = row.k2.to_array();
        let dk2_da21 = match j {
            0 => h * row.k1.ax,
            1 => h * row.k1.ay,
            _ => {
                let (sx, sy) = row.shifted;
                // the shifted radius was checked in the forward pass
                let jac = accel_jacobian(sx, sy).expect("stage-2 state validated by forward pass");
                let (dsx, dsy) = (h * row.k1.dx, h * row.k1.dy);
                jac[j - 2][0] * dsx + jac[j - 2][1] * dsy
            }
        };
        g.d_a21 += s * p.b2 * h * dk2_da21;
        g.d_b1 += s * h * k1[j];
        g.d_b2 += s * h * k2[j];
    }

    let s1 = sign(p.b1 + p.b2 - 1.0);
    g.d_b1 += s1;
    g.d_b2 += s1;

    let s2 = sign(p.a21 * p.b2 - 0.5);
    g.d_a21 += s2 * p.b2;
    g.d_b2 += s2 * p.a21;

    g
}

/// Forward pass, loss and subgradient in one call.
pub fn evaluate(p: &ParamVector, ds: &Dataset) -> Result<(f64, GradientVector, ForwardTrace)> {
    let (out, trace) = forward(p, ds)?;
    let l = loss(p, &out, ds.targets());
    let g = grad(p, ds, &trace);
    Ok((l, g, trace))
}

/// Loss only; used by the optimizer when probing a candidate step.
pub fn loss_at(p: &ParamVector, ds: &Dataset) -> Result<(f64, ForwardTrace)> {
    let (out, trace) = forward(p, ds)?;
    Ok((loss(p, &out, ds.targets()), trace))
}
