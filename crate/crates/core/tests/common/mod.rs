//! Independent oracles shared by the integration tests. None of these call
//! into the stepping or gradient code they are used to check.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rk2net::datagen::Dataset;
use rk2net::traingraph::{forward, loss, ParamVector};

/// Double-double number: `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl Dd {
    pub const fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }

    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::new(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(Dd::new(q2)));
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }.add(Dd::new(q3))
    }

    pub fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::new(0.0);
        }
        let x = 1.0 / self.hi.sqrt();
        let ax = Dd::new(self.hi * x);
        let diff = self.sub(ax.mul(ax)).hi * (x * 0.5);
        ax.add(Dd::new(diff))
    }
}

/// `-(x, y)/r^3` evaluated in double-double.
pub fn dd_accel(x: Dd, y: Dd) -> (Dd, Dd) {
    let r2 = x.mul(x).add(y.mul(y));
    let r = r2.sqrt();
    let r3 = r2.mul(r);
    (x.div(r3).neg(), y.div(r3).neg())
}

/// One explicit 2-stage RK step written straight from
/// `k1 = f(v)`, `k2 = f(v + h a21 k1)`, `v' = v + h (b1 k1 + b2 k2)`
/// in double-double arithmetic.
pub fn dd_rk_step(a21: f64, b1: f64, b2: f64, s: [f64; 4], h: f64) -> [f64; 4] {
    let v = s.map(Dd::new);
    let (a21, b1, b2, h) = (Dd::new(a21), Dd::new(b1), Dd::new(b2), Dd::new(h));
    let f = |v: [Dd; 4]| {
        let (ax, ay) = dd_accel(v[0], v[1]);
        [v[2], v[3], ax, ay]
    };
    let k1 = f(v);
    let mut mid = v;
    for i in 0..4 {
        mid[i] = v[i].add(h.mul(a21).mul(k1[i]));
    }
    let k2 = f(mid);
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = v[i].add(h.mul(b1.mul(k1[i]).add(b2.mul(k2[i])))).to_f64();
    }
    out
}

/// Central finite difference of `f` at `x` with step `eps`.
pub fn central_diff(f: impl Fn(f64) -> f64, x: f64, eps: f64) -> f64 {
    (f(x + eps) - f(x - eps)) / (2.0 * eps)
}

/// Finite-difference gradient of the training loss with respect to
/// `(a21, b1, b2)`, going through the forward pass only.
pub fn fd_loss_gradient(p: ParamVector, ds: &Dataset, eps: f64) -> [f64; 3] {
    let base = p.to_array();
    let mut g = [0.0; 3];
    for (i, slot) in g.iter_mut().enumerate() {
        let eval = |v: f64| {
            let mut q = base;
            q[i] = v;
            let q = ParamVector::from_array(q);
            let (out, _) = forward(&q, ds).unwrap();
            loss(&q, &out, ds.targets())
        };
        *slot = central_diff(eval, base[i], eps);
    }
    g
}

/// Smallest gap between the largest and second largest `|output - target|`.
pub fn argmax_gap(outputs: &[[f64; 4]], targets: &[[f64; 4]]) -> f64 {
    let mut diffs: Vec<f64> = outputs
        .iter()
        .zip(targets)
        .flat_map(|(o, t)| (0..4).map(move |j| (o[j] - t[j]).abs()))
        .collect();
    diffs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    diffs[0] - diffs[1]
}

/// Best `p/q` with `q <= bound` by scanning every denominator; ties go to the
/// smaller `q`, then the smaller `p`.
pub fn brute_best_rational(x: f64, bound: i64) -> (i64, i64) {
    let mut best = (0i64, 1i64);
    let mut best_d = f64::INFINITY;
    for q in 1..=bound {
        let center = (x * q as f64).round() as i64;
        for p in center - 1..=center + 1 {
            let d = (x - p as f64 / q as f64).abs();
            if d < best_d {
                best_d = d;
                best = (p, q);
            }
        }
    }
    // reduce
    let g = gcd(best.0.abs(), best.1);
    (best.0 / g, best.1 / g)
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A state with radius in `[r_lo, r_hi]` and velocity components in `[-2, 2]`.
pub fn random_state(rng: &mut impl Rng, r_lo: f64, r_hi: f64) -> [f64; 4] {
    let r = rng.random_range(r_lo..=r_hi);
    let theta = rng.random_range(0.0..std::f64::consts::TAU);
    [
        r * theta.cos(),
        r * theta.sin(),
        rng.random_range(-2.0..=2.0),
        rng.random_range(-2.0..=2.0),
    ]
}
