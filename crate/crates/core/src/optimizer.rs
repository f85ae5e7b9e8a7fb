//! Gradient descent with momentum and an adaptive learning rate (GDX).
//!
//! Each epoch proposes `p' = p + v'` with `v' = momentum*v - lr*g`. A proposal
//! whose loss grows by more than `max_loss_ratio` is rejected: the parameters
//! stay put, the rate shrinks by `lr_decrease` and the velocity is cleared.
//! Accepted proposals that strictly lower the loss grow the rate by
//! `lr_increase`.
//!
//! Initial weights are drawn from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded
//! with `seed_from_u64`, which produces the same stream on every platform.

use std::fmt;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::fmt_f64;
use crate::traingraph::{grad, loss_at, ParamVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate_init: f64,
    pub momentum: f64,
    pub lr_increase: f64,
    pub lr_decrease: f64,
    pub max_loss_ratio: f64,
    pub max_epochs: usize,
    pub goal_epsilon: f64,
    pub rng_seed: u64,
    pub init_range: (f64, f64),
    pub reset_momentum_on_reject: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate_init: 0.01,
            momentum: 0.9,
            lr_increase: 1.05,
            lr_decrease: 0.7,
            max_loss_ratio: 1.04,
            max_epochs: 50_000,
            goal_epsilon: 1e-6,
            rng_seed: 0,
            init_range: (-1.0, 1.0),
            reset_momentum_on_reject: true,
        }
    }
}

/// Keys accepted by [`TrainConfig::set`], in the order they are documented.
pub const CONFIG_KEYS: [&str; 10] = [
    "learning_rate_init",
    "momentum",
    "lr_increase",
    "lr_decrease",
    "max_loss_ratio",
    "max_epochs",
    "goal_epsilon",
    "rng_seed",
    "init_range",
    "reset_momentum_on_reject",
];

impl TrainConfig {
    /// Sets one field from its textual form. `init_range` takes `low,high`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |reason: &str| Error::InvalidConfigValue {
            key: key.to_string(),
            value: value.to_string(),
            reason: reason.to_string(),
        };
        let num = || value.trim().parse::<f64>().map_err(|_| bad("expected a number"));
        match key {
            "learning_rate_init" => self.learning_rate_init = num()?,
            "momentum" => self.momentum = num()?,
            "lr_increase" => self.lr_increase = num()?,
            "lr_decrease" => self.lr_decrease = num()?,
            "max_loss_ratio" => self.max_loss_ratio = num()?,
            "goal_epsilon" => self.goal_epsilon = num()?,
            "max_epochs" => {
                self.max_epochs = value.trim().parse().map_err(|_| bad("expected a count"))?
            }
            "rng_seed" => {
                self.rng_seed = value.trim().parse().map_err(|_| bad("expected an unsigned integer"))?
            }
            "init_range" => {
                let (lo, hi) = value.split_once(',').ok_or_else(|| bad("expected low,high"))?;
                let lo: f64 = lo.trim().parse().map_err(|_| bad("expected low,high"))?;
                let hi: f64 = hi.trim().parse().map_err(|_| bad("expected low,high"))?;
                self.init_range = (lo, hi);
            }
            "reset_momentum_on_reject" => {
                self.reset_momentum_on_reject =
                    value.trim().parse().map_err(|_| bad("expected true or false"))?
            }
            _ => return Err(Error::UnknownConfigKey(key.to_string())),
        }
        Ok(())
    }

    /// Applies a flat `key = value` file. Blank lines and `#` comments are
    /// ignored.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::InvalidConfigValue {
                key: format!("line {}", lineno + 1),
                value: line.to_string(),
                reason: "expected key = value".into(),
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, key: &str, value: String, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidConfigValue {
                    key: key.into(),
                    value,
                    reason: reason.into(),
                })
            }
        };
        let c = self;
        check(
            c.learning_rate_init > 0.0 && c.learning_rate_init.is_finite(),
            "learning_rate_init",
            c.learning_rate_init.to_string(),
            "must be positive",
        )?;
        check((0.0..1.0).contains(&c.momentum), "momentum", c.momentum.to_string(), "must lie in [0, 1)")?;
        check(
            c.lr_increase > 1.0 && c.lr_increase.is_finite(),
            "lr_increase",
            c.lr_increase.to_string(),
            "must exceed 1",
        )?;
        check(
            c.lr_decrease > 0.0 && c.lr_decrease < 1.0,
            "lr_decrease",
            c.lr_decrease.to_string(),
            "must lie in (0, 1)",
        )?;
        check(
            c.max_loss_ratio > 1.0 && c.max_loss_ratio.is_finite(),
            "max_loss_ratio",
            c.max_loss_ratio.to_string(),
            "must exceed 1",
        )?;
        check(
            c.goal_epsilon > 0.0,
            "goal_epsilon",
            c.goal_epsilon.to_string(),
            "must be positive",
        )?;
        let (lo, hi) = c.init_range;
        check(
            lo < hi && lo.is_finite() && hi.is_finite(),
            "init_range",
            format!("{lo},{hi}"),
            "must be a finite interval with low < high",
        )?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    GoalReached,
    MaxEpochs,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::GoalReached => "goal reached",
            StopReason::MaxEpochs => "max epochs",
        })
    }
}

/// State after an epoch. `lr` is the rate the epoch's proposal was made
/// with; epoch 0 is the initialization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub lr: f64,
    pub params: ParamVector,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    pub records: Vec<EpochRecord>,
    pub final_params: ParamVector,
    pub final_loss: f64,
    pub stop_reason: StopReason,
}

impl TrainTrace {
    pub fn epochs(&self) -> usize {
        self.records.last().map_or(0, |r| r.epoch)
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut w = std::io::BufWriter::new(w);
        writeln!(w, "epoch,loss,lr,a21,b1,b2,accepted")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.epoch,
                fmt_f64(r.loss),
                fmt_f64(r.lr),
                fmt_f64(r.params.a21),
                fmt_f64(r.params.b1),
                fmt_f64(r.params.b2),
                u8::from(r.accepted)
            )?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

pub fn initial_params(cfg: &TrainConfig) -> ParamVector {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let (lo, hi) = cfg.init_range;
    let mut draw = || rng.random_range(lo..hi);
    let a21 = draw();
    let b1 = draw();
    let b2 = draw();
    ParamVector::new(a21, b1, b2)
}

/// Full-batch GDX training on `ds`.
pub fn train(cfg: &TrainConfig, ds: &Dataset) -> Result<TrainTrace> {
    cfg.validate()?;
    train_from(cfg, ds, initial_params(cfg))
}

/// Like [`train`] but starting from given weights instead of a random draw.
pub fn train_from(cfg: &TrainConfig, ds: &Dataset, init: ParamVector) -> Result<TrainTrace> {
    cfg.validate()?;
    let mut p = init;
    let mut velocity = [0.0; 3];
    let mut lr = cfg.learning_rate_init;
    let (mut loss, mut trace) = loss_at(&p, ds)?;
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss { epoch: 0 });
    }

    let mut records = vec![EpochRecord {
        epoch: 0,
        loss,
        lr,
        params: p,
        accepted: true,
    }];

    let mut epoch = 0;
    let stop_reason = loop {
        if loss < cfg.goal_epsilon {
            break StopReason::GoalReached;
        }
        if epoch >= cfg.max_epochs {
            break StopReason::MaxEpochs;
        }
        epoch += 1;

        let g = grad(&p, ds, &trace).to_array();
        let mut v_new = [0.0; 3];
        let mut cand = [0.0; 3];
        let cur = p.to_array();
        for i in 0..3 {
            v_new[i] = cfg.momentum * velocity[i] - lr * g[i];
            cand[i] = cur[i] + v_new[i];
        }
        let cand = ParamVector::from_array(cand);
        if !cand.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        let (cand_loss, cand_trace) = loss_at(&cand, ds)?;
        if !cand_loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }

        let lr_used = lr;
        let accepted = cand_loss <= cfg.max_loss_ratio * loss;
        if accepted {
            if cand_loss < loss {
                lr *= cfg.lr_increase;
            }
            p = cand;
            velocity = v_new;
            loss = cand_loss;
            trace = cand_trace;
        } else {
            lr *= cfg.lr_decrease;
            if cfg.reset_momentum_on_reject {
                velocity = [0.0; 3];
            }
        }
        records.push(EpochRecord {
            epoch,
            loss,
            lr: lr_used,
            params: p,
            accepted,
        });
    };

    Ok(TrainTrace {
        records,
        final_params: p,
        final_loss: loss,
        stop_reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate, GridSpec};
    use crate::traingraph::evaluate;
    use std::f64::consts::PI;

    fn small_dataset() -> Dataset {
        generate(GridSpec::new(0.0, 2.0 * PI, PI / 16.0).unwrap())
    }

    fn short(seed: u64) -> TrainConfig {
        TrainConfig {
            max_epochs: 400,
            rng_seed: seed,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn immediate_goal() {
        let cfg = TrainConfig {
            goal_epsilon: 1e9,
            ..TrainConfig::default()
        };
        let t = train(&cfg, &small_dataset()).unwrap();
        assert_eq!(t.stop_reason, StopReason::GoalReached);
        assert_eq!(t.epochs(), 0);
        assert_eq!(t.records.len(), 1);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let ds = small_dataset();
        let a = train(&short(7), &ds).unwrap();
        let b = train(&short(7), &ds).unwrap();
        assert_eq!(a, b);
        let c = train(&short(8), &ds).unwrap();
        assert_ne!(a.records[0].params, c.records[0].params);
    }

    #[test]
    fn init_within_range() {
        for seed in 0..50 {
            let p = initial_params(&TrainConfig {
                rng_seed: seed,
                init_range: (-0.5, 2.0),
                ..TrainConfig::default()
            });
            assert!(p.to_array().iter().all(|v| (-0.5..2.0).contains(v)));
        }
    }

    #[test]
    fn rejected_epochs_keep_params_and_lr_factors() {
        let cfg = short(3);
        let t = train(&cfg, &small_dataset()).unwrap();
        assert!(t.records.iter().any(|r| !r.accepted), "expected some rejections");
        for w in t.records.windows(2) {
            let (prev, cur) = (&w[0], &w[1]);
            if !cur.accepted {
                assert_eq!(prev.params, cur.params);
                assert_eq!(prev.loss, cur.loss);
            } else {
                assert!(cur.loss <= cfg.max_loss_ratio * prev.loss);
            }
        }
        for w in t.records.windows(3) {
            let (prev, cur, next) = (&w[0], &w[1], &w[2]);
            assert!(next.lr > 0.0);
            let expected = if !cur.accepted {
                cur.lr * cfg.lr_decrease
            } else if cur.loss < prev.loss {
                cur.lr * cfg.lr_increase
            } else {
                cur.lr
            };
            assert_eq!(next.lr, expected, "epoch {}", next.epoch);
        }
    }

    #[test]
    fn plain_descent_step_without_momentum() {
        let ds = small_dataset();
        let cfg = TrainConfig {
            momentum: 0.0,
            ..short(11)
        };
        let t = train(&cfg, &ds).unwrap();
        let mut checked = 0;
        for w in t.records.windows(2) {
            let (prev, cur) = (&w[0], &w[1]);
            if cur.accepted {
                let (_, g, _) = evaluate(&prev.params, &ds).unwrap();
                let old = prev.params.to_array();
                let new = cur.params.to_array();
                for i in 0..3 {
                    assert_eq!(new[i], old[i] + -cur.lr * g.to_array()[i]);
                }
                checked += 1;
            }
        }
        assert!(checked > 10);
    }

    #[test]
    fn config_parsing() {
        let mut cfg = TrainConfig::default();
        cfg.apply_kv("# comment\nmomentum = 0.5\n\nmax_epochs=12\ninit_range = -2, 2\nrng_seed=9 # trailing\n")
            .unwrap();
        assert_eq!(cfg.momentum, 0.5);
        assert_eq!(cfg.max_epochs, 12);
        assert_eq!(cfg.init_range, (-2.0, 2.0));
        assert_eq!(cfg.rng_seed, 9);

        let err = cfg.apply_kv("learning_rate = 0.1").unwrap_err();
        assert!(matches!(err, Error::UnknownConfigKey(ref k) if k == "learning_rate"));
        assert!(cfg.set("momentum", "fast").is_err());
        assert!(cfg.apply_kv("momentum").is_err());
    }

    #[test]
    fn config_validation() {
        let base = TrainConfig::default();
        assert!(base.validate().is_ok());
        for bad in [
            TrainConfig { momentum: 1.0, ..base },
            TrainConfig { lr_increase: 1.0, ..base },
            TrainConfig { lr_decrease: 1.0, ..base },
            TrainConfig { max_loss_ratio: 0.9, ..base },
            TrainConfig { learning_rate_init: 0.0, ..base },
            TrainConfig { init_range: (1.0, 1.0), ..base },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn trace_csv_shape() {
        let t = train(&TrainConfig { max_epochs: 5, ..short(1) }, &small_dataset()).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "epoch,loss,lr,a21,b1,b2,accepted");
        assert_eq!(lines.len(), 7);
        assert!(lines[1].starts_with("0,"));
        assert_eq!(lines[1].split(',').count(), 7);
    }
}
