use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::distance::{multiscale_loss_and_gradient, ScaleSchedule};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::io::format_float;
use crate::points::{sample_standard_normal, PointSet};
use crate::rng::RngState;

use super::Generator;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: u32,
    pub batch_real: usize,
    pub batch_gen: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub schedule: ScaleSchedule,
    /// Average the active per-scale terms instead of summing them.
    pub normalized_loss: bool,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(schedule: ScaleSchedule, epochs: u32, seed: u64) -> Self {
        TrainConfig {
            epochs,
            batch_real: 64,
            batch_gen: 64,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            schedule,
            normalized_loss: true,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_real == 0 || self.batch_gen == 0 {
            return Err(Error::invalid("epochs and batch sizes must be positive"));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::invalid("learning rate must be a finite nonnegative number"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.adam_eps > 0.0) {
            return Err(Error::invalid("adam parameters out of range"));
        }
        Ok(())
    }

    /// Advisory messages (non-monotone scales, entries never reached).
    pub fn warnings(&self) -> Vec<String> {
        let mut w = self.schedule.warnings();
        if self.epochs < self.schedule.last_epoch() {
            w.push(format!(
                "training stops at epoch {} before the last schedule entry (epoch {}) activates",
                self.epochs,
                self.schedule.last_epoch()
            ));
        }
        w
    }
}

/// Adam with bias correction over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    pub fn new(n: usize, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Adam {
            lr,
            beta1,
            beta2,
            eps,
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    pub fn update(&mut self, params: &mut [f64], grad: &[f64]) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for k in 0..params.len() {
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * grad[k];
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * grad[k] * grad[k];
            let mh = self.m[k] / c1;
            let vh = self.v[k] / c2;
            params[k] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: u32,
    pub active_scales: usize,
    /// Mean loss over the epoch's steps; NaN if the epoch was aborted.
    pub loss: f64,
    /// Mean L2 norm of the parameter gradient over the epoch's steps.
    pub grad_norm: f64,
    pub seconds: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
}

impl TrainLog {
    pub fn initial_loss(&self) -> Option<f64> {
        self.epochs.iter().map(|e| e.loss).find(|l| l.is_finite())
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.epochs.iter().rev().map(|e| e.loss).find(|l| l.is_finite())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "epoch,active_scales,loss,grad_norm,seconds")?;
        for e in &self.epochs {
            writeln!(
                w,
                "{},{},{},{},{}",
                e.epoch,
                e.active_scales,
                format_float(e.loss),
                format_float(e.grad_norm),
                format_float(e.seconds)
            )?;
        }
        Ok(())
    }
}

/// Loss and flattened parameter gradient for fixed inputs `z` and real batch.
pub fn loss_and_param_gradient(
    gen: &Generator,
    real: &PointSet,
    z: &PointSet,
    schedule: &ScaleSchedule,
    epoch: u32,
    normalized_loss: bool,
    exec: Execution,
) -> Result<(f64, Vec<f64>)> {
    let cache = gen.forward_cached(z)?;
    let fake = PointSet::new(gen.data_dim(), cache.output().as_slice().to_vec())?;
    let (loss, dy) = multiscale_loss_and_gradient(real, &fake, schedule, epoch, normalized_loss, exec)?;
    Ok((loss, gen.backward(&cache, &dy)?))
}

/// Trains `gen` on `data`.
///
/// Each epoch shuffles the data and walks it in disjoint minibatches of
/// `batch_real` (a single batch of everything if the data is smaller),
/// pairing each with `batch_gen` fresh generator inputs and taking one Adam
/// step. A step that hits coincident generated points is retried once with
/// new inputs; a second failure, or any solver failure, aborts the epoch and
/// leaves an error row in the log.
pub fn train(gen: &Generator, data: &PointSet, config: &TrainConfig) -> Result<(Generator, TrainLog)> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::invalid("training data is empty"));
    }
    if data.dim() != gen.data_dim() {
        return Err(Error::DimensionMismatch {
            expected: gen.data_dim(),
            found: data.dim(),
        });
    }
    let mut gen = gen.clone();
    let mut params = gen.params();
    let mut adam = Adam::new(
        params.len(),
        config.learning_rate,
        config.beta1,
        config.beta2,
        config.adam_eps,
    );
    let mut rng = RngState::derive(config.seed, 0x6d61_6767_6e00);
    let batch = config.batch_real.min(data.len());
    let steps = data.len() / batch;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let exec = Execution::default();
    let mut log = TrainLog::default();

    for epoch in 1..=config.epochs {
        let start = Instant::now();
        let active = config.schedule.active_scales(epoch).len();
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        let mut norm_sum = 0.0;
        let mut error = None;
        for s in 0..steps {
            let real = data.select(&order[s * batch..(s + 1) * batch]);
            let attempt = |rng: &mut RngState| {
                let z = sample_standard_normal(rng, config.batch_gen, gen.z_dim());
                loss_and_param_gradient(&gen, &real, &z, &config.schedule, epoch, config.normalized_loss, exec)
            };
            let result = match attempt(&mut rng) {
                Err(Error::CoincidentPoints { .. }) => attempt(&mut rng),
                other => other,
            };
            match result {
                Ok((loss, grad)) => {
                    loss_sum += loss;
                    norm_sum += grad.iter().map(|g| g * g).sum::<f64>().sqrt();
                    adam.update(&mut params, &grad);
                    gen.set_params(&params)?;
                }
                Err(e) if e.is_numerical() => {
                    error = Some(e.to_string());
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        let (loss, grad_norm) = if error.is_some() {
            (f64::NAN, f64::NAN)
        } else {
            (loss_sum / steps as f64, norm_sum / steps as f64)
        };
        log.epochs.push(EpochLog {
            epoch,
            active_scales: active,
            loss,
            grad_norm,
            seconds: start.elapsed().as_secs_f64(),
            error,
        });
    }
    Ok((gen, log))
}
