use std::io::Write;

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::controller::{Controller, ControllerSpec, Variant};
use super::loss::{sample_loss, LOSS_CLIP};
use super::optim::OptimizerKind;
use super::spsa::{central_difference, spsa_gradient};
use crate::gecsr::run;
use crate::hypernets::{Checkpoint, OptimizerState, Overflow, DEFAULT_HIDDEN};
use crate::model::{DatasetManifest, Sample, SignalPrior};
use crate::{Error, Result};

/// Training sets up to this many bytes are generated once and kept.
const CACHE_LIMIT_BYTES: usize = 1 << 30;
const MOVING_WINDOW: usize = 10;
/// Samples whose schedule-driven runs the warm start fits.
const WARM_START_SAMPLES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GradEstimator {
    Spsa { pairs: usize, perturbation: f64 },
    CentralDiff { step: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainerConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub layers: usize,
    pub grad_estimator: GradEstimator,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub hidden: usize,
    pub bias: bool,
    /// Ties the two sides of directly learned damping.
    pub tied: bool,
    /// Caps the number of optimizer steps regardless of `epochs`.
    pub max_steps: Option<usize>,
    /// Training aborts when more than this fraction of a batch diverges.
    pub abort_fraction: f64,
    /// Starts the controller near the schedule `beta(t) = base^t`.
    pub warm_start: Option<f64>,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            batch_size: 100,
            epochs: 1,
            layers: 10,
            grad_estimator: GradEstimator::Spsa { pairs: 8, perturbation: 0.05 },
            optimizer: OptimizerKind::default(),
            seed: 0,
            hidden: DEFAULT_HIDDEN,
            bias: false,
            tied: false,
            max_steps: None,
            abort_fraction: 0.5,
            warm_start: None,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.layers == 0 {
            return Err(Error::Config("training needs at least one layer".into()));
        }
        match self.grad_estimator {
            GradEstimator::Spsa { pairs, perturbation } if pairs == 0 || !(perturbation > 0.0) => {
                Err(Error::Config("SPSA needs pairs >= 1 and a positive perturbation".into()))
            }
            GradEstimator::CentralDiff { step } if !(step > 0.0) => Err(Error::Config("finite-difference step must be positive".into())),
            _ => Ok(()),
        }
    }

    pub fn controller_spec(&self, variant: Variant, n: usize) -> ControllerSpec {
        let mut spec = ControllerSpec::new(variant, n, self.layers, self.seed);
        spec.hidden = self.hidden;
        spec.bias = self.bias;
        spec.tied = self.tied;
        spec
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossRecord {
    pub step: usize,
    pub batch_loss: f64,
    pub moving_avg: f64,
    pub diverged: usize,
}

#[derive(Clone, Debug)]
pub struct TrainingOutcome {
    pub controller: Controller,
    pub checkpoint: Checkpoint,
    pub history: Vec<LossRecord>,
    pub no_progress: bool,
}

pub struct Trainer<'m> {
    manifest: &'m DatasetManifest,
    config: TrainerConfig,
    controller: Controller,
    optimizer: OptimizerState,
    step: usize,
    history: Vec<LossRecord>,
    cache: Option<Vec<Sample>>,
}

fn sample_bytes(m: &DatasetManifest) -> usize {
    let k = m.m.min(m.n);
    16 * (m.m * k + m.n * k + m.m + m.n) + 8 * k
}

/// Mean clipped loss of `controller` over `batch`, and the number of
/// diverged runs.
fn batch_objective(controller: &Controller, batch: &[&Sample], layers: usize) -> Result<(f64, usize)> {
    let results = batch
        .par_iter()
        .map(|s| {
            let prior = SignalPrior::new(s.rho)?;
            let mut policy = controller.policy(Overflow::Error);
            let trace = run(s, &prior, &mut *policy, layers)?;
            if trace.diverged {
                return Ok((LOSS_CLIP, true));
            }
            let loss: f64 = sample_loss(&s.x, &trace, layers)?.iter().sum();
            Ok(if loss.is_finite() { (loss.min(LOSS_CLIP), false) } else { (LOSS_CLIP, true) })
        })
        .collect::<Result<Vec<_>>>()?;
    let total: f64 = results.iter().map(|r| r.0).sum();
    Ok((total / batch.len() as f64, results.iter().filter(|r| r.1).count()))
}

impl<'m> Trainer<'m> {
    pub fn new(variant: Variant, manifest: &'m DatasetManifest, config: TrainerConfig) -> Result<Self> {
        config.validate()?;
        manifest.validate()?;
        let controller = Controller::new(config.controller_spec(variant, manifest.n))?;
        let optimizer = config.optimizer.fresh_state(controller.param_count());
        let mut trainer = Self::assemble(manifest, config, controller, optimizer, 0)?;
        if let Some(base) = trainer.config.warm_start {
            let k = manifest.count.min(WARM_START_SAMPLES) as u64;
            let owned: Vec<Sample>;
            let samples: Vec<&Sample> = match &trainer.cache {
                Some(all) => all.iter().take(k as usize).collect(),
                None => {
                    owned = (0..k).into_par_iter().map(|i| manifest.sample(i)).collect::<Result<Vec<_>>>()?;
                    owned.iter().collect()
                }
            };
            let residual = trainer.controller.warm_start(base, &samples, trainer.config.layers)?;
            info!("{variant}: warm start at {base}^t, RMS logit error {residual:.3}");
        }
        Ok(trainer)
    }

    /// Continues from a checkpoint, including its optimizer moments.
    pub fn resume(checkpoint: &Checkpoint, manifest: &'m DatasetManifest, config: TrainerConfig) -> Result<Self> {
        config.validate()?;
        manifest.validate()?;
        let controller = Controller::from_checkpoint(checkpoint)?;
        controller.check_compatible(manifest.n)?;
        let optimizer = match &checkpoint.optimizer {
            Some(state) if state.m.len() == controller.param_count() && state.v.len() == state.m.len() => state.clone(),
            Some(_) => return Err(Error::Checkpoint("optimizer moments do not match the parameter count".into())),
            None => config.optimizer.fresh_state(controller.param_count()),
        };
        Self::assemble(manifest, config, controller, optimizer, checkpoint.meta.steps)
    }

    fn assemble(
        manifest: &'m DatasetManifest,
        config: TrainerConfig,
        controller: Controller,
        optimizer: OptimizerState,
        step: usize,
    ) -> Result<Self> {
        let mut trainer = Self { manifest, config, controller, optimizer, step, history: Vec::new(), cache: None };
        if trainer.total_steps() > trainer.step && manifest.count == 0 {
            return Err(Error::Config("training manifest has no samples".into()));
        }
        if trainer.total_steps() > trainer.step && manifest.count * sample_bytes(manifest) <= CACHE_LIMIT_BYTES {
            trainer.cache = Some(
                (0..manifest.count as u64).into_par_iter().map(|i| manifest.sample(i)).collect::<Result<Vec<_>>>()?,
            );
        }
        Ok(trainer)
    }

    pub fn controller(&self) -> &Controller {
        &self.controller
    }

    pub fn history(&self) -> &[LossRecord] {
        &self.history
    }

    pub fn steps_done(&self) -> usize {
        self.step
    }

    pub fn batches_per_epoch(&self) -> usize {
        self.manifest.count.div_ceil(self.config.batch_size.min(self.manifest.count.max(1)))
    }

    pub fn total_steps(&self) -> usize {
        let full = self.config.epochs * self.batches_per_epoch();
        self.config.max_steps.map_or(full, |cap| full.min(cap))
    }

    fn batch_indices(&self, step: usize) -> Vec<u64> {
        let per_epoch = self.batches_per_epoch();
        let (epoch, b) = (step / per_epoch, step % per_epoch);
        let mut order: Vec<u64> = (0..self.manifest.count as u64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(epoch as u64 + 1);
        order.shuffle(&mut rng);
        let size = self.config.batch_size;
        order[b * size..((b + 1) * size).min(order.len())].to_vec()
    }

    /// One optimizer update on the next batch.
    pub fn step(&mut self) -> Result<LossRecord> {
        let indices = self.batch_indices(self.step);
        let owned: Vec<Sample>;
        let batch: Vec<&Sample> = match &self.cache {
            Some(all) => indices.iter().map(|i| &all[*i as usize]).collect(),
            None => {
                owned = indices.par_iter().map(|i| self.manifest.sample(*i)).collect::<Result<Vec<_>>>()?;
                owned.iter().collect()
            }
        };
        let layers = self.config.layers;
        let (loss, diverged) = batch_objective(&self.controller, &batch, layers)?;
        if diverged as f64 > self.config.abort_fraction * batch.len() as f64 {
            return Err(Error::TrainingAborted(format!(
                "step {}: {diverged} of {} samples diverged (batch loss {loss:.4e})",
                self.step,
                batch.len()
            )));
        }

        let theta = self.controller.values();
        let template = &self.controller;
        let objective = |t: &[f64]| batch_objective(&template.with_values(t)?, &batch, layers).map(|r| r.0);
        let grad = match self.config.grad_estimator {
            GradEstimator::Spsa { pairs, perturbation } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ 0x9E37_79B9_7F4A_7C15);
                rng.set_stream(self.step as u64);
                spsa_gradient(objective, &theta, pairs, perturbation, &mut rng)?
            }
            GradEstimator::CentralDiff { step } => central_difference(objective, &theta, step)?,
        };
        let mut updated = theta;
        self.config.optimizer.step(&mut updated, &grad, &mut self.optimizer, self.config.learning_rate);
        self.controller = self.controller.with_values(&updated)?;

        let window = &self.history[self.history.len().saturating_sub(MOVING_WINDOW - 1)..];
        let moving_avg = (window.iter().map(|r| r.batch_loss).sum::<f64>() + loss) / (window.len() + 1) as f64;
        let record = LossRecord { step: self.step, batch_loss: loss, moving_avg, diverged };
        self.history.push(record.clone());
        self.step += 1;
        Ok(record)
    }

    /// True when the moving average has not dropped below its starting value.
    pub fn no_progress(&self) -> bool {
        if self.history.len() < 2 {
            return false;
        }
        let head = &self.history[..self.history.len().min(MOVING_WINDOW)];
        let start = head.iter().map(|r| r.batch_loss).sum::<f64>() / head.len() as f64;
        self.history.last().expect("non-empty").moving_avg >= start
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let mut ck = self.controller.to_checkpoint();
        ck.meta.steps = self.step;
        ck.meta.manifest_hash = Some(self.manifest.hash());
        ck.meta.no_progress = self.no_progress();
        ck.meta.config = serde_json::to_value(&self.config).ok();
        ck.optimizer = Some(self.optimizer.clone());
        ck
    }

    pub fn run(mut self) -> Result<TrainingOutcome> {
        let total = self.total_steps();
        while self.step < total {
            let rec = self.step()?;
            info!(
                "{} step {}/{}: loss {:.4} (avg {:.4})",
                self.controller.variant(),
                rec.step + 1,
                total,
                rec.batch_loss,
                rec.moving_avg
            );
        }
        let no_progress = self.no_progress();
        if no_progress {
            warn!("{}: training made no progress over {} steps", self.controller.variant(), self.history.len());
        }
        Ok(TrainingOutcome { checkpoint: self.checkpoint(), controller: self.controller, history: self.history, no_progress })
    }
}

pub fn train(variant: Variant, manifest: &DatasetManifest, config: TrainerConfig) -> Result<TrainingOutcome> {
    Trainer::new(variant, manifest, config)?.run()
}

pub fn write_loss_csv<W: Write>(out: &mut W, history: &[LossRecord]) -> Result<()> {
    writeln!(out, "step,batch_loss,moving_avg")?;
    for r in history {
        writeln!(out, "{},{},{}", r.step, r.batch_loss, r.moving_avg)?;
    }
    Ok(())
}
