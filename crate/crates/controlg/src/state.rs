//! Per-task difficulty and normalized-loss tracking.
//!
//! The sensing loop produces three raw signals per task: spectral demand
//! (Rayleigh quotient of the task gradient), interference (conflict
//! score), and the minibatch loss. This module folds them into two
//! bounded state variables the planner consumes:
//!
//! * `D_k`: a difficulty score in `[d_min, d_max]`, an EMA of the
//!   robust-normalized demand and interference,
//!
//!   ```text
//!       D_k ← clip((1-ρ)·D_k + ρ·(α·R̄_k + β·C̄_k), [d_min, d_max])
//!   ```
//!
//! * `L_tilde_k`: the loss on a per-task scale fixed at warm-up,
//!
//!   ```text
//!       L̃_k ← (1-ρ_L)·L̃_k + ρ_L·ℓ_k/(L_scale_k + ε)
//!   ```
//!
//! Robust normalization (median/MAD, clipped at three scaled deviations)
//! makes the demand and interference signals comparable across tasks
//! without trusting their absolute magnitudes, which differ by orders of
//! magnitude between objectives.

use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::spectral::Signal;

/// Weights and rates for the difficulty and loss EMAs.
#[derive(Clone, Copy, Debug)]
pub struct DifficultyConfig {
    /// Weight on normalized spectral demand.
    pub alpha: f64,
    /// Weight on normalized interference.
    pub beta: f64,
    /// Difficulty EMA rate, in (0, 1].
    pub rho: f64,
    /// Normalized-loss EMA rate, in (0, 1].
    pub rho_loss: f64,
    /// Difficulty clip bounds, 0 <= d_min < d_max.
    pub d_min: f64,
    pub d_max: f64,
    /// Stabilizer added to denominators.
    pub eps_stab: f64,
}

impl Default for DifficultyConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.5,
            rho: 0.3,
            rho_loss: 0.3,
            d_min: 0.0,
            d_max: 1.0,
            eps_stab: 1e-12,
        }
    }
}

impl DifficultyConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, key: &str, msg: String| {
            if ok {
                Ok(())
            } else {
                Err(Error::ConfigInvalid {
                    key: key.into(),
                    msg,
                })
            }
        };
        check(
            self.alpha >= 0.0 && self.alpha.is_finite(),
            "difficulty.alpha",
            format!("must be a nonnegative finite number, got {}", self.alpha),
        )?;
        check(
            self.beta >= 0.0 && self.beta.is_finite(),
            "difficulty.beta",
            format!("must be a nonnegative finite number, got {}", self.beta),
        )?;
        check(
            self.alpha + self.beta > 0.0,
            "difficulty.alpha",
            "alpha + beta must be positive or difficulty never moves".into(),
        )?;
        check(
            self.rho > 0.0 && self.rho <= 1.0,
            "difficulty.rho",
            format!("must lie in (0, 1], got {}", self.rho),
        )?;
        check(
            self.rho_loss > 0.0 && self.rho_loss <= 1.0,
            "difficulty.rho_loss",
            format!("must lie in (0, 1], got {}", self.rho_loss),
        )?;
        check(
            self.d_min >= 0.0 && self.d_min < self.d_max && self.d_max.is_finite(),
            "difficulty.d_min",
            format!(
                "need 0 <= d_min < d_max, got [{}, {}]",
                self.d_min, self.d_max
            ),
        )?;
        check(
            self.eps_stab > 0.0,
            "difficulty.eps_stab",
            format!("must be positive, got {}", self.eps_stab),
        )
    }
}

/// Per-task estimator state. A plain value: the loop updates it, traces
/// snapshot it.
#[derive(Clone, Debug)]
pub struct ObjectiveState {
    /// Difficulty, one entry per task, each in [d_min, d_max].
    pub d: Vec<f64>,
    /// Normalized loss EMA, one entry per task.
    pub l_tilde: Vec<f64>,
    /// Warm-up loss scales; `None` until warm-up has run.
    l_scale: Option<Vec<f64>>,
}

impl ObjectiveState {
    /// State before warm-up: difficulty at the lower clip bound, unit
    /// normalized losses, no scales.
    pub fn uninitialized(num_tasks: usize, cfg: &DifficultyConfig) -> Self {
        Self {
            d: vec![cfg.d_min; num_tasks],
            l_tilde: vec![1.0; num_tasks],
            l_scale: None,
        }
    }

    pub fn num_tasks(&self) -> usize {
        self.d.len()
    }

    pub fn scales(&self) -> Option<&[f64]> {
        self.l_scale.as_deref()
    }
}

/// Median of a nonempty slice, averaging the middle pair for even
/// lengths.
fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Maps a cross-task signal to [0,1] using median/MAD: deviations are
/// scaled by 1.4826·MAD (the Gaussian consistency factor), clipped at
/// ±3, then shifted to the unit interval. A constant vector maps to 0.5
/// everywhere; a single outlier saturates at 0 or 1 instead of dragging
/// the rest.
pub fn robust_normalize(x: &[f64], eps_stab: f64) -> Vec<f64> {
    assert!(!x.is_empty(), "robust_normalize needs at least one task");
    assert!(eps_stab > 0.0, "eps_stab must be positive");
    let med = median(x);
    let dev: Vec<f64> = x.iter().map(|&v| (v - med).abs()).collect();
    let mad = median(&dev);
    let denom = 1.4826 * mad + eps_stab;
    x.iter()
        .map(|&v| (((v - med) / denom).clamp(-3.0, 3.0) + 3.0) / 6.0)
        .collect()
}

/// Folds one sensing reading into the difficulty EMA.
///
/// `rq` and `conf` are the raw (unnormalized) demand and interference
/// vectors; normalization happens here so callers cannot feed the EMA
/// inconsistent scalings.
pub fn update_difficulty(
    state: &mut ObjectiveState,
    cfg: &DifficultyConfig,
    rq: &[f64],
    conf: &[f64],
) -> Result<()> {
    let k = state.num_tasks();
    if rq.len() != k || conf.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "difficulty update: rq has {} entries, conf {}, state {}",
            rq.len(),
            conf.len(),
            k
        )));
    }
    let r_bar = robust_normalize(rq, cfg.eps_stab);
    let c_bar = robust_normalize(conf, cfg.eps_stab);
    for i in 0..k {
        let drive = cfg.alpha * r_bar[i] + cfg.beta * c_bar[i];
        state.d[i] =
            ((1.0 - cfg.rho) * state.d[i] + cfg.rho * drive).clamp(cfg.d_min, cfg.d_max);
    }
    Ok(())
}

/// Folds raw losses into the normalized-loss EMA. Requires warm-up
/// scales; refuses to guess one.
pub fn update_normalized_loss(
    state: &mut ObjectiveState,
    cfg: &DifficultyConfig,
    raw_losses: &[f64],
) -> Result<()> {
    let scales = state.l_scale.as_ref().ok_or(Error::ScaleUninitialized)?;
    let k = state.num_tasks();
    if raw_losses.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "loss update: {} losses for {} tasks",
            raw_losses.len(),
            k
        )));
    }
    let scaled: Vec<f64> = raw_losses
        .iter()
        .zip(scales)
        .map(|(&l, &s)| l / (s + cfg.eps_stab))
        .collect();
    for (lt, &s) in state.l_tilde.iter_mut().zip(&scaled) {
        *lt = (1.0 - cfg.rho_loss) * *lt + cfg.rho_loss * s;
    }
    Ok(())
}

/// Anything the estimator can warm up against: a set of tasks over a
/// shared signal matrix, each exposing a loss and a (possibly noisy)
/// gradient. The simulation testbed implements this; tests use toy
/// quadratics.
pub trait TaskSet {
    fn num_tasks(&self) -> usize;
    fn loss(&self, task: usize, z: &Signal) -> f64;
    /// Gradient of task `task` at `z`. Implementations must consume a
    /// fixed number of PRNG draws per call regardless of the noise
    /// level, so traces stay byte-reproducible across configs.
    fn noisy_gradient(&self, task: usize, z: &Signal, rng: &mut StreamRng) -> Signal;
}

/// Outcome of warm-up: the initialized estimator state plus the largest
/// normalized loss seen per task, which the planner uses to place its
/// initial reference point.
#[derive(Clone, Debug)]
pub struct WarmupReport {
    pub state: ObjectiveState,
    /// max over warm-up observations of loss/(scale+eps), per task.
    pub max_normalized: Vec<f64>,
}

/// Runs `steps` descent steps per task, each task independently from
/// `z0`, and fixes the per-task loss scale to the mean loss observed
/// before each step. Difficulty starts at `d_min`; the normalized-loss
/// EMA starts at the initial loss over the scale.
pub fn warmup_scales<T: TaskSet>(
    tasks: &T,
    z0: &Signal,
    steps: usize,
    eta: f64,
    cfg: &DifficultyConfig,
    rng: &mut StreamRng,
) -> Result<WarmupReport> {
    if steps == 0 {
        return Err(Error::InvalidArgument(
            "warm-up needs at least one step per task".into(),
        ));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "warm-up step size must be finite and nonnegative, got {eta}"
        )));
    }
    let k = tasks.num_tasks();
    let mut scales = Vec::with_capacity(k);
    let mut max_normalized = Vec::with_capacity(k);
    let mut initial_losses = Vec::with_capacity(k);
    for task in 0..k {
        let mut z = z0.clone();
        let mut observed = Vec::with_capacity(steps);
        for _ in 0..steps {
            observed.push(tasks.loss(task, &z));
            let g = tasks.noisy_gradient(task, &z, rng);
            z.zip_mut_with(&g, |zi, gi| *zi -= eta * gi);
        }
        if observed.iter().any(|l| !l.is_finite()) {
            return Err(Error::NotFinite(format!("warm-up losses of task {task}")));
        }
        let scale = observed.iter().sum::<f64>() / steps as f64;
        let denom = scale + cfg.eps_stab;
        max_normalized.push(observed.iter().fold(0.0_f64, |a, &l| a.max(l / denom)));
        initial_losses.push(observed[0]);
        scales.push(scale);
    }
    let l_tilde: Vec<f64> = initial_losses
        .iter()
        .zip(&scales)
        .map(|(&l, &s)| l / (s + cfg.eps_stab))
        .collect();
    Ok(WarmupReport {
        state: ObjectiveState {
            d: vec![cfg.d_min; k],
            l_tilde,
            l_scale: Some(scales),
        },
        max_normalized,
    })
}
