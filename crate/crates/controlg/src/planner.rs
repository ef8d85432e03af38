//! Pareto-aware allocation planning.
//!
//! Progress across tasks is summarized by the log-volume of the box
//! between the normalized-loss vector and a reference point `r` that
//! only moves away from the losses:
//!
//! ```text
//!     φ = Σ_k log(r_k - L̃_k),        r_k ← max(r_k, L̃_k + δ).
//! ```
//!
//! φ grows exactly when a task improves (strict Pareto compliance), and
//! its negative gradient  `w_k = 1/(r_k - L̃_k + ε)`  is largest for the
//! task with the least slack, so lagging tasks get priority without any
//! tuning. Difficulty tempers that priority, and the block allocation is
//! the normalized result:
//!
//! ```text
//!     a_k = w_k / (1 + γ·D_k),        f_k = a_k / Σ_j a_j,
//! ```
//!
//! which is also the proportional-fair point: the unique maximizer of
//! Σ a_k·log f_k over the simplex.

use crate::error::{Error, Result};

/// Planner parameters.
#[derive(Clone, Copy, Debug)]
pub struct PlannerConfig {
    /// Reference-point margin above the normalized losses.
    pub delta: f64,
    /// Difficulty tempering strength.
    pub gamma: f64,
    /// Allocation floor; 0 disables. Applied as max-then-renormalize,
    /// so floored entries can land slightly below `f_min` again after
    /// normalization (deflation at most a factor 1 + K·f_min).
    pub f_min: f64,
    /// Stabilizer in the sensitivity denominator.
    pub eps_stab: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            delta: 0.05,
            gamma: 0.5,
            f_min: 0.05,
            eps_stab: 1e-8,
        }
    }
}

impl PlannerConfig {
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
            self.delta > 0.0 && self.delta.is_finite(),
            "planner.delta",
            format!("must be a positive finite margin, got {}", self.delta),
        )?;
        check(
            self.gamma >= 0.0 && self.gamma.is_finite(),
            "planner.gamma",
            format!("must be nonnegative and finite, got {}", self.gamma),
        )?;
        check(
            (0.0..1.0).contains(&self.f_min),
            "planner.f_min",
            format!("must lie in [0, 1), got {}", self.f_min),
        )?;
        check(
            self.eps_stab > 0.0,
            "planner.eps_stab",
            format!("must be positive, got {}", self.eps_stab),
        )
    }
}

/// Reference point and current allocation. One per run; the loop
/// updates it at every sensing step.
#[derive(Clone, Debug)]
pub struct PlannerState {
    /// Per-task reference, strictly above the normalized losses.
    pub r: Vec<f64>,
    /// Current block allocation on the simplex.
    pub f: Vec<f64>,
    cfg: PlannerConfig,
}

impl PlannerState {
    /// Places the initial reference at `(1+δ)` times the largest
    /// normalized loss each task showed during warm-up, and starts from
    /// a uniform allocation.
    pub fn from_warmup(cfg: PlannerConfig, max_normalized: &[f64]) -> Result<Self> {
        if max_normalized.iter().any(|m| !m.is_finite()) {
            return Err(Error::NotFinite("warm-up loss maxima".into()));
        }
        let delta = cfg.delta;
        Self::with_reference(cfg, max_normalized.iter().map(|&m| (1.0 + delta) * m).collect())
    }

    /// Resumes a planner from an explicit reference point, bypassing
    /// warm-up placement. Callers own the responsibility that `r`
    /// dominates the losses they will feed in.
    pub fn with_reference(cfg: PlannerConfig, r: Vec<f64>) -> Result<Self> {
        cfg.validate()?;
        let k = r.len();
        if k == 0 {
            return Err(Error::InvalidArgument("planner needs at least one task".into()));
        }
        if cfg.f_min * k as f64 > 1.0 {
            return Err(Error::ConfigInvalid {
                key: "planner.f_min".into(),
                msg: format!("floor {} is infeasible for {} tasks", cfg.f_min, k),
            });
        }
        if r.iter().any(|x| !x.is_finite()) {
            return Err(Error::NotFinite("planner reference".into()));
        }
        Ok(Self { r, f: vec![1.0 / k as f64; k], cfg })
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.cfg
    }

    pub fn num_tasks(&self) -> usize {
        self.r.len()
    }

    /// Monotone safeguard: the reference never decreases and always
    /// keeps at least `δ` of slack over every normalized loss.
    pub fn update_reference(&mut self, l_tilde: &[f64]) -> Result<()> {
        self.check_len(l_tilde)?;
        for (r, &l) in self.r.iter_mut().zip(l_tilde) {
            *r = r.max(l + self.cfg.delta);
        }
        Ok(())
    }

    /// Log-volume of the slack box, `Σ log(r_k - L̃_k)`. Expects a
    /// reference already safeguarded against `l_tilde`.
    pub fn log_hypervolume(&self, l_tilde: &[f64]) -> Result<f64> {
        self.check_len(l_tilde)?;
        let mut phi = 0.0;
        for (task, (&r, &l)) in self.r.iter().zip(l_tilde).enumerate() {
            let slack = r - l;
            if slack <= 0.0 {
                return Err(Error::NonPositiveSlack { task, slack });
            }
            phi += slack.ln();
        }
        Ok(phi)
    }

    /// Per-task priority `w_k = 1/(r_k - L̃_k + ε)`, the negative
    /// gradient of [`Self::log_hypervolume`] up to the stabilizer.
    pub fn hv_sensitivities(&self, l_tilde: &[f64]) -> Result<Vec<f64>> {
        self.check_len(l_tilde)?;
        self.r
            .iter()
            .zip(l_tilde)
            .enumerate()
            .map(|(task, (&r, &l))| {
                let slack = r - l;
                if slack <= 0.0 {
                    return Err(Error::NonPositiveSlack { task, slack });
                }
                Ok(1.0 / (slack + self.cfg.eps_stab))
            })
            .collect()
    }

    /// Difficulty-tempered proportional-fair allocation: normalizes
    /// `a_k = w_k/(1 + γ·D_k)` onto the simplex, then applies the
    /// configured floor. Stores and returns the new `f`.
    pub fn plan_allocation(&mut self, w_hv: &[f64], d: &[f64]) -> Result<&[f64]> {
        self.check_len(w_hv)?;
        self.check_len(d)?;
        if w_hv.iter().any(|&w| w <= 0.0 || !w.is_finite()) {
            return Err(Error::InvalidArgument(
                "sensitivities must be positive and finite".into(),
            ));
        }
        if d.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(Error::InvalidArgument(
                "difficulties must be nonnegative and finite".into(),
            ));
        }
        let a: Vec<f64> = w_hv
            .iter()
            .zip(d)
            .map(|(&w, &dk)| w / (1.0 + self.cfg.gamma * dk))
            .collect();
        let total: f64 = a.iter().sum();
        self.f = a.into_iter().map(|ak| ak / total).collect();
        if self.cfg.f_min > 0.0 {
            for fk in &mut self.f {
                *fk = fk.max(self.cfg.f_min);
            }
            let sum: f64 = self.f.iter().sum();
            for fk in &mut self.f {
                *fk /= sum;
            }
        }
        Ok(&self.f)
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.r.len() {
            return Err(Error::DimensionMismatch(format!(
                "planner holds {} tasks, got a vector of {}",
                self.r.len(),
                v.len()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NotFinite("planner input".into()));
        }
        Ok(())
    }
}

/// Cumulative reference allocation: the running sum of the per-block
/// `f` vectors. With a constant `f` over `m` blocks this is exactly
/// `m·f`; under replanning each block contributes the `f` it was
/// scheduled with.
pub fn reference_allocation(per_block_f: &[Vec<f64>]) -> Vec<f64> {
    let Some(first) = per_block_f.first() else {
        return Vec::new();
    };
    let mut acc = vec![0.0; first.len()];
    for f in per_block_f {
        for (a, &fk) in acc.iter_mut().zip(f) {
            *a += fk;
        }
    }
    acc
}
