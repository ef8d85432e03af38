//! Spectrally-shaped quadratic objectives.
//!
//! Each task pulls the shared signal matrix `Z` toward its own target
//! through a spectral filter on the graph:
//!
//! ```text
//!     L_k(Z) = ½·‖P_k (Z - Z*_k)‖_F²,     P_k = U·diag(c_k)·Uᵀ,
//! ```
//!
//! where `U` diagonalizes the normalized Laplacian and `c_k ≥ 0` is the
//! task's response per eigenvalue. The gradient field is then
//! `H_k = P_k²(Z - Z*_k)`, which lives exactly in the eigenspace the
//! response selects, so a task built on low eigenvalues provably shows
//! a low Rayleigh quotient and vice versa, and target geometry alone
//! dials the gradient conflict between tasks. The model's parameters
//! are the entries of `Z` itself; no encoder sits in between, which
//! keeps every sensing quantity exactly computable.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::spectral::Signal;
use crate::state::TaskSet;

/// Per-eigenvalue response shape of a task.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpectralProfile {
    /// Indicator on the lowest third of the spectrum (by rank).
    Lowpass,
    /// Indicator on the highest third of the spectrum (by rank).
    Highpass,
    /// All-ones response: the plain quadratic ½‖Z - Z*‖².
    Flat,
    /// Indicator on eigenvalues inside `[lo, hi]`.
    Band { lo: f64, hi: f64 },
}

impl SpectralProfile {
    /// Response values for an ascending eigenvalue list. Rank-based
    /// thirds keep low- and high-pass tasks on disjoint eigenspaces
    /// regardless of how the spectrum is distributed.
    pub fn coefficients(&self, evals: &Array1<f64>) -> Result<Vec<f64>> {
        let n = evals.len();
        if n == 0 {
            return Err(Error::InvalidArgument("empty spectrum".into()));
        }
        let third = n.div_ceil(3);
        let c: Vec<f64> = match self {
            SpectralProfile::Lowpass => {
                (0..n).map(|i| if i < third { 1.0 } else { 0.0 }).collect()
            }
            SpectralProfile::Highpass => {
                (0..n).map(|i| if i >= n - third { 1.0 } else { 0.0 }).collect()
            }
            SpectralProfile::Flat => vec![1.0; n],
            SpectralProfile::Band { lo, hi } => {
                if lo.is_nan() || hi.is_nan() || lo > hi {
                    return Err(Error::InvalidArgument(format!(
                        "band bounds out of order: {lo} > {hi}"
                    )));
                }
                evals
                    .iter()
                    .map(|&l| if (*lo..=*hi).contains(&l) { 1.0 } else { 0.0 })
                    .collect()
            }
        };
        if c.iter().all(|&x| x == 0.0) {
            return Err(Error::InvalidArgument(format!(
                "profile {self} selects no eigenvalues; the objective would be identically zero"
            )));
        }
        Ok(c)
    }
}

impl fmt::Display for SpectralProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralProfile::Lowpass => f.write_str("lowpass"),
            SpectralProfile::Highpass => f.write_str("highpass"),
            SpectralProfile::Flat => f.write_str("flat"),
            SpectralProfile::Band { lo, hi } => {
                write!(f, "band:{}:{}", crate::numfmt::g12(*lo), crate::numfmt::g12(*hi))
            }
        }
    }
}

impl FromStr for SpectralProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lowpass" => return Ok(SpectralProfile::Lowpass),
            "highpass" => return Ok(SpectralProfile::Highpass),
            "flat" => return Ok(SpectralProfile::Flat),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("band:") {
            if let Some((lo, hi)) = rest.split_once(':') {
                let lo: f64 = lo.parse().map_err(|_| bad_profile(s))?;
                let hi: f64 = hi.parse().map_err(|_| bad_profile(s))?;
                if lo.is_finite() && hi.is_finite() {
                    return Ok(SpectralProfile::Band { lo, hi });
                }
            }
        }
        Err(bad_profile(s))
    }
}

fn bad_profile(s: &str) -> Error {
    Error::InvalidArgument(format!(
        "unknown profile '{s}' (expected lowpass, highpass, flat, or band:LO:HI)"
    ))
}

/// One task: a target signal and a spectral response.
#[derive(Clone, Debug)]
pub struct SyntheticObjective {
    /// Response per eigenvalue, ascending order, entries ≥ 0.
    pub c: Array1<f64>,
    /// Target signal matrix Z*.
    pub z_star: Signal,
    /// Scale of the Gaussian gradient noise (minibatch surrogate).
    pub noise_sigma: f64,
}

/// All tasks over one graph, sharing the Laplacian eigenbasis.
#[derive(Clone, Debug)]
pub struct ObjectiveSuite {
    u: Array2<f64>,
    evals: Array1<f64>,
    objectives: Vec<SyntheticObjective>,
}

impl ObjectiveSuite {
    pub fn new(
        u: Array2<f64>,
        evals: Array1<f64>,
        objectives: Vec<SyntheticObjective>,
    ) -> Result<Self> {
        let n = u.nrows();
        if u.ncols() != n || evals.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "basis is {}x{} with {} eigenvalues",
                u.nrows(),
                u.ncols(),
                evals.len()
            )));
        }
        if objectives.is_empty() {
            return Err(Error::InvalidArgument("suite needs at least one task".into()));
        }
        let h = objectives[0].z_star.ncols();
        for (k, obj) in objectives.iter().enumerate() {
            if obj.c.len() != n || obj.z_star.dim() != (n, h) {
                return Err(Error::DimensionMismatch(format!(
                    "task {k}: response of {} for n = {n}, target {:?} for ({n}, {h})",
                    obj.c.len(),
                    obj.z_star.dim()
                )));
            }
            if obj.c.iter().any(|&x| x < 0.0 || !x.is_finite())
                || obj.z_star.iter().any(|x| !x.is_finite())
            {
                return Err(Error::NotFinite(format!("task {k} response or target")));
            }
            if !(obj.noise_sigma >= 0.0 && obj.noise_sigma.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "task {k}: noise sigma must be nonnegative, got {}",
                    obj.noise_sigma
                )));
            }
        }
        Ok(Self { u, evals, objectives })
    }

    pub fn num_tasks(&self) -> usize {
        self.objectives.len()
    }

    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    pub fn h(&self) -> usize {
        self.objectives[0].z_star.ncols()
    }

    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.evals
    }

    pub fn eigenvectors(&self) -> &Array2<f64> {
        &self.u
    }

    pub fn objective(&self, task: usize) -> &SyntheticObjective {
        &self.objectives[task]
    }

    /// Spectral coordinates of the offset from task `task`'s target:
    /// `W = Uᵀ(Z - Z*)`.
    fn spectral_offset(&self, task: usize, z: &Signal) -> Signal {
        let diff = z - &self.objectives[task].z_star;
        self.u.t().dot(&diff)
    }

    /// Exact full-graph loss `½‖P(Z - Z*)‖²  =  ½ Σ_i c_i² ‖W_i·‖²`.
    pub fn loss(&self, task: usize, z: &Signal) -> f64 {
        let w = self.spectral_offset(task, z);
        let c = &self.objectives[task].c;
        0.5 * w
            .rows()
            .into_iter()
            .zip(c)
            .map(|(row, &ci)| ci * ci * row.iter().map(|x| x * x).sum::<f64>())
            .sum::<f64>()
    }

    /// Exact gradient field `H = P²(Z - Z*) = U diag(c²) W`.
    pub fn representation_gradient(&self, task: usize, z: &Signal) -> Signal {
        let mut w = self.spectral_offset(task, z);
        let c = &self.objectives[task].c;
        for (mut row, &ci) in w.rows_mut().into_iter().zip(c) {
            row.mapv_inplace(|x| ci * ci * x);
        }
        self.u.dot(&w)
    }
}

impl TaskSet for ObjectiveSuite {
    fn num_tasks(&self) -> usize {
        self.num_tasks()
    }

    fn loss(&self, task: usize, z: &Signal) -> f64 {
        self.loss(task, z)
    }

    fn noisy_gradient(&self, task: usize, z: &Signal, rng: &mut StreamRng) -> Signal {
        let mut g = self.representation_gradient(task, z);
        let sigma = self.objectives[task].noise_sigma;
        // One normal per entry unconditionally: the draw count per step
        // is 2·n·h whatever sigma is, so traces with different noise
        // levels stay draw-aligned.
        for e in g.iter_mut() {
            *e += sigma * rng.normal();
        }
        g
    }
}
