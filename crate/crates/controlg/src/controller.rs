//! Deficit-tracking block scheduler.
//!
//! The planner hands down a target allocation `f`; the controller's job
//! is to make the integer execution counts follow it. Before block `m`
//! it computes the pre-decision deficit
//!
//! ```text
//!     e_k(m) = N_ref_k(m) - N_k(m-1),      N_ref_k += f_k each block,
//! ```
//!
//! which always sums to exactly 1 (each block adds Σf = 1 to the
//! reference and one unit to the counts). A PID law turns deficits into
//! logits,
//!
//! ```text
//!     ν_k = K_P·e_k + K_I·I_k + K_D·(e_k - e_prev_k),   |I_k| ≤ i_max,
//! ```
//!
//! and the executed task is drawn from a tempered softmax mixed with an
//! ε-uniform floor, so no task can be starved for long: selection
//! probability is at least ε/K at every block, making drought lengths
//! geometrically rare. Baselines (uniform random, round-robin, i.i.d.
//! from `f`, deterministic max-deficit) share the same bookkeeping so
//! traces stay comparable.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// A gain that is either shared across tasks or set per task.
#[derive(Clone, Debug, PartialEq)]
pub enum Gain {
    Shared(f64),
    PerTask(Vec<f64>),
}

impl Gain {
    pub fn at(&self, task: usize) -> f64 {
        match self {
            Gain::Shared(g) => *g,
            Gain::PerTask(v) => v[task],
        }
    }

    fn validate(&self, num_tasks: usize, key: &str) -> Result<()> {
        let bad = |msg: String| {
            Err(Error::ConfigInvalid {
                key: key.into(),
                msg,
            })
        };
        match self {
            Gain::Shared(g) if *g >= 0.0 && g.is_finite() => Ok(()),
            Gain::Shared(g) => bad(format!("gain must be nonnegative and finite, got {g}")),
            Gain::PerTask(v) if v.len() != num_tasks => bad(format!(
                "{} per-task gains for {} tasks",
                v.len(),
                num_tasks
            )),
            Gain::PerTask(v) => match v.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
                Some(g) => bad(format!("gain must be nonnegative and finite, got {g}")),
                None => Ok(()),
            },
        }
    }
}

/// PID gains and selection parameters.
#[derive(Clone, Debug)]
pub struct ControllerConfig {
    pub k_p: Gain,
    pub k_i: Gain,
    pub k_d: Gain,
    /// Anti-windup clamp on the integral state.
    pub i_max: f64,
    /// Softmax temperature.
    pub tau: f64,
    /// Uniform exploration rate in [0, 1).
    pub eps_explore: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            k_p: Gain::Shared(1.0),
            k_i: Gain::Shared(0.1),
            k_d: Gain::Shared(0.0),
            i_max: 10.0,
            tau: 1.0,
            eps_explore: 0.05,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self, num_tasks: usize) -> Result<()> {
        self.k_p.validate(num_tasks, "controller.k_p")?;
        self.k_i.validate(num_tasks, "controller.k_i")?;
        self.k_d.validate(num_tasks, "controller.k_d")?;
        if !(self.i_max > 0.0 && self.i_max.is_finite()) {
            return Err(Error::ConfigInvalid {
                key: "controller.i_max".into(),
                msg: format!("must be positive and finite, got {}", self.i_max),
            });
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::ConfigInvalid {
                key: "controller.tau".into(),
                msg: format!("must be positive and finite, got {}", self.tau),
            });
        }
        if !(0.0..1.0).contains(&self.eps_explore) {
            return Err(Error::ConfigInvalid {
                key: "controller.eps_explore".into(),
                msg: format!("must lie in [0, 1), got {}", self.eps_explore),
            });
        }
        Ok(())
    }
}

/// Execution bookkeeping for one epoch.
#[derive(Clone, Debug)]
pub struct ControllerState {
    n: Vec<u64>,
    n_ref: Vec<f64>,
    // Kahan residuals for n_ref: the deficit-sum identity must hold to
    // 1e-9 over hundred-thousand-block epochs, tighter than a plain
    // running sum drifts.
    n_ref_comp: Vec<f64>,
    i: Vec<f64>,
    e_prev: Vec<f64>,
}

impl ControllerState {
    pub fn new(num_tasks: usize) -> Self {
        Self {
            n: vec![0; num_tasks],
            n_ref: vec![0.0; num_tasks],
            n_ref_comp: vec![0.0; num_tasks],
            i: vec![0.0; num_tasks],
            e_prev: vec![0.0; num_tasks],
        }
    }

    pub fn num_tasks(&self) -> usize {
        self.n.len()
    }

    /// Integer execution counts `N`.
    pub fn counts(&self) -> &[u64] {
        &self.n
    }

    /// Running reference `N_ref`.
    pub fn reference(&self) -> &[f64] {
        &self.n_ref
    }

    /// Clipped integral state `I`.
    pub fn integral(&self) -> &[f64] {
        &self.i
    }

    pub fn blocks_executed(&self) -> u64 {
        self.n.iter().sum()
    }

    /// Zeroes all bookkeeping at an epoch boundary. Difficulty and the
    /// planner reference live elsewhere and persist.
    pub fn epoch_reset(&mut self) {
        self.n.fill(0);
        self.n_ref.fill(0.0);
        self.n_ref_comp.fill(0.0);
        self.i.fill(0.0);
        self.e_prev.fill(0.0);
    }

    /// Advances the reference by one block of `f` and returns the
    /// pre-decision deficits `e = N_ref - N`. Their sum is one by
    /// construction.
    pub fn compute_deficits(&mut self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.n.len() {
            return Err(Error::DimensionMismatch(format!(
                "allocation of {} entries for {} tasks",
                f.len(),
                self.n.len()
            )));
        }
        let sum: f64 = f.iter().sum();
        if f.iter().any(|&x| x < 0.0 || !x.is_finite()) || (sum - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "allocation must lie on the simplex, got sum {sum}"
            )));
        }
        for (k, &fk) in f.iter().enumerate() {
            let y = fk - self.n_ref_comp[k];
            let t = self.n_ref[k] + y;
            self.n_ref_comp[k] = (t - self.n_ref[k]) - y;
            self.n_ref[k] = t;
        }
        Ok(self
            .n_ref
            .iter()
            .zip(&self.n)
            .map(|(&nr, &nk)| nr - nk as f64)
            .collect())
    }

    /// Accumulates the integral (with anti-windup clipping) and forms
    /// the PID logits. Returns `(ν, Δe)`; the previous-deficit memory is
    /// only replaced later by [`Self::record_execution`], so repeated
    /// calls with the same `e` are not idempotent on `I`.
    pub fn pid_logits(
        &mut self,
        cfg: &ControllerConfig,
        e: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        if e.len() != self.n.len() {
            return Err(Error::DimensionMismatch(format!(
                "deficit vector of {} entries for {} tasks",
                e.len(),
                self.n.len()
            )));
        }
        let mut nu = Vec::with_capacity(e.len());
        let mut delta = Vec::with_capacity(e.len());
        for (k, &ek) in e.iter().enumerate() {
            self.i[k] = (self.i[k] + ek).clamp(-cfg.i_max, cfg.i_max);
            let de = ek - self.e_prev[k];
            delta.push(de);
            nu.push(cfg.k_p.at(k) * ek + cfg.k_i.at(k) * self.i[k] + cfg.k_d.at(k) * de);
        }
        Ok((nu, delta))
    }

    /// Books the executed block: one count up, deficit memory replaced.
    pub fn record_execution(&mut self, chosen: usize, e: &[f64]) {
        assert!(chosen < self.n.len(), "task index out of range");
        self.n[chosen] += 1;
        self.e_prev.copy_from_slice(e);
    }
}

/// Tempered softmax with an ε-uniform floor, sampled by inverse CDF.
///
/// Consumes exactly one PRNG draw. Probabilities satisfy
/// `p_k ≥ eps_explore/K` for every task, whatever the logits.
pub fn sample_task(
    nu: &[f64],
    cfg: &ControllerConfig,
    rng: &mut StreamRng,
) -> (usize, Vec<f64>) {
    let p = selection_probabilities(nu, cfg);
    (sample_categorical(&p, rng), p)
}

/// The selection distribution of [`sample_task`] without drawing.
pub fn selection_probabilities(nu: &[f64], cfg: &ControllerConfig) -> Vec<f64> {
    let k = nu.len();
    assert!(k > 0, "need at least one task");
    let top = nu.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let weights: Vec<f64> = nu.iter().map(|&v| ((v - top) / cfg.tau).exp()).collect();
    let total: f64 = weights.iter().sum();
    let eps = cfg.eps_explore;
    weights
        .iter()
        .map(|w| (1.0 - eps) * (w / total) + eps / k as f64)
        .collect()
}

fn sample_categorical(p: &[f64], rng: &mut StreamRng) -> usize {
    let u = rng.uniform();
    let mut cum = 0.0;
    for (idx, &pk) in p.iter().enumerate() {
        cum += pk;
        if u < cum {
            return idx;
        }
    }
    p.len() - 1
}

/// Deterministic argmax of the deficits, lowest index on ties.
///
/// With a constant plan this keeps every count strictly within one
/// block of `m * f_k`, provided there are at most three tasks. The
/// overshoot `N_k - m f_k < 1` holds for any number of tasks, but the
/// undershoot can dip slightly past -1 once two deficits exceed 1 at
/// the same block, which is reachable from four tasks up.
pub fn max_deficit_select(e: &[f64]) -> usize {
    assert!(!e.is_empty(), "need at least one task");
    let mut best = 0;
    for (idx, &v) in e.iter().enumerate().skip(1) {
        if v > e[best] {
            best = idx;
        }
    }
    best
}

/// Scheduling policies sharing the controller's bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolicyKind {
    /// Full loop: PID logits over deficits, tempered softmax selection.
    Controlg,
    /// Deterministic argmax of the deficits.
    MaxDeficit,
    /// Uniform over tasks, ignoring the plan.
    Random,
    /// Cycles tasks in index order.
    RoundRobin,
    /// Samples directly from the planned allocation.
    IidFromPlan,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Controlg,
        PolicyKind::MaxDeficit,
        PolicyKind::Random,
        PolicyKind::RoundRobin,
        PolicyKind::IidFromPlan,
    ];

    /// Uniform PRNG draws one selection consumes: stochastic policies
    /// take exactly one, deterministic ones none.
    pub fn draws_per_block(self) -> u64 {
        match self {
            PolicyKind::Controlg | PolicyKind::Random | PolicyKind::IidFromPlan => 1,
            PolicyKind::MaxDeficit | PolicyKind::RoundRobin => 0,
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            PolicyKind::Controlg => "controlg",
            PolicyKind::MaxDeficit => "max_deficit",
            PolicyKind::Random => "random",
            PolicyKind::RoundRobin => "round_robin",
            PolicyKind::IidFromPlan => "iid_from_plan",
        };
        f.write_str(name)
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "controlg" => Ok(PolicyKind::Controlg),
            "max_deficit" => Ok(PolicyKind::MaxDeficit),
            "random" => Ok(PolicyKind::Random),
            "round_robin" => Ok(PolicyKind::RoundRobin),
            "iid_from_plan" => Ok(PolicyKind::IidFromPlan),
            other => Err(Error::InvalidArgument(format!(
                "unknown policy '{other}' (expected one of controlg, max_deficit, random, round_robin, iid_from_plan)"
            ))),
        }
    }
}

/// Picks the task for block `block_index` (1-based within the epoch)
/// under the given policy. Returns the choice together with the
/// distribution it was drawn from; deterministic policies report a
/// one-hot vector so traces always carry a valid `p`.
pub fn select_task(
    kind: PolicyKind,
    block_index: u64,
    e: &[f64],
    nu: &[f64],
    f: &[f64],
    cfg: &ControllerConfig,
    rng: &mut StreamRng,
) -> (usize, Vec<f64>) {
    let k = e.len();
    let one_hot = |idx: usize| {
        let mut p = vec![0.0; k];
        p[idx] = 1.0;
        p
    };
    match kind {
        PolicyKind::Controlg => sample_task(nu, cfg, rng),
        PolicyKind::MaxDeficit => {
            let idx = max_deficit_select(e);
            (idx, one_hot(idx))
        }
        PolicyKind::Random => {
            let p = vec![1.0 / k as f64; k];
            (sample_categorical(&p, rng), p)
        }
        PolicyKind::RoundRobin => {
            let idx = ((block_index - 1) % k as u64) as usize;
            (idx, one_hot(idx))
        }
        PolicyKind::IidFromPlan => (sample_categorical(f, rng), f.to_vec()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use proptest::prelude::*;

    fn cfg() -> ControllerConfig {
        ControllerConfig::default()
    }

    #[test]
    fn deficits_on_a_fresh_epoch() {
        let mut cs = ControllerState::new(2);
        let e = cs.compute_deficits(&[0.5, 0.5]).unwrap();
        assert_eq!(e, vec![0.5, 0.5]);

        let mut cs = ControllerState::new(1);
        let e = cs.compute_deficits(&[1.0]).unwrap();
        assert_eq!(e, vec![1.0]);
    }

    #[test]
    fn deficit_recursion_after_execution() {
        let mut cs = ControllerState::new(2);
        let e1 = cs.compute_deficits(&[0.5, 0.5]).unwrap();
        cs.record_execution(0, &e1);
        let e2 = cs.compute_deficits(&[0.5, 0.5]).unwrap();
        assert!((e2[0] - 0.0).abs() < 1e-12);
        assert!((e2[1] - 1.0).abs() < 1e-12);
        // e(m+1) - e(m) = f - onehot(chosen)
        assert!((e2[0] - e1[0] - (0.5 - 1.0)).abs() < 1e-12);
        assert!((e2[1] - e1[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn deficits_reject_off_simplex_allocations() {
        let mut cs = ControllerState::new(2);
        assert!(cs.compute_deficits(&[0.7, 0.7]).is_err());
        assert!(cs.compute_deficits(&[1.5, -0.5]).is_err());
        assert!(cs.compute_deficits(&[1.0]).is_err());
    }

    #[test]
    fn pid_hand_case_and_degenerate_gains() {
        let mut cs = ControllerState::new(2);
        let c = ControllerConfig {
            k_p: Gain::Shared(1.0),
            k_i: Gain::Shared(0.1),
            k_d: Gain::Shared(0.0),
            ..cfg()
        };
        let (nu, _) = cs.pid_logits(&c, &[0.5, 0.5]).unwrap();
        assert!((nu[0] - 0.55).abs() < 1e-12);
        assert!((nu[1] - 0.55).abs() < 1e-12);

        let mut cs = ControllerState::new(2);
        let c = ControllerConfig {
            k_p: Gain::Shared(2.0),
            k_i: Gain::Shared(0.0),
            k_d: Gain::Shared(0.0),
            ..cfg()
        };
        let (nu, _) = cs.pid_logits(&c, &[0.3, -0.1]).unwrap();
        assert!((nu[0] - 0.6).abs() < 1e-12);
        assert!((nu[1] + 0.2).abs() < 1e-12);
    }

    #[test]
    fn derivative_term_vanishes_on_constant_deficits() {
        let mut cs = ControllerState::new(2);
        let c = ControllerConfig {
            k_d: Gain::Shared(1.0),
            ..cfg()
        };
        let e = vec![0.25, 0.75];
        let (_, d1) = cs.pid_logits(&c, &e).unwrap();
        assert_eq!(d1, e); // e_prev starts at zero
        cs.record_execution(1, &e);
        let (_, d2) = cs.pid_logits(&c, &e).unwrap();
        assert!(d2.iter().all(|&x| x.abs() < 1e-15));
    }

    #[test]
    fn integral_respects_antiwindup_clamp() {
        let mut cs = ControllerState::new(1);
        let c = ControllerConfig {
            i_max: 2.0,
            ..cfg()
        };
        for _ in 0..100 {
            cs.pid_logits(&c, &[1.0]).unwrap();
            assert!(cs.integral()[0].abs() <= 2.0);
        }
        assert_eq!(cs.integral()[0], 2.0);
        for _ in 0..100 {
            cs.pid_logits(&c, &[-0.7]).unwrap();
            assert!(cs.integral()[0].abs() <= 2.0);
        }
        assert_eq!(cs.integral()[0], -2.0);
    }

    #[test]
    fn per_task_gains_apply_by_index() {
        let mut cs = ControllerState::new(2);
        let c = ControllerConfig {
            k_p: Gain::PerTask(vec![1.0, 3.0]),
            k_i: Gain::Shared(0.0),
            k_d: Gain::Shared(0.0),
            ..cfg()
        };
        let (nu, _) = cs.pid_logits(&c, &[0.5, 0.5]).unwrap();
        assert!((nu[0] - 0.5).abs() < 1e-12);
        assert!((nu[1] - 1.5).abs() < 1e-12);
        assert!(c.validate(2).is_ok());
        assert!(c.validate(3).is_err());
    }

    #[test]
    fn softmax_concentrates_on_clear_argmax() {
        let c = ControllerConfig {
            tau: 1e-3,
            eps_explore: 0.0,
            ..cfg()
        };
        let p = selection_probabilities(&[1.0, 0.0], &c);
        assert!(p[0] >= 1.0 - 1e-6, "p {p:?}");
    }

    #[test]
    fn exploration_floor_is_exact() {
        let c = ControllerConfig {
            eps_explore: 0.1,
            ..cfg()
        };
        // Adversarial logits: floor still guarantees eps/K.
        let p = selection_probabilities(&[-100.0, 0.0, 0.0, 0.0, 0.0], &c);
        assert!(p.iter().all(|&x| x >= 0.1 / 5.0));
        assert!((p[0] - 0.02).abs() < 1e-15);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let uniform = selection_probabilities(&[0.7; 4], &c);
        assert!(uniform.iter().all(|&x| (x - 0.25).abs() < 1e-15));
    }

    #[test]
    fn sampling_consumes_exactly_one_draw() {
        let mut a = StreamRng::new(42, Stream::Policy);
        let mut b = StreamRng::new(42, Stream::Policy);
        sample_task(&[0.3, 0.9, -0.2], &cfg(), &mut a);
        b.uniform();
        assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
    }

    #[test]
    fn max_deficit_breaks_ties_low() {
        assert_eq!(max_deficit_select(&[0.2, 0.8]), 1);
        assert_eq!(max_deficit_select(&[0.5, 0.5]), 0);
        assert_eq!(max_deficit_select(&[0.1, 0.7, 0.7]), 1);
    }

    #[test]
    fn round_robin_cycles_in_order() {
        let mut rng = StreamRng::new(0, Stream::Policy);
        let c = cfg();
        let picks: Vec<usize> = (1..=6)
            .map(|m| {
                select_task(
                    PolicyKind::RoundRobin,
                    m,
                    &[0.0; 3],
                    &[0.0; 3],
                    &[1.0 / 3.0; 3],
                    &c,
                    &mut rng,
                )
                .0
            })
            .collect();
        assert_eq!(picks, vec![0, 1, 2, 0, 1, 2]);
    }

    #[test]
    fn iid_from_plan_follows_degenerate_allocation() {
        let mut rng = StreamRng::new(7, Stream::Policy);
        let c = cfg();
        for m in 1..=50 {
            let (idx, p) = select_task(
                PolicyKind::IidFromPlan,
                m,
                &[0.0; 2],
                &[0.0; 2],
                &[1.0, 0.0],
                &c,
                &mut rng,
            );
            assert_eq!(idx, 0);
            assert_eq!(p, vec![1.0, 0.0]);
        }
    }

    #[test]
    fn max_deficit_tracks_thirds_within_one_block() {
        let f = vec![1.0 / 3.0; 3];
        let mut cs = ControllerState::new(3);
        for m in 1..=300u64 {
            let e = cs.compute_deficits(&f).unwrap();
            assert!((e.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let chosen = max_deficit_select(&e);
            cs.record_execution(chosen, &e);
            for (k, &fk) in f.iter().enumerate() {
                let d = cs.counts()[k] as f64 - m as f64 * fk;
                assert!(d.abs() < 1.0, "block {m}, task {k}: d = {d}");
            }
        }
        assert!(cs.counts().iter().all(|&n| (99..=101).contains(&n)));
    }

    #[test]
    fn epoch_reset_clears_bookkeeping() {
        let mut cs = ControllerState::new(2);
        let e = cs.compute_deficits(&[0.5, 0.5]).unwrap();
        cs.pid_logits(&cfg(), &e).unwrap();
        cs.record_execution(1, &e);
        cs.epoch_reset();
        assert_eq!(cs.counts(), &[0, 0]);
        assert_eq!(cs.reference(), &[0.0, 0.0]);
        assert_eq!(cs.integral(), &[0.0, 0.0]);
        assert_eq!(cs.blocks_executed(), 0);
    }

    #[test]
    fn policy_names_round_trip() {
        for kind in PolicyKind::ALL {
            assert_eq!(kind.to_string().parse::<PolicyKind>().unwrap(), kind);
        }
        assert!("greedy".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn config_validation_rejects_bad_fields() {
        let ok = cfg();
        assert!(ok.validate(3).is_ok());
        let bad = [
            ControllerConfig { k_p: Gain::Shared(-1.0), ..ok.clone() },
            ControllerConfig { i_max: 0.0, ..ok.clone() },
            ControllerConfig { tau: 0.0, ..ok.clone() },
            ControllerConfig { eps_explore: 1.0, ..ok.clone() },
            ControllerConfig { eps_explore: -0.1, ..ok.clone() },
        ];
        for c in bad {
            assert!(c.validate(3).is_err(), "accepted {c:?}");
        }
    }

    proptest! {
        #[test]
        fn prop_deficit_sum_is_one_under_any_policy(
            seed in 0u64..100, k in 1usize..6, blocks in 1u64..200
        ) {
            let mut rng = StreamRng::new(seed, Stream::Policy);
            let mut cs = ControllerState::new(k);
            let c = cfg();
            for m in 1..=blocks {
                // Fresh random allocation every block: replanning stress.
                let f = rng.simplex(k);
                let e = cs.compute_deficits(&f).unwrap();
                prop_assert!((e.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                let (nu, _) = cs.pid_logits(&c, &e).unwrap();
                let kind = PolicyKind::ALL[(seed as usize + m as usize) % 5];
                let (chosen, p) = select_task(kind, m, &e, &nu, &f, &c, &mut rng);
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                cs.record_execution(chosen, &e);
            }
            prop_assert_eq!(cs.blocks_executed(), blocks);
        }

        #[test]
        fn prop_integral_bounded_under_fuzz(
            seed in 0u64..100, i_max in 0.5_f64..20.0
        ) {
            let mut rng = StreamRng::new(seed, Stream::Noise);
            let c = ControllerConfig { i_max, ..cfg() };
            let mut cs = ControllerState::new(3);
            for _ in 0..500 {
                let e: Vec<f64> = (0..3).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
                cs.pid_logits(&c, &e).unwrap();
                prop_assert!(cs.integral().iter().all(|&x| x.abs() <= i_max));
            }
        }

        #[test]
        fn prop_selection_probabilities_respect_floor(
            seed in 0u64..100, k in 1usize..8, eps in 0.0_f64..0.9
        ) {
            let mut rng = StreamRng::new(seed, Stream::Policy);
            let c = ControllerConfig { eps_explore: eps, ..cfg() };
            let nu: Vec<f64> = (0..k).map(|_| rng.uniform_in(-50.0, 50.0)).collect();
            let p = selection_probabilities(&nu, &c);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|&x| x >= eps / k as f64 - 1e-15));
        }
    }
}
