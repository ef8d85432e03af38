//! Self-contained verification suites.
//!
//! Each suite checks one mathematical property of the scheduler with
//! fixed seeds: identities against brute-force oracles (dense
//! eigendecompositions, simplex grids, finite differences), analytic
//! bounds (tracking error, drought tails, filter progress), and
//! end-to-end contracts (determinism, spectral-regime separation).
//! Suites report measured margins, not just pass flags, so a regression
//! shows up as a shrinking margin before it becomes a failure.
//!
//! Everything here is deterministic; a suite that passes once passes
//! always on the same build.

use ndarray::Array2;

use crate::config::SimConfig;
use crate::controller::{
    max_deficit_select, sample_task, select_task, selection_probabilities, ControllerConfig,
    ControllerState, Gain, PolicyKind,
};
use crate::error::{Error, Result};
use crate::mgda::{
    mix_vector, normalize_gradients, solve_min_norm, GradientSet, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use crate::planner::{PlannerConfig, PlannerState};
use crate::rng::{Stream, StreamRng};
use crate::sim::engine::{block_update, build_testbed, run_simulation};
use crate::sim::objective::SpectralProfile;
use crate::spectral::{
    eig_sym, lowpass_filter_apply, normalized_laplacian, quadform, rayleigh_quotient, Graph,
    Signal,
};
use crate::trace::{digest, report, TraceHeader, SCHEMA};
use crate::{config, trace};

/// Outcome of one suite.
#[derive(Clone, Debug)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    /// Measured margins and counts, human-readable.
    pub details: String,
}

type SuiteFn = fn() -> Result<(bool, String)>;

const REGISTRY: [(&str, SuiteFn); 14] = [
    ("deficit_sum", deficit_sum),
    ("bounded_tracking", bounded_tracking),
    ("min_norm_kkt", min_norm_kkt),
    ("rayleigh_spectral", rayleigh_spectral),
    ("dirichlet_equivalence", dirichlet_equivalence),
    ("lowpass_progress", lowpass_progress),
    ("hypervolume_pareto", hypervolume_pareto),
    ("proportional_fairness", proportional_fairness),
    ("exploration_drought", exploration_drought),
    ("anti_windup", anti_windup),
    ("pid_vs_iid", pid_vs_iid),
    ("spectral_regimes", spectral_regimes),
    ("interference_prediction", interference_prediction),
    ("determinism", determinism),
];

/// Names of all suites, in canonical order.
pub fn all_suites() -> Vec<&'static str> {
    REGISTRY.iter().map(|(name, _)| *name).collect()
}

fn execute(name: &'static str, suite: SuiteFn) -> SuiteResult {
    match suite() {
        Ok((passed, details)) => SuiteResult { name, passed, details },
        Err(e) => SuiteResult { name, passed: false, details: format!("aborted: {e}") },
    }
}

/// Runs one suite by name. Library errors inside a suite are reported
/// as failures, not propagated; only an unknown name is an `Err`.
pub fn run_suite(name: &str) -> Result<SuiteResult> {
    REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(n, f)| execute(n, *f))
        .ok_or_else(|| Error::UnknownSuite(name.to_string()))
}

/// Runs every suite in canonical order.
pub fn run_all() -> Vec<SuiteResult> {
    REGISTRY.iter().map(|(n, f)| execute(n, *f)).collect()
}

fn frob_dot(a: &Signal, b: &Signal) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Weighted graph with random topology and no isolated nodes.
fn random_graph(gen: &mut StreamRng, min_n: usize, max_n: usize) -> Result<Graph> {
    let n = min_n + gen.index(max_n - min_n + 1);
    let p = gen.uniform_in(0.1, 0.7);
    let mut edges = Vec::new();
    let mut degree = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if gen.uniform() < p {
                edges.push((i, j, gen.uniform_in(0.1, 2.0)));
                degree[i] += 1;
                degree[j] += 1;
            }
        }
    }
    for i in 0..n {
        if degree[i] == 0 {
            let j = (i + 1) % n;
            edges.push((i, j, gen.uniform_in(0.1, 2.0)));
            degree[i] += 1;
            degree[j] += 1;
        }
    }
    Graph::from_edges(n, &edges)
}

fn random_signal(gen: &mut StreamRng, n: usize, max_h: usize) -> Signal {
    let h = 1 + gen.index(max_h);
    let mut s = Array2::zeros((n, h));
    for e in s.iter_mut() {
        *e = gen.normal();
    }
    s
}

fn median_of(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Piecewise-linear response through five knots at 0, 0.5, 1, 1.5, 2.
/// Non-increasing whenever the knot values are sorted descending.
fn piecewise_response(knots: &[f64; 5], x: f64) -> f64 {
    let x = x.clamp(0.0, 2.0);
    let idx = ((x / 0.5) as usize).min(3);
    let t = (x - 0.5 * idx as f64) / 0.5;
    knots[idx] * (1.0 - t) + knots[idx + 1] * t
}

/// The per-block deficit vector always sums to exactly one block of
/// slack, for any plan sequence and any selection policy.
fn deficit_sum() -> Result<(bool, String)> {
    const BLOCKS: u64 = 100_000;
    const K: usize = 5;
    let cfg = ControllerConfig::default();
    let mut worst: f64 = 0.0;
    for policy in PolicyKind::ALL {
        let mut gen = StreamRng::new(1, Stream::Testbed);
        let mut pol = StreamRng::new(1, Stream::Policy);
        let mut ctrl = ControllerState::new(K);
        let mut f = gen.simplex(K);
        for m in 1..=BLOCKS {
            if (m - 1) % 5 == 0 {
                f = gen.simplex(K);
            }
            let e = ctrl.compute_deficits(&f)?;
            let sum: f64 = e.iter().sum();
            worst = worst.max((sum - 1.0).abs());
            let (nu, _) = ctrl.pid_logits(&cfg, &e)?;
            let (chosen, _) = select_task(policy, m, &e, &nu, &f, &cfg, &mut pol);
            ctrl.record_execution(chosen, &e);
        }
    }
    Ok((
        worst <= 1e-9,
        format!(
            "max |sum(e) - 1| = {worst:.3e} over {} policies x {BLOCKS} blocks (tol 1e-9)",
            PolicyKind::ALL.len()
        ),
    ))
}

/// Max-deficit selection keeps every count strictly within one block
/// of its proportional reference, on the domain where that is actually
/// provable: up to three tasks. The textbook argument for the lower
/// bound assumes a deficit of at least 1 must be the maximum, which
/// fails from four tasks up (two deficits can sit above 1 at once
/// while the rest are negative), so the five-task excursion is
/// measured and reported rather than asserted.
fn bounded_tracking() -> Result<(bool, String)> {
    const SETS: usize = 100;
    const BLOCKS: u64 = 10_000;
    let mut gen = StreamRng::new(2, Stream::Testbed);
    let run = |f: &[f64]| -> Result<(u64, f64)> {
        let k = f.len();
        let mut ctrl = ControllerState::new(k);
        let mut violations = 0u64;
        let mut worst: f64 = 0.0;
        for m in 1..=BLOCKS {
            let e = ctrl.compute_deficits(f)?;
            let chosen = max_deficit_select(&e);
            ctrl.record_execution(chosen, &e);
            for (j, &fj) in f.iter().enumerate() {
                let d = ctrl.counts()[j] as f64 - m as f64 * fj;
                worst = worst.max(d.abs());
                if !(d > -1.0 && d < 1.0) {
                    violations += 1;
                }
            }
        }
        Ok((violations, worst))
    };
    let mut violations = 0u64;
    let mut worst_small: f64 = 0.0;
    for set in 0..SETS {
        let f = gen.simplex(2 + set % 2);
        let (v, w) = run(&f)?;
        violations += v;
        worst_small = worst_small.max(w);
    }
    // A five-task plan whose trajectory reaches two deficits above 1
    // at the same block (around block 5749), pushing one task past the
    // bound. Kept as evidence for the domain restriction above.
    let breaker = [
        0.5407966173851391,
        0.38998635991144964,
        0.03891846905504455,
        0.00112394820915289,
        0.029174605439213866,
    ];
    let (_, excursion) = run(&breaker)?;
    Ok((
        violations == 0,
        format!(
            "{violations} violations over {SETS} constant plans (2 or 3 tasks) x {BLOCKS} \
blocks; max |N_k - m f_k| = {worst_small:.6}; pinned five-task plan reaches {excursion:.4} \
(bound provable for at most 3 tasks)"
        ),
    ))
}

/// The min-norm mixer satisfies the simplex variational inequality,
/// matches the two-task closed form, and is no worse than a dense
/// simplex grid on three tasks.
fn min_norm_kkt() -> Result<(bool, String)> {
    let mut gen = StreamRng::new(3, Stream::Testbed);

    let mut worst_vi = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let k = 2 + gen.index(7);
        let dim = 2 + gen.index(63);
        let rows: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let scale = 10f64.powf(gen.uniform_in(-2.0, 2.0));
                (0..dim).map(|_| scale * gen.normal()).collect()
            })
            .collect();
        let unit = normalize_gradients(&GradientSet::from_rows(&rows)?);
        let sol = solve_min_norm(&unit, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
        let mix = mix_vector(&unit, &sol.lambda);
        let mix2: f64 = mix.iter().map(|x| x * x).sum();
        for row in 0..k {
            let dot: f64 = unit.row(row).iter().zip(&mix).map(|(a, b)| a * b).sum();
            worst_vi = worst_vi.max(mix2 - dot);
        }
    }

    let mut worst_k2: f64 = 0.0;
    for _ in 0..1000 {
        let dim = 2 + gen.index(31);
        let rows: Vec<Vec<f64>> =
            (0..2).map(|_| (0..dim).map(|_| gen.normal()).collect()).collect();
        let unit = normalize_gradients(&GradientSet::from_rows(&rows)?);
        let g1: Vec<f64> = unit.row(0).to_vec();
        let g2: Vec<f64> = unit.row(1).to_vec();
        let num: f64 = g1.iter().zip(&g2).map(|(a, b)| (b - a) * b).sum();
        let den: f64 = g1.iter().zip(&g2).map(|(a, b)| (a - b) * (a - b)).sum();
        let closed = (num / den).clamp(0.0, 1.0);
        let sol = solve_min_norm(&unit, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
        worst_k2 = worst_k2.max((sol.lambda[0] - closed).abs());
    }

    let mut worst_gap = f64::NEG_INFINITY;
    for _ in 0..50 {
        let dim = 3 + gen.index(14);
        let rows: Vec<Vec<f64>> =
            (0..3).map(|_| (0..dim).map(|_| gen.normal()).collect()).collect();
        let unit = normalize_gradients(&GradientSet::from_rows(&rows)?);
        let mut q = [[0.0f64; 3]; 3];
        for (a, qa) in q.iter_mut().enumerate() {
            for (b, cell) in qa.iter_mut().enumerate() {
                *cell = unit.row(a).iter().zip(unit.row(b)).map(|(x, y)| x * y).sum();
            }
        }
        let val = |l: [f64; 3]| {
            let mut v = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    v += l[a] * q[a][b] * l[b];
                }
            }
            v
        };
        let sol = solve_min_norm(&unit, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
        const R: usize = 400;
        let mut grid_min = f64::INFINITY;
        for i in 0..=R {
            for j in 0..=(R - i) {
                let l = [
                    i as f64 / R as f64,
                    j as f64 / R as f64,
                    (R - i - j) as f64 / R as f64,
                ];
                grid_min = grid_min.min(val(l));
            }
        }
        worst_gap = worst_gap.max(sol.g_mix_norm_sq - grid_min);
    }

    let passed = worst_vi <= 1e-6 && worst_k2 <= 1e-8 && worst_gap <= 1e-4;
    Ok((
        passed,
        format!(
            "VI violation {worst_vi:.3e} (tol 1e-6); two-task closed-form gap {worst_k2:.3e} \
(tol 1e-8); grid objective gap {worst_gap:.3e} (tol 1e-4)"
        ),
    ))
}

/// The edge-sum Rayleigh quotient equals the energy-weighted average
/// eigenvalue from a dense diagonalization and stays inside [0, 2].
fn rayleigh_spectral() -> Result<(bool, String)> {
    let mut gen = StreamRng::new(4, Stream::Testbed);
    let mut worst_rel: f64 = 0.0;
    let mut range_ok = true;
    for _ in 0..200 {
        let g = random_graph(&mut gen, 4, 100)?;
        let sig = random_signal(&mut gen, g.n(), 8);
        let rq = rayleigh_quotient(&g, &sig, 1e-300)?;
        let (evals, u) = eig_sym(&normalized_laplacian(&g))?;
        let w = u.t().dot(&sig);
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &lam) in evals.iter().enumerate() {
            let energy: f64 = w.row(i).iter().map(|x| x * x).sum();
            num += lam * energy;
            den += energy;
        }
        let oracle = num / den;
        worst_rel = worst_rel.max((rq - oracle).abs() / oracle.abs().max(1e-300));
        if !(0.0..=2.0).contains(&rq) {
            range_ok = false;
        }
    }
    Ok((
        worst_rel <= 1e-8 && range_ok,
        format!(
            "max rel deviation from eigenvalue average {worst_rel:.3e} (tol 1e-8); \
range [0, 2] {}",
            if range_ok { "held" } else { "VIOLATED" }
        ),
    ))
}

/// The edge-sum Dirichlet energy equals the dense trace form.
fn dirichlet_equivalence() -> Result<(bool, String)> {
    let mut gen = StreamRng::new(5, Stream::Testbed);
    let mut worst_rel: f64 = 0.0;
    for _ in 0..200 {
        let g = random_graph(&mut gen, 4, 100)?;
        let sig = random_signal(&mut gen, g.n(), 8);
        let edge_form = quadform(&g, &sig)?;
        let lap = normalized_laplacian(&g);
        let trace_form: f64 = frob_dot(&sig, &lap.dot(&sig));
        let rel = (edge_form - trace_form).abs() / edge_form.abs().max(trace_form.abs()).max(1e-300);
        worst_rel = worst_rel.max(rel);
    }
    Ok((
        worst_rel <= 1e-10,
        format!("max rel deviation edge-sum vs trace form {worst_rel:.3e} (tol 1e-10)"),
    ))
}

/// Under a non-increasing filter response, per-energy first-order
/// progress is capped by a decreasing function of the Rayleigh
/// quotient: high spectral demand means less attainable progress.
fn lowpass_progress() -> Result<(bool, String)> {
    let mut gen = StreamRng::new(6, Stream::Testbed);
    let cutoffs = [0.25, 0.5, 1.0, 1.5];
    let mut checks = 0u64;
    let mut skipped = 0u64;
    let mut violations = 0u64;
    let mut worst_excess = f64::NEG_INFINITY;
    for _ in 0..500 {
        let g = random_graph(&mut gen, 4, 48)?;
        let sig = random_signal(&mut gen, g.n(), 4);
        let mut knots = [0.0f64; 5];
        for k in &mut knots {
            *k = gen.uniform();
        }
        knots.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let filtered = lowpass_filter_apply(&g, &sig, |x| piecewise_response(&knots, x))?;
        let norm2: f64 = sig.iter().map(|x| x * x).sum();
        let delta_bar = frob_dot(&sig, &filtered) / norm2;
        let rq = quadform(&g, &sig)? / norm2;
        let (evals, _) = eig_sym(&normalized_laplacian(&g))?;
        let lam_max = evals[evals.len() - 1];
        let p0 = piecewise_response(&knots, 0.0);
        for &lc in &cutoffs {
            // The bound needs a cutoff strictly below the top of the
            // spectrum; larger cutoffs are vacuous for this graph.
            if lc >= lam_max {
                skipped += 1;
                continue;
            }
            let pc = piecewise_response(&knots, lc);
            let bound = p0 - (p0 - pc) * ((rq - lc) / (lam_max - lc)).max(0.0);
            checks += 1;
            worst_excess = worst_excess.max(delta_bar - bound);
            if delta_bar > bound + 1e-8 {
                violations += 1;
            }
        }
    }
    Ok((
        violations == 0 && checks > 0,
        format!(
            "{violations} violations over {checks} cutoff checks ({skipped} skipped as \
cutoff >= lambda_max); max(progress - bound) = {worst_excess:.3e} (tol 1e-8)"
        ),
    ))
}

/// Log-hypervolume strictly rewards Pareto improvements under a fixed
/// reference, and its sensitivities match finite differences.
fn hypervolume_pareto() -> Result<(bool, String)> {
    let mut gen = StreamRng::new(7, Stream::Testbed);
    let cfg = PlannerConfig { f_min: 0.0, ..Default::default() };
    let mut strict_ok = 0u64;
    const PAIRS: u64 = 10_000;
    for _ in 0..PAIRS {
        let k = 2 + gen.index(5);
        let r: Vec<f64> = (0..k).map(|_| gen.uniform_in(1.0, 3.0)).collect();
        let planner = PlannerState::with_reference(cfg, r.clone())?;
        let worse: Vec<f64> = r.iter().map(|&ri| ri - gen.uniform_in(0.05, 1.0)).collect();
        let mut better = worse.clone();
        let mut improved = false;
        for b in better.iter_mut() {
            if gen.uniform() < 0.5 {
                *b -= gen.uniform_in(1e-3, 0.5);
                improved = true;
            }
        }
        if !improved {
            better[gen.index(k)] -= gen.uniform_in(1e-3, 0.5);
        }
        if planner.log_hypervolume(&better)? > planner.log_hypervolume(&worse)? {
            strict_ok += 1;
        }
    }

    let mut worst_fd: f64 = 0.0;
    let step = 1e-6;
    for _ in 0..100 {
        let k = 2 + gen.index(5);
        let r: Vec<f64> = (0..k).map(|_| gen.uniform_in(1.0, 3.0)).collect();
        let l: Vec<f64> = r.iter().map(|&ri| ri - gen.uniform_in(0.1, 0.9)).collect();
        let planner = PlannerState::with_reference(cfg, r)?;
        let w = planner.hv_sensitivities(&l)?;
        for j in 0..k {
            let mut up = l.clone();
            let mut down = l.clone();
            up[j] += step;
            down[j] -= step;
            let fd =
                (planner.log_hypervolume(&up)? - planner.log_hypervolume(&down)?) / (2.0 * step);
            // w approximates the negative gradient of phi.
            worst_fd = worst_fd.max((w[j] + fd).abs());
        }
    }
    Ok((
        strict_ok == PAIRS && worst_fd <= 1e-4,
        format!(
            "{strict_ok}/{PAIRS} dominated pairs strictly ordered; \
max |w + dphi/dl| = {worst_fd:.3e} (tol 1e-4, step 1e-6)"
        ),
    ))
}

/// The planner's normalized allocation is the unique maximizer of the
/// priority-weighted log utility over the simplex.
fn proportional_fairness() -> Result<(bool, String)> {
    let mut gen = StreamRng::new(8, Stream::Testbed);
    let cfg = PlannerConfig { f_min: 0.0, ..Default::default() };
    let gamma = cfg.gamma;
    let mut wins = 0u64;
    let mut impl_dev: f64 = 0.0;
    let mut min_gap = f64::INFINITY;
    const TRIALS: u64 = 100;
    for _ in 0..TRIALS {
        let k = 2 + gen.index(5);
        let w: Vec<f64> = (0..k).map(|_| gen.uniform_in(0.1, 10.0)).collect();
        let d: Vec<f64> = (0..k).map(|_| gen.uniform()).collect();
        let mut planner = PlannerState::with_reference(cfg, vec![2.0; k])?;
        let f_star = planner.plan_allocation(&w, &d)?.to_vec();
        let a: Vec<f64> = w.iter().zip(&d).map(|(&wi, &di)| wi / (1.0 + gamma * di)).collect();
        let total: f64 = a.iter().sum();
        for j in 0..k {
            impl_dev = impl_dev.max((f_star[j] - a[j] / total).abs());
        }
        let utility =
            |f: &[f64]| a.iter().zip(f).map(|(&ai, &fi)| ai * fi.ln()).sum::<f64>();
        let u_star = utility(&f_star);
        let mut best_other = f64::NEG_INFINITY;
        for _ in 0..1000 {
            best_other = best_other.max(utility(&gen.simplex(k)));
        }
        if u_star > best_other {
            wins += 1;
        }
        min_gap = min_gap.min(u_star - best_other);
    }
    Ok((
        wins == TRIALS && impl_dev <= 1e-12,
        format!(
            "{wins}/{TRIALS} priority vectors won against 1000 interior points each \
(min utility gap {min_gap:.3e}); allocation matches a/sum(a) within {impl_dev:.3e}"
        ),
    ))
}

/// The epsilon floor guarantees a selection probability of at least
/// eps/K, which bounds drought tails geometrically and the expected
/// wait by K/eps.
fn exploration_drought() -> Result<(bool, String)> {
    const K: usize = 5;
    let cfg = ControllerConfig { eps_explore: 0.1, ..Default::default() };
    let nu = vec![0.0, 0.0, 0.0, 0.0, -100.0];
    let p = selection_probabilities(&nu, &cfg);
    let floor = cfg.eps_explore / K as f64;
    let floor_ok = p.iter().all(|&x| x >= floor);

    const TRIALS: usize = 100_000;
    let mut rng = StreamRng::new(2, Stream::Policy);
    let mut waits: Vec<u64> = Vec::with_capacity(TRIALS);
    for _ in 0..TRIALS {
        let mut wait = 1u64;
        while sample_task(&nu, &cfg, &mut rng).0 != K - 1 {
            wait += 1;
            if wait > 10_000_000 {
                return Ok((false, "suppressed task never sampled".into()));
            }
        }
        waits.push(wait);
    }
    let mean = waits.iter().sum::<u64>() as f64 / TRIALS as f64;
    let mut tail_ok = true;
    let mut worst_tail: f64 = 0.0;
    for s in 0..=50u64 {
        let empirical = waits.iter().filter(|&&w| w > s).count() as f64 / TRIALS as f64;
        let base = (1.0 - floor).powi(s as i32);
        worst_tail = worst_tail.max(empirical / base);
        if empirical > base * 1.05 {
            tail_ok = false;
        }
    }
    // The true expected wait is K/eps exactly, so the empirical mean
    // sits essentially on the bound; the fixed seed keeps it on the
    // passing side rather than proving strict slack.
    let mean_ok = mean <= 50.0;
    Ok((
        floor_ok && tail_ok && mean_ok,
        format!(
            "min p_k = {:.6} (floor {floor}); max tail ratio {worst_tail:.4} (cap 1.05); \
mean wait {mean:.3} (bound 50) over {TRIALS} trials",
            p.iter().cloned().fold(f64::INFINITY, f64::min)
        ),
    ))
}

/// The integral state respects the clip bound after every update,
/// whatever the deficit stream does.
fn anti_windup() -> Result<(bool, String)> {
    const K: usize = 4;
    let mut gen = StreamRng::new(10, Stream::Testbed);
    let mut violations = 0u64;
    let mut closest: f64 = 0.0;
    for &i_max in &[0.5, 2.0, 10.0] {
        let cfg = ControllerConfig { i_max, ..Default::default() };
        let mut ctrl = ControllerState::new(K);
        for _ in 0..100_000u64 {
            if gen.uniform() < 0.001 {
                ctrl.epoch_reset();
            }
            let f = gen.simplex(K);
            let e = ctrl.compute_deficits(&f)?;
            ctrl.pid_logits(&cfg, &e)?;
            for &i in ctrl.integral() {
                closest = closest.max(i.abs() / i_max);
                if i.abs() > i_max {
                    violations += 1;
                }
            }
            let chosen = gen.index(K);
            ctrl.record_execution(chosen, &e);
        }
    }
    Ok((
        violations == 0,
        format!(
            "{violations} violations over 3 clip levels x 100000 fuzzed blocks; \
max |I|/i_max = {closest:.6}"
        ),
    ))
}

/// Deficit feedback tracks the plan strictly better than memoryless
/// sampling from the same plan sequence.
fn pid_vs_iid() -> Result<(bool, String)> {
    const SEEDS: u64 = 50;
    const M: u64 = 500;
    const K: usize = 4;
    let cfg = ControllerConfig {
        k_p: Gain::Shared(1.0),
        k_i: Gain::Shared(0.1),
        k_d: Gain::Shared(0.0),
        eps_explore: 0.05,
        ..Default::default()
    };
    let run = |policy: PolicyKind, seed: u64| -> Result<f64> {
        let mut fgen = StreamRng::new(1000 + seed, Stream::Testbed);
        let mut pol = StreamRng::new(1000 + seed, Stream::Policy);
        let mut ctrl = ControllerState::new(K);
        let mut f = fgen.simplex(K);
        let mut worst: f64 = 0.0;
        for m in 1..=M {
            if (m - 1) % 5 == 0 {
                f = fgen.simplex(K);
            }
            let e = ctrl.compute_deficits(&f)?;
            let (nu, _) = ctrl.pid_logits(&cfg, &e)?;
            let (chosen, _) = select_task(policy, m, &e, &nu, &f, &cfg, &mut pol);
            ctrl.record_execution(chosen, &e);
            for j in 0..K {
                worst = worst.max((ctrl.counts()[j] as f64 - ctrl.reference()[j]).abs());
            }
        }
        Ok(worst)
    };
    let mut pid = Vec::with_capacity(SEEDS as usize);
    let mut iid = Vec::with_capacity(SEEDS as usize);
    for seed in 0..SEEDS {
        pid.push(run(PolicyKind::Controlg, seed)?);
        iid.push(run(PolicyKind::IidFromPlan, seed)?);
    }
    let pid_med = median_of(&pid);
    let iid_med = median_of(&iid);
    Ok((
        pid_med < iid_med,
        format!(
            "median max-discrepancy over {SEEDS} seeds x {M} blocks: \
feedback {pid_med:.3} vs memoryless {iid_med:.3}"
        ),
    ))
}

/// A task built from low frequencies senses lower spectral demand than
/// one built from high frequencies, at every sensing step until both
/// losses hit the numerical floor.
fn spectral_regimes() -> Result<(bool, String)> {
    let mut cfg = SimConfig::default();
    cfg.run.epochs = 1;
    cfg.run.blocks_per_epoch = 2000;
    cfg.run.seed = 12;
    let out = run_simulation(&cfg)?;
    if out.summary.diverged {
        return Ok((false, "run diverged".into()));
    }
    let mut checks = 0u64;
    let mut violations = 0u64;
    let mut min_sep = f64::INFINITY;
    for rec in &out.records {
        if rec.losses.iter().all(|&l| l < 1e-10) {
            break;
        }
        if let Some(rq) = &rec.rq {
            checks += 1;
            min_sep = min_sep.min(rq[1] - rq[0]);
            if rq[0] >= rq[1] {
                violations += 1;
            }
        }
    }
    Ok((
        violations == 0 && checks >= 10,
        format!(
            "{violations} ordering violations over {checks} sensing steps; \
min demand separation {min_sep:.4}"
        ),
    ))
}

/// One gradient step on task k changes task j's loss by the negative
/// gradient inner product, to first order in the step size.
fn interference_prediction() -> Result<(bool, String)> {
    let mut cfg = SimConfig::default();
    cfg.graph.n = 16;
    cfg.objectives.h = 4;
    cfg.objectives.profiles = vec![SpectralProfile::Flat; 2];
    cfg.objectives.conflict_angle_deg = 180.0;
    cfg.objectives.target_scale = 3.0;
    cfg.run.seed = 13;
    let (_, suite, z0) = build_testbed(&cfg)?;
    let mut z = z0;
    let mut noise = StreamRng::new(13, Stream::Noise);
    let eta = 1e-4;
    let mut violations = 0u64;
    let mut worst_ratio: f64 = 0.0;
    let mut conflicts = 0u64;
    const BLOCKS: usize = 1000;
    for step in 0..BLOCKS {
        let k = step % 2;
        let j = 1 - k;
        let g_k = suite.representation_gradient(k, &z);
        let g_j = suite.representation_gradient(j, &z);
        let before = suite.loss(j, &z);
        block_update(&suite, &mut z, k, 1, eta, &mut noise)?;
        let after = suite.loss(j, &z);
        let measured = after - before;
        let predicted = -eta * frob_dot(&g_j, &g_k);
        if predicted > 0.0 {
            conflicts += 1;
        }
        let err = (measured - predicted).abs();
        let tol = (0.05 * predicted.abs()).max(1e-12);
        worst_ratio = worst_ratio.max(err / tol);
        if err > tol {
            violations += 1;
        }
    }
    Ok((
        violations == 0,
        format!(
            "{violations} misses over {BLOCKS} single-step probes \
({conflicts} with positive predicted interference); worst error at \
{:.2}% of tolerance",
            100.0 * worst_ratio
        ),
    ))
}

/// The same config and seed reproduce byte-identical trace lines and an
/// identical summary, in process (the CLI test covers the binary path).
fn determinism() -> Result<(bool, String)> {
    let mut cfg = SimConfig::default();
    cfg.graph.n = 16;
    cfg.objectives.h = 3;
    cfg.objectives.noise_sigma = 0.01;
    cfg.run.epochs = 2;
    cfg.run.blocks_per_epoch = 30;
    cfg.run.seed = 42;
    let render = |cfg: &SimConfig| -> Result<(Vec<u8>, String)> {
        let out = run_simulation(cfg)?;
        let mut buf = Vec::new();
        let text = config::serialize(cfg);
        trace::write_header(&mut buf, &text)?;
        for rec in &out.records {
            trace::write_record(&mut buf, rec)?;
        }
        let header = TraceHeader { config: text, schema: SCHEMA.to_string() };
        let d = digest(&header, &out.records, "run.jsonl")?;
        Ok((buf, report(&[d])))
    };
    let (bytes_a, csv_a) = render(&cfg)?;
    let (bytes_b, csv_b) = render(&cfg)?;
    let lines = bytes_a.iter().filter(|&&b| b == b'\n').count();
    Ok((
        bytes_a == bytes_b && csv_a == csv_b,
        format!(
            "trace bytes {} ({} lines) and summary CSV {} across repeat runs",
            if bytes_a == bytes_b { "identical" } else { "DIFFER" },
            lines,
            if csv_a == csv_b { "identical" } else { "DIFFER" },
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_complete_and_unique() {
        let names = all_suites();
        assert_eq!(names.len(), 14);
        let mut sorted = names.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len(), "duplicate suite names");
    }

    #[test]
    fn unknown_suite_is_an_error() {
        match run_suite("warp_drive") {
            Err(Error::UnknownSuite(name)) => assert_eq!(name, "warp_drive"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn piecewise_response_hits_knots_and_interpolates() {
        let knots = [1.0, 0.8, 0.5, 0.2, 0.0];
        assert_eq!(piecewise_response(&knots, 0.0), 1.0);
        assert_eq!(piecewise_response(&knots, 1.0), 0.5);
        assert_eq!(piecewise_response(&knots, 2.0), 0.0);
        assert!((piecewise_response(&knots, 0.25) - 0.9).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for i in 0..=40 {
            let v = piecewise_response(&knots, 2.0 * i as f64 / 40.0);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn median_averages_even_lengths() {
        assert_eq!(median_of(&[3.0, 1.0]), 2.0);
        assert_eq!(median_of(&[5.0, 1.0, 3.0]), 3.0);
    }

    #[test]
    fn a_cheap_suite_runs_green() {
        let res = run_suite("dirichlet_equivalence").unwrap();
        assert!(res.passed, "{}", res.details);
        assert!(res.details.contains("tol"));
    }
}
