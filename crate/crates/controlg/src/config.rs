//! Run configuration: parsing, validation, canonical serialization.
//!
//! The on-disk format is plain sectioned key-value text:
//!
//! ```text
//! # full-line comments only; no inline comments
//! [run]
//! epochs = 2
//! policy = controlg
//! ```
//!
//! Sections are `[graph]`, `[objectives]`, `[run]`, `[difficulty]`,
//! `[planner]`, `[controller]`; every key is optional and falls back to
//! a documented default, so the empty file is a valid config. Unknown
//! sections or keys are rejected with their line number rather than
//! ignored: a typo in a tuning knob must not silently run the default.
//!
//! [`serialize`] emits the fully resolved config (defaults applied) in
//! a fixed order with canonical float formatting; that text is echoed
//! into every trace header, so a trace always carries the exact
//! configuration that produced it. parse → serialize → parse is the
//! identity.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::controller::{ControllerConfig, Gain, PolicyKind};
use crate::error::{Error, Result};
use crate::numfmt::g12;
use crate::planner::PlannerConfig;
use crate::sim::objective::SpectralProfile;
use crate::spectral::EIG_SIZE_CAP;
use crate::state::DifficultyConfig;

/// Graph source for the testbed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    Ring,
    ErdosRenyi,
    Grid,
    File,
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::Ring => "ring",
            Topology::ErdosRenyi => "erdos_renyi",
            Topology::Grid => "grid",
            Topology::File => "file",
        })
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ring" => Ok(Topology::Ring),
            "erdos_renyi" => Ok(Topology::ErdosRenyi),
            "grid" => Ok(Topology::Grid),
            "file" => Ok(Topology::File),
            other => Err(Error::InvalidArgument(format!(
                "unknown topology '{other}' (expected ring, erdos_renyi, grid, file)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphSpec {
    pub n: usize,
    pub topology: Topology,
    /// Edge probability, used only by `erdos_renyi`.
    pub er_p: f64,
    /// Graph file path, used only by `file`.
    pub path: String,
}

impl Default for GraphSpec {
    fn default() -> Self {
        Self {
            n: 24,
            topology: Topology::Ring,
            er_p: 0.15,
            path: String::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveSpec {
    /// Task count K.
    pub k: usize,
    /// Embedding width (columns of Z).
    pub h: usize,
    /// One profile per task; a single entry is repeated K times.
    pub profiles: Vec<SpectralProfile>,
    /// Angle between the base target and every other task's target.
    pub conflict_angle_deg: f64,
    /// Frobenius norm of each target, in units of sqrt(n·h).
    pub target_scale: f64,
    /// Gradient noise scale shared by all tasks.
    pub noise_sigma: f64,
}

impl Default for ObjectiveSpec {
    fn default() -> Self {
        Self {
            k: 2,
            h: 4,
            profiles: vec![SpectralProfile::Lowpass, SpectralProfile::Highpass],
            conflict_angle_deg: 90.0,
            target_scale: 1.0,
            noise_sigma: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub epochs: u64,
    pub blocks_per_epoch: u64,
    /// Optimizer steps per block.
    pub block_size: u64,
    /// Blocks between sensing passes.
    pub sense_period: u64,
    /// Step size.
    pub eta: f64,
    /// Warm-up descent steps per task.
    pub warmup_steps: usize,
    pub policy: PolicyKind,
    pub seed: u64,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            epochs: 2,
            blocks_per_epoch: 200,
            block_size: 2,
            sense_period: 5,
            eta: 0.05,
            warmup_steps: 5,
            policy: PolicyKind::Controlg,
            seed: 0,
        }
    }
}

/// Everything a run needs; a run is a pure function of this plus
/// nothing else.
#[derive(Clone, Debug, Default)]
pub struct SimConfig {
    pub graph: GraphSpec,
    pub objectives: ObjectiveSpec,
    pub run: RunSpec,
    pub difficulty: DifficultyConfig,
    pub planner: PlannerConfig,
    pub controller: ControllerConfig,
}

const SECTIONS: [&str; 6] = [
    "graph",
    "objectives",
    "run",
    "difficulty",
    "planner",
    "controller",
];

/// Raw key-value entries with line numbers, consumed during typed
/// extraction so leftovers can be reported as unknown keys.
struct Raw<'a> {
    origin: &'a str,
    entries: BTreeMap<String, (String, usize)>,
}

impl<'a> Raw<'a> {
    fn scan(text: &str, origin: &'a str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section: Option<&str> = None;
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::ConfigParse {
                path: origin.to_string(),
                line: line_no,
                msg,
            };
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err(format!("unterminated section header '{line}'")))?;
                section = Some(
                    SECTIONS
                        .iter()
                        .find(|s| **s == name)
                        .copied()
                        .ok_or_else(|| err(format!("unknown section [{name}]")))?,
                );
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(err(format!("expected 'key = value', got '{line}'")));
            };
            let Some(section) = section else {
                return Err(err(format!(
                    "key '{}' appears before any [section] header",
                    key.trim()
                )));
            };
            let full = format!("{section}.{}", key.trim());
            if entries
                .insert(full.clone(), (value.trim().to_string(), line_no))
                .is_some()
            {
                return Err(err(format!("duplicate key '{full}'")));
            }
        }
        Ok(Self { origin, entries })
    }

    /// Parses `key` with `FromStr`, or returns `default` when absent.
    fn field<T: FromStr>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        match self.entries.remove(key) {
            None => Ok(default),
            Some((value, line)) => value.parse().map_err(|e: T::Err| Error::ConfigParse {
                path: self.origin.to_string(),
                line,
                msg: format!("{key}: {e}"),
            }),
        }
    }

    /// Comma-separated list field.
    fn list_field<T: FromStr>(&mut self, key: &str, default: Vec<T>) -> Result<Vec<T>>
    where
        T::Err: fmt::Display,
    {
        match self.entries.remove(key) {
            None => Ok(default),
            Some((value, line)) => value
                .split(',')
                .map(|part| {
                    part.trim().parse().map_err(|e: T::Err| Error::ConfigParse {
                        path: self.origin.to_string(),
                        line,
                        msg: format!("{key}: {e}"),
                    })
                })
                .collect(),
        }
    }

    fn gain_field(&mut self, key: &str, default: Gain) -> Result<Gain> {
        let parts = self.list_field::<f64>(key, Vec::new())?;
        Ok(match parts.len() {
            0 => default,
            1 => Gain::Shared(parts[0]),
            _ => Gain::PerTask(parts),
        })
    }

    fn finish(self) -> Result<()> {
        if let Some((key, (_, line))) = self.entries.into_iter().next() {
            return Err(Error::ConfigParse {
                path: self.origin.to_string(),
                line,
                msg: format!("unknown key '{key}'"),
            });
        }
        Ok(())
    }
}

/// Parses config text. `origin` names the source in diagnostics.
pub fn parse_str(text: &str, origin: &str) -> Result<SimConfig> {
    let mut raw = Raw::scan(text, origin)?;
    let d = SimConfig::default();

    let graph = GraphSpec {
        n: raw.field("graph.n", d.graph.n)?,
        topology: raw.field("graph.topology", d.graph.topology)?,
        er_p: raw.field("graph.er_p", d.graph.er_p)?,
        path: raw.field("graph.path", d.graph.path)?,
    };
    let objectives = ObjectiveSpec {
        k: raw.field("objectives.k", d.objectives.k)?,
        h: raw.field("objectives.h", d.objectives.h)?,
        profiles: raw.list_field("objectives.profiles", d.objectives.profiles)?,
        conflict_angle_deg: raw.field(
            "objectives.conflict_angle_deg",
            d.objectives.conflict_angle_deg,
        )?,
        target_scale: raw.field("objectives.target_scale", d.objectives.target_scale)?,
        noise_sigma: raw.field("objectives.noise_sigma", d.objectives.noise_sigma)?,
    };
    let run = RunSpec {
        epochs: raw.field("run.epochs", d.run.epochs)?,
        blocks_per_epoch: raw.field("run.blocks_per_epoch", d.run.blocks_per_epoch)?,
        block_size: raw.field("run.block_size", d.run.block_size)?,
        sense_period: raw.field("run.sense_period", d.run.sense_period)?,
        eta: raw.field("run.eta", d.run.eta)?,
        warmup_steps: raw.field("run.warmup_steps", d.run.warmup_steps)?,
        policy: raw.field("run.policy", d.run.policy)?,
        seed: raw.field("run.seed", d.run.seed)?,
    };
    let difficulty = DifficultyConfig {
        alpha: raw.field("difficulty.alpha", d.difficulty.alpha)?,
        beta: raw.field("difficulty.beta", d.difficulty.beta)?,
        rho: raw.field("difficulty.rho", d.difficulty.rho)?,
        rho_loss: raw.field("difficulty.rho_loss", d.difficulty.rho_loss)?,
        d_min: raw.field("difficulty.d_min", d.difficulty.d_min)?,
        d_max: raw.field("difficulty.d_max", d.difficulty.d_max)?,
        eps_stab: raw.field("difficulty.eps_stab", d.difficulty.eps_stab)?,
    };
    let planner = PlannerConfig {
        delta: raw.field("planner.delta", d.planner.delta)?,
        gamma: raw.field("planner.gamma", d.planner.gamma)?,
        f_min: raw.field("planner.f_min", d.planner.f_min)?,
        eps_stab: raw.field("planner.eps_stab", d.planner.eps_stab)?,
    };
    let controller = ControllerConfig {
        k_p: raw.gain_field("controller.k_p", d.controller.k_p)?,
        k_i: raw.gain_field("controller.k_i", d.controller.k_i)?,
        k_d: raw.gain_field("controller.k_d", d.controller.k_d)?,
        i_max: raw.field("controller.i_max", d.controller.i_max)?,
        tau: raw.field("controller.tau", d.controller.tau)?,
        eps_explore: raw.field("controller.eps_explore", d.controller.eps_explore)?,
    };
    raw.finish()?;

    let mut cfg = SimConfig {
        graph,
        objectives,
        run,
        difficulty,
        planner,
        controller,
    };
    // A single profile stands for all K tasks.
    if cfg.objectives.profiles.len() == 1 && cfg.objectives.k > 1 {
        cfg.objectives.profiles = vec![cfg.objectives.profiles[0]; cfg.objectives.k];
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and parses a config file.
pub fn parse_file(path: impl AsRef<std::path::Path>) -> Result<SimConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_str(&text, &path.display().to_string())
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::ConfigInvalid { key: key.into(), msg });

        match self.graph.topology {
            Topology::Ring => {
                if self.graph.n < 3 {
                    return bad("graph.n", format!("ring needs n >= 3, got {}", self.graph.n));
                }
            }
            Topology::ErdosRenyi => {
                if self.graph.n < 2 {
                    return bad("graph.n", format!("need n >= 2, got {}", self.graph.n));
                }
                if !(self.graph.er_p > 0.0 && self.graph.er_p <= 1.0) {
                    return bad(
                        "graph.er_p",
                        format!("edge probability must lie in (0, 1], got {}", self.graph.er_p),
                    );
                }
            }
            Topology::Grid => {
                let side = (self.graph.n as f64).sqrt().round() as usize;
                if side < 2 || side * side != self.graph.n {
                    return bad(
                        "graph.n",
                        format!("grid needs a perfect square >= 4, got {}", self.graph.n),
                    );
                }
            }
            Topology::File => {
                if self.graph.path.is_empty() {
                    return bad("graph.path", "file topology needs a path".into());
                }
            }
        }
        if self.graph.topology != Topology::File && self.graph.n > EIG_SIZE_CAP {
            return bad(
                "graph.n",
                format!("n = {} exceeds the dense eigensolver cap {EIG_SIZE_CAP}", self.graph.n),
            );
        }

        let o = &self.objectives;
        if o.k == 0 {
            return bad("objectives.k", "need at least one task".into());
        }
        if o.h == 0 {
            return bad("objectives.h", "embedding width must be >= 1".into());
        }
        if o.profiles.len() != o.k {
            return bad(
                "objectives.profiles",
                format!("need 1 or {} profiles, got {}", o.k, o.profiles.len()),
            );
        }
        if !(o.conflict_angle_deg.is_finite() && (0.0..=360.0).contains(&o.conflict_angle_deg)) {
            return bad(
                "objectives.conflict_angle_deg",
                format!("must lie in [0, 360], got {}", o.conflict_angle_deg),
            );
        }
        if !(o.target_scale >= 0.0 && o.target_scale.is_finite()) {
            return bad(
                "objectives.target_scale",
                format!("must be nonnegative and finite, got {}", o.target_scale),
            );
        }
        if !(o.noise_sigma >= 0.0 && o.noise_sigma.is_finite()) {
            return bad(
                "objectives.noise_sigma",
                format!("must be nonnegative and finite, got {}", o.noise_sigma),
            );
        }

        let r = &self.run;
        for (key, v) in [
            ("run.epochs", r.epochs),
            ("run.blocks_per_epoch", r.blocks_per_epoch),
            ("run.block_size", r.block_size),
            ("run.sense_period", r.sense_period),
            ("run.warmup_steps", r.warmup_steps as u64),
        ] {
            if v == 0 {
                return bad(key, "must be at least 1".into());
            }
        }
        if !(r.eta > 0.0 && r.eta.is_finite()) {
            return bad("run.eta", format!("step size must be positive, got {}", r.eta));
        }

        self.difficulty.validate()?;
        self.planner.validate()?;
        if self.planner.f_min * o.k as f64 > 1.0 {
            return bad(
                "planner.f_min",
                format!("floor {} is infeasible for {} tasks", self.planner.f_min, o.k),
            );
        }
        self.controller.validate(o.k)?;
        Ok(())
    }
}

fn gain_text(g: &Gain) -> String {
    match g {
        Gain::Shared(v) => g12(*v),
        Gain::PerTask(vs) => vs.iter().map(|v| g12(*v)).collect::<Vec<_>>().join(","),
    }
}

/// Emits the fully resolved config in canonical order. The output
/// parses back to an equal config and is byte-stable for equal inputs.
pub fn serialize(cfg: &SimConfig) -> String {
    let profiles = cfg
        .objectives
        .profiles
        .iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join(",");
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    line("[graph]".into());
    line(format!("n = {}", cfg.graph.n));
    line(format!("topology = {}", cfg.graph.topology));
    line(format!("er_p = {}", g12(cfg.graph.er_p)));
    if cfg.graph.path.is_empty() {
        line("path =".into());
    } else {
        line(format!("path = {}", cfg.graph.path));
    }
    line(String::new());
    line("[objectives]".into());
    line(format!("k = {}", cfg.objectives.k));
    line(format!("h = {}", cfg.objectives.h));
    line(format!("profiles = {profiles}"));
    line(format!(
        "conflict_angle_deg = {}",
        g12(cfg.objectives.conflict_angle_deg)
    ));
    line(format!("target_scale = {}", g12(cfg.objectives.target_scale)));
    line(format!("noise_sigma = {}", g12(cfg.objectives.noise_sigma)));
    line(String::new());
    line("[run]".into());
    line(format!("epochs = {}", cfg.run.epochs));
    line(format!("blocks_per_epoch = {}", cfg.run.blocks_per_epoch));
    line(format!("block_size = {}", cfg.run.block_size));
    line(format!("sense_period = {}", cfg.run.sense_period));
    line(format!("eta = {}", g12(cfg.run.eta)));
    line(format!("warmup_steps = {}", cfg.run.warmup_steps));
    line(format!("policy = {}", cfg.run.policy));
    line(format!("seed = {}", cfg.run.seed));
    line(String::new());
    line("[difficulty]".into());
    line(format!("alpha = {}", g12(cfg.difficulty.alpha)));
    line(format!("beta = {}", g12(cfg.difficulty.beta)));
    line(format!("rho = {}", g12(cfg.difficulty.rho)));
    line(format!("rho_loss = {}", g12(cfg.difficulty.rho_loss)));
    line(format!("d_min = {}", g12(cfg.difficulty.d_min)));
    line(format!("d_max = {}", g12(cfg.difficulty.d_max)));
    line(format!("eps_stab = {}", g12(cfg.difficulty.eps_stab)));
    line(String::new());
    line("[planner]".into());
    line(format!("delta = {}", g12(cfg.planner.delta)));
    line(format!("gamma = {}", g12(cfg.planner.gamma)));
    line(format!("f_min = {}", g12(cfg.planner.f_min)));
    line(format!("eps_stab = {}", g12(cfg.planner.eps_stab)));
    line(String::new());
    line("[controller]".into());
    line(format!("k_p = {}", gain_text(&cfg.controller.k_p)));
    line(format!("k_i = {}", gain_text(&cfg.controller.k_i)));
    line(format!("k_d = {}", gain_text(&cfg.controller.k_d)));
    line(format!("i_max = {}", g12(cfg.controller.i_max)));
    line(format!("tau = {}", g12(cfg.controller.tau)));
    line(format!("eps_explore = {}", g12(cfg.controller.eps_explore)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eq_configs(a: &SimConfig, b: &SimConfig) {
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.objectives, b.objectives);
        assert_eq!(a.run, b.run);
        assert_eq!(serialize(a), serialize(b));
    }

    #[test]
    fn empty_text_is_the_default_config() {
        let cfg = parse_str("", "test").unwrap();
        eq_configs(&cfg, &SimConfig::default());
        assert_eq!(cfg.objectives.profiles.len(), cfg.objectives.k);
    }

    #[test]
    fn round_trip_is_identity() {
        let text = "\
[graph]
n = 16
topology = grid

[objectives]
k = 3
h = 2
profiles = lowpass,flat,band:0.5:1.5
conflict_angle_deg = 120
noise_sigma = 0.01

[run]
epochs = 1
blocks_per_epoch = 50
policy = max_deficit
seed = 7

[controller]
k_p = 1,2,0.5
";
        let cfg = parse_str(text, "test").unwrap();
        let echoed = serialize(&cfg);
        let again = parse_str(&echoed, "echo").unwrap();
        eq_configs(&cfg, &again);
        assert_eq!(serialize(&again), echoed);
        assert_eq!(cfg.controller.k_p, Gain::PerTask(vec![1.0, 2.0, 0.5]));
    }

    #[test]
    fn single_profile_expands_to_all_tasks() {
        let cfg = parse_str("[objectives]\nk = 4\nprofiles = flat\n", "test").unwrap();
        assert_eq!(cfg.objectives.profiles, vec![SpectralProfile::Flat; 4]);
    }

    #[test]
    fn unknown_keys_and_sections_are_rejected_with_lines() {
        let err = parse_str("[run]\nepochs = 1\nepoks = 2\n", "test").unwrap_err();
        match err {
            Error::ConfigParse { line, ref msg, .. } => {
                assert_eq!(line, 3);
                assert!(msg.contains("epoks"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_str("[turbo]\nx = 1\n", "test").is_err());
        assert!(parse_str("orphan = 1\n", "test").is_err());
        assert!(parse_str("[run]\nseed = 1\nseed = 2\n", "test").is_err());
        assert!(parse_str("[run\nseed = 1\n", "test").is_err());
    }

    #[test]
    fn bad_values_name_key_and_line() {
        let err = parse_str("[run]\neta = fast\n", "test").unwrap_err();
        match err {
            Error::ConfigParse { line, ref msg, .. } => {
                assert_eq!(line, 2);
                assert!(msg.contains("eta"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validation_names_the_violated_field() {
        let err = parse_str("[controller]\nk_p = -1\n", "test").unwrap_err();
        match err {
            Error::ConfigInvalid { ref key, ref msg } => {
                assert_eq!(key, "controller.k_p");
                assert!(msg.contains("nonnegative"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
        for bad in [
            "[run]\neta = 0\n",
            "[run]\nepochs = 0\n",
            "[graph]\nn = 2\n",
            "[graph]\ntopology = grid\nn = 10\n",
            "[graph]\ntopology = file\n",
            "[graph]\ntopology = erdos_renyi\ner_p = 0\n",
            "[objectives]\nk = 0\n",
            "[objectives]\nk = 3\nprofiles = flat,flat\n",
            "[objectives]\nconflict_angle_deg = 400\n",
            "[planner]\nf_min = 0.6\n",
            "[difficulty]\nrho = 2\n",
        ] {
            assert!(parse_str(bad, "test").is_err(), "accepted: {bad}");
        }
    }

    #[test]
    fn comments_and_blank_lines_are_ignored(){
        let cfg = parse_str("\n# preamble\n[run]\n\n# gap\nseed = 9\n", "test").unwrap();
        assert_eq!(cfg.run.seed, 9);
    }

    #[test]
    fn oversized_graph_is_rejected() {
        let err = parse_str("[graph]\ntopology = erdos_renyi\nn = 600\n", "test").unwrap_err();
        match err {
            Error::ConfigInvalid { ref key, .. } => assert_eq!(key, "graph.n"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
