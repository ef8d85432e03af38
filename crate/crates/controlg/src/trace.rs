//! Trace emission and aggregation.
//!
//! A trace file is JSONL: one header line carrying the schema tag and
//! the fully resolved config text, then one record per executed block.
//! Lines are canonical JSON (alphabetical keys, floats at 12
//! significant digits, no whitespace), so identical runs produce
//! byte-identical files on any platform. That makes `diff` a
//! sufficient reproducibility check.
//!
//! Readers get line-numbered errors, and [`digest`] recomputes the
//! controller's reference counts from the recorded plans, so a trace
//! can be audited without trusting the process that wrote it.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::config;
use crate::error::{Error, Result};
use crate::numfmt::g12;

/// Schema tag; bump when the record layout changes.
pub const SCHEMA: &str = "controlg-trace-v1";

/// First line of every trace file.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceHeader {
    /// Canonical config text (see [`config::serialize`]).
    pub config: String,
    pub schema: String,
}

/// One executed block. `rq`, `conf`, `lambda_star`, and `phi` are
/// present exactly on sensing blocks.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRecord {
    /// Epoch index, 1-based.
    pub epoch: u64,
    /// Block index within the epoch, 1-based.
    pub block: u64,
    pub chosen_task: usize,
    pub seed: u64,
    /// Full-graph losses for every task, measured after this block's
    /// updates.
    pub losses: Vec<f64>,
    /// Normalized loss estimates.
    pub l_tilde: Vec<f64>,
    /// Difficulty scores.
    pub d: Vec<f64>,
    /// Active allocation plan.
    pub f: Vec<f64>,
    /// Pre-decision deficits.
    pub e: Vec<f64>,
    /// Integral state after this block's clip.
    pub i: Vec<f64>,
    /// PID logits.
    pub nu: Vec<f64>,
    /// Selection distribution actually sampled (one-hot for
    /// deterministic policies).
    pub p: Vec<f64>,
    /// Within-epoch execution counts after this block.
    pub n: Vec<u64>,
    #[serde(default)]
    pub rq: Option<Vec<f64>>,
    #[serde(default)]
    pub conf: Option<Vec<f64>>,
    #[serde(default)]
    pub lambda_star: Option<Vec<f64>>,
    #[serde(default)]
    pub phi: Option<f64>,
}

fn push_f64_array(buf: &mut String, xs: &[f64]) {
    buf.push('[');
    for (idx, x) in xs.iter().enumerate() {
        if idx > 0 {
            buf.push(',');
        }
        buf.push_str(&g12(*x));
    }
    buf.push(']');
}

fn push_u64_array(buf: &mut String, xs: &[u64]) {
    buf.push('[');
    for (idx, x) in xs.iter().enumerate() {
        if idx > 0 {
            buf.push(',');
        }
        let _ = write!(buf, "{x}");
    }
    buf.push(']');
}

fn push_json_string(buf: &mut String, s: &str) {
    buf.push('"');
    for ch in s.chars() {
        match ch {
            '"' => buf.push_str("\\\""),
            '\\' => buf.push_str("\\\\"),
            '\n' => buf.push_str("\\n"),
            '\r' => buf.push_str("\\r"),
            '\t' => buf.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(buf, "\\u{:04x}", c as u32);
            }
            c => buf.push(c),
        }
    }
    buf.push('"');
}

fn validate_record(rec: &TraceRecord) -> Result<()> {
    let k = rec.losses.len();
    let arg = |msg: String| Err(Error::InvalidArgument(msg));
    if k == 0 {
        return arg("trace record has no tasks".into());
    }
    if rec.epoch == 0 || rec.block == 0 {
        return arg("epoch and block are 1-based".into());
    }
    if rec.chosen_task >= k {
        return arg(format!("chosen_task {} out of range for {k} tasks", rec.chosen_task));
    }
    for (name, v) in [
        ("l_tilde", &rec.l_tilde),
        ("d", &rec.d),
        ("f", &rec.f),
        ("e", &rec.e),
        ("i", &rec.i),
        ("nu", &rec.nu),
        ("p", &rec.p),
    ] {
        if v.len() != k {
            return arg(format!("field {name} has length {} but losses has {k}", v.len()));
        }
    }
    if rec.n.len() != k {
        return arg(format!("field n has length {} but losses has {k}", rec.n.len()));
    }
    for (name, v) in [
        ("losses", &rec.losses),
        ("l_tilde", &rec.l_tilde),
        ("d", &rec.d),
        ("f", &rec.f),
        ("e", &rec.e),
        ("i", &rec.i),
        ("nu", &rec.nu),
        ("p", &rec.p),
    ] {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NotFinite(format!("trace field {name}")));
        }
    }
    let p_sum: f64 = rec.p.iter().sum();
    if rec.p.iter().any(|&x| !(0.0..=1.0 + 1e-12).contains(&x)) || (p_sum - 1.0).abs() > 1e-9 {
        return arg(format!("p is not a probability vector (sum {p_sum})"));
    }
    // Counts account for every block of the epoch so far.
    let n_sum: u64 = rec.n.iter().sum();
    if n_sum != rec.block {
        return arg(format!("counts sum to {n_sum} but block index is {}", rec.block));
    }
    let sensing_fields =
        [rec.rq.is_some(), rec.conf.is_some(), rec.lambda_star.is_some(), rec.phi.is_some()];
    if sensing_fields.iter().any(|&x| x != sensing_fields[0]) {
        return arg("sensing fields must be all present or all absent".into());
    }
    for (name, v) in [("rq", &rec.rq), ("conf", &rec.conf), ("lambda_star", &rec.lambda_star)] {
        if let Some(v) = v {
            if v.len() != k {
                return arg(format!("field {name} has length {} but losses has {k}", v.len()));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NotFinite(format!("trace field {name}")));
            }
        }
    }
    if rec.phi.is_some_and(|x| !x.is_finite()) {
        return Err(Error::NotFinite("trace field phi".into()));
    }
    Ok(())
}

/// Renders a record as one canonical JSON line (no trailing newline).
fn record_line(rec: &TraceRecord) -> Result<String> {
    validate_record(rec)?;
    let mut s = String::with_capacity(256);
    s.push_str("{\"block\":");
    let _ = write!(s, "{}", rec.block);
    s.push_str(",\"chosen_task\":");
    let _ = write!(s, "{}", rec.chosen_task);
    if let Some(conf) = &rec.conf {
        s.push_str(",\"conf\":");
        push_f64_array(&mut s, conf);
    }
    s.push_str(",\"d\":");
    push_f64_array(&mut s, &rec.d);
    s.push_str(",\"e\":");
    push_f64_array(&mut s, &rec.e);
    s.push_str(",\"epoch\":");
    let _ = write!(s, "{}", rec.epoch);
    s.push_str(",\"f\":");
    push_f64_array(&mut s, &rec.f);
    s.push_str(",\"i\":");
    push_f64_array(&mut s, &rec.i);
    s.push_str(",\"l_tilde\":");
    push_f64_array(&mut s, &rec.l_tilde);
    if let Some(lambda) = &rec.lambda_star {
        s.push_str(",\"lambda_star\":");
        push_f64_array(&mut s, lambda);
    }
    s.push_str(",\"losses\":");
    push_f64_array(&mut s, &rec.losses);
    s.push_str(",\"n\":");
    push_u64_array(&mut s, &rec.n);
    s.push_str(",\"nu\":");
    push_f64_array(&mut s, &rec.nu);
    s.push_str(",\"p\":");
    push_f64_array(&mut s, &rec.p);
    if let Some(phi) = rec.phi {
        s.push_str(",\"phi\":");
        s.push_str(&g12(phi));
    }
    if let Some(rq) = &rec.rq {
        s.push_str(",\"rq\":");
        push_f64_array(&mut s, rq);
    }
    s.push_str(",\"seed\":");
    let _ = write!(s, "{}", rec.seed);
    s.push('}');
    Ok(s)
}

/// Writes the header line for a new trace.
pub fn write_header(out: &mut impl Write, config_text: &str) -> Result<()> {
    let mut s = String::with_capacity(config_text.len() + 64);
    s.push_str("{\"config\":");
    push_json_string(&mut s, config_text);
    s.push_str(",\"schema\":");
    push_json_string(&mut s, SCHEMA);
    s.push('}');
    out.write_all(s.as_bytes())?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Validates and writes one record line.
pub fn write_record(out: &mut impl Write, rec: &TraceRecord) -> Result<()> {
    let line = record_line(rec)?;
    out.write_all(line.as_bytes())?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Reads a whole trace file, validating every line.
pub fn read_trace(path: &Path) -> Result<(TraceHeader, Vec<TraceRecord>)> {
    let shown = path.display().to_string();
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut header: Option<TraceHeader> = None;
    let mut records = Vec::new();
    let mut prev: Option<(u64, u64)> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let fail = |msg: String| Error::TraceParse { path: shown.clone(), line: line_no, msg };
        if header.is_none() {
            let h: TraceHeader =
                serde_json::from_str(&line).map_err(|e| fail(e.to_string()))?;
            if h.schema != SCHEMA {
                return Err(fail(format!("schema '{}' is not '{SCHEMA}'", h.schema)));
            }
            header = Some(h);
            continue;
        }
        let rec: TraceRecord = serde_json::from_str(&line).map_err(|e| fail(e.to_string()))?;
        validate_record(&rec).map_err(|e| fail(e.to_string()))?;
        let key = (rec.epoch, rec.block);
        if prev.is_some_and(|p| p >= key) {
            return Err(fail(format!("(epoch, block) not increasing at {key:?}")));
        }
        prev = Some(key);
        records.push(rec);
    }
    let header = header.ok_or_else(|| Error::TraceParse {
        path: shown,
        line: 1,
        msg: "empty file; expected a header line".into(),
    })?;
    Ok((header, records))
}

/// Per-run facts recomputed from a trace, independent of the writer.
#[derive(Clone, Debug)]
pub struct RunDigest {
    pub file: String,
    pub policy: String,
    pub seed: u64,
    pub blocks: u64,
    /// True when the trace is shorter than the config promised.
    pub diverged: bool,
    pub final_losses: Vec<f64>,
    /// Whole-run selection counts per task.
    pub counts: Vec<u64>,
    /// max over blocks of max_k |N_k - N_ref_k|, with N_ref rebuilt
    /// from the recorded plans.
    pub max_abs_discrepancy: f64,
    /// Longest stretch of consecutive blocks without a selection, per
    /// task, counting leading and trailing stretches.
    pub drought_max_gap: Vec<u64>,
}

/// Summarizes one parsed trace. `file` is carried through verbatim.
pub fn digest(header: &TraceHeader, records: &[TraceRecord], file: &str) -> Result<RunDigest> {
    let cfg = config::parse_str(&header.config, "trace header")?;
    let k = cfg.objectives.k;
    let expected = cfg.run.epochs * cfg.run.blocks_per_epoch;

    let mut counts = vec![0u64; k];
    let mut max_disc = 0.0f64;
    let mut n_ref = vec![0.0f64; k];
    let mut current_epoch = 0;
    let mut last_seen = vec![0u64; k];
    let mut max_gap = vec![0u64; k];
    for (idx, rec) in records.iter().enumerate() {
        if rec.losses.len() != k {
            return Err(Error::DimensionMismatch(format!(
                "record has {} tasks but config says {k}",
                rec.losses.len()
            )));
        }
        if rec.epoch != current_epoch {
            current_epoch = rec.epoch;
            n_ref.iter_mut().for_each(|x| *x = 0.0);
        }
        let t = idx as u64 + 1;
        counts[rec.chosen_task] += 1;
        let gap = t - last_seen[rec.chosen_task] - 1;
        max_gap[rec.chosen_task] = max_gap[rec.chosen_task].max(gap);
        last_seen[rec.chosen_task] = t;
        for ((nr, &fj), &nj) in n_ref.iter_mut().zip(&rec.f).zip(&rec.n) {
            *nr += fj;
            max_disc = max_disc.max((nj as f64 - *nr).abs());
        }
    }
    let total = records.len() as u64;
    for j in 0..k {
        max_gap[j] = max_gap[j].max(total - last_seen[j]);
    }
    Ok(RunDigest {
        file: file.to_string(),
        policy: cfg.run.policy.to_string(),
        seed: cfg.run.seed,
        blocks: total,
        diverged: total < expected,
        final_losses: records.last().map(|r| r.losses.clone()).unwrap_or_default(),
        counts,
        max_abs_discrepancy: max_disc,
        drought_max_gap: max_gap,
    })
}

const CSV_HEADER: &str = "kind,policy,seed,file,blocks,diverged,final_losses,counts,\
max_abs_discrepancy,drought_max_gap";

fn csv_cell(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn join_f64(xs: &[f64]) -> String {
    xs.iter().map(|x| g12(*x)).collect::<Vec<_>>().join(";")
}

fn join_u64(xs: &[u64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

/// Linear-interpolation quantile of an unsorted sample.
fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("quantile input must be finite"));
    let pos = q * (v.len() as f64 - 1.0);
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    v[lo] * (1.0 - w) + v[hi] * w
}

fn componentwise(samples: &[&[f64]], q: f64) -> Option<Vec<f64>> {
    let len = samples.first()?.len();
    if samples.iter().any(|s| s.len() != len) {
        return None;
    }
    Some(
        (0..len)
            .map(|j| quantile(&samples.iter().map(|s| s[j]).collect::<Vec<_>>(), q))
            .collect(),
    )
}

fn iqr_of(values: &[f64]) -> f64 {
    quantile(values, 0.75) - quantile(values, 0.25)
}

fn componentwise_iqr(samples: &[&[f64]]) -> Option<Vec<f64>> {
    let hi = componentwise(samples, 0.75)?;
    let lo = componentwise(samples, 0.25)?;
    Some(hi.iter().zip(&lo).map(|(a, b)| a - b).collect())
}

/// Builds the summary CSV: one row per run, then median and IQR rows
/// per policy. The output is a pure function of the digests.
pub fn report(digests: &[RunDigest]) -> String {
    let mut rows = digests.to_vec();
    rows.sort_by(|a, b| {
        (&a.policy, a.seed, &a.file).cmp(&(&b.policy, b.seed, &b.file))
    });
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for d in &rows {
        let cells = [
            "run".to_string(),
            d.policy.clone(),
            d.seed.to_string(),
            d.file.clone(),
            d.blocks.to_string(),
            d.diverged.to_string(),
            join_f64(&d.final_losses),
            join_u64(&d.counts),
            g12(d.max_abs_discrepancy),
            join_u64(&d.drought_max_gap),
        ];
        out.push_str(&cells.iter().map(|c| csv_cell(c)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }

    let mut policies: Vec<&str> = rows.iter().map(|d| d.policy.as_str()).collect();
    policies.dedup();
    for policy in policies {
        let group: Vec<&RunDigest> = rows.iter().filter(|d| d.policy == policy).collect();
        let blocks: Vec<f64> = group.iter().map(|d| d.blocks as f64).collect();
        let diverged: Vec<f64> =
            group.iter().map(|d| if d.diverged { 1.0 } else { 0.0 }).collect();
        let disc: Vec<f64> = group.iter().map(|d| d.max_abs_discrepancy).collect();
        let losses: Vec<&[f64]> = group.iter().map(|d| d.final_losses.as_slice()).collect();
        let counts: Vec<Vec<f64>> = group
            .iter()
            .map(|d| d.counts.iter().map(|&c| c as f64).collect())
            .collect();
        let counts_ref: Vec<&[f64]> = counts.iter().map(|v| v.as_slice()).collect();
        let gaps: Vec<Vec<f64>> = group
            .iter()
            .map(|d| d.drought_max_gap.iter().map(|&c| c as f64).collect())
            .collect();
        let gaps_ref: Vec<&[f64]> = gaps.iter().map(|v| v.as_slice()).collect();

        let vec_cell = |v: Option<Vec<f64>>| v.map(|v| join_f64(&v)).unwrap_or_default();
        for (kind, q) in [("median", 0.5), ("iqr", f64::NAN)] {
            let (blocks_s, div_s, disc_s, losses_s, counts_s, gaps_s) = if kind == "median" {
                (
                    g12(quantile(&blocks, q)),
                    g12(quantile(&diverged, q)),
                    g12(quantile(&disc, q)),
                    vec_cell(componentwise(&losses, q)),
                    vec_cell(componentwise(&counts_ref, q)),
                    vec_cell(componentwise(&gaps_ref, q)),
                )
            } else {
                (
                    g12(iqr_of(&blocks)),
                    g12(iqr_of(&diverged)),
                    g12(iqr_of(&disc)),
                    vec_cell(componentwise_iqr(&losses)),
                    vec_cell(componentwise_iqr(&counts_ref)),
                    vec_cell(componentwise_iqr(&gaps_ref)),
                )
            };
            let cells = [
                kind.to_string(),
                policy.to_string(),
                String::new(),
                String::new(),
                blocks_s,
                div_s,
                losses_s,
                counts_s,
                disc_s,
                gaps_s,
            ];
            out.push_str(&cells.iter().map(|c| csv_cell(c)).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
    }
    out
}

/// Digests every `*.jsonl` file in a directory (sorted by name) and
/// returns the summary CSV.
pub fn report_dir(dir: &Path) -> Result<String> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
        .collect();
    paths.sort();
    let mut digests = Vec::with_capacity(paths.len());
    for path in &paths {
        let (header, records) = read_trace(path)?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        digests.push(digest(&header, &records, &name)?);
    }
    Ok(report(&digests))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_record(epoch: u64, block: u64, chosen: usize, sensing: bool) -> TraceRecord {
        let mut n = vec![0u64; 2];
        n[chosen] = block;
        TraceRecord {
            epoch,
            block,
            chosen_task: chosen,
            seed: 7,
            losses: vec![0.25, 1.5e-3],
            l_tilde: vec![0.5, 0.125],
            d: vec![0.0, 1.0],
            f: vec![0.375, 0.625],
            e: vec![0.375, 0.625],
            i: vec![0.1, -0.1],
            nu: vec![0.385, 0.615],
            p: vec![0.4, 0.6],
            n,
            rq: sensing.then(|| vec![0.2, 1.8]),
            conf: sensing.then(|| vec![0.0, 0.0]),
            lambda_star: sensing.then(|| vec![0.5, 0.5]),
            phi: sensing.then_some(-1.25),
        }
    }

    #[test]
    fn record_lines_are_canonical_and_ordered() {
        let rec = sample_record(1, 1, 0, true);
        let line = record_line(&rec).unwrap();
        assert_eq!(line, record_line(&rec).unwrap());
        let keys = [
            "\"block\"", "\"chosen_task\"", "\"conf\"", "\"d\"", "\"e\"", "\"epoch\"", "\"f\"",
            "\"i\"", "\"l_tilde\"", "\"lambda_star\"", "\"losses\"", "\"n\"", "\"nu\"", "\"p\"",
            "\"phi\"", "\"rq\"", "\"seed\"",
        ];
        let mut pos = 0;
        for key in keys {
            let at = line.find(key).unwrap_or_else(|| panic!("missing {key}"));
            assert!(at >= pos, "{key} out of order");
            pos = at;
        }
        assert!(!line.contains(' '));
        // Non-sensing records omit the sensing keys entirely.
        let plain = record_line(&sample_record(1, 1, 0, false)).unwrap();
        for key in ["rq", "conf", "lambda_star", "phi"] {
            assert!(!plain.contains(key), "unexpected {key}");
        }
    }

    #[test]
    fn write_then_read_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.jsonl");
        let cfg_text = config::serialize(&config::SimConfig::default());
        let mut file = std::fs::File::create(&path).unwrap();
        write_header(&mut file, &cfg_text).unwrap();
        let recs = vec![
            sample_record(1, 1, 0, true),
            sample_record(1, 2, 1, false),
            sample_record(2, 1, 1, true),
        ];
        for rec in &recs {
            write_record(&mut file, rec).unwrap();
        }
        drop(file);
        let (header, read) = read_trace(&path).unwrap();
        assert_eq!(header.schema, SCHEMA);
        assert_eq!(header.config, cfg_text);
        assert_eq!(read, recs);
    }

    #[test]
    fn invalid_records_are_rejected_before_write() {
        let mut rec = sample_record(1, 1, 0, false);
        rec.losses[0] = f64::NAN;
        assert!(matches!(record_line(&rec), Err(Error::NotFinite(_))));

        let mut rec = sample_record(1, 1, 0, false);
        rec.p = vec![0.7, 0.7];
        assert!(record_line(&rec).is_err());

        let mut rec = sample_record(1, 1, 0, false);
        rec.e.pop();
        assert!(record_line(&rec).is_err());

        let mut rec = sample_record(1, 1, 0, false);
        rec.n = vec![5, 5];
        assert!(record_line(&rec).is_err(), "counts must sum to the block index");

        let mut rec = sample_record(1, 1, 0, true);
        rec.phi = None;
        assert!(record_line(&rec).is_err(), "sensing fields are all-or-nothing");
    }

    #[test]
    fn reader_reports_file_and_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        let mut file = std::fs::File::create(&path).unwrap();
        write_header(&mut file, "").unwrap();
        writeln!(file, "{{\"block\":oops").unwrap();
        drop(file);
        match read_trace(&path).unwrap_err() {
            Error::TraceParse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }

        let path2 = dir.path().join("order.jsonl");
        let mut file = std::fs::File::create(&path2).unwrap();
        write_header(&mut file, "").unwrap();
        write_record(&mut file, &sample_record(1, 2, 0, false)).unwrap();
        write_record(&mut file, &sample_record(1, 1, 0, false)).unwrap();
        drop(file);
        assert!(read_trace(&path2).is_err());
    }

    fn marching_records(epochs: u64, blocks: u64) -> (TraceHeader, Vec<TraceRecord>) {
        // K=2, constant plan (0.5, 0.5), alternating selection.
        let mut cfg = config::SimConfig::default();
        cfg.run.epochs = epochs;
        cfg.run.blocks_per_epoch = blocks;
        let header =
            TraceHeader { config: config::serialize(&cfg), schema: SCHEMA.to_string() };
        let mut records = Vec::new();
        for epoch in 1..=epochs {
            let mut n = vec![0u64; 2];
            for block in 1..=blocks {
                let chosen = ((block + 1) % 2) as usize;
                n[chosen] += 1;
                records.push(TraceRecord {
                    epoch,
                    block,
                    chosen_task: chosen,
                    seed: 0,
                    losses: vec![1.0, 2.0],
                    l_tilde: vec![1.0, 1.0],
                    d: vec![0.0, 0.0],
                    f: vec![0.5, 0.5],
                    e: vec![0.5, -0.5],
                    i: vec![0.0, 0.0],
                    nu: vec![0.0, 0.0],
                    p: vec![0.5, 0.5],
                    n: n.clone(),
                    rq: None,
                    conf: None,
                    lambda_star: None,
                    phi: None,
                });
            }
        }
        (header, records)
    }

    #[test]
    fn digest_recomputes_counts_discrepancy_and_gaps() {
        let (header, records) = marching_records(2, 4);
        let d = digest(&header, &records, "run.jsonl").unwrap();
        assert_eq!(d.blocks, 8);
        assert!(!d.diverged);
        assert_eq!(d.counts, vec![4, 4]);
        assert_eq!(d.final_losses, vec![1.0, 2.0]);
        // Alternation against a constant half-half plan stays within
        // half a block of the reference.
        assert!((d.max_abs_discrepancy - 0.5).abs() < 1e-12);
        assert_eq!(d.drought_max_gap, vec![1, 1]);

        let (header, mut records) = marching_records(2, 4);
        records.truncate(5);
        let d = digest(&header, &records, "short.jsonl").unwrap();
        assert!(d.diverged);
        assert_eq!(d.blocks, 5);
    }

    #[test]
    fn digest_counts_leading_and_trailing_gaps() {
        let (header, mut records) = marching_records(1, 6);
        for rec in &mut records {
            rec.chosen_task = 0;
            rec.n = vec![rec.block, 0];
        }
        let d = digest(&header, &records, "x.jsonl").unwrap();
        assert_eq!(d.drought_max_gap, vec![0, 6]);
    }

    #[test]
    fn report_is_sorted_with_aggregate_rows() {
        let (header, records) = marching_records(1, 4);
        let mut d1 = digest(&header, &records, "b.jsonl").unwrap();
        let mut d2 = digest(&header, &records, "a.jsonl").unwrap();
        d1.seed = 2;
        d2.seed = 1;
        let csv = report(&[d1, d2]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + 2 + 2);
        assert!(lines[0].starts_with("kind,policy,seed,file"));
        assert!(lines[1].starts_with("run,controlg,1,a.jsonl,4,false,"));
        assert!(lines[2].starts_with("run,controlg,2,b.jsonl,4,false,"));
        assert!(lines[3].starts_with("median,controlg,,,4,0,"));
        assert!(lines[4].starts_with("iqr,controlg,,,0,0,"));
    }

    #[test]
    fn empty_report_is_header_only() {
        assert_eq!(report(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn quantiles_interpolate_linearly() {
        assert_eq!(quantile(&[3.0, 1.0, 2.0, 4.0], 0.5), 2.5);
        assert_eq!(quantile(&[1.0], 0.75), 1.0);
        assert_eq!(iqr_of(&[1.0, 2.0, 3.0, 4.0]), 1.5);
    }

    #[test]
    fn csv_quoting_is_minimal() {
        assert_eq!(csv_cell("plain"), "plain");
        assert_eq!(csv_cell("a,b"), "\"a,b\"");
        assert_eq!(csv_cell("say \"hi\""), "\"say \"\"hi\"\"\"");
    }
}
