//! Difficulty scores in motion.
//!
//! A warm-up pass calibrates per-task loss scales, then each sensing
//! pass fuses normalized spectral demand with interference into an
//! EMA difficulty score, next to an EMA of the normalized losses.
//! Between passes the script descends on the two tasks unevenly, so
//! the neglected task's normalized loss visibly stalls while the
//! favored one melts.
//!
//! Run with `cargo run --example difficulty_tracking`.

use controlg::config::SimConfig;
use controlg::rng::{Stream, StreamRng};
use controlg::sim::engine::{block_update, build_testbed, sense};
use controlg::state::{update_difficulty, update_normalized_loss, warmup_scales};

fn fmt(xs: &[f64]) -> String {
    let cells: Vec<String> = xs.iter().map(|x| format!("{x:7.4}")).collect();
    cells.join(" ")
}

fn main() -> controlg::Result<()> {
    let mut cfg = SimConfig::default();
    cfg.graph.n = 24;
    cfg.objectives.noise_sigma = 0.02;
    cfg.run.seed = 5;

    let (graph, suite, mut z) = build_testbed(&cfg)?;
    let mut noise = StreamRng::new(cfg.run.seed, Stream::Noise);
    let warmup = warmup_scales(
        &suite,
        &z,
        cfg.run.warmup_steps,
        cfg.run.eta,
        &cfg.difficulty,
        &mut noise,
    )?;
    let mut state = warmup.state;
    println!("warm-up loss scales: {}", fmt(state.scales().expect("calibrated")));
    println!(
        "\n{:>5}  {:<17} {:<17} {:<17} {:<17}",
        "pass", "loss", "normalized ema", "spectral demand", "difficulty"
    );

    for pass in 1..=10 {
        let reading = sense(&graph, &suite, &z, cfg.difficulty.eps_stab)?;
        update_difficulty(&mut state, &cfg.difficulty, &reading.rq, &reading.conf)?;
        update_normalized_loss(&mut state, &cfg.difficulty, &reading.losses)?;
        println!(
            "{pass:>5}  {} {} {} {}",
            fmt(&reading.losses),
            fmt(&state.l_tilde),
            fmt(&reading.rq),
            fmt(&state.d)
        );
        // Task 0 gets four times the optimization budget of task 1.
        for i in 0..10 {
            let task = usize::from(i % 5 == 4);
            block_update(&suite, &mut z, task, 2, cfg.run.eta, &mut noise)?;
        }
    }
    println!("\ntask 1 was starved: its normalized loss and difficulty stay up.");
    Ok(())
}
