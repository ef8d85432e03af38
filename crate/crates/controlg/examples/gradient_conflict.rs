//! How much common descent direction do several tasks share?
//!
//! The min-norm point of the convex hull of the unit task gradients
//! answers: a long mix vector means the tasks agree, a mix near zero
//! means they cancel. The per-task conflict score is the negative part
//! of each raw gradient's alignment with the mix.
//!
//! Run with `cargo run --example gradient_conflict`.

use controlg::mgda::{
    conflict_scores, normalize_gradients, solve_min_norm, GradientSet, DEFAULT_MAX_ITER,
    DEFAULT_TOL,
};

fn fmt(xs: &[f64]) -> String {
    let cells: Vec<String> = xs.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", cells.join(", "))
}

fn report(label: &str, rows: &[Vec<f64>]) -> controlg::Result<()> {
    let g = GradientSet::from_rows(rows)?;
    let sol = solve_min_norm(&normalize_gradients(&g), DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let conf = conflict_scores(&g, &sol.lambda)?;
    println!("{label}");
    println!("  weights        {}", fmt(&sol.lambda));
    println!("  |mix|^2        {:.6}", sol.g_mix_norm_sq);
    println!("  kkt residual   {:.2e}", sol.kkt_residual);
    println!("  conflict       {}\n", fmt(&conf));
    Ok(())
}

fn ray(angle_deg: f64, len: f64) -> Vec<f64> {
    let a = angle_deg.to_radians();
    vec![len * a.cos(), len * a.sin()]
}

fn main() -> controlg::Result<()> {
    // Nearly aligned: the mix stays long and nobody conflicts.
    report("pair 30 degrees apart", &[ray(0.0, 1.0), ray(30.0, 2.0)])?;

    // Orthogonal: the diagonal compromise keeps |mix|^2 = 1/2.
    report("orthogonal pair", &[ray(0.0, 1.0), ray(90.0, 1.0)])?;

    // Head-on: no direction helps both, the mix collapses to zero and
    // both tasks carry positive conflict.
    report("antipodal pair", &[ray(0.0, 1.0), ray(180.0, 3.0)])?;

    // A fan of five tasks spread over a half circle. Only the extreme
    // rays matter; everything in between gets zero weight.
    let fan: Vec<Vec<f64>> = (0..5).map(|i| ray(45.0 * i as f64, 1.0 + i as f64)).collect();
    report("five-task fan over 180 degrees", &fan)?;
    Ok(())
}
