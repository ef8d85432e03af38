//! Where does a signal live in the graph spectrum?
//!
//! The Rayleigh quotient of the normalized Laplacian answers with one
//! number in [0, 2]: smooth signals score near 0, alternating ones
//! near 2, and a mixture lands at the energy-weighted average of the
//! modes it is built from.
//!
//! Run with `cargo run --example spectral_demand`.

use ndarray::{Array2, Axis};

use controlg::spectral::{
    eig_sym, lowpass_filter_apply, normalized_laplacian, quadform, rayleigh_quotient, ring_graph,
    Signal,
};

fn main() -> controlg::Result<()> {
    let g = ring_graph(16)?;
    let lap = normalized_laplacian(&g);
    let (evals, basis) = eig_sym(&lap)?;
    println!("ring graph: n = {}, edges = {}", g.n(), g.num_edges());
    println!(
        "spectrum runs from {:.6} to {:.6}\n",
        evals[0],
        evals[evals.len() - 1]
    );

    // A single eigenvector pins the quotient to its eigenvalue.
    println!("{:>6} {:>12} {:>12}", "mode", "eigenvalue", "quotient");
    for idx in [0, 5, 10, 15] {
        let h: Signal = basis.column(idx).to_owned().insert_axis(Axis(1));
        let rq = rayleigh_quotient(&g, &h, 1e-12)?;
        println!("{idx:>6} {:>12.6} {:>12.6}", evals[idx], rq);
    }

    // A two-mode mixture averages the eigenvalues by energy: weights
    // 3:1 on modes 2 and 13 give (9 λ_2 + λ_13) / 10.
    let (lo, hi) = (2, 13);
    let mut h = Array2::zeros((g.n(), 1));
    h.scaled_add(3.0, &basis.column(lo).insert_axis(Axis(1)));
    h.scaled_add(1.0, &basis.column(hi).insert_axis(Axis(1)));
    let rq = rayleigh_quotient(&g, &h, 1e-12)?;
    let expected = (9.0 * evals[lo] + evals[hi]) / 10.0;
    println!("\nmix of modes {lo} and {hi}: quotient {rq:.6}, energy average {expected:.6}");

    // The Dirichlet form is the same demand before normalization:
    // a weighted sum of squared differences across edges.
    println!("dirichlet energy of the mix: {:.6}", quadform(&g, &h)?);

    // Low-pass filtering strips the high mode and the quotient drops
    // to the smooth end.
    let filtered = lowpass_filter_apply(&g, &h, |lam| (-4.0 * lam).exp())?;
    let rq_f = rayleigh_quotient(&g, &filtered, 1e-12)?;
    println!("after a heat-kernel filter: quotient {rq_f:.6}");
    Ok(())
}
