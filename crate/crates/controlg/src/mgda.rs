//! Common-descent analysis for competing gradients.
//!
//! Given per-task gradients `g_1..g_K`, the sensing loop asks for the
//! convex combination of their unit-normalized versions with the smallest
//! norm:
//!
//! ```text
//!     λ* ∈ argmin_{λ ∈ Δ^K} ‖ Σ_k λ_k ĝ_k ‖²,        ĝ_k = g_k / ‖g_k‖.
//! ```
//!
//! The minimizer `g_mix = Σ λ*_k ĝ_k` is either a direction whose negation
//! descends every objective at once, or zero, in which case the gradients
//! hold each other in balance (a stationarity certificate). Optimality is
//! the variational inequality
//!
//! ```text
//!     ⟨ĝ_k, g_mix⟩ ≥ ‖g_mix‖²   for all k,   with equality where λ*_k > 0,
//! ```
//!
//! and the solver's contract is that residual, not a particular iteration
//! scheme. Here: exact enumeration of simplex faces on the Gram form
//! `λᵀQλ` (a bordered KKT solve per support, affordable while `2^K`
//! stays small), falling back to projected gradient descent with fixed
//! step `1/‖Q‖_∞` for larger sets, where plain descent can crawl when
//! the min-norm point sits near zero.
//!
//! The weights are a *sensor*, not an update rule: they feed the
//! interference scores ([`conflict_scores`]) consumed by the difficulty
//! state, and are never used to mix gradients during training.

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};

/// Default KKT residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Default cap on projected-gradient updates.
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Largest active-row count solved by exact face enumeration; the
/// support count doubles per row, so past this the iterative fallback
/// takes over.
const EXACT_SUPPORT_LIMIT: usize = 16;

/// Row norms below this are flagged as zero; normalizing them would
/// amplify noise or overflow.
const ZERO_ROW_TOL: f64 = 1e-150;

/// `K` task gradients, one per row. Row norms are recorded at
/// construction and zero rows are flagged rather than rejected: a zero
/// gradient is a converged objective, not an error.
#[derive(Clone, Debug)]
pub struct GradientSet {
    rows: Array2<f64>,
    norms: Vec<f64>,
    zero: Vec<bool>,
}

impl GradientSet {
    pub fn new(rows: Array2<f64>) -> Result<Self> {
        if rows.nrows() == 0 || rows.ncols() == 0 {
            return Err(Error::DimensionMismatch(
                "gradient set needs at least one task and one coordinate".into(),
            ));
        }
        if rows.iter().any(|x| !x.is_finite()) {
            return Err(Error::NotFinite("gradient set".into()));
        }
        let norms: Vec<f64> = rows
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect();
        let zero: Vec<bool> = norms.iter().map(|&n| n < ZERO_ROW_TOL).collect();
        Ok(Self { rows, norms, zero })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        let d = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch(
                "gradient rows have unequal lengths".into(),
            ));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let arr = Array2::from_shape_vec((k, d), flat)
            .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
        Self::new(arr)
    }

    pub fn k(&self) -> usize {
        self.rows.nrows()
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn row(&self, k: usize) -> ArrayView1<'_, f64> {
        self.rows.row(k)
    }

    /// Row 2-norms as recorded at construction.
    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// Per-row flag: true when the row is numerically zero.
    pub fn zero_flags(&self) -> &[bool] {
        &self.zero
    }
}

/// Solution of the min-norm problem over the simplex.
#[derive(Clone, Debug)]
pub struct MgdaSolution {
    /// Weights over all `K` tasks; zero-flagged rows get weight zero.
    pub lambda: Vec<f64>,
    /// `‖Σ λ_k ĝ_k‖²`; zero (up to `tol`) certifies stationarity.
    pub g_mix_norm_sq: f64,
    /// `max_k (‖g_mix‖² - ⟨ĝ_k, g_mix⟩)₊` over the active rows.
    pub kkt_residual: f64,
    /// Projected-gradient updates performed.
    pub iterations: usize,
}

/// Scales every nonzero row to unit 2-norm; zero rows stay zero and keep
/// their flag. Never fails.
pub fn normalize_gradients(g: &GradientSet) -> GradientSet {
    let mut rows = g.rows.clone();
    for (idx, mut row) in rows.rows_mut().into_iter().enumerate() {
        if !g.zero[idx] {
            let inv = 1.0 / g.norms[idx];
            row.mapv_inplace(|x| x * inv);
        }
    }
    GradientSet::new(rows).expect("normalization preserves validity")
}

/// Euclidean projection onto the probability simplex.
///
/// Sort-and-threshold, `O(K log K)`: the result is `λ_k = max(0, v_k - θ)`
/// for the unique `θ` making the coordinates sum to one.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    assert!(!v.is_empty(), "cannot project an empty vector");
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (idx, &ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (idx + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Weighted mix `Σ λ_k ĝ_k` of a (normalized) gradient set. Test and
/// diagnostic helper; the solver itself never materializes it.
pub fn mix_vector(g_unit: &GradientSet, lambda: &[f64]) -> Vec<f64> {
    let mut mix = vec![0.0; g_unit.dim()];
    for (k, &l) in lambda.iter().enumerate() {
        if l == 0.0 {
            continue;
        }
        for (dst, src) in mix.iter_mut().zip(g_unit.row(k).iter()) {
            *dst += l * src;
        }
    }
    mix
}

/// Gram-form diagnostics at a simplex point: `Qλ`, the objective
/// `λᵀQλ`, the variational-inequality residual, and the active-set
/// equality residual over entries with weight above `10·tol`.
fn gram_residuals(q: &Array2<f64>, lam: &[f64], tol: f64) -> (Vec<f64>, f64, f64, f64) {
    let ka = lam.len();
    let qlam: Vec<f64> = (0..ka)
        .map(|a| (0..ka).map(|b| q[[a, b]] * lam[b]).sum())
        .collect();
    let val: f64 = lam.iter().zip(&qlam).map(|(a, b)| a * b).sum();
    let res_vi = qlam.iter().fold(0.0_f64, |acc, &qk| acc.max(val - qk));
    let res_eq = lam
        .iter()
        .zip(&qlam)
        .filter(|(&l, _)| l > 10.0 * tol)
        .fold(0.0_f64, |acc, (_, &qk)| acc.max((qk - val).abs()));
    (qlam, val, res_vi, res_eq)
}

/// Stationary point of `λᵀQλ` on the affine hull of one simplex face:
/// solves the bordered system `2 Q_S λ = μ 1`, `Σ λ = 1` by Gauss-Jordan
/// elimination with partial pivoting. `None` means the system is
/// singular (linearly dependent rows); some smaller face then carries
/// the same minimizer.
fn solve_face(q: &Array2<f64>, support: &[usize]) -> Option<Vec<f64>> {
    let s = support.len();
    let n = s + 1;
    let mut a = vec![vec![0.0f64; n + 1]; n];
    for (r, &i) in support.iter().enumerate() {
        for (c, &j) in support.iter().enumerate() {
            a[r][c] = 2.0 * q[[i, j]];
        }
        a[r][s] = -1.0;
    }
    for cell in a[n - 1].iter_mut().take(s) {
        *cell = 1.0;
    }
    a[n - 1][n] = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r1, &r2| a[r1][col].abs().partial_cmp(&a[r2][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r == col {
                continue;
            }
            let factor = row[col] / pivot_row[col];
            if factor == 0.0 {
                continue;
            }
            for (cell, &pv) in row.iter_mut().zip(&pivot_row).skip(col) {
                *cell -= factor * pv;
            }
        }
    }
    Some((0..s).map(|r| a[r][n] / a[r][r]).collect())
}

/// Solves the min-norm problem on a unit-normalized gradient set.
///
/// Expects rows from [`normalize_gradients`]: unit norm or zero-flagged.
/// Zero rows are excluded and receive weight zero; if every row is zero
/// the weights default to uniform with a zero mix, trivially optimal.
///
/// Accepts a candidate when both optimality conditions hold: the
/// variational inequality within `tol`, and (so downstream consumers can
/// rely on the active-set characterization) `|⟨ĝ_k, g_mix⟩ − ‖g_mix‖²|`
/// within `5·tol` for every `k` carrying weight above `10·tol`. Up to 16
/// nonzero rows the candidates come from exact face enumeration and
/// `iterations` counts examined faces; beyond that a projected-gradient
/// loop supplies them and `iterations` counts its updates. Returns
/// [`Error::MinNormStalled`] with the best candidate if nothing met the
/// tolerance within `max_iter` fallback updates.
pub fn solve_min_norm(g: &GradientSet, tol: f64, max_iter: usize) -> Result<MgdaSolution> {
    if tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "min-norm tolerance must be positive, got {tol}"
        )));
    }
    let k = g.k();
    for (idx, (&n, &z)) in g.norms.iter().zip(&g.zero).enumerate() {
        if !z && (n - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "row {idx} has norm {n}; solve_min_norm expects unit rows (normalize first)"
            )));
        }
    }
    let active: Vec<usize> = (0..k).filter(|&i| !g.zero[i]).collect();

    if active.is_empty() {
        return Ok(MgdaSolution {
            lambda: vec![1.0 / k as f64; k],
            g_mix_norm_sq: 0.0,
            kkt_residual: 0.0,
            iterations: 0,
        });
    }

    let ka = active.len();
    let mut q = Array2::<f64>::zeros((ka, ka));
    for (a, &i) in active.iter().enumerate() {
        q[[a, a]] = 1.0;
        for (b, &j) in active.iter().enumerate().skip(a + 1) {
            let dot: f64 = g
                .row(i)
                .iter()
                .zip(g.row(j).iter())
                .map(|(x, y)| x * y)
                .sum();
            q[[a, b]] = dot;
            q[[b, a]] = dot;
        }
    }

    // ‖Q‖_∞ bounds the spectral norm of symmetric Q, giving a safe step.
    let lip = (0..ka)
        .map(|a| (0..ka).map(|b| q[[a, b]].abs()).sum::<f64>())
        .fold(1.0_f64, f64::max);
    let step = 1.0 / lip;

    let assemble = |lam_active: &[f64], val: f64, residual: f64, iterations: usize| {
        let mut lambda = vec![0.0; k];
        for (a, &i) in active.iter().enumerate() {
            lambda[i] = lam_active[a];
        }
        MgdaSolution {
            lambda,
            g_mix_norm_sq: val,
            kkt_residual: residual,
            iterations,
        }
    };

    let mut best: Option<(Vec<f64>, f64, f64)> = None; // (lam, val, residual)

    if ka <= EXACT_SUPPORT_LIMIT {
        let mut examined = 0usize;
        for size in 1..=ka {
            for mask in 1u32..(1u32 << ka) {
                if mask.count_ones() as usize != size {
                    continue;
                }
                examined += 1;
                let support: Vec<usize> = (0..ka).filter(|&a| mask >> a & 1 == 1).collect();
                let Some(lam_face) = solve_face(&q, &support) else {
                    continue;
                };
                if lam_face.iter().any(|&l| l < -1e-9) {
                    continue;
                }
                let mut lam = vec![0.0; ka];
                let mut total = 0.0;
                for (&a, &l) in support.iter().zip(&lam_face) {
                    let l = l.max(0.0);
                    lam[a] = l;
                    total += l;
                }
                if !total.is_finite() || total <= 0.0 {
                    continue;
                }
                for l in lam.iter_mut() {
                    *l /= total;
                }
                let (_, val, res_vi, res_eq) = gram_residuals(&q, &lam, tol);
                if best.as_ref().is_none_or(|(_, _, r)| res_vi < *r) {
                    best = Some((lam.clone(), val, res_vi));
                }
                if res_vi <= tol && res_eq <= 5.0 * tol {
                    return Ok(assemble(&lam, val, res_vi, examined));
                }
            }
        }
    }

    let mut lam = vec![1.0 / ka as f64; ka];
    for it in 0..=max_iter {
        let (qlam, val, res_vi, res_eq) = gram_residuals(&q, &lam, tol);
        if best.as_ref().is_none_or(|(_, _, r)| res_vi < *r) {
            best = Some((lam.clone(), val, res_vi));
        }
        if res_vi <= tol && res_eq <= 5.0 * tol {
            return Ok(assemble(&lam, val, res_vi, it));
        }
        if it == max_iter {
            break;
        }
        let moved: Vec<f64> = lam
            .iter()
            .zip(&qlam)
            .map(|(&l, &q)| l - step * q)
            .collect();
        lam = project_simplex(&moved);
    }

    let (best_lam, best_val, best_res) = best.expect("loop ran at least once");
    Err(Error::MinNormStalled {
        residual: best_res,
        iterations: max_iter,
        best: Box::new(assemble(&best_lam, best_val, best_res, max_iter)),
    })
}

/// Per-task interference: how strongly the λ-weighted peers pull against
/// each gradient.
///
/// ```text
///     Conf_k = Σ_{j≠k} λ_j · max(0, -cos(g_k, g_j))
/// ```
///
/// Cosines are taken on the raw gradients (scale-invariant either way);
/// pairs involving a zero gradient contribute nothing. With `λ ∈ Δ^K`
/// every score lands in `[0, 1]`.
pub fn conflict_scores(g_raw: &GradientSet, lambda: &[f64]) -> Result<Vec<f64>> {
    let k = g_raw.k();
    if lambda.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "lambda has length {} but gradient set has {} tasks",
            lambda.len(),
            k
        )));
    }
    let sum: f64 = lambda.iter().sum();
    if lambda.iter().any(|&l| !(-1e-9..=1.0 + 1e-9).contains(&l)) || (sum - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!(
            "lambda must lie on the simplex, got sum {sum}"
        )));
    }
    let mut scores = vec![0.0; k];
    for (a, score) in scores.iter_mut().enumerate() {
        if g_raw.zero[a] {
            continue;
        }
        let mut acc = 0.0;
        for (b, &lb) in lambda.iter().enumerate() {
            if b == a || g_raw.zero[b] {
                continue;
            }
            let cos: f64 = g_raw
                .row(a)
                .iter()
                .zip(g_raw.row(b).iter())
                .map(|(x, y)| x * y)
                .sum::<f64>()
                / (g_raw.norms[a] * g_raw.norms[b]);
            acc += lb * (-cos).max(0.0);
        }
        *score = acc;
    }
    Ok(scores)
}
