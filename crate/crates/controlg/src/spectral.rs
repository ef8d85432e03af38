//! Graph spectra and signal smoothness.
//!
//! A weighted undirected graph induces the symmetric normalized Laplacian
//!
//! ```text
//!     L = I - D^{-1/2} A D^{-1/2},        spec(L) ⊂ [0, 2],
//! ```
//!
//! and a node-indexed signal matrix `H` (one row per node) has Dirichlet
//! energy `E(H) = tr(Hᵀ L H)`. The energy measures how rough `H` is along
//! edges; its normalized form, the Rayleigh quotient `E / ‖H‖²`, is a
//! spectral barycenter: low values mean `H` lives on smooth (low-frequency)
//! eigenvectors, values near 2 mean it oscillates across edges.
//!
//! Two computation routes are kept deliberately distinct so they can check
//! each other:
//!
//! | route  | cost      | used by                         |
//! |--------|-----------|---------------------------------|
//! | edge   | `O(m·h)`  | [`quadform`], production sensing |
//! | dense  | `O(n²·h)` | [`normalized_laplacian`] + trace, eigensolver oracles |
//!
//! The dense eigensolver ([`eig_sym`]) is a cyclic Jacobi iteration meant
//! for desk-scale verification (n ≤ 512), not large-scale work.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Node-indexed signal: one row per node, one column per feature channel.
pub type Signal = Array2<f64>;

/// Hard cap for the dense eigensolver.
pub const EIG_SIZE_CAP: usize = 512;

/// Eigensolver stopping threshold on the off-diagonal Frobenius norm,
/// relative to `‖M‖_F`. Leaves two orders of slack under the 1e-9
/// reconstruction contract.
const EIG_OFFDIAG_TOL: f64 = 1e-12;

const EIG_MAX_SWEEPS: usize = 50;

/// Weighted undirected graph without self-loops or isolated nodes.
///
/// The edge list is canonical: sorted by `(i, j)` with `i < j`, one entry
/// per node pair, strictly positive weights. Construction validates
/// everything, so a `Graph` value is always safe to feed to the spectral
/// routines.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    degrees: Vec<f64>,
}

impl Graph {
    /// Builds a graph from undirected edge entries `(i, j, w)`.
    ///
    /// Entries may arrive in any order and orientation; duplicates of the
    /// same node pair accumulate their weights. Zero-weight entries are
    /// dropped. Fails on self-loops, negative weights, out-of-range nodes,
    /// and nodes left with zero degree.
    pub fn from_edges(n: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("graph needs at least one node".into()));
        }
        let mut weights: std::collections::BTreeMap<(usize, usize), f64> =
            std::collections::BTreeMap::new();
        for &(a, b, w) in entries {
            if a >= n || b >= n {
                return Err(Error::NodeOutOfRange { node: a.max(b), n });
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            if w < 0.0 || !w.is_finite() {
                return Err(Error::NegativeWeight { i: a, j: b, weight: w });
            }
            let key = (a.min(b), a.max(b));
            *weights.entry(key).or_insert(0.0) += w;
        }
        let edges: Vec<(usize, usize, f64)> = weights
            .into_iter()
            .filter(|&(_, w)| w > 0.0)
            .map(|((i, j), w)| (i, j, w))
            .collect();
        let mut degrees = vec![0.0; n];
        for &(i, j, w) in &edges {
            degrees[i] += w;
            degrees[j] += w;
        }
        if let Some(k) = degrees.iter().position(|&d| d <= 0.0) {
            return Err(Error::ZeroDegree(k));
        }
        Ok(Self { n, edges, degrees })
    }

    /// Builds a graph from a dense adjacency matrix.
    ///
    /// The matrix is symmetrized as `(A + Aᵀ)/2` first, so mildly
    /// asymmetric numeric input is tolerated. The diagonal must be zero.
    pub fn from_adjacency(a: &Array2<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "adjacency must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let mut entries = Vec::new();
        for i in 0..n {
            if a[[i, i]] != 0.0 {
                return Err(Error::SelfLoop(i));
            }
            for j in (i + 1)..n {
                let w = 0.5 * (a[[i, j]] + a[[j, i]]);
                if w != 0.0 {
                    entries.push((i, j, w));
                }
            }
        }
        Self::from_edges(n, &entries)
    }

    /// Parses the plain-text graph format:
    ///
    /// ```text
    /// n m
    /// i j w      (m lines, 0-indexed, i < j)
    /// ```
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let fail = |line: usize, msg: String| Error::ConfigParse {
            path: path.to_string(),
            line,
            msg,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(idx, l)| (idx + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (first_no, first) = lines
            .next()
            .ok_or_else(|| fail(1, "empty graph file".into()))?;
        let mut head = first.split_whitespace();
        let n: usize = head
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| fail(first_no, "expected node count".into()))?;
        let m: usize = head
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| fail(first_no, "expected edge count".into()))?;
        if head.next().is_some() {
            return Err(fail(first_no, "expected exactly `n m` on the first line".into()));
        }
        let mut entries = Vec::with_capacity(m);
        for _ in 0..m {
            let (line_no, line) = lines
                .next()
                .ok_or_else(|| fail(first_no, format!("expected {m} edge lines")))?;
            let mut toks = line.split_whitespace();
            let i: usize = toks
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| fail(line_no, "expected source node index".into()))?;
            let j: usize = toks
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| fail(line_no, "expected target node index".into()))?;
            let w: f64 = toks
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| fail(line_no, "expected edge weight".into()))?;
            if toks.next().is_some() {
                return Err(fail(line_no, "expected exactly `i j w`".into()));
            }
            if i >= j {
                return Err(fail(line_no, format!("edges must satisfy i < j, got {i} {j}")));
            }
            entries.push((i, j, w));
        }
        if let Some((line_no, _)) = lines.next() {
            return Err(fail(line_no, format!("more than {m} edge lines")));
        }
        Self::from_edges(n, &entries)
    }

    /// Reads and parses a graph file.
    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Serializes to the plain-text graph format.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.edges.len());
        for &(i, j, w) in &self.edges {
            out.push_str(&format!("{i} {j} {w}\n"));
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Canonical edge list, sorted by `(i, j)` with `i < j`.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Weighted degree of node `k`; always positive.
    pub fn degree(&self, k: usize) -> f64 {
        self.degrees[k]
    }
}

/// Dense symmetric normalized Laplacian `I - D^{-1/2} A D^{-1/2}`.
pub fn normalized_laplacian(g: &Graph) -> Array2<f64> {
    let n = g.n();
    let mut l = Array2::eye(n);
    for &(i, j, w) in g.edges() {
        let v = -w / (g.degree(i) * g.degree(j)).sqrt();
        l[[i, j]] = v;
        l[[j, i]] = v;
    }
    l
}

fn check_signal(g: &Graph, h: &Signal) -> Result<()> {
    if h.nrows() != g.n() {
        return Err(Error::DimensionMismatch(format!(
            "signal has {} rows but graph has {} nodes",
            h.nrows(),
            g.n()
        )));
    }
    if h.ncols() == 0 {
        return Err(Error::DimensionMismatch("signal needs at least one column".into()));
    }
    Ok(())
}

/// Dirichlet energy `tr(Hᵀ L H)` in edge-sum form, `O(m·h)`:
///
/// ```text
///     E(H) = Σ_{(i,j) ∈ E} w_ij ‖ h_i/√d_i - h_j/√d_j ‖²
/// ```
///
/// Each undirected edge is summed once, which absorbs the ½ of the ordered
/// double sum. The result is nonnegative by construction and agrees with
/// the dense trace route to rounding.
pub fn quadform(g: &Graph, h: &Signal) -> Result<f64> {
    check_signal(g, h)?;
    let cols = h.ncols();
    let mut energy = 0.0;
    for &(i, j, w) in g.edges() {
        let si = 1.0 / g.degree(i).sqrt();
        let sj = 1.0 / g.degree(j).sqrt();
        let mut diff2 = 0.0;
        for c in 0..cols {
            let d = h[[i, c]] * si - h[[j, c]] * sj;
            diff2 += d * d;
        }
        energy += w * diff2;
    }
    Ok(energy)
}

/// Stabilized Rayleigh quotient `tr(Hᵀ L H) / (‖H‖_F² + eps)`.
///
/// Properties:
/// - always in `[0, 2)` for `eps > 0`;
/// - an all-zero signal maps to 0 (no demand rather than NaN);
/// - equals the eigenvalue-weighted barycenter of the signal's spectral
///   mass as `eps → 0`.
pub fn rayleigh_quotient(g: &Graph, h: &Signal, eps: f64) -> Result<f64> {
    if eps <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "rayleigh_quotient needs eps > 0, got {eps}"
        )));
    }
    let energy = quadform(g, h)?;
    let norm2 = h.iter().map(|x| x * x).sum::<f64>();
    Ok(energy / (norm2 + eps))
}

fn frobenius(m: &Array2<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn offdiag_norm(m: &Array2<f64>) -> f64 {
    let n = m.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[[i, j]] * m[[i, j]];
            }
        }
    }
    s.sqrt()
}

/// Dense symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues ascending, U)` with eigenvectors in the columns
/// of `U`, satisfying `‖M U - U diag(λ)‖_F ≤ 1e-9 ‖M‖_F` and
/// `‖UᵀU - I‖_F ≤ 1e-12 · n`.
///
/// Contract: `M` square of order at most [`EIG_SIZE_CAP`] and symmetric to
/// within `1e-12` (relative to its Frobenius norm). This is a verification
/// oracle and testbed tool; it makes no attempt at large-scale efficiency.
pub fn eig_sym(m: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "eig_sym needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("eig_sym needs a non-empty matrix".into()));
    }
    if n > EIG_SIZE_CAP {
        return Err(Error::MatrixTooLarge { n, cap: EIG_SIZE_CAP });
    }
    let norm = frobenius(m);
    let sym_tol = 1e-12 * norm.max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let delta = (m[[i, j]] - m[[j, i]]).abs();
            if delta > sym_tol {
                return Err(Error::NotSymmetric { i, j, delta });
            }
        }
    }

    let mut a = m.clone();
    // Fold in any sub-tolerance asymmetry so the iteration sees an exactly
    // symmetric matrix.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[[i, j]] + a[[j, i]]);
            a[[i, j]] = v;
            a[[j, i]] = v;
        }
    }
    let mut u = Array2::eye(n);

    if norm == 0.0 {
        return Ok((Array1::zeros(n), u));
    }

    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < EIG_MAX_SWEEPS {
        if offdiag_norm(&a) <= EIG_OFFDIAG_TOL * norm {
            converged = true;
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                // Classic Jacobi rotation annihilating a[p][q].
                let tau = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                a[[p, q]] = 0.0;
                a[[q, p]] = 0.0;
                for k in 0..n {
                    let ukp = u[[k, p]];
                    let ukq = u[[k, q]];
                    u[[k, p]] = c * ukp - s * ukq;
                    u[[k, q]] = s * ukp + c * ukq;
                }
            }
        }
        sweeps += 1;
    }
    if !converged && offdiag_norm(&a) > EIG_OFFDIAG_TOL * norm {
        return Err(Error::EigNoConvergence {
            sweeps,
            offdiag: offdiag_norm(&a),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[[x, x]].partial_cmp(&a[[y, y]]).unwrap());
    let evals = Array1::from_iter(order.iter().map(|&k| a[[k, k]]));
    let mut vecs = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vecs[[k, dst]] = u[[k, src]];
        }
    }
    Ok((evals, vecs))
}

/// Applies a spectral filter `p(L)` to a signal: `U diag(p(λ)) Uᵀ H`.
///
/// The response `p` must be non-increasing on `[0, 2]`; this is checked by
/// sampling a fixed grid and rejecting any rise beyond 1e-12. Dense route
/// through [`eig_sym`]; intended for verification and small testbeds.
pub fn lowpass_filter_apply<F>(g: &Graph, h: &Signal, response: F) -> Result<Signal>
where
    F: Fn(f64) -> f64,
{
    check_signal(g, h)?;
    let grid = 64;
    let mut prev_x = 0.0;
    let mut prev_p = response(0.0);
    for step in 1..=grid {
        let x = 2.0 * step as f64 / grid as f64;
        let p = response(x);
        if !p.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "filter response is not finite at {x}"
            )));
        }
        if p > prev_p + 1e-12 {
            return Err(Error::IncreasingResponse {
                lo: prev_x,
                hi: x,
                p_lo: prev_p,
                p_hi: p,
            });
        }
        prev_x = x;
        prev_p = p;
    }
    let (evals, u) = eig_sym(&normalized_laplacian(g))?;
    let coeffs: Vec<f64> = evals.iter().map(|&l| response(l)).collect();
    // U diag(p) Uᵀ H, evaluated right to left.
    let mut w = u.t().dot(h);
    for (row, &p) in coeffs.iter().enumerate() {
        for c in 0..w.ncols() {
            w[[row, c]] *= p;
        }
    }
    Ok(u.dot(&w))
}

/// Ring graph on `n` nodes with unit weights.
pub fn ring_graph(n: usize) -> Result<Graph> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "ring graph needs n >= 3, got {n}"
        )));
    }
    let entries: Vec<(usize, usize, f64)> =
        (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
    Graph::from_edges(n, &entries)
}

/// Square grid graph on `side × side` nodes with unit weights.
pub fn grid_graph(side: usize) -> Result<Graph> {
    if side < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid graph needs side >= 2, got {side}"
        )));
    }
    let at = |r: usize, c: usize| r * side + c;
    let mut entries = Vec::new();
    for r in 0..side {
        for c in 0..side {
            if c + 1 < side {
                entries.push((at(r, c), at(r, c + 1), 1.0));
            }
            if r + 1 < side {
                entries.push((at(r, c), at(r + 1, c), 1.0));
            }
        }
    }
    Graph::from_edges(side * side, &entries)
}
