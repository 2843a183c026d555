//! Finite two-player zero-sum games.
//!
//! The row player maximizes `A(i, j)`, the column player minimizes it. This
//! module holds the exact (noise-free) mathematics: pure saddle points, the
//! four suboptimality gap arrays, the ε-equilibrium predicate used by the
//! elimination learners, and a dense simplex for mixed minimax strategies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Equality tolerance for probability vectors.
pub const PROB_TOL: f64 = 1e-9;
/// Optimality tolerance for the minimax solver.
pub const OPT_TOL: f64 = 1e-7;

/// An action pair `(row, col)`.
pub type Pair = (usize, usize);

/// Read-only access to an `m x l` grid of payoffs.
///
/// Implemented by the true [`PayoffMatrix`] and by the running empirical
/// estimate, so the equilibrium predicates work on either.
pub trait PayoffView {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn payoff(&self, row: usize, col: usize) -> f64;
}

/// The true payoff matrix of the row (maximizing) player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct PayoffMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    m: usize,
    l: usize,
    entries: Vec<f64>,
}

impl TryFrom<MatrixJson> for PayoffMatrix {
    type Error = Error;

    fn try_from(raw: MatrixJson) -> Result<Self> {
        PayoffMatrix::new(raw.m, raw.l, raw.entries)
    }
}

impl From<PayoffMatrix> for MatrixJson {
    fn from(a: PayoffMatrix) -> Self {
        MatrixJson {
            m: a.rows,
            l: a.cols,
            entries: a.entries,
        }
    }
}

impl PayoffMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidMatrix(format!(
                "dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if entries.len() != rows * cols {
            return Err(Error::InvalidMatrix(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidMatrix(format!("non-finite entry {bad}")));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    /// Builds a matrix from nested rows. All rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let l = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != l) {
            return Err(Error::InvalidMatrix("ragged rows".into()));
        }
        Self::new(m, l, rows.concat())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidMatrix(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("matrix serialization cannot fail")
    }

    /// Number of row actions `m`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of column actions `l`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of action pairs `N = m * l`.
    pub fn num_pairs(&self) -> usize {
        self.rows * self.cols
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.cols + col]
    }

    pub fn check_index(&self, row: usize, col: usize) -> Result<()> {
        if row >= self.rows || col >= self.cols {
            return Err(Error::IndexOutOfRange {
                row,
                col,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(())
    }

    /// All pairs in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = Pair> + '_ {
        (0..self.rows).flat_map(move |i| (0..self.cols).map(move |j| (i, j)))
    }

    /// A copy with `c` added to every entry.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|x| x + c).collect(),
        }
    }

    /// A copy with every entry multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|x| x * c).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    pub fn min_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Submatrix on the given row and column index lists.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<Self> {
        let mut entries = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows {
            for &j in cols {
                self.check_index(i, j)?;
                entries.push(self.get(i, j));
            }
        }
        Self::new(rows.len(), cols.len(), entries)
    }
}

impl PayoffView for PayoffMatrix {
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }
    fn payoff(&self, row: usize, col: usize) -> f64 {
        self.get(row, col)
    }
}

/// Copies any view into an owned matrix.
pub fn materialize<V: PayoffView + ?Sized>(view: &V) -> Result<PayoffMatrix> {
    let (m, l) = (view.rows(), view.cols());
    let entries = (0..m)
        .flat_map(|i| (0..l).map(move |j| (i, j)))
        .map(|(i, j)| view.payoff(i, j))
        .collect();
    PayoffMatrix::new(m, l, entries)
}

/// A saddle point `(row, col)` and the game value it attains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PureEquilibrium {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

impl PureEquilibrium {
    pub fn pair(&self) -> Pair {
        (self.row, self.col)
    }
}

/// Result of a pure-equilibrium search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureNe {
    /// Lexicographically smallest saddle pair.
    pub equilibrium: PureEquilibrium,
    /// Whether it is the only saddle pair.
    pub unique: bool,
}

/// All saddle pairs of a view, row-major.
///
/// A pair is a saddle iff its entry is the minimum of its row and the maximum
/// of its column.
pub fn saddle_pairs<V: PayoffView + ?Sized>(a: &V) -> Vec<Pair> {
    let (m, l) = (a.rows(), a.cols());
    let row_min: Vec<f64> = (0..m)
        .map(|i| (0..l).map(|j| a.payoff(i, j)).fold(f64::INFINITY, f64::min))
        .collect();
    let col_max: Vec<f64> = (0..l)
        .map(|j| (0..m).map(|i| a.payoff(i, j)).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let mut out = Vec::new();
    for i in 0..m {
        for j in 0..l {
            let v = a.payoff(i, j);
            if v <= row_min[i] && v >= col_max[j] {
                out.push((i, j));
            }
        }
    }
    out
}

/// Finds a pure Nash equilibrium, if any.
pub fn find_pure_ne<V: PayoffView + ?Sized>(a: &V) -> Option<PureNe> {
    let saddles = saddle_pairs(a);
    let &(row, col) = saddles.first()?;
    Some(PureNe {
        equilibrium: PureEquilibrium {
            row,
            col,
            value: a.payoff(row, col),
        },
        unique: saddles.len() == 1,
    })
}

/// Per-pair suboptimality gaps, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapProfile {
    pub rows: usize,
    pub cols: usize,
    pub delta_max: Vec<f64>,
    pub delta_min: Vec<f64>,
    pub delta: Vec<f64>,
    /// `None` when the game has no pure equilibrium.
    delta_star: Option<Vec<f64>>,
    pub equilibrium: Option<PureEquilibrium>,
}

impl GapProfile {
    fn idx(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn num_pairs(&self) -> usize {
        self.rows * self.cols
    }

    pub fn delta_max(&self, row: usize, col: usize) -> f64 {
        self.delta_max[self.idx(row, col)]
    }

    pub fn delta_min(&self, row: usize, col: usize) -> f64 {
        self.delta_min[self.idx(row, col)]
    }

    pub fn delta(&self, row: usize, col: usize) -> f64 {
        self.delta[self.idx(row, col)]
    }

    pub fn delta_star(&self, row: usize, col: usize) -> Result<f64> {
        let i = self.idx(row, col);
        self.delta_star
            .as_ref()
            .map(|d| d[i])
            .ok_or(Error::NoPureEquilibrium)
    }

    /// Row-major `Δ*` array.
    pub fn delta_star_all(&self) -> Result<&[f64]> {
        self.delta_star.as_deref().ok_or(Error::NoPureEquilibrium)
    }

    pub fn has_pure_ne(&self) -> bool {
        self.delta_star.is_some()
    }

    /// Two-pair family: NE row with payoff `value` and one deviation row at
    /// `value - gap`, against a single column.
    pub fn two_pair(gap: f64) -> Result<Self> {
        let a = PayoffMatrix::new(2, 1, vec![0.0, -gap])?;
        Ok(compute_gaps(&a))
    }
}

/// Computes `Δmax`, `Δmin`, `Δ` and (when a pure NE exists) `Δ*` for every pair.
pub fn compute_gaps(a: &PayoffMatrix) -> GapProfile {
    let (m, l) = (a.rows, a.cols);
    let col_max: Vec<f64> = (0..l)
        .map(|j| (0..m).map(|i| a.get(i, j)).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let row_min: Vec<f64> = (0..m)
        .map(|i| (0..l).map(|j| a.get(i, j)).fold(f64::INFINITY, f64::min))
        .collect();
    let ne = find_pure_ne(a).map(|r| r.equilibrium);

    let mut delta_max = Vec::with_capacity(m * l);
    let mut delta_min = Vec::with_capacity(m * l);
    let mut delta = Vec::with_capacity(m * l);
    for (i, j) in a.pairs() {
        let v = a.get(i, j);
        let dmax = col_max[j] - v;
        let dmin = v - row_min[i];
        delta_max.push(dmax);
        delta_min.push(dmin);
        delta.push(dmax + dmin);
    }
    let delta_star = ne.map(|e| a.entries.iter().map(|v| e.value - v).collect());
    GapProfile {
        rows: m,
        cols: l,
        delta_max,
        delta_min,
        delta,
        delta_star,
        equilibrium: ne,
    }
}

fn check_active(rows: &[usize], cols: &[usize]) -> Result<()> {
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::EmptyActiveSet);
    }
    Ok(())
}

/// Slack of the ε-equilibrium inequalities at `(row, col)`.
///
/// Returns `eps + min(min_i' M(row,col) - M(i',col), min_j' M(row,j') - M(row,col))`
/// over the active rows/columns; the pair is an ε-NE iff this is `>= 0`.
pub fn ne_margin<V: PayoffView + ?Sized>(
    m: &V,
    row: usize,
    col: usize,
    eps: f64,
    active_rows: &[usize],
    active_cols: &[usize],
) -> Result<f64> {
    check_active(active_rows, active_cols)?;
    if row >= m.rows() || col >= m.cols() {
        return Err(Error::IndexOutOfRange {
            row,
            col,
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let v = m.payoff(row, col);
    let best_row = active_rows
        .iter()
        .map(|&i| m.payoff(i, col))
        .fold(f64::NEG_INFINITY, f64::max);
    let best_col = active_cols
        .iter()
        .map(|&j| m.payoff(row, j))
        .fold(f64::INFINITY, f64::min);
    Ok(eps + (v - best_row).min(best_col - v))
}

/// ε-Nash predicate restricted to active rows and columns:
/// `M(i',col) - eps <= M(row,col) <= M(row,j') + eps` for all active `i'`, `j'`.
pub fn eps_ne_satisfied<V: PayoffView + ?Sized>(
    m: &V,
    row: usize,
    col: usize,
    eps: f64,
    active_rows: &[usize],
    active_cols: &[usize],
) -> Result<bool> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be >= 0, got {eps}")));
    }
    check_active(active_rows, active_cols)?;
    if row >= m.rows() || col >= m.cols() {
        return Err(Error::IndexOutOfRange {
            row,
            col,
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let v = m.payoff(row, col);
    let row_ok = active_rows.iter().all(|&i| m.payoff(i, col) - eps <= v);
    let col_ok = active_cols.iter().all(|&j| v <= m.payoff(row, j) + eps);
    Ok(row_ok && col_ok)
}

/// Mixed strategies for both players and the value `p^T A q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedProfile {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub value: f64,
}

impl MixedProfile {
    /// Largest violation of the minimax inequalities on `a`.
    pub fn exploitability(&self, a: &PayoffMatrix) -> f64 {
        let best_row = (0..a.rows)
            .map(|i| (0..a.cols).map(|j| a.get(i, j) * self.q[j]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        let best_col = (0..a.cols)
            .map(|j| (0..a.rows).map(|i| a.get(i, j) * self.p[i]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        (best_row - self.value).max(self.value - best_col)
    }
}

/// Checks that `v` is a probability vector within [`PROB_TOL`].
pub fn check_probability(v: &[f64], what: &str) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidParameter(format!("{what} is empty")));
    }
    if v.iter().any(|x| !x.is_finite() || *x < -PROB_TOL) {
        return Err(Error::InvalidParameter(format!("{what} has a negative entry")));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidParameter(format!("{what} sums to {s}")));
    }
    Ok(())
}

/// Solves the mixed minimax problem of `a` with a dense tableau simplex.
///
/// Entries are shifted to be at least 1, then the column player's program
/// `max 1'y  s.t.  B y <= 1, y >= 0` is solved; the row strategy is read from
/// the duals of the slack columns. Bland's rule prevents cycling.
pub fn solve_minimax(a: &PayoffMatrix) -> Result<MixedProfile> {
    let (m, l) = (a.rows, a.cols);
    let shift = 1.0 - a.min_entry();
    let solver_err = |reason: &str| Error::Solver {
        reason: reason.to_string(),
        matrix: a.to_json(),
    };

    // Tableau: m constraint rows + objective row; columns: l structural,
    // m slack, 1 rhs.
    let width = l + m + 1;
    let mut tab = vec![0.0; (m + 1) * width];
    for i in 0..m {
        for j in 0..l {
            tab[i * width + j] = a.get(i, j) + shift;
        }
        tab[i * width + l + i] = 1.0;
        tab[i * width + width - 1] = 1.0;
    }
    for j in 0..l {
        tab[m * width + j] = -1.0;
    }
    let mut basis: Vec<usize> = (l..l + m).collect();

    let max_iter = 10_000 + 100 * (m + l) * (m + l);
    let mut iter = 0;
    loop {
        // Bland: smallest index with negative reduced cost.
        let Some(enter) = (0..l + m).find(|&c| tab[m * width + c] < -1e-12) else {
            break;
        };
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for r in 0..m {
            let coef = tab[r * width + enter];
            if coef > 1e-12 {
                let ratio = tab[r * width + width - 1] / coef;
                let better = ratio < best - 1e-12
                    || (ratio <= best + 1e-12 && leave.is_some_and(|lr| basis[r] < basis[lr]));
                if leave.is_none() || better {
                    best = ratio;
                    leave = Some(r);
                }
            }
        }
        // B > 0 keeps the program bounded; an unbounded ray means corruption.
        let pr = leave.ok_or_else(|| solver_err("unbounded program"))?;
        let piv = tab[pr * width + enter];
        for c in 0..width {
            tab[pr * width + c] /= piv;
        }
        for r in 0..=m {
            if r == pr {
                continue;
            }
            let f = tab[r * width + enter];
            if f != 0.0 {
                for c in 0..width {
                    tab[r * width + c] -= f * tab[pr * width + c];
                }
            }
        }
        basis[pr] = enter;
        iter += 1;
        if iter > max_iter {
            return Err(solver_err("cycling guard exceeded"));
        }
    }

    let z = tab[m * width + width - 1];
    if !(z > 0.0) || !z.is_finite() {
        return Err(solver_err("non-positive optimum"));
    }
    let mut q = vec![0.0; l];
    for (r, &b) in basis.iter().enumerate() {
        if b < l {
            q[b] = tab[r * width + width - 1];
        }
    }
    let mut p: Vec<f64> = (0..m).map(|i| tab[m * width + l + i]).collect();
    normalize(&mut q);
    normalize(&mut p);
    let value = 1.0 / z - shift;
    let profile = MixedProfile { p, q, value };

    if profile.exploitability(a) > OPT_TOL {
        return Err(solver_err("solution violates minimax optimality"));
    }
    #[cfg(debug_assertions)]
    if m == 2 && l == 2 {
        if let Ok(closed) = crate::oracles::closed_form_2x2_mixed(a) {
            debug_assert!((closed.value - profile.value).abs() < 1e-7);
        }
    }
    Ok(profile)
}

fn normalize(v: &mut [f64]) {
    for x in v.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        for x in v.iter_mut() {
            *x /= s;
        }
    }
}

/// Product distribution `P(i,j) = p_i q_j`, row-major.
pub fn joint_probabilities(p: &[f64], q: &[f64], shape: (usize, usize)) -> Result<Vec<f64>> {
    if p.len() != shape.0 || q.len() != shape.1 {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", shape.0, shape.1),
            got: format!("{}x{}", p.len(), q.len()),
        });
    }
    check_probability(p, "p")?;
    check_probability(q, "q")?;
    Ok(p.iter()
        .flat_map(|pi| q.iter().map(move |qj| pi * qj))
        .collect())
}
