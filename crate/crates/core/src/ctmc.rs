//! Rate matrices, their transition semigroups and stationary vectors.
//!
//! Matrices use the column convention throughout: entry `(i, j)` of a
//! generator is the jump rate from state `j` to state `i`, so columns sum
//! to zero and every `e^{tL}` is column stochastic.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Column-sum defects at or below this are folded into the diagonal.
pub const COLUMN_REPAIR_TOL: f64 = 1e-12;

/// A validated, irreducible rate matrix in the column convention.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    entries: DMatrix<f64>,
}

impl Generator {
    /// Validates `raw` and repairs column sums onto the diagonal when the
    /// defect is within [`COLUMN_REPAIR_TOL`].
    pub fn new(raw: DMatrix<f64>) -> Result<Self> {
        validate_generator(raw)
    }

    /// Builds a generator from row-major nested rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::NonSquare { rows: n, cols: bad.len() });
        }
        let raw = DMatrix::from_fn(n, cols, |i, j| rows[i][j]);
        validate_generator(raw)
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Total rate of leaving `state`.
    pub fn exit_rate(&self, state: usize) -> f64 {
        -self.entries[(state, state)]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| self.entries.row(i).iter().copied().collect()).collect()
    }
}

/// Checks the generator hypotheses (negative diagonal, nonnegative
/// off-diagonal, zero column sums) plus irreducibility.
pub fn validate_generator(mut raw: DMatrix<f64>) -> Result<Generator> {
    let (rows, cols) = raw.shape();
    if rows != cols {
        return Err(Error::NonSquare { rows, cols });
    }
    let n = rows;
    if n < 2 {
        return Err(Error::TooFewStates(n));
    }
    for j in 0..n {
        for i in 0..n {
            if !raw[(i, j)].is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    for j in 0..n {
        for i in 0..n {
            if i != j && raw[(i, j)] < 0.0 {
                return Err(Error::NegativeOffDiagonal { row: i, col: j, value: raw[(i, j)] });
            }
        }
    }
    for i in 0..n {
        if raw[(i, i)] >= 0.0 {
            return Err(Error::ZeroDiagonal { state: i, value: raw[(i, i)] });
        }
    }
    for j in 0..n {
        let defect: f64 = raw.column(j).iter().sum();
        if defect.abs() > COLUMN_REPAIR_TOL {
            return Err(Error::ColumnSumDefect { col: j, defect });
        }
        let off: f64 = (0..n).filter(|&i| i != j).map(|i| raw[(i, j)]).sum();
        raw[(j, j)] = -off;
    }
    check_irreducible(&raw)?;
    Ok(Generator { entries: raw })
}

/// Strong connectivity of the jump graph `j -> i` whenever `L[i][j] > 0`.
fn check_irreducible(m: &DMatrix<f64>) -> Result<()> {
    let n = m.nrows();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(j) = stack.pop() {
            for i in 0..n {
                let rate = if forward { m[(i, j)] } else { m[(j, i)] };
                if i != j && rate > 0.0 && !seen[i] {
                    seen[i] = true;
                    stack.push(i);
                }
            }
        }
        seen
    };
    if let Some(i) = reach(true).iter().position(|&s| !s) {
        return Err(Error::Reducible { from: 0, unreachable: i });
    }
    if let Some(i) = reach(false).iter().position(|&s| !s) {
        return Err(Error::Reducible { from: i, unreachable: 0 });
    }
    Ok(())
}

/// `e^{tL}` together with its time.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    t: f64,
    entries: DMatrix<f64>,
}

impl TransitionMatrix {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Probability of being in `to` at time `t` after starting in `from`.
    pub fn prob(&self, to: usize, from: usize) -> f64 {
        self.entries[(to, from)]
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }
}

/// The transition semigroup `P^t = e^{tL}`.
pub fn semigroup(l: &Generator, t: f64) -> Result<TransitionMatrix> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    Ok(TransitionMatrix { t, entries: expm(l.matrix(), t) })
}

/// `e^{tM}` by scaling and squaring with a Padé approximant; `t = 0` gives
/// the identity exactly.
pub fn expm(m: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    if t == 0.0 {
        return DMatrix::identity(m.nrows(), m.ncols());
    }
    (m * t).exp()
}

/// `e^{tM}` for a Metzler matrix `M` (nonnegative off-diagonal) by
/// uniformization: Poisson-weighted powers of `I + M/q`.
///
/// This shares no code with [`expm`] and serves as its cross-check. The
/// horizon is cut into chunks with `q * chunk <= 8` so the Poisson weights
/// never underflow, and the chunk results are multiplied together.
pub fn uniformized_exp(m: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = m.nrows();
    if t == 0.0 {
        return DMatrix::identity(n, n);
    }
    let q = (0..n).map(|i| -m[(i, i)]).fold(0.0f64, f64::max).max(1e-3);
    let chunks = ((q * t) / 8.0).ceil().max(1.0) as usize;
    let tau = t / chunks as f64;
    let rate = q * tau;
    let b = DMatrix::identity(n, n) + m / q;

    let mut power = DMatrix::identity(n, n);
    let mut weight = (-rate).exp();
    let mut acc = &power * weight;
    for k in 1..2000 {
        power = &b * &power;
        weight *= rate / k as f64;
        let term = &power * weight;
        acc += &term;
        if k as f64 > rate && term.amax() <= 1e-18 * acc.amax() {
            break;
        }
    }
    let mut out = acc.clone();
    for _ in 1..chunks {
        out = &acc * &out;
    }
    out
}

/// The stationary probability vector `p0` with `L p0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryVector(DVector<f64>);

impl StationaryVector {
    pub fn vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }
}

/// Solves the kernel of `L` with the last equation replaced by `sum p = 1`.
pub fn stationary_vector(l: &Generator) -> Result<StationaryVector> {
    let p = normalized_null_vector(l.matrix())
        .ok_or_else(|| Error::SolveFailure("generator kernel is not one-dimensional".into()))?;
    if p.iter().any(|&x| x.is_nan() || x <= 0.0) {
        return Err(Error::SolveFailure(format!("stationary vector has nonpositive entries: {p:?}")));
    }
    let p = &p / p.sum();
    Ok(StationaryVector(p))
}

/// Solves `A x = 0, sum x = 1` by overwriting the last row of `A` with ones.
///
/// The replacement is legitimate whenever the left null vector of `A` has
/// a nonzero last entry, which holds for the positive Perron vectors here.
pub(crate) fn normalized_null_vector(a: &DMatrix<f64>) -> Option<DVector<f64>> {
    let n = a.nrows();
    let mut sys = a.clone();
    for j in 0..n {
        sys[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let x = sys.lu().solve(&rhs)?;
    x.iter().all(|v| v.is_finite()).then_some(x)
}
