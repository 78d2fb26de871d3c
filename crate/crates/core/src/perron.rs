//! Perron data of the perturbed semigroup `e^{t(L+V)}`.
//!
//! For an irreducible generator the matrix `L+V` is Metzler and
//! irreducible, so its eigenvalue of largest real part is real and simple
//! with strictly positive left and right eigenvectors `u_V`, `μ_V`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ctmc::{expm, normalized_null_vector, Generator, StationaryVector};
use crate::error::{Error, Result};

/// A potential depending on `w(0)` only: `V_i` is its value on `{X_0 = i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Potential(Vec<f64>);

impl Potential {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinitePotential(i));
        }
        Ok(Potential(values))
    }

    pub fn zeros(n: usize) -> Self {
        Potential(vec![0.0; n])
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Potential(vec![c; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.0.windows(2).all(|w| w[0] == w[1])
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    /// `L + diag(V)`.
    pub fn perturb(&self, l: &Generator) -> Result<DMatrix<f64>> {
        if self.len() != l.n() {
            return Err(Error::DimensionMismatch { expected: l.n(), got: self.len() });
        }
        let mut m = l.matrix().clone();
        for (i, v) in self.0.iter().enumerate() {
            m[(i, i)] += v;
        }
        Ok(m)
    }
}

impl TryFrom<Vec<f64>> for Potential {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Potential::new(values)
    }
}

impl From<Potential> for Vec<f64> {
    fn from(v: Potential) -> Vec<f64> {
        v.0
    }
}

/// `(λ(V), u_V, μ_V)` with `Σ μ = 1` and `Σ u μ = 1`, plus `f_V = μ_V / p0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronTriple {
    lambda: f64,
    u: DVector<f64>,
    mu: DVector<f64>,
    f_v: DVector<f64>,
}

impl PerronTriple {
    /// Assembles a triple from externally supplied parts without checking
    /// the eigen-relations. Used to load stored or deliberately perturbed
    /// data; [`PerronTriple::residuals`] reports how far off it is.
    pub fn from_parts(lambda: f64, u: Vec<f64>, mu: Vec<f64>, p0: &StationaryVector) -> Result<Self> {
        let n = p0.as_slice().len();
        for len in [u.len(), mu.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, got: len });
            }
        }
        let mu = DVector::from_vec(mu);
        let f_v = density_fv(&mu, p0);
        Ok(PerronTriple { lambda, u: DVector::from_vec(u), mu, f_v })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn u(&self) -> &DVector<f64> {
        &self.u
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn f_v(&self) -> &DVector<f64> {
        &self.f_v
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn residuals(&self, l: &Generator, v: &Potential) -> Result<PerronResiduals> {
        let m = v.perturb(l)?;
        let left = (self.u.transpose() * &m - self.u.transpose() * self.lambda).amax();
        let right = (&m * &self.mu - &self.mu * self.lambda).amax();
        Ok(PerronResiduals {
            left,
            right,
            mass: (self.mu.sum() - 1.0).abs(),
            pairing: (self.u.dot(&self.mu) - 1.0).abs(),
        })
    }
}

/// Deviations of a triple from its defining relations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerronResiduals {
    /// `‖u(L+V) − λu‖∞`
    pub left: f64,
    /// `‖(L+V)μ − λμ‖∞`
    pub right: f64,
    /// `|Σμ − 1|`
    pub mass: f64,
    /// `|Σuμ − 1|`
    pub pairing: f64,
}

impl PerronResiduals {
    pub fn max(&self) -> f64 {
        self.left.max(self.right).max(self.mass).max(self.pairing)
    }
}

fn sorted_real_parts(m: &DMatrix<f64>) -> Result<(f64, f64, Vec<f64>)> {
    let eig = m.clone().complex_eigenvalues();
    let mut order: Vec<usize> = (0..eig.len()).collect();
    order.sort_by(|&a, &b| eig[b].re.total_cmp(&eig[a].re));
    let top = eig[order[0]];
    if !top.re.is_finite() {
        return Err(Error::DegenerateSpectrum(format!("non-finite eigenvalue {top}")));
    }
    Ok((top.re, top.im, order[1..].iter().map(|&k| eig[k].re).collect()))
}

/// Eigenvalue of `L+V` with maximal real part, checked to be real and simple.
fn top_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    let (re, im, rest) = sorted_real_parts(m)?;
    let scale = 1.0 + m.amax();
    if im.abs() > 1e-8 * scale {
        return Err(Error::DegenerateSpectrum(format!("top eigenvalue {re}+{im}i is not real")));
    }
    if let Some(&next) = rest.first() {
        if re - next <= 1e-10 * scale {
            return Err(Error::DegenerateSpectrum(format!("top eigenvalue {re} is not simple (next {next})")));
        }
    }
    Ok(re)
}

fn shifted(m: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    let mut a = m.clone();
    for i in 0..a.nrows() {
        a[(i, i)] -= lambda;
    }
    a
}

/// Computes the Perron triple of `L + V`.
pub fn perron_triple(l: &Generator, v: &Potential, p0: &StationaryVector) -> Result<PerronTriple> {
    let m = v.perturb(l)?;
    let mut lambda = top_eigenvalue(&m)?;
    let null = |a: &DMatrix<f64>| {
        normalized_null_vector(a).ok_or_else(|| Error::DegenerateSpectrum("eigenvector solve failed".into()))
    };
    let (mut u, mut mu) = (DVector::zeros(0), DVector::zeros(0));
    for _ in 0..3 {
        let a = shifted(&m, lambda);
        mu = null(&a)?;
        u = null(&a.transpose())?;
        lambda = (u.transpose() * &m * &mu)[0] / u.dot(&mu);
    }
    if mu.iter().chain(u.iter()).any(|&x| x.is_nan() || x <= 0.0) {
        return Err(Error::DegenerateSpectrum("Perron vectors are not strictly positive".into()));
    }
    mu /= mu.sum();
    u /= u.dot(&mu);
    let f_v = density_fv(&mu, p0);
    Ok(PerronTriple { lambda, u, mu, f_v })
}

/// `f_V(i) = μ_V(i) / p0_i`.
pub fn density_fv(mu: &DVector<f64>, p0: &StationaryVector) -> DVector<f64> {
    mu.component_div(p0.vector())
}

/// `λ(V)` minus the largest real part among the remaining eigenvalues.
pub fn spectral_gap(l: &Generator, v: &Potential) -> Result<f64> {
    let m = v.perturb(l)?;
    let (top, _, rest) = sorted_real_parts(&m)?;
    Ok(rest.first().map_or(f64::INFINITY, |next| top - next))
}

/// `‖e^{−tλ} v e^{t(L+V)} − (Σ v_i μ_i) u‖∞` for a row vector `v`, computed
/// with the centered matrix `L+V−λI`.
pub fn asymptotic_limit_residual(
    l: &Generator,
    potential: &Potential,
    triple: &PerronTriple,
    v: &[f64],
    t: f64,
) -> Result<f64> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::NonPositiveTime);
    }
    if v.len() != triple.n() {
        return Err(Error::DimensionMismatch { expected: triple.n(), got: v.len() });
    }
    let centered = shifted(&potential.perturb(l)?, triple.lambda);
    let kernel = expm(&centered, t);
    if kernel.iter().any(|x| !x.is_finite()) {
        return Err(Error::Overflow);
    }
    let row = DVector::from_column_slice(v);
    let evolved = kernel.transpose() * &row;
    let limit = triple.u() * row.dot(triple.mu());
    Ok((evolved - limit).amax())
}

/// Power iteration on `e^{s(L+V−cI)}` with `c` the largest diagonal entry.
/// Returns `λ(V)` and the normalized right eigenvector; independent of the
/// dense eigensolver and used as its cross-check.
pub fn power_iteration(l: &Generator, v: &Potential) -> Result<(f64, DVector<f64>)> {
    let m = v.perturb(l)?;
    let n = m.nrows();
    let c = (0..n).map(|i| m[(i, i)]).fold(f64::NEG_INFINITY, f64::max);
    let step = 1.0 / (1.0 + m.amax());
    let kernel = expm(&shifted(&m, c), step);
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut growth = 1.0;
    for _ in 0..200_000 {
        let y = &kernel * &x;
        growth = y.sum();
        let next = y / growth;
        let delta = (&next - &x).amax();
        x = next;
        if delta < 1e-15 {
            break;
        }
    }
    Ok((c + growth.ln() / step, x))
}
