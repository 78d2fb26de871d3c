//! The weighted and normalized transfer operators, the Gibbs state `ν_V`,
//! the equilibrium state `ρ_V = f_V ν_V`, and residuals of the identities
//! relating them.
//!
//! `ν_V` is evaluated in two modes. [`NuMode::Literal`] is the product
//!
//! ```text
//! ν(X_0=a_0, ..., X_{t_r}=a_r) = e^{(t_r−t_{r−1})(L+V−λI)}_{a_r a_{r−1}} ··· e^{t_1(L+V−λI)}_{a_1 a_0} μ_V(a_0)
//! ```
//!
//! taken as a functional on written cylinders. Its kernels are not
//! stochastic unless `u_V` is constant, so it is not consistent under
//! marginalization. [`NuMode::HTransform`] weights the last state by `u_V`,
//! which is the Markov measure with kernels `u_j e^{s(L+V−λI)}_{ji} / u_i`
//! and initial law `u_i μ_V(i)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cylinder::{CylinderFunction, CylinderSpec, PathMeasure};
use crate::error::{Error, Result};
use crate::kernel::{sweep, KernelCache, Propagator, Windowed};
use crate::perron::{perron_triple, PerronTriple, Potential};
use crate::time::TimePoint;
use crate::transfer::TransferRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuMode {
    Literal,
    HTransform,
}

impl NuMode {
    pub const ALL: [NuMode; 2] = [NuMode::Literal, NuMode::HTransform];

    pub fn name(self) -> &'static str {
        match self {
            NuMode::Literal => "literal",
            NuMode::HTransform => "h_transform",
        }
    }
}

/// `|lhs − rhs|` for one instance of an identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

impl IdentityCheck {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        IdentityCheck { lhs, rhs, residual: (lhs - rhs).abs() }
    }
}

/// Both sides of the main theorem, evaluated two ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoremACheck {
    /// The left side with the `e^{±∫V}` factors paired against the kernels
    /// of `ν_V` on `[0, t)`.
    pub lhs: f64,
    /// The left side along the chain fixed point, pull-out, then
    /// `ℒ̂(e^{−∫(V−λ)}) = (1/f_V) ℒ^t(f_V)` computed as it stands.
    pub lhs_proof_chain: f64,
    pub rhs: f64,
    pub residual: f64,
    /// `max_b |(1/f_V) ℒ^t(f_V)(b) − 1|`.
    pub harmonic_defect: f64,
}

/// The three integrals of the pull-out/fixed-point proposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PreTheoremCheck {
    /// `∫ ℒ̂(f) g dν`
    pub paired: f64,
    /// `∫ ℒ̂(f · g∘Θ_t) dν`
    pub transferred: f64,
    /// `∫ f · g∘Θ_t dν`
    pub composed: f64,
    pub residual: f64,
}

/// Largest deviation of a kernel's column sums from 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KolmogorovDefect {
    pub literal: f64,
    pub h_transform: f64,
}

/// Everything needed to evaluate `ℒ^t_V`, `ℒ̂^t_V`, `ν_V` and `ρ_V`.
#[derive(Debug, Clone)]
pub struct GibbsModel {
    path: PathMeasure,
    potential: Potential,
    triple: PerronTriple,
    /// `e^{s(L+V)}`
    weighted: KernelCache,
    /// `e^{s(L+V−λI)}`
    centered: KernelCache,
}

impl GibbsModel {
    pub fn new(path: PathMeasure, potential: Potential) -> Result<Self> {
        let triple = perron_triple(path.generator(), &potential, path.p0())?;
        GibbsModel::with_triple(path, potential, triple)
    }

    /// Uses the supplied triple as is, without recomputing it.
    pub fn with_triple(path: PathMeasure, potential: Potential, triple: PerronTriple) -> Result<Self> {
        if triple.n() != path.n() {
            return Err(Error::DimensionMismatch { expected: path.n(), got: triple.n() });
        }
        let rate = potential.perturb(path.generator())?;
        let mut centered = rate.clone();
        for i in 0..path.n() {
            centered[(i, i)] -= triple.lambda();
        }
        Ok(GibbsModel {
            path,
            potential,
            triple,
            weighted: KernelCache::new(rate),
            centered: KernelCache::new(centered),
        })
    }

    pub fn path(&self) -> &PathMeasure {
        &self.path
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn triple(&self) -> &PerronTriple {
        &self.triple
    }

    pub fn n(&self) -> usize {
        self.path.n()
    }

    /// `e^{s(L+V−λI)}`.
    pub fn centered_kernel(&self, s: TimePoint) -> DMatrix<f64> {
        (*self.centered.get(s)).clone()
    }

    /// `K^s_{ji} = u_j e^{s(L+V−λI)}_{ji} / u_i`.
    pub fn h_kernel(&self, s: TimePoint) -> DMatrix<f64> {
        let u = self.triple.u();
        let mut k = self.centered_kernel(s);
        for i in 0..k.ncols() {
            for j in 0..k.nrows() {
                k[(j, i)] *= u[j] / u[i];
            }
        }
        k
    }

    /// `ℒ^t_V(f) = ℒ^t(G_t f)`: the past product runs over `e^{Δ(L+V)}`.
    pub fn weighted_transfer_apply(&self, t: TimePoint, f: &CylinderFunction) -> Result<CylinderFunction> {
        let out = TransferRule {
            init: self.path.p0_vector(),
            kernels: &self.weighted,
            divisor: self.path.p0_vector(),
            preserves_constants: false,
        }
        .apply(t, f)?;
        if out.terms().any(|(_, c)| !c.is_finite()) {
            return Err(Error::Overflow);
        }
        Ok(out)
    }

    /// `ℒ̂^t_V(g) = (1/f_V) ℒ^t(e^{∫_0^t (V−λ)} g f_V)`.
    pub fn normalized_transfer_apply(&self, t: TimePoint, g: &CylinderFunction) -> Result<CylinderFunction> {
        TransferRule {
            init: self.triple.mu(),
            kernels: &self.centered,
            divisor: self.triple.mu(),
            preserves_constants: true,
        }
        .apply(t, g)
    }

    fn finish(&self, mode: NuMode, v: &DVector<f64>) -> f64 {
        match mode {
            NuMode::Literal => v.sum(),
            NuMode::HTransform => v.dot(self.triple.u()),
        }
    }

    fn nu_weight(&self, mode: NuMode, c: &CylinderSpec) -> f64 {
        let (v, _) = sweep(c.constraints(), self.triple.mu(), &self.centered);
        self.finish(mode, &v)
    }

    /// `ν_V(c)`. Literal mode needs a time-0 anchor unless `c` is the
    /// whole space.
    pub fn eval_nu(&self, mode: NuMode, c: &CylinderSpec) -> Result<f64> {
        c.check_states(self.n())?;
        if mode == NuMode::Literal && !c.is_full() && c.anchor().is_none() {
            return Err(Error::AnchorRequired);
        }
        Ok(self.nu_weight(mode, c))
    }

    /// `∫ f dν_V`. Anchorless terms stand for the sum of their anchored
    /// refinements over `w(0)`.
    pub fn eval_nu_fn(&self, mode: NuMode, f: &CylinderFunction) -> Result<f64> {
        f.check_states(self.n())?;
        Ok(f.terms().map(|(s, c)| c * self.nu_weight(mode, s)).sum())
    }

    /// `ρ_V(c) = ∫ f_V I_c dν_V`.
    pub fn eval_rho(&self, mode: NuMode, c: &CylinderSpec) -> Result<f64> {
        if mode == NuMode::Literal && !c.is_full() && c.anchor().is_none() {
            return Err(Error::AnchorRequired);
        }
        self.eval_rho_fn(mode, &CylinderFunction::indicator(c.clone()))
    }

    pub fn eval_rho_fn(&self, mode: NuMode, f: &CylinderFunction) -> Result<f64> {
        self.eval_nu_fn(mode, &f.multiply_state0(self.triple.f_v().as_slice()))
    }

    /// `Σ_i ρ_V(X_0 = i) = Σ_i f_V(i) μ_V(i)` in literal mode.
    pub fn rho_mass(&self, mode: NuMode) -> Result<f64> {
        (0..self.n()).try_fold(0.0, |acc, i| Ok(acc + self.eval_rho(mode, &CylinderSpec::anchor_only(i))?))
    }

    /// `|ρ_V(Θ_s c) − ρ_V(c)|`.
    pub fn rho_shift_defect(&self, mode: NuMode, c: &CylinderSpec, s: TimePoint) -> Result<f64> {
        let shifted = CylinderFunction::indicator(c.shift(s)).anchored(self.n());
        let base = CylinderFunction::indicator(c.clone()).anchored(self.n());
        Ok((self.eval_rho_fn(mode, &shifted)? - self.eval_rho_fn(mode, &base)?).abs())
    }

    /// `max |ℒ^t_V(f_V) − e^{tλ} f_V|` over coefficients.
    pub fn eigenfunction_residual(&self, t: TimePoint) -> Result<f64> {
        let f_v = CylinderFunction::state_function(self.triple.f_v().as_slice());
        let lhs = self.weighted_transfer_apply(t, &f_v)?;
        let rhs = f_v.scale((t.as_f64() * self.triple.lambda()).exp());
        Ok(lhs.max_abs_diff(&rhs))
    }

    /// `∫ ℒ̂^t_V(g) dν_V` against `∫ g dν_V`.
    pub fn fixed_point_residual(&self, mode: NuMode, t: TimePoint, g: &CylinderFunction) -> Result<IdentityCheck> {
        let lhs = self.eval_nu_fn(mode, &self.normalized_transfer_apply(t, g)?)?;
        Ok(IdentityCheck::new(lhs, self.eval_nu_fn(mode, g)?))
    }

    /// Both sides of
    /// `∫ e^{−∫_0^t V∘Θ_s} [(1/f_V) ℒ^t(e^{∫_0^t V∘Θ_s} g f_V)]∘Θ_t dν_V = ∫ g dν_V`.
    pub fn theorem_a_residual(&self, mode: NuMode, t: TimePoint, g: &CylinderFunction) -> Result<TheoremACheck> {
        let transferred = self.normalized_transfer_apply(t, g)?;
        // (1/f_V) ℒ^t(e^{∫V} g f_V) = e^{tλ} ℒ̂(g); on [0, t) the weight
        // e^{−∫(V−λ)} turns the kernels of ν into those of P.
        let window = Windowed { inside: self.path.transitions(), outside: &self.centered, end: t };
        let lhs = transferred
            .shift(t)
            .terms()
            .map(|(s, c)| {
                let (v, now) = sweep(s.constraints(), self.triple.mu(), &window);
                c * self.finish(mode, &window.advance(&v, now, now.max(t)))
            })
            .sum();

        let harmonic = &*self.path.transitions().get(t) * self.triple.mu();
        let harmonic = harmonic.component_div(self.triple.mu());
        let lhs_proof_chain = self.eval_nu_fn(mode, &transferred.multiply_state0(harmonic.as_slice()))?;

        let rhs = self.eval_nu_fn(mode, g)?;
        Ok(TheoremACheck {
            lhs,
            lhs_proof_chain,
            rhs,
            residual: (lhs - rhs).abs(),
            harmonic_defect: harmonic.iter().map(|h| (h - 1.0).abs()).fold(0.0, f64::max),
        })
    }

    /// `∫ ℒ̂(f) g dν = ∫ ℒ̂(f · g∘Θ_t) dν = ∫ f · g∘Θ_t dν`.
    pub fn pre_theorem_identity_residual(
        &self,
        mode: NuMode,
        t: TimePoint,
        f: &CylinderFunction,
        g: &CylinderFunction,
    ) -> Result<PreTheoremCheck> {
        let composed_fn = f.product(&g.shift(t));
        let paired = self.eval_nu_fn(mode, &self.normalized_transfer_apply(t, f)?.product(g))?;
        let transferred = self.eval_nu_fn(mode, &self.normalized_transfer_apply(t, &composed_fn)?)?;
        let composed = self.eval_nu_fn(mode, &composed_fn)?;
        Ok(PreTheoremCheck {
            paired,
            transferred,
            composed,
            residual: (paired - transferred).abs().max((transferred - composed).abs()),
        })
    }

    pub fn kolmogorov_defect(&self, t: TimePoint) -> KolmogorovDefect {
        let column_defect = |k: &DMatrix<f64>| k.column_iter().map(|col| (col.sum() - 1.0).abs()).fold(0.0, f64::max);
        KolmogorovDefect {
            literal: column_defect(&self.centered_kernel(t)),
            h_transform: column_defect(&self.h_kernel(t)),
        }
    }
}
