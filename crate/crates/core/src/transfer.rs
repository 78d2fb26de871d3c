//! The continuous-time Ruelle operator `ℒ^t` on cylinder functions, its
//! disintegration `μ^w_t`, the shift endomorphism `α_t` and the conditional
//! expectation onto the future σ-algebra.
//!
//! For a cylinder `{X_0=a_0, X_{t_1}=a_1, ..., X_{t_r}=a_r}` the operator
//! time `t` splits the constraints into a past (`t_k < t`) and a future
//! (`t <= t_k`). `ℒ^t` integrates the past out against the time reversal of
//! the stationary chain and re-anchors the shifted future at `X_0 = b`:
//!
//! ```text
//! ℒ^t I_c = Σ_b (1/p0_b) P^{t-t_{j-1}}_{b,a_{j-1}} ··· P^{t_1}_{a_1,a_0} p0_{a_0} · I{X_0=b, X_{t_k-t}=a_k : k >= j}
//! ```
//!
//! A future constraint sitting exactly at `t` pins the anchor. The same
//! sweep drives the weighted and normalized operators in [`crate::gibbs`];
//! only the time-0 weights, the kernels and the divisor change.

use nalgebra::DVector;

use crate::cylinder::{CylinderFunction, CylinderSpec, PathMeasure};
use crate::error::{Error, Result};
use crate::kernel::{sweep, Propagator};
use crate::time::TimePoint;

/// One member of the transfer-operator family.
pub(crate) struct TransferRule<'a> {
    /// Weights at time 0 multiplying the past product.
    pub init: &'a DVector<f64>,
    pub kernels: &'a dyn Propagator,
    /// Divides the swept weight at the new anchor.
    pub divisor: &'a DVector<f64>,
    /// The operator maps 1 to 1. Terms with no past then pass through
    /// unchanged by the pull-out property, which keeps `ℒ(1) = 1` exact.
    pub preserves_constants: bool,
}

impl TransferRule<'_> {
    pub(crate) fn apply(&self, t: TimePoint, f: &CylinderFunction) -> Result<CylinderFunction> {
        if t.is_zero() {
            return Err(Error::NonPositiveTime);
        }
        let n = self.init.len();
        f.check_states(n)?;
        let mut out = CylinderFunction::zero();
        for (spec, coeff) in f.terms() {
            let (past, future) = spec.split_at(t);
            let shifted: Vec<(TimePoint, usize)> =
                future.iter().map(|&(time, a)| (time.checked_sub(t).expect("future times are >= t"), a)).collect();
            if past.is_empty() && self.preserves_constants {
                out.add_term(coeff, CylinderSpec::from_sorted(shifted));
                continue;
            }
            let (v, now) = sweep(past, self.init, self.kernels);
            let v = self.kernels.advance(&v, now, t);
            match shifted.first() {
                Some(&(time, a)) if time.is_zero() => {
                    out.add_term(coeff * v[a] / self.divisor[a], CylinderSpec::from_sorted(shifted));
                }
                _ => {
                    for b in 0..n {
                        let mut anchored = Vec::with_capacity(shifted.len() + 1);
                        anchored.push((TimePoint::ZERO, b));
                        anchored.extend_from_slice(&shifted);
                        out.add_term(coeff * v[b] / self.divisor[b], CylinderSpec::from_sorted(anchored));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// `ℒ^t f` for the stationary path measure `P`.
pub fn transfer_apply(p: &PathMeasure, t: TimePoint, f: &CylinderFunction) -> Result<CylinderFunction> {
    TransferRule { init: p.p0_vector(), kernels: p.transitions(), divisor: p.p0_vector(), preserves_constants: true }
        .apply(t, f)
}

/// `μ^w_t(c)`, where the conditioning path `w` is known only through the
/// cylinder `w_constraints`; its time-0 state plays the role of `w(t)` in
/// the disintegration.
pub fn disintegration_eval(
    p: &PathMeasure,
    w_constraints: &CylinderSpec,
    t: TimePoint,
    c: &CylinderSpec,
) -> Result<f64> {
    if t.is_zero() {
        return Err(Error::NonPositiveTime);
    }
    w_constraints.check_states(p.n())?;
    c.check_states(p.n())?;
    let w0 = w_constraints.anchor().ok_or(Error::AnchorRequired)?;
    let (past, future) = c.split_at(t);
    for &(time, a) in future {
        let offset = time.checked_sub(t).expect("future times are >= t");
        match w_constraints.state_at(offset) {
            Some(b) if b == a => {}
            Some(_) => return Ok(0.0),
            None => return Err(Error::UndecidableFuture { offset: offset.to_string() }),
        }
    }
    let (v, now) = sweep(past, p.p0_vector(), p.transitions());
    let v = p.transitions().advance(&v, now, t);
    Ok(v[w0] / p.p0().get(w0))
}

/// `α_t(f) = f ∘ Θ_t`.
pub fn compose_shift(f: &CylinderFunction, t: TimePoint) -> CylinderFunction {
    f.shift(t)
}

/// `E(f | 𝓕_t⁺) = (ℒ^t f) ∘ Θ_t`.
pub fn conditional_expectation(p: &PathMeasure, t: TimePoint, f: &CylinderFunction) -> Result<CylinderFunction> {
    Ok(compose_shift(&transfer_apply(p, t, f)?, t))
}
