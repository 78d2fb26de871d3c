//! Cylinder sets, finite linear combinations of their indicators, and the
//! stationary path measure `P` evaluated on them.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DVector;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::ctmc::{stationary_vector, Generator, StationaryVector};
use crate::error::{Error, Result};
use crate::kernel::{sweep, KernelCache};
use crate::time::TimePoint;

/// A single coordinate constraint `X_t = state`.
pub type Constraint = (TimePoint, usize);

/// The event `{X_{t_1} = a_1, ..., X_{t_r} = a_r}` with strictly increasing
/// times. A constraint at time 0 is the anchor.
///
/// States are 0-based here; the JSON form `[["0",1],["0.5",2]]` is 1-based.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct CylinderSpec {
    constraints: Vec<Constraint>,
}

impl CylinderSpec {
    /// The whole path space.
    pub fn full() -> Self {
        CylinderSpec::default()
    }

    /// Sorts the constraints by time. Repeating a constraint is harmless;
    /// two different states at one time are rejected.
    pub fn new(mut constraints: Vec<(TimePoint, usize)>) -> Result<Self> {
        constraints.sort();
        constraints.dedup();
        if let Some(w) = constraints.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidCylinder(format!(
                "two states ({} and {}) at time {}",
                w[0].1 + 1,
                w[1].1 + 1,
                w[0].0
            )));
        }
        Ok(CylinderSpec { constraints })
    }

    /// Caller guarantees strictly increasing times.
    pub(crate) fn from_sorted(constraints: Vec<(TimePoint, usize)>) -> Self {
        debug_assert!(constraints.windows(2).all(|w| w[0].0 < w[1].0));
        CylinderSpec { constraints }
    }

    /// `{X_0 = state}`.
    pub fn anchor_only(state: usize) -> Self {
        CylinderSpec { constraints: vec![(TimePoint::ZERO, state)] }
    }

    pub fn constraints(&self) -> &[(TimePoint, usize)] {
        &self.constraints
    }

    pub fn is_full(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn anchor(&self) -> Option<usize> {
        match self.constraints.first() {
            Some(&(t, a)) if t.is_zero() => Some(a),
            _ => None,
        }
    }

    pub fn last_time(&self) -> Option<TimePoint> {
        self.constraints.last().map(|c| c.0)
    }

    pub fn state_at(&self, t: TimePoint) -> Option<usize> {
        self.constraints.binary_search_by_key(&t, |c| c.0).ok().map(|i| self.constraints[i].1)
    }

    pub fn check_states(&self, n: usize) -> Result<()> {
        match self.constraints.iter().find(|c| c.1 >= n) {
            Some(&(_, state)) => Err(Error::StateOutOfRange { state, n }),
            None => Ok(()),
        }
    }

    /// Splits into constraints strictly before `t` and those at or after.
    pub fn split_at(&self, t: TimePoint) -> (&[Constraint], &[Constraint]) {
        let k = self.constraints.partition_point(|c| c.0 < t);
        self.constraints.split_at(k)
    }

    /// Every constraint moved `s` later; `I_{c.shift(s)} = I_c ∘ Θ_s`.
    pub fn shift(&self, s: TimePoint) -> Self {
        CylinderSpec { constraints: self.constraints.iter().map(|&(t, a)| (t + s, a)).collect() }
    }

    /// Intersection of two cylinders, `None` when they conflict.
    pub fn intersect(&self, other: &CylinderSpec) -> Option<CylinderSpec> {
        let mut out = Vec::with_capacity(self.constraints.len() + other.constraints.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.constraints, &other.constraints);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    if a[i].1 != b[j].1 {
                        return None;
                    }
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Some(CylinderSpec { constraints: out })
    }

    /// Adds `X_0 = state`, or `None` when the spec already anchors another state.
    pub fn with_anchor(&self, state: usize) -> Option<CylinderSpec> {
        self.intersect(&CylinderSpec::anchor_only(state))
    }

    /// Adds `X_t = state` (a refinement).
    pub fn refine(&self, t: TimePoint, state: usize) -> Option<CylinderSpec> {
        self.intersect(&CylinderSpec { constraints: vec![(t, state)] })
    }
}

/// Shift action on specs: `I_{shift_spec(c, s)} = I_c ∘ Θ_s`.
pub fn shift_spec(c: &CylinderSpec, s: TimePoint) -> CylinderSpec {
    c.shift(s)
}

impl fmt::Display for CylinderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.constraints.is_empty() {
            return write!(f, "Ω");
        }
        write!(f, "{{")?;
        for (k, (t, a)) in self.constraints.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "X_{t}={}", a + 1)?;
        }
        write!(f, "}}")
    }
}

impl Serialize for CylinderSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<(String, usize)> = self.constraints.iter().map(|&(t, a)| (t.to_string(), a + 1)).collect();
        pairs.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CylinderSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let pairs: Vec<(TimePoint, usize)> = Vec::deserialize(deserializer)?;
        let constraints = pairs
            .into_iter()
            .map(|(t, a)| match a {
                0 => Err(D::Error::custom("states are numbered from 1")),
                a => Ok((t, a - 1)),
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        CylinderSpec::new(constraints).map_err(D::Error::custom)
    }
}

/// A finite linear combination of cylinder indicators. Terms with the same
/// spec are merged on construction; the empty combination is zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CylinderFunction {
    terms: BTreeMap<CylinderSpec, f64>,
}

impl CylinderFunction {
    pub fn zero() -> Self {
        CylinderFunction::default()
    }

    /// The constant function 1, i.e. the indicator of the full space.
    pub fn one() -> Self {
        CylinderFunction::indicator(CylinderSpec::full())
    }

    pub fn constant(c: f64) -> Self {
        CylinderFunction::zero().plus_term(c, CylinderSpec::full())
    }

    pub fn indicator(spec: CylinderSpec) -> Self {
        CylinderFunction::zero().plus_term(1.0, spec)
    }

    /// `w ↦ h(w(0))` as `Σ_a h_a I{X_0 = a}`.
    pub fn state_function(h: &[f64]) -> Self {
        CylinderFunction::from_terms(h.iter().enumerate().map(|(a, &c)| (c, CylinderSpec::anchor_only(a))))
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (f64, CylinderSpec)>) -> Self {
        let mut f = CylinderFunction::zero();
        for (c, spec) in terms {
            f.add_term(c, spec);
        }
        f
    }

    pub fn add_term(&mut self, coeff: f64, spec: CylinderSpec) {
        if coeff == 0.0 {
            return;
        }
        match self.terms.entry(spec) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += coeff;
                if *e.get() == 0.0 {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                e.insert(coeff);
            }
        }
    }

    fn plus_term(mut self, coeff: f64, spec: CylinderSpec) -> Self {
        self.add_term(coeff, spec);
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = (&CylinderSpec, f64)> {
        self.terms.iter().map(|(s, &c)| (s, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, spec: &CylinderSpec) -> f64 {
        self.terms.get(spec).copied().unwrap_or(0.0)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        CylinderFunction::from_terms(self.terms().map(|(s, c)| (alpha * c, s.clone())))
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &CylinderFunction, beta: f64) -> Self {
        let mut out = self.scale(alpha);
        for (s, c) in other.terms() {
            out.add_term(beta * c, s.clone());
        }
        out
    }

    /// Pointwise product; conflicting term pairs vanish.
    pub fn product(&self, other: &CylinderFunction) -> Self {
        let mut out = CylinderFunction::zero();
        for (s1, c1) in self.terms() {
            for (s2, c2) in other.terms() {
                if let Some(s) = s1.intersect(s2) {
                    out.add_term(c1 * c2, s);
                }
            }
        }
        out
    }

    /// `f ∘ Θ_s`, termwise [`shift_spec`].
    pub fn shift(&self, s: TimePoint) -> Self {
        CylinderFunction::from_terms(self.terms().map(|(spec, c)| (c, spec.shift(s))))
    }

    /// `w ↦ h(w(0)) f(w)`. Anchorless terms are split over the `n = h.len()`
    /// possible anchors first.
    pub fn multiply_state0(&self, h: &[f64]) -> Self {
        let mut out = CylinderFunction::zero();
        for (spec, c) in self.terms() {
            match spec.anchor() {
                Some(a) => out.add_term(c * h[a], spec.clone()),
                None => {
                    for (a, &ha) in h.iter().enumerate() {
                        let anchored = spec.with_anchor(a).expect("anchorless spec accepts any anchor");
                        out.add_term(c * ha, anchored);
                    }
                }
            }
        }
        out
    }

    /// The same function with every term anchored at time 0.
    pub fn anchored(&self, n: usize) -> Self {
        self.multiply_state0(&vec![1.0; n])
    }

    /// Largest coefficient gap over the union of both term sets.
    pub fn max_abs_diff(&self, other: &CylinderFunction) -> f64 {
        let mut worst = 0.0f64;
        for (s, c) in self.terms() {
            worst = worst.max((c - other.coefficient(s)).abs());
        }
        for (s, c) in other.terms() {
            if !self.terms.contains_key(s) {
                worst = worst.max(c.abs());
            }
        }
        worst
    }

    pub fn last_time(&self) -> Option<TimePoint> {
        self.terms.keys().filter_map(CylinderSpec::last_time).max()
    }

    pub fn check_states(&self, n: usize) -> Result<()> {
        self.terms.keys().try_for_each(|s| s.check_states(n))
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    coeff: f64,
    spec: CylinderSpec,
}

impl Serialize for CylinderFunction {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let terms: Vec<TermRepr> = self.terms().map(|(s, c)| TermRepr { coeff: c, spec: s.clone() }).collect();
        terms.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CylinderFunction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let terms: Vec<TermRepr> = Vec::deserialize(deserializer)?;
        Ok(CylinderFunction::from_terms(terms.into_iter().map(|t| (t.coeff, t.spec))))
    }
}

/// The stationary Markov path measure `P` built from a generator and its
/// stationary vector.
#[derive(Debug, Clone)]
pub struct PathMeasure {
    generator: Generator,
    p0: StationaryVector,
    transitions: KernelCache,
}

impl PathMeasure {
    pub fn new(generator: Generator) -> Result<Self> {
        let p0 = stationary_vector(&generator)?;
        let transitions = KernelCache::new(generator.matrix().clone());
        Ok(PathMeasure { generator, p0, transitions })
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn n(&self) -> usize {
        self.generator.n()
    }

    pub fn p0(&self) -> &StationaryVector {
        &self.p0
    }

    pub fn transitions(&self) -> &KernelCache {
        &self.transitions
    }

    /// `P(c)`: the product of transition probabilities between consecutive
    /// constrained times, weighted by `p0` at the first one. An unconstrained
    /// time 0 is marginalized.
    pub fn eval_p(&self, c: &CylinderSpec) -> Result<f64> {
        c.check_states(self.n())?;
        if c.is_full() {
            return Ok(1.0);
        }
        let (v, _) = sweep(c.constraints(), self.p0.vector(), &self.transitions);
        Ok(v.sum())
    }

    /// `∫ f dP`.
    pub fn eval_fn(&self, f: &CylinderFunction) -> Result<f64> {
        f.terms().try_fold(0.0, |acc, (s, c)| Ok(acc + c * self.eval_p(s)?))
    }

    pub(crate) fn p0_vector(&self) -> &DVector<f64> {
        self.p0.vector()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tp(s: &str) -> TimePoint {
        s.parse().unwrap()
    }

    fn spec(pairs: &[(&str, usize)]) -> CylinderSpec {
        CylinderSpec::new(pairs.iter().map(|&(t, a)| (tp(t), a)).collect()).unwrap()
    }

    fn k2() -> PathMeasure {
        PathMeasure::new(Generator::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap()).unwrap()
    }

    #[test]
    fn spec_rejects_conflicts() {
        let err = CylinderSpec::new(vec![(tp("1"), 0), (tp("1"), 1)]).unwrap_err();
        assert_eq!(err.kind(), "InvalidCylinder");
        let s = CylinderSpec::new(vec![(tp("1"), 0), (tp("0"), 1), (tp("1"), 0)]).unwrap();
        assert_eq!(s.constraints(), &[(tp("0"), 1), (tp("1"), 0)]);
    }

    #[test]
    fn json_is_one_based() {
        let s = spec(&[("0", 0), ("0.5", 1)]);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"[["0",1],["0.5",2]]"#);
        let back: CylinderSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<CylinderSpec>(r#"[["0",0]]"#).is_err());
    }

    #[test]
    fn eval_p_examples() {
        let p = k2();
        assert!((p.eval_p(&spec(&[("0", 0)])).unwrap() - 0.5).abs() < 1e-15);
        let v = p.eval_p(&spec(&[("0", 0), ("0.5", 1)])).unwrap();
        assert!((v - 0.1580301).abs() < 1e-6);
        assert_eq!(p.eval_p(&CylinderSpec::full()).unwrap(), 1.0);
        let err = p.eval_p(&spec(&[("0", 2)])).unwrap_err();
        assert_eq!(err.kind(), "StateOutOfRange");
    }

    #[test]
    fn shift_examples() {
        assert_eq!(shift_spec(&spec(&[("0", 0)]), tp("0.5")), spec(&[("0.5", 0)]));
        let c = spec(&[("0", 0), ("1", 1)]);
        assert_eq!(shift_spec(&c, TimePoint::ZERO), c);
    }

    #[test]
    fn eval_fn_examples() {
        let p = k2();
        let f = CylinderFunction::from_terms([(1.0, spec(&[("0", 0)])), (1.0, spec(&[("0", 1)]))]);
        assert!((p.eval_fn(&f).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(p.eval_fn(&CylinderFunction::zero()).unwrap(), 0.0);
        let f = CylinderFunction::from_terms([(2.0, spec(&[("0", 0), ("0.5", 1)]))]);
        assert!((p.eval_fn(&f).unwrap() - 0.3160602).abs() < 1e-6);
    }

    #[test]
    fn multiply_state0_examples() {
        let f = CylinderFunction::indicator(spec(&[("0", 1)]));
        let g = f.multiply_state0(&[3.0, 5.0]);
        assert_eq!(g, CylinderFunction::from_terms([(5.0, spec(&[("0", 1)]))]));

        let f = CylinderFunction::indicator(spec(&[("1", 1)]));
        let g = f.multiply_state0(&[3.0, 5.0]);
        let want =
            CylinderFunction::from_terms([(3.0, spec(&[("0", 0), ("1", 1)])), (5.0, spec(&[("0", 1), ("1", 1)]))]);
        assert_eq!(g, want);

        let f = CylinderFunction::from_terms([(2.0, spec(&[("0", 0), ("1", 1)])), (-1.0, spec(&[("0", 1)]))]);
        assert_eq!(f.multiply_state0(&[1.0, 1.0]), f);
    }

    #[test]
    fn merging_and_products() {
        let a = spec(&[("0", 0)]);
        let mut f = CylinderFunction::from_terms([(1.0, a.clone()), (2.0, a.clone())]);
        assert_eq!(f.len(), 1);
        assert_eq!(f.coefficient(&a), 3.0);
        f.add_term(-3.0, a.clone());
        assert!(f.is_empty());

        let x = CylinderFunction::indicator(spec(&[("0", 0), ("1", 1)]));
        let y = CylinderFunction::indicator(spec(&[("1", 0)]));
        assert!(x.product(&y).is_empty());
        let z = CylinderFunction::indicator(spec(&[("2", 0)]));
        assert_eq!(x.product(&z), CylinderFunction::indicator(spec(&[("0", 0), ("1", 1), ("2", 0)])));
    }

    #[test]
    fn function_json_round_trip() {
        let f = CylinderFunction::from_terms([(0.25, spec(&[("0", 0), ("1.5", 1)])), (-2.0, CylinderSpec::full())]);
        let json = serde_json::to_string(&f).unwrap();
        let back: CylinderFunction = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
    }
}
