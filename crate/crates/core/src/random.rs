//! Random models and cylinder functions for identity checks.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;

use crate::ctmc::Generator;
use crate::cylinder::{CylinderFunction, CylinderSpec};
use crate::perron::Potential;
use crate::time::TimePoint;

/// Shape of random cylinders: constraint times are multiples of `step`
/// in `[0, horizon]`.
#[derive(Debug, Clone, Copy)]
pub struct CylinderShape {
    pub step: TimePoint,
    pub horizon: TimePoint,
    pub max_constraints: usize,
    /// Probability that time 0 is constrained.
    pub anchor_probability: f64,
}

impl Default for CylinderShape {
    fn default() -> Self {
        CylinderShape {
            step: TimePoint::from_ticks(250_000),
            horizon: TimePoint::from_units(3),
            max_constraints: 4,
            anchor_probability: 0.8,
        }
    }
}

impl CylinderShape {
    fn slots(&self) -> u64 {
        self.horizon.ticks() / self.step.ticks()
    }

    /// A time on the grid, excluding 0.
    pub fn positive_time<R: Rng>(&self, rng: &mut R) -> TimePoint {
        TimePoint::from_ticks(rng.random_range(1..=self.slots()) * self.step.ticks())
    }
}

/// An irreducible generator: a directed cycle through all states plus
/// random extra edges, rates in `[0.1, 2]`.
pub fn random_generator<R: Rng>(rng: &mut R, n: usize) -> Generator {
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            if i != j && (i == (j + 1) % n || rng.random_bool(0.6)) {
                l[(i, j)] = rng.random_range(0.1..2.0);
            }
        }
        l[(j, j)] = -l.column(j).sum();
    }
    Generator::new(l).expect("construction satisfies the generator hypotheses")
}

pub fn random_potential<R: Rng>(rng: &mut R, n: usize, bound: f64) -> Potential {
    Potential::new((0..n).map(|_| rng.random_range(-bound..=bound)).collect()).expect("finite")
}

pub fn random_spec<R: Rng>(rng: &mut R, n: usize, shape: &CylinderShape) -> CylinderSpec {
    let slots = shape.slots() as usize;
    let count = rng.random_range(0..=shape.max_constraints.min(slots));
    let mut constraints: Vec<(TimePoint, usize)> = sample(rng, slots, count)
        .into_iter()
        .map(|k| (TimePoint::from_ticks((k as u64 + 1) * shape.step.ticks()), rng.random_range(0..n)))
        .collect();
    if rng.random_bool(shape.anchor_probability) {
        constraints.push((TimePoint::ZERO, rng.random_range(0..n)));
    }
    CylinderSpec::new(constraints).expect("distinct times")
}

/// A cylinder constraining only times in `[from, from + horizon]`.
pub fn random_future_spec<R: Rng>(rng: &mut R, n: usize, from: TimePoint, shape: &CylinderShape) -> CylinderSpec {
    let mut s = random_spec(rng, n, &CylinderShape { anchor_probability: 0.5, ..*shape });
    if s.is_full() {
        s = CylinderSpec::anchor_only(rng.random_range(0..n));
    }
    s.shift(from)
}

pub fn random_function<R: Rng>(rng: &mut R, n: usize, max_terms: usize, shape: &CylinderShape) -> CylinderFunction {
    let terms = rng.random_range(1..=max_terms);
    CylinderFunction::from_terms((0..terms).map(|_| (rng.random_range(-2.0..2.0), random_spec(rng, n, shape))))
}

/// A function whose every term is anchored at time 0.
pub fn random_anchored_function<R: Rng>(
    rng: &mut R,
    n: usize,
    max_terms: usize,
    shape: &CylinderShape,
) -> CylinderFunction {
    random_function(rng, n, max_terms, &CylinderShape { anchor_probability: 1.0, ..*shape })
}
