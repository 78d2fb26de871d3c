//! Cached matrix exponentials and the forward sweep shared by every
//! cylinder evaluation and transfer operator.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use nalgebra::{DMatrix, DVector};

use crate::ctmc::expm;
use crate::time::TimePoint;

/// `e^{sA}` for a fixed matrix `A`, memoized by the exact time gap `s`.
///
/// Concurrent readers share the cache; a miss computes outside the lock,
/// so racing threads may both compute an entry but always store the same
/// value.
pub struct KernelCache {
    rate: DMatrix<f64>,
    cache: RwLock<HashMap<u64, Arc<DMatrix<f64>>>>,
}

impl KernelCache {
    pub fn new(rate: DMatrix<f64>) -> Self {
        KernelCache { rate, cache: RwLock::new(HashMap::new()) }
    }

    pub fn rate(&self) -> &DMatrix<f64> {
        &self.rate
    }

    pub fn n(&self) -> usize {
        self.rate.nrows()
    }

    pub fn get(&self, gap: TimePoint) -> Arc<DMatrix<f64>> {
        if let Some(k) = self.cache.read().expect("kernel cache poisoned").get(&gap.ticks()) {
            return Arc::clone(k);
        }
        let k = Arc::new(expm(&self.rate, gap.as_f64()));
        self.cache.write().expect("kernel cache poisoned").entry(gap.ticks()).or_insert(k).clone()
    }
}

impl Clone for KernelCache {
    fn clone(&self) -> Self {
        KernelCache::new(self.rate.clone())
    }
}

impl fmt::Debug for KernelCache {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelCache").field("rate", &self.rate).finish_non_exhaustive()
    }
}

/// Moves a weight vector forward in time.
pub(crate) trait Propagator {
    fn advance(&self, v: &DVector<f64>, from: TimePoint, to: TimePoint) -> DVector<f64>;
}

impl Propagator for KernelCache {
    fn advance(&self, v: &DVector<f64>, from: TimePoint, to: TimePoint) -> DVector<f64> {
        match to.checked_sub(from) {
            Some(gap) if !gap.is_zero() => &*self.get(gap) * v,
            _ => v.clone(),
        }
    }
}

/// Uses `inside` on `[0, end)` and `outside` from `end` on.
pub(crate) struct Windowed<'a> {
    pub inside: &'a KernelCache,
    pub outside: &'a KernelCache,
    pub end: TimePoint,
}

impl Propagator for Windowed<'_> {
    fn advance(&self, v: &DVector<f64>, from: TimePoint, to: TimePoint) -> DVector<f64> {
        if to <= self.end {
            self.inside.advance(v, from, to)
        } else if from >= self.end {
            self.outside.advance(v, from, to)
        } else {
            let mid = self.inside.advance(v, from, self.end);
            self.outside.advance(&mid, self.end, to)
        }
    }
}

/// Runs the product formula over `constraints` starting from the time-0
/// weights `init`: advance to each constraint time, then keep only the
/// constrained state. Returns the final weights and the last time reached.
pub(crate) fn sweep(
    constraints: &[(TimePoint, usize)],
    init: &DVector<f64>,
    prop: &dyn Propagator,
) -> (DVector<f64>, TimePoint) {
    let mut v = init.clone();
    let mut now = TimePoint::ZERO;
    for &(time, state) in constraints {
        v = prop.advance(&v, now, time);
        let keep = v[state];
        v.fill(0.0);
        v[state] = keep;
        now = time;
    }
    (v, now)
}
