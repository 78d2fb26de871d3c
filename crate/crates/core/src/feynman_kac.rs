//! Exact path simulation and the Monte Carlo check of
//! `e^{t(L+V)}_{j0,i0} = E_{X_0=i0}[e^{∫_0^t V(X_s) ds}; X_t = j0]`.
//!
//! Path `k` of a run with seed `s` draws from ChaCha8 keyed by `s` on
//! stream `k`, so every path sees the same random numbers whatever the
//! number of worker threads. Per-path results are collected in index
//! order and reduced serially.

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::Serialize;

use crate::ctmc::Generator;
use crate::cylinder::CylinderSpec;
use crate::error::{Error, Result};
use crate::kernel::{sweep, KernelCache};
use crate::perron::Potential;

/// A right-continuous piecewise-constant trajectory on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSample {
    /// Increasing, all in `(0, horizon)`.
    pub jump_times: Vec<f64>,
    /// `states[k]` is occupied on `[jump_times[k-1], jump_times[k])`.
    pub states: Vec<usize>,
    pub horizon: f64,
}

impl PathSample {
    pub fn state_at(&self, t: f64) -> usize {
        self.states[self.jump_times.partition_point(|&s| s <= t)]
    }

    /// `(state, start, end)` for each constant piece.
    pub fn segments(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        let starts = std::iter::once(0.0).chain(self.jump_times.iter().copied());
        let ends = self.jump_times.iter().copied().chain(std::iter::once(self.horizon));
        self.states.iter().copied().zip(starts.zip(ends)).map(|(s, (a, b))| (s, a, b))
    }
}

/// Holding-time laws and cumulative jump tables of the embedded chain.
struct JumpChain {
    holding: Vec<Exp<f64>>,
    /// `targets[j]` lists `(i, cumulative probability)` for jumps out of `j`.
    targets: Vec<Vec<(usize, f64)>>,
}

impl JumpChain {
    fn new(l: &Generator) -> Self {
        let n = l.n();
        let m = l.matrix();
        let holding = (0..n).map(|j| Exp::new(l.exit_rate(j)).expect("exit rates are positive")).collect();
        let targets = (0..n)
            .map(|j| {
                let rate = l.exit_rate(j);
                let mut acc = 0.0;
                let mut table: Vec<(usize, f64)> = (0..n)
                    .filter(|&i| i != j && m[(i, j)] > 0.0)
                    .map(|i| {
                        acc += m[(i, j)] / rate;
                        (i, acc)
                    })
                    .collect();
                if let Some(last) = table.last_mut() {
                    last.1 = 1.0;
                }
                table
            })
            .collect();
        JumpChain { holding, targets }
    }

    /// Simulates from `i0` up to `horizon`, reporting each constant piece.
    fn run(&self, rng: &mut ChaCha8Rng, i0: usize, horizon: f64, mut visit: impl FnMut(usize, f64, f64)) {
        let mut state = i0;
        let mut now = 0.0;
        loop {
            let next = now + self.holding[state].sample(rng);
            if next >= horizon {
                visit(state, now, horizon);
                return;
            }
            visit(state, now, next);
            let r: f64 = rng.random();
            let table = &self.targets[state];
            state = table.iter().find(|&&(_, c)| r < c).unwrap_or(&table[table.len() - 1]).0;
            now = next;
        }
    }
}

fn path_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn check_state(state: usize, n: usize) -> Result<()> {
    if state >= n {
        return Err(Error::StateOutOfRange { state, n });
    }
    Ok(())
}

/// Draws one path from `i0` on `[0, horizon]`.
pub fn sample_path(l: &Generator, i0: usize, horizon: f64, seed: u64) -> Result<PathSample> {
    check_state(i0, l.n())?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::NonPositiveTime);
    }
    let mut rng = path_rng(seed, 0);
    Ok(simulate(&JumpChain::new(l), &mut rng, i0, horizon))
}

fn simulate(chain: &JumpChain, rng: &mut ChaCha8Rng, i0: usize, horizon: f64) -> PathSample {
    let mut jump_times = Vec::new();
    let mut states = Vec::new();
    chain.run(rng, i0, horizon, |s, start, _| {
        if !states.is_empty() {
            jump_times.push(start);
        }
        states.push(s);
    });
    PathSample { jump_times, states, horizon }
}

/// `∫_0^t V(X_s) ds` for a piecewise-constant path.
pub fn action_integral(p: &PathSample, v: &Potential, t: f64) -> Result<f64> {
    if t > p.horizon {
        return Err(Error::TimeBeyondHorizon { t, horizon: p.horizon });
    }
    Ok(p.segments().take_while(|&(_, start, _)| start < t).map(|(s, start, end)| v.get(s) * (end.min(t) - start)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FkTarget {
    pub j0: usize,
    pub i0: usize,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FkEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub target: FkTarget,
}

fn mean_and_error(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Monte Carlo estimate of `e^{t(L+V)}_{j0,i0}` on the global thread pool.
pub fn fk_estimate(
    l: &Generator,
    v: &Potential,
    i0: usize,
    j0: usize,
    t: f64,
    n_paths: usize,
    seed: u64,
) -> Result<FkEstimate> {
    fk_samples(l, v, i0, j0, t, n_paths, seed)
}

/// As [`fk_estimate`] on a dedicated pool of `workers` threads.
#[allow(clippy::too_many_arguments)]
pub fn fk_estimate_with_workers(
    l: &Generator,
    v: &Potential,
    i0: usize,
    j0: usize,
    t: f64,
    n_paths: usize,
    seed: u64,
    workers: usize,
) -> Result<FkEstimate> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    pool.install(|| fk_samples(l, v, i0, j0, t, n_paths, seed))
}

fn fk_samples(
    l: &Generator,
    v: &Potential,
    i0: usize,
    j0: usize,
    t: f64,
    n_paths: usize,
    seed: u64,
) -> Result<FkEstimate> {
    let n = l.n();
    check_state(i0, n)?;
    check_state(j0, n)?;
    if v.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: v.len() });
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::NonPositiveTime);
    }
    if n_paths < 100 {
        return Err(Error::InvalidArgument(format!("n_paths must be at least 100, got {n_paths}")));
    }
    let chain = JumpChain::new(l);
    let samples: Vec<f64> = (0..n_paths as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = path_rng(seed, k);
            let mut action = 0.0;
            let mut last = i0;
            chain.run(&mut rng, i0, t, |s, start, end| {
                action += v.get(s) * (end - start);
                last = s;
            });
            if last == j0 {
                action.exp()
            } else {
                0.0
            }
        })
        .collect();
    let (value, std_error) = mean_and_error(&samples);
    Ok(FkEstimate { value, std_error, n_paths, target: FkTarget { j0, i0, t } })
}

/// `μ^t_{i0}(c)`: the chain started at `i0`, observed on `[0, t]`.
pub fn bridge_cylinder_eval(l: &Generator, i0: usize, t: f64, c: &CylinderSpec) -> Result<f64> {
    check_state(i0, l.n())?;
    c.check_states(l.n())?;
    if let Some(last) = c.last_time() {
        if last.as_f64() > t {
            return Err(Error::TimeBeyondHorizon { t: last.as_f64(), horizon: t });
        }
    }
    if let Some(a) = c.anchor() {
        if a != i0 {
            return Err(Error::AnchorMismatch { expected: i0, found: a });
        }
    }
    let mut start = DVector::zeros(l.n());
    start[i0] = 1.0;
    let (v, _) = sweep(c.constraints(), &start, &KernelCache::new(l.matrix().clone()));
    Ok(v.sum())
}

/// Fraction of simulated paths from `i0` that lie in `c`, with its
/// standard error.
pub fn empirical_cylinder_frequency(
    l: &Generator,
    i0: usize,
    c: &CylinderSpec,
    n_paths: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    check_state(i0, l.n())?;
    c.check_states(l.n())?;
    if n_paths < 2 {
        return Err(Error::InvalidArgument("need at least two paths".into()));
    }
    let horizon = c.last_time().map_or(1.0, |t| t.as_f64()) + 1.0;
    let chain = JumpChain::new(l);
    let hits: Vec<f64> = (0..n_paths as u64)
        .into_par_iter()
        .map(|k| {
            let path = simulate(&chain, &mut path_rng(seed, k), i0, horizon);
            let inside = c.constraints().iter().all(|&(t, a)| path.state_at(t.as_f64()) == a);
            if inside {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(mean_and_error(&hits))
}
