//! Deterministic parallel Monte Carlo.
//!
//! Trials are grouped in fixed blocks of [`BLOCK`] trials. Blocks may run on
//! any number of workers but are always merged in block order, so results do
//! not depend on the worker count. Trial `t` under seed `s` draws from ChaCha8
//! seeded with `s` on stream `t`, which makes every trial reproducible alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

pub const BLOCK: u64 = 4096;

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Running mean and variance (Welford, merged with Chan's formula).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, o: &Welford) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * self.n as f64 * o.n as f64 / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate { mean: self.mean, std_err: (self.variance() / self.n.max(1) as f64).sqrt(), n: self.n }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub n: u64,
}

impl Estimate {
    /// Distance to `target` in standard errors (infinite if the error is zero and they differ).
    pub fn z(&self, target: f64) -> f64 {
        let d = self.mean - target;
        if d == 0.0 {
            0.0
        } else if self.std_err == 0.0 {
            f64::INFINITY * d.signum()
        } else {
            d / self.std_err
        }
    }

    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        self.z(target).abs() <= sigmas
    }

    /// Mean exceeds zero by more than `sigmas` standard errors.
    pub fn positive(&self, sigmas: f64) -> bool {
        self.mean > sigmas * self.std_err && self.mean > 0.0
    }
}

/// Runs `trials` trials; `trial(acc, t)` folds trial `t` into a per-block
/// accumulator and `merge` combines blocks in order.
pub fn run_blocks<A, I, T, M>(trials: u64, workers: usize, init: I, trial: T, merge: M) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    T: Fn(&mut A, u64) -> Result<()> + Sync,
    M: Fn(&mut A, A),
{
    let blocks = trials.div_ceil(BLOCK);
    let run = |b: u64| -> Result<A> {
        let mut acc = init();
        for t in b * BLOCK..((b + 1) * BLOCK).min(trials) {
            trial(&mut acc, t)?;
        }
        Ok(acc)
    };
    let parts: Vec<Result<A>> = if workers <= 1 {
        (0..blocks).map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| (0..blocks).into_par_iter().map(run).collect())
    };
    let mut total = init();
    for p in parts {
        merge(&mut total, p?);
    }
    Ok(total)
}

/// Convenience for a fixed number of scalar series per trial.
pub fn run_series<T>(trials: u64, workers: usize, series: usize, trial: T) -> Result<Vec<Welford>>
where
    T: Fn(u64, &mut [f64]) -> Result<()> + Sync,
{
    run_blocks(
        trials,
        workers,
        || vec![Welford::default(); series],
        |acc, t| {
            let mut out = vec![0.0; series];
            trial(t, &mut out)?;
            for (w, x) in acc.iter_mut().zip(&out) {
                w.push(*x);
            }
            Ok(())
        },
        |acc, part| {
            for (a, p) in acc.iter_mut().zip(&part) {
                a.merge(p);
            }
        },
    )
}

/// One stratum: probability mass and the share of trials it receives.
#[derive(Clone, Copy, Debug)]
pub struct Stratum {
    pub probability: f64,
    pub share: f64,
}

/// Stratified estimate `sum_h P_h * mean_h`; `trial(h, t)` samples within stratum `h`.
pub fn run_stratified<T>(strata: &[Stratum], trials: u64, workers: usize, trial: T) -> Result<Estimate>
where
    T: Fn(usize, u64) -> Result<f64> + Sync,
{
    let total_share: f64 = strata.iter().map(|s| s.share).sum();
    let mut offset = 0u64;
    let mut mean = 0.0;
    let mut var = 0.0;
    for (h, s) in strata.iter().enumerate() {
        let n = ((trials as f64) * s.share / total_share).round().max(2.0) as u64;
        let w = run_series(n, workers, 1, |t, out| {
            out[0] = trial(h, offset + t)?;
            Ok(())
        })?;
        offset += n;
        let e = w[0].estimate();
        mean += s.probability * e.mean;
        var += (s.probability * e.std_err).powi(2);
    }
    Ok(Estimate { mean, std_err: var.sqrt(), n: offset })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn welford_merge_matches_direct() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut a = Welford::default();
        xs.iter().for_each(|&x| a.push(x));
        let mut b = Welford::default();
        let mut c = Welford::default();
        xs[..333].iter().for_each(|&x| b.push(x));
        xs[333..].iter().for_each(|&x| c.push(x));
        b.merge(&c);
        assert!((a.mean() - b.mean()).abs() < 1e-12);
        assert!((a.variance() - b.variance()).abs() < 1e-9);
        let m = xs.iter().sum::<f64>() / 1000.0;
        assert!((a.mean() - m).abs() < 1e-12);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let f = |t: u64, out: &mut [f64]| {
            out[0] = trial_rng(9, t).gen::<f64>();
            Ok(())
        };
        let a = run_series(20_000, 1, 1, f).unwrap();
        let b = run_series(20_000, 3, 1, f).unwrap();
        assert_eq!(a, b);
        assert!((a[0].mean() - 0.5).abs() < 0.01);
    }

    #[test]
    fn trial_streams_are_independent_of_order() {
        let x: f64 = trial_rng(1, 5).gen();
        let _: f64 = trial_rng(1, 4).gen();
        assert_eq!(x, trial_rng(1, 5).gen::<f64>());
        assert_ne!(x, trial_rng(1, 6).gen::<f64>());
    }

    #[test]
    fn stratified_estimate_of_rare_event() {
        // E[1{U < 0.01}] split at 0.01
        let strata = [Stratum { probability: 0.01, share: 0.5 }, Stratum { probability: 0.99, share: 0.5 }];
        let e = run_stratified(&strata, 10_000, 1, |h, _| Ok(if h == 0 { 1.0 } else { 0.0 })).unwrap();
        assert_eq!(e.mean, 0.01);
        assert_eq!(e.std_err, 0.0);
    }

    #[test]
    fn z_scores() {
        let e = Estimate { mean: 1.0, std_err: 0.25, n: 10 };
        assert_eq!(e.z(0.0), 4.0);
        assert!(e.within(0.1, 4.0));
        assert!(!e.positive(4.0));
        assert!(Estimate { mean: 0.0, std_err: 0.0, n: 1 }.within(0.0, 4.0));
    }
}
