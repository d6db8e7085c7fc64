//! Deterministic random streams, chunked reduction and point samplers.

use crate::error::Result;
use crate::fnlib::Shell;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Samples per work unit. Fixed so results do not depend on the thread count.
pub const CHUNK: usize = 1024;

/// Running mean/variance (Welford), mergeable in a fixed order.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Stats {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Stats {
    #[inline]
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    pub fn merge(&mut self, o: &Stats) {
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
        self.m2 += o.m2 + d * d * (self.n as f64 * o.n as f64) / n as f64;
        self.n = n;
    }

    pub fn sample_var(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    /// Variance of the mean.
    pub fn var_of_mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sample_var() / self.n as f64
        }
    }
}

/// Stream ids: tag in the top byte, phase, stratum, chunk.
pub fn stream_id(tag: u8, phase: u8, stratum: u32, chunk: u32) -> u64 {
    ((tag as u64) << 56) | ((phase as u64) << 48) | (((stratum & 0xffff) as u64) << 32) | chunk as u64
}

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// One unit of work: `count` samples drawn from the stream `stream`.
#[derive(Clone, Copy, Debug)]
pub struct Task {
    pub stratum: usize,
    pub stream: u64,
    pub count: usize,
}

pub fn split_tasks(stratum: usize, n: usize, tag: u8, phase: u8, out: &mut Vec<Task>) {
    let chunks = n.div_ceil(CHUNK);
    for c in 0..chunks {
        let count = CHUNK.min(n - c * CHUNK);
        out.push(Task { stratum, stream: stream_id(tag, phase, stratum as u32, c as u32), count });
    }
}

/// Runs every task (in parallel when enabled) and merges results per stratum
/// in task order.
pub fn run_tasks<F>(tasks: &[Task], strata: usize, seed: u64, f: F) -> Result<Vec<Stats>>
where
    F: Fn(&mut ChaCha8Rng, &Task) -> Result<Stats> + Sync,
{
    let work = |t: &Task| {
        let mut rng = rng_for(seed, t.stream);
        f(&mut rng, t)
    };
    #[cfg(feature = "parallel")]
    let results: Vec<Result<Stats>> = {
        use rayon::prelude::*;
        tasks.par_iter().map(work).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<Stats>> = tasks.iter().map(work).collect();
    let mut out = vec![Stats::default(); strata];
    for (t, r) in tasks.iter().zip(results) {
        out[t.stratum].merge(&r?);
    }
    Ok(out)
}

/// Uniform direction on S^{d-1}.
#[inline]
pub fn unit_vector(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    if out.len() == 1 {
        out[0] = if rng.random::<bool>() { 1.0 } else { -1.0 };
        return;
    }
    loop {
        let mut s = 0.0;
        for o in out.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *o = g;
            s += g * g;
        }
        if s > 1e-300 {
            let n = s.sqrt();
            out.iter_mut().for_each(|o| *o /= n);
            return;
        }
    }
}

/// Uniform point in the finite shell `sh` (d-dimensional volume measure).
#[inline]
pub fn point_in_shell(rng: &mut ChaCha8Rng, sh: &Shell, out: &mut [f64]) {
    let d = out.len() as i32;
    unit_vector(rng, out);
    let u: f64 = rng.random();
    let r = if sh.inner == 0.0 {
        sh.outer * u.powf(1.0 / d as f64)
    } else {
        let a = sh.inner.powi(d);
        let b = sh.outer.powi(d);
        (a + u * (b - a)).powf(1.0 / d as f64)
    };
    out.iter_mut().for_each(|o| *o *= r);
}
