//! Seeded Monte Carlo plumbing.
//!
//! Replication `i` of a run with master seed `s` draws from ChaCha8 seeded
//! with `s` on stream `i`, so results do not depend on how replications are
//! scheduled. Replications are grouped in fixed chunks of [`CHUNK`] whose
//! accumulators are merged in chunk order; a parallel [`Runner`] that keeps
//! that order produces bit-identical output to [`Sequential`].

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};

use crate::error::{Error, Result};

pub type McRng = ChaCha8Rng;

/// Replications per chunk.
pub const CHUNK: u64 = 1024;

pub fn replication_rng(seed: u64, index: u64) -> McRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub trait Accumulator: Clone + Send + Sync {
    fn merge(&mut self, other: Self);
}

/// Executes replications `0..n`, each with its own RNG.
pub trait Runner {
    fn run<A, F>(&self, n: u64, seed: u64, init: &A, body: F) -> A
    where
        A: Accumulator,
        F: Fn(&mut A, &mut McRng, u64) + Sync;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Runner for Sequential {
    fn run<A, F>(&self, n: u64, seed: u64, init: &A, body: F) -> A
    where
        A: Accumulator,
        F: Fn(&mut A, &mut McRng, u64) + Sync,
    {
        let mut total = init.clone();
        for chunk in 0..n.div_ceil(CHUNK) {
            total.merge(run_chunk(chunk, n, seed, init, &body));
        }
        total
    }
}

/// Runs one chunk of replications; building block for parallel runners.
pub fn run_chunk<A, F>(chunk: u64, n: u64, seed: u64, init: &A, body: &F) -> A
where
    A: Accumulator,
    F: Fn(&mut A, &mut McRng, u64),
{
    let mut acc = init.clone();
    for i in chunk * CHUNK..((chunk + 1) * CHUNK).min(n) {
        let mut rng = replication_rng(seed, i);
        body(&mut acc, &mut rng, i);
    }
    acc
}

/// Running mean and variance (Welford, merged with Chan's formula).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            f64::NAN
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate { value: self.mean, se: (self.variance() / self.n as f64).sqrt() }
    }
}

impl Accumulator for Moments {
    fn merge(&mut self, o: Moments) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64) * (o.n as f64) / n as f64;
        self.n = n;
    }
}

/// A fixed-length vector of [`Moments`].
#[derive(Debug, Clone, PartialEq)]
pub struct MomentsVec(pub Vec<Moments>);

impl MomentsVec {
    pub fn new(len: usize) -> Self {
        MomentsVec(vec![Moments::default(); len])
    }

    pub fn estimates(&self) -> Vec<Estimate> {
        self.0.iter().map(Moments::estimate).collect()
    }
}

impl Accumulator for MomentsVec {
    fn merge(&mut self, o: MomentsVec) {
        for (a, b) in self.0.iter_mut().zip(o.0) {
            a.merge(b);
        }
    }
}

/// Monte Carlo point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    /// Whether `x` lies within `k` standard errors.
    pub fn covers(&self, x: f64, k: f64) -> bool {
        (x - self.value).abs() <= k * self.se
    }
}

/// Innovation distribution; draws are scaled to variance `σ²(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case"))]
pub enum Noise {
    Gaussian,
    StudentT { df: f64 },
}

impl Default for Noise {
    fn default() -> Self {
        Noise::Gaussian
    }
}

impl Noise {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Noise::Gaussian => Ok(()),
            Noise::StudentT { df } if df > 4.0 && df.is_finite() => Ok(()),
            Noise::StudentT { .. } => Err(Error::invalid("student-t noise needs df > 4")),
        }
    }

    /// Unit-variance draw.
    pub fn standard<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Noise::Gaussian => StandardNormal.sample(rng),
            Noise::StudentT { df } => {
                let t: f64 = StudentT::new(df).expect("validated df").sample(rng);
                t * ((df - 2.0) / df).sqrt()
            }
        }
    }

    pub fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R, sigma2: f64) -> f64 {
        self.standard(rng) * sigma2.sqrt()
    }
}

pub fn standard_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}
