//! Overdamped Langevin dynamics on the circle and transition counting.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{row_normalize, SparseMatrix, SparseStochasticMatrix};

/// `U(x) = a + b cos x + c cos^2 x + d cos^3 x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Potential {
    /// Dihedral torsion potential of n-butane.
    pub const BUTANE: Potential = Potential {
        a: 2.0567,
        b: -4.0567,
        c: 0.3133,
        d: 6.4267,
    };

    pub fn value(&self, x: f64) -> f64 {
        let c = x.cos();
        self.a + c * (self.b + c * (self.c + c * self.d))
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let c = x.cos();
        -x.sin() * (self.b + c * (2.0 * self.c + 3.0 * self.d * c))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LangevinConfig {
    pub potential: Potential,
    pub dt: f64,
    pub sigma: f64,
    pub steps: u64,
    pub bins: usize,
    /// Initial position in `[0, 2 pi)`.
    pub x0: f64,
    pub seed: u64,
}

impl LangevinConfig {
    /// Desk-scale butane run: `dt = 1e-3`, `sigma = 1`, 30 bins and `5e7`
    /// steps starting from the global minimum at `pi`.
    pub fn butane() -> Self {
        LangevinConfig {
            potential: Potential::BUTANE,
            dt: 1e-3,
            sigma: 1.0,
            steps: 50_000_000,
            bins: 30,
            x0: PI,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dt <= 0.0 || !self.dt.is_finite() {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if self.sigma < 0.0 || !self.sigma.is_finite() {
            return Err(Error::InvalidConfig(format!("sigma must be nonnegative, got {}", self.sigma)));
        }
        if self.bins < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 bins, got {}", self.bins)));
        }
        if self.steps == 0 {
            return Err(Error::InvalidConfig("need at least one step".into()));
        }
        if !self.x0.is_finite() {
            return Err(Error::InvalidConfig("x0 must be finite".into()));
        }
        Ok(())
    }

    pub fn bin_of(&self, x: f64) -> usize {
        ((x * self.bins as f64 / TAU) as usize).min(self.bins - 1)
    }
}

/// Bin indices of an Euler-Maruyama trajectory: the initial state followed
/// by one entry per step, `steps + 1` in total.
#[derive(Debug, Clone)]
pub struct LangevinBins {
    config: LangevinConfig,
    rng: ChaCha8Rng,
    x: f64,
    emitted: u64,
}

impl LangevinBins {
    pub fn position(&self) -> f64 {
        self.x
    }
}

impl Iterator for LangevinBins {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.emitted > self.config.steps {
            return None;
        }
        if self.emitted > 0 {
            let cfg = &self.config;
            let eta: f64 = StandardNormal.sample(&mut self.rng);
            let drift = -cfg.potential.derivative(self.x) * cfg.dt;
            self.x = (self.x + drift + cfg.sigma * cfg.dt.sqrt() * eta).rem_euclid(TAU);
        }
        self.emitted += 1;
        Some(self.config.bin_of(self.x))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.config.steps + 1 - self.emitted) as usize;
        (left, Some(left))
    }
}

pub fn langevin_trajectory(cfg: &LangevinConfig) -> Result<LangevinBins> {
    cfg.validate()?;
    Ok(LangevinBins {
        config: cfg.clone(),
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        x: cfg.x0.rem_euclid(TAU),
        emitted: 0,
    })
}

const DENSE_COUNT_LIMIT: usize = 4096;

/// `C_ij = #{t : s_t = i, s_{t+1} = j}`.
pub fn count_matrix<I: IntoIterator<Item = usize>>(bins: I, num_bins: usize) -> Result<SparseMatrix> {
    let mut iter = bins.into_iter();
    let check = |b: usize| {
        if b < num_bins {
            Ok(b)
        } else {
            Err(Error::BinOutOfRange { bin: b, bins: num_bins })
        }
    };
    let mut prev = check(iter.next().ok_or(Error::EmptyTrajectory)?)?;
    let mut transitions = 0u64;
    let triplets: Vec<(usize, usize, f64)> = if num_bins <= DENSE_COUNT_LIMIT {
        let mut counts = vec![0u64; num_bins * num_bins];
        for b in iter {
            let b = check(b)?;
            counts[prev * num_bins + b] += 1;
            transitions += 1;
            prev = b;
        }
        counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| (k / num_bins, k % num_bins, c as f64))
            .collect()
    } else {
        let mut counts: HashMap<(usize, usize), u64> = HashMap::new();
        for b in iter {
            let b = check(b)?;
            *counts.entry((prev, b)).or_default() += 1;
            transitions += 1;
            prev = b;
        }
        counts.into_iter().map(|((i, j), c)| (i, j, c as f64)).collect()
    };
    if transitions == 0 {
        return Err(Error::EmptyTrajectory);
    }
    SparseMatrix::from_triplets(num_bins, num_bins, triplets)
}

/// Simulates `cfg` and returns the counts with their row-normalized
/// transition matrix.
pub fn estimate_transition_matrix(cfg: &LangevinConfig) -> Result<(SparseMatrix, SparseStochasticMatrix)> {
    let counts = count_matrix(langevin_trajectory(cfg)?, cfg.bins)?;
    let p = row_normalize(&counts)?;
    Ok((counts, p))
}
