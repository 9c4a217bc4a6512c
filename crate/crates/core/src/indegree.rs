//! The indegree of a single vertex as a time-inhomogeneous pure birth
//! process: started at zero at the vertex's birth time `r`, it jumps from
//! `k` to `k+1` at rate `f(k)/s` at time `s`.
//!
//! In logarithmic time the rate is the constant `f(k)` between jumps, so a
//! path is simulated exactly with exponential clocks.

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::model::ModelParams;
use crate::randomness::SeedSpec;
use crate::stats::{linear_slope, mean};

/// Stream label of the per-replica generators.
pub const INDEGREE_STREAM: &str = "indegree";

/// Ten `(r, s)` pairs used by the mean check unless a grid is given.
pub const DEFAULT_MEAN_GRID: [(f64, f64); 10] = [
    (0.01, 0.1),
    (0.01, 0.5),
    (0.01, 1.0),
    (0.05, 0.2),
    (0.05, 1.0),
    (0.1, 0.5),
    (0.1, 1.0),
    (0.2, 0.6),
    (0.3, 1.0),
    (0.5, 1.0),
];

/// Jump times of one path on `(birth, horizon]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BirthProcessPath {
    pub birth: f64,
    pub horizon: f64,
    pub jumps: Vec<f64>,
}

impl BirthProcessPath {
    /// Number of jumps up to and including time `s`.
    pub fn value(&self, s: f64) -> u64 {
        self.jumps.partition_point(|&j| j <= s) as u64
    }
}

/// Simulates one path with the given generator. Paths for a longer horizon
/// from the same generator state extend the shorter ones.
pub fn simulate_with<R: Rng + ?Sized>(params: &ModelParams, r: f64, horizon: f64, rng: &mut R) -> Result<BirthProcessPath> {
    if !(r > 0.0 && r.is_finite()) || !(horizon >= r) || !horizon.is_finite() {
        return Err(contract(format!("need 0 < r <= horizon, got r={r}, horizon={horizon}")));
    }
    let end = horizon.ln();
    let mut clock = r.ln();
    let mut jumps = Vec::new();
    loop {
        let rate = params.attachment_value(jumps.len() as u64);
        let wait: f64 = rng.sample(Exp1);
        clock += wait / rate;
        if clock > end {
            break;
        }
        jumps.push(clock.exp());
    }
    Ok(BirthProcessPath { birth: r, horizon, jumps })
}

/// Simulates one path from the stream of `(seed, replica)`.
pub fn simulate_birth_process(params: &ModelParams, r: f64, horizon: f64, seed: u64, replica: u64) -> Result<BirthProcessPath> {
    simulate_with(params, r, horizon, &mut SeedSpec::new(seed, INDEGREE_STREAM, replica).rng())
}

/// Closed-form mean `E Z(s) = (beta/gamma)((s/r)^gamma - 1)`.
pub fn expected_indegree(params: &ModelParams, r: f64, s: f64) -> f64 {
    params.beta() / params.gamma() * ((s / r).powf(params.gamma()) - 1.0)
}

fn check_replicas(replicas: usize) -> Result<()> {
    if replicas < 2 {
        return Err(contract("at least two replicas are required"));
    }
    Ok(())
}

/// Values of `Z` at each of `times` for every replica, computed in
/// parallel.
fn sample_values(params: &ModelParams, r: f64, times: &[f64], replicas: usize, seed: u64) -> Result<Vec<Vec<u64>>> {
    let horizon = times.iter().copied().fold(r, f64::max);
    (0..replicas as u64)
        .into_par_iter()
        .map(|i| {
            let path = simulate_birth_process(params, r, horizon, seed, i)?;
            Ok(times.iter().map(|&s| path.value(s)).collect())
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanRow {
    pub r: f64,
    pub s: f64,
    pub replicas: usize,
    pub mean: f64,
    pub std_error: f64,
    pub expected: f64,
}

impl MeanRow {
    /// Deviation from the closed form in standard errors.
    pub fn z_score(&self) -> f64 {
        if self.std_error > 0.0 {
            (self.mean - self.expected) / self.std_error
        } else if self.mean == self.expected {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Monte Carlo mean of `Z(s)` started at `r` for every grid pair.
pub fn mean_check(params: &ModelParams, grid: &[(f64, f64)], replicas: usize, seed: u64) -> Result<Vec<MeanRow>> {
    check_replicas(replicas)?;
    grid.iter()
        .enumerate()
        .map(|(cell, &(r, s))| {
            if !(r < s) {
                return Err(contract(format!("grid point needs r < s, got ({r}, {s})")));
            }
            let cell_seed = SeedSpec::new(seed, "indegree-mean", cell as u64).derive_u64();
            let values: Vec<f64> =
                sample_values(params, r, &[s], replicas, cell_seed)?.into_iter().map(|v| v[0] as f64).collect();
            let m = mean(&values);
            let var = values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (replicas - 1) as f64;
            Ok(MeanRow {
                r,
                s,
                replicas,
                mean: m,
                std_error: (var / replicas as f64).sqrt(),
                expected: expected_indegree(params, r, s),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailTable {
    /// `(lambda, P(Z(s) >= lambda (s/r)^gamma))` per grid value.
    pub rows: Vec<(f64, f64)>,
    /// Least-squares slope of the log exceedance against lambda over the
    /// positive rows.
    pub slope: f64,
    /// Bootstrap 95% upper quantile of the slope.
    pub slope_upper: f64,
}

fn exceedances(values: &[u64], thresholds: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    thresholds
        .iter()
        .map(|&c| values.iter().filter(|&&z| z as f64 >= c).count() as f64 / n)
        .collect()
}

fn log_slope(lambdas: &[f64], exc: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = lambdas.iter().zip(exc).filter(|(_, &e)| e > 0.0).map(|(&l, &e)| (l, e.ln())).collect();
    linear_slope(&pts).ok()
}

/// Bootstrap resamples used for the slope's upper confidence bound.
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Empirical exceedance probabilities of `Z(s)` over `lambda (s/r)^gamma`.
pub fn tail_bound_check(params: &ModelParams, r: f64, s: f64, lambdas: &[f64], replicas: usize, seed: u64) -> Result<TailTable> {
    check_replicas(replicas)?;
    if !(r < s) {
        return Err(contract(format!("need r < s, got r={r}, s={s}")));
    }
    let scale = (s / r).powf(params.gamma());
    let thresholds: Vec<f64> = lambdas.iter().map(|l| l * scale).collect();
    let values: Vec<u64> = sample_values(params, r, &[s], replicas, seed)?.into_iter().map(|v| v[0]).collect();
    let exc = exceedances(&values, &thresholds);
    let slope = log_slope(lambdas, &exc)
        .ok_or_else(|| contract("fewer than two grid values have positive exceedance"))?;
    let mut rng = SeedSpec::new(seed, "indegree-bootstrap", 0).rng();
    let mut boot = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut resample = vec![0u64; values.len()];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        for slot in resample.iter_mut() {
            *slot = values[rng.random_range(0..values.len())];
        }
        if let Some(b) = log_slope(lambdas, &exceedances(&resample, &thresholds)) {
            boot.push(b);
        }
    }
    boot.sort_by(f64::total_cmp);
    let slope_upper = if boot.is_empty() {
        slope
    } else {
        boot[((boot.len() as f64 * 0.95).ceil() as usize).clamp(1, boot.len()) - 1]
    };
    Ok(TailTable {
        rows: lambdas.iter().copied().zip(exc).collect(),
        slope,
        slope_upper,
    })
}

/// Conditional moments of `(1 + Z(s'))/(1 + Z(s))` given `Z(s) = value`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentBucket {
    pub value: u64,
    pub count: usize,
    /// Mean of the ratio to the power `p`, one entry per exponent.
    pub moments: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub exponents: Vec<f64>,
    pub buckets: Vec<MomentBucket>,
    /// Per exponent, the largest bucket moment divided by
    /// `(s'/s)^(p gamma)` among buckets with at least `min_count` samples.
    pub max_normalized: Vec<f64>,
    pub min_count: usize,
}

/// Moment ratios bucketed by the value at `s`.
pub fn moment_ratio_check(
    params: &ModelParams,
    r: f64,
    s: f64,
    s_prime: f64,
    exponents: &[f64],
    replicas: usize,
    min_count: usize,
    seed: u64,
) -> Result<MomentTable> {
    check_replicas(replicas)?;
    if !(r < s && s <= s_prime) {
        return Err(contract(format!("need r < s <= s', got {r}, {s}, {s_prime}")));
    }
    let values = sample_values(params, r, &[s, s_prime], replicas, seed)?;
    let max_value = values.iter().map(|v| v[0]).max().unwrap_or(0) as usize;
    let mut sums = vec![vec![0.0; exponents.len()]; max_value + 1];
    let mut counts = vec![0usize; max_value + 1];
    for v in &values {
        let ratio = (1 + v[1]) as f64 / (1 + v[0]) as f64;
        let b = v[0] as usize;
        counts[b] += 1;
        for (acc, &p) in sums[b].iter_mut().zip(exponents) {
            *acc += ratio.powf(p);
        }
    }
    let buckets: Vec<MomentBucket> = (0..=max_value)
        .filter(|&b| counts[b] > 0)
        .map(|b| MomentBucket {
            value: b as u64,
            count: counts[b],
            moments: sums[b].iter().map(|x| x / counts[b] as f64).collect(),
        })
        .collect();
    let growth = s_prime / s;
    let max_normalized = exponents
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            buckets
                .iter()
                .filter(|b| b.count >= min_count)
                .map(|b| b.moments[i] / growth.powf(p * params.gamma()))
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(MomentTable {
        exponents: exponents.to_vec(),
        buckets,
        max_normalized,
        min_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> ModelParams {
        ModelParams::new(1, 0.5, 0.5, 2.0, 0.5).unwrap()
    }

    #[test]
    fn degenerate_horizon_has_no_jumps() {
        let path = simulate_birth_process(&params(), 0.3, 0.3, 1, 0).unwrap();
        assert!(path.jumps.is_empty());
        assert_eq!(path.value(0.3), 0);
        assert!(simulate_birth_process(&params(), 0.3, 0.2, 1, 0).is_err());
        assert!(simulate_birth_process(&params(), 0.0, 0.2, 1, 0).is_err());
    }

    #[test]
    fn longer_horizons_extend_paths() {
        for replica in 0..50 {
            let short = simulate_birth_process(&params(), 0.01, 0.3, 9, replica).unwrap();
            let long = simulate_birth_process(&params(), 0.01, 1.0, 9, replica).unwrap();
            assert_eq!(&long.jumps[..short.jumps.len()], &short.jumps[..]);
            assert!(long.jumps[short.jumps.len()..].iter().all(|&j| j > 0.3));
            assert!(long.jumps.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn mean_at_reference_point() {
        // f(k) = k/2 + 1/2 from r = 0.01 to 1: mean (1)(10 - 1) = 9.
        let p = params();
        assert!((expected_indegree(&p, 0.01, 1.0) - 9.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 10_000;
        let total: u64 = (0..n).map(|_| simulate_with(&p, 0.01, 1.0, &mut rng).unwrap().value(1.0)).sum();
        let m = total as f64 / n as f64;
        assert!((m - 9.0).abs() < 0.45, "{m}");
    }

    #[test]
    fn tail_rows_are_monotone() {
        let table = tail_bound_check(&params(), 0.01, 1.0, &[0.0, 1.0, 2.0, 3.0, 4.0], 5000, 4).unwrap();
        assert_eq!(table.rows[0].1, 1.0);
        assert!(table.rows.windows(2).all(|w| w[1].1 <= w[0].1));
        assert!(table.slope < 0.0);
    }

    #[test]
    fn moments_at_equal_times_are_one() {
        let t = moment_ratio_check(&params(), 0.01, 0.5, 0.5, &[1.0, 2.0], 2000, 1, 5).unwrap();
        for b in &t.buckets {
            assert!(b.moments.iter().all(|&m| m == 1.0));
        }
        let t = moment_ratio_check(&params(), 0.01, 0.25, 1.0, &[0.5, 1.0, 2.0], 2000, 1, 5).unwrap();
        for b in &t.buckets {
            assert!(b.moments.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
