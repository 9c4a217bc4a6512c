//! Reproducible randomness: labelled RNG streams, counter-based pair and
//! vertex marks, and Poisson point sampling on a torus.

use std::hash::Hasher;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use siphasher::sip::SipHasher13;
use siphasher::sip128::{Hasher128, SipHasher24};

use crate::error::{contract, Error, Result};
use crate::geometry::{torus_side, SpaceTimePoint, TorusPoint};

/// Default cap on the expected number of sampled points.
pub const DEFAULT_MAX_EXPECTED_POINTS: f64 = 5.0e7;

const STREAM_KEY: u64 = 0x7370_6167_5f73_7472;
const MARK_KEY: u64 = 0x7370_6167_5f6d_726b;

/// Identifies an independent random stream.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_label: String,
    pub replica: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_label: impl Into<String>, replica: u64) -> Self {
        Self {
            master_seed,
            stream_label: stream_label.into(),
            replica,
        }
    }

    /// 256-bit seed derived from master seed, label and replica by keyed hashing.
    pub fn seed_bytes(&self) -> [u8; 32] {
        let mut out = [0u8; 32];
        for (half, chunk) in out.chunks_mut(16).enumerate() {
            let mut h = SipHasher24::new_with_keys(self.master_seed, STREAM_KEY ^ half as u64);
            h.write(self.stream_label.as_bytes());
            h.write_u8(0xff);
            h.write_u64(self.replica);
            chunk.copy_from_slice(&h.finish128().as_bytes());
        }
        out
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.seed_bytes())
    }

    /// A 64-bit value derived from this stream, used to seed nested streams.
    pub fn derive_u64(&self) -> u64 {
        let b = self.seed_bytes();
        u64::from_le_bytes(b[..8].try_into().expect("eight bytes"))
    }
}

#[inline]
fn to_unit(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn derive_key(master: u64, label: &str) -> (u64, u64) {
    let mut h = SipHasher24::new_with_keys(master, MARK_KEY);
    h.write(label.as_bytes());
    let k = h.finish128();
    (k.h1, k.h2)
}

/// Counter-based source of the uniform marks attached to ordered vertex
/// pairs and to single vertices.
#[derive(Clone, Debug)]
pub struct PairMarkOracle {
    master_seed: u64,
    pair_key: (u64, u64),
}

impl PairMarkOracle {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            pair_key: derive_key(master_seed, "pairs"),
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Mark consumed when `younger` tests a connection to `older`.
    pub fn pair_mark(&self, younger: usize, older: usize) -> Result<f64> {
        if younger == older {
            return Err(contract(format!("pair mark requested for identical ids {younger}")));
        }
        Ok(self.pair_mark_unchecked(younger, older))
    }

    #[inline]
    pub(crate) fn pair_mark_unchecked(&self, younger: usize, older: usize) -> f64 {
        let mut h = SipHasher13::new_with_keys(self.pair_key.0, self.pair_key.1);
        h.write_u64(younger as u64);
        h.write_u64(older as u64);
        to_unit(h.finish())
    }

    /// Mark keyed by `(purpose, id)`.
    pub fn vertex_mark(&self, purpose: &str, id: usize) -> f64 {
        self.vertex_marks(purpose).mark(id)
    }

    /// Precomputes the key for repeated vertex marks under one purpose.
    pub fn vertex_marks(&self, purpose: &str) -> VertexMarks {
        let label = format!("vertex:{purpose}");
        VertexMarks {
            key: derive_key(self.master_seed, &label),
        }
    }
}

/// Vertex marks for a fixed purpose label.
#[derive(Clone, Debug)]
pub struct VertexMarks {
    key: (u64, u64),
}

impl VertexMarks {
    #[inline]
    pub fn mark(&self, id: usize) -> f64 {
        let mut h = SipHasher13::new_with_keys(self.key.0, self.key.1);
        h.write_u64(id as u64);
        to_unit(h.finish())
    }
}

/// Samples a homogeneous Poisson process on `torus(volume) x (0, horizon]`
/// with the default resource cap.
pub fn sample_poisson_points(
    d: usize,
    volume: f64,
    horizon: f64,
    intensity: f64,
    seed: &SeedSpec,
) -> Result<Vec<SpaceTimePoint>> {
    sample_poisson_points_capped(d, volume, horizon, intensity, seed, DEFAULT_MAX_EXPECTED_POINTS)
}

/// As [`sample_poisson_points`], refusing when the expected count exceeds `cap`.
pub fn sample_poisson_points_capped(
    d: usize,
    volume: f64,
    horizon: f64,
    intensity: f64,
    seed: &SeedSpec,
    cap: f64,
) -> Result<Vec<SpaceTimePoint>> {
    if d == 0 {
        return Err(contract("dimension must be at least 1"));
    }
    for (name, v) in [("volume", volume), ("horizon", horizon), ("intensity", intensity)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(contract(format!("{name} must be positive and finite, got {v}")));
        }
    }
    let mean = intensity * volume * horizon;
    if mean > cap {
        return Err(Error::Resource { expected: mean, cap });
    }
    let mut rng = seed.rng();
    let count = Poisson::new(mean)
        .map_err(|e| contract(format!("invalid Poisson mean {mean}: {e}")))?
        .sample(&mut rng) as usize;
    let side = torus_side(volume, d);
    let half = 0.5 * side;

    let mut raw: Vec<(f64, Vec<f64>)> = Vec::with_capacity(count);
    for _ in 0..count {
        let coords: Vec<f64> = (0..d).map(|_| half - rng.random::<f64>() * side).collect();
        let birth = horizon * (1.0 - rng.random::<f64>());
        raw.push((birth, coords));
    }
    loop {
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut tied = false;
        for i in 1..raw.len() {
            if raw[i].0 == raw[i - 1].0 {
                raw[i].0 = horizon * (1.0 - rng.random::<f64>());
                tied = true;
            }
        }
        if !tied {
            break;
        }
    }
    Ok(raw
        .into_iter()
        .map(|(birth, coords)| SpaceTimePoint {
            position: TorusPoint::from_canonical(coords),
            birth,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ks_uniform(mut v: Vec<f64>) -> f64 {
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        v.iter()
            .enumerate()
            .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
            .fold(0.0, f64::max)
    }

    #[test]
    fn poisson_counts_concentrate() {
        let mut inside = 0;
        for r in 0..200 {
            let pts = sample_poisson_points(2, 1.0, 1.0, 1000.0, &SeedSpec::new(7, "pts", r)).unwrap();
            if (880..=1120).contains(&pts.len()) {
                inside += 1;
            }
        }
        assert!(inside >= 198, "{inside}/200 inside");
    }

    #[test]
    fn points_are_sorted_in_domain_and_deterministic() {
        let s = SeedSpec::new(3, "pts", 0);
        let a = sample_poisson_points(3, 8.0, 2.0, 10.0, &s).unwrap();
        let b = sample_poisson_points(3, 8.0, 2.0, 10.0, &s).unwrap();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].birth < w[1].birth));
        for p in &a {
            assert!(p.birth > 0.0 && p.birth <= 2.0);
            assert!(p.position.coords().iter().all(|&c| c > -1.0 && c <= 1.0));
        }
    }

    #[test]
    fn tiny_intensity_is_empty() {
        let empty = (0..100)
            .filter(|&r| {
                sample_poisson_points(1, 1.0, 1.0, 1e-9, &SeedSpec::new(1, "p", r))
                    .unwrap()
                    .is_empty()
            })
            .count();
        assert_eq!(empty, 100);
    }

    #[test]
    fn cap_is_enforced() {
        let err = sample_poisson_points_capped(1, 1e6, 1.0, 1.0, &SeedSpec::new(1, "p", 0), 1e5);
        assert!(matches!(err, Err(Error::Resource { .. })));
        assert!(sample_poisson_points(1, 0.0, 1.0, 1.0, &SeedSpec::new(1, "p", 0)).is_err());
    }

    #[test]
    fn pair_marks_are_keyed_by_ordered_pair() {
        let o = PairMarkOracle::new(11);
        assert_eq!(o.pair_mark(5, 2).unwrap(), o.pair_mark(5, 2).unwrap());
        assert_ne!(o.pair_mark(5, 2).unwrap(), o.pair_mark(2, 5).unwrap());
        assert!(o.pair_mark(4, 4).is_err());
        assert_ne!(o.pair_mark(5, 2).unwrap(), PairMarkOracle::new(12).pair_mark(5, 2).unwrap());
    }

    #[test]
    fn pair_marks_are_uniform() {
        let o = PairMarkOracle::new(2024);
        let marks: Vec<f64> = (0..1000usize)
            .flat_map(|y| (0..1000usize).map(move |x| (y + 1000, x)))
            .map(|(y, x)| o.pair_mark_unchecked(y, x))
            .collect();
        let mut ks = ks_uniform(marks.clone());
        assert!(ks < 0.002, "KS distance {ks}");
        // Lag-one serial correlation along the enumeration order.
        let mean = marks.iter().sum::<f64>() / marks.len() as f64;
        let num: f64 = marks.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        let den: f64 = marks.iter().map(|m| (m - mean).powi(2)).sum();
        assert!((num / den).abs() < 0.005);
        ks = ks_uniform(marks.into_iter().take(1000).collect());
        assert!(ks < 0.06);
    }

    #[test]
    fn vertex_marks_are_uniform_and_independent_of_pair_marks() {
        let o = PairMarkOracle::new(99);
        let vm = o.vertex_marks("perc");
        let n = 100_000usize;
        let v: Vec<f64> = (0..n).map(|i| vm.mark(i)).collect();
        assert_eq!(vm.mark(17), o.vertex_mark("perc", 17));
        assert!(ks_uniform(v.clone()) < 0.005);
        let p: Vec<f64> = (0..n).map(|i| o.pair_mark_unchecked(i + 1, i)).collect();
        let mv = v.iter().sum::<f64>() / n as f64;
        let mp = p.iter().sum::<f64>() / n as f64;
        let cov: f64 = v.iter().zip(&p).map(|(a, b)| (a - mv) * (b - mp)).sum::<f64>() / n as f64;
        let corr = cov / (1.0 / 12.0);
        // Correlation of independent uniforms has sd 1/sqrt(n); allow 4 sd.
        assert!(corr.abs() < 4.0 / (n as f64).sqrt(), "corr {corr}");
        let other = o.vertex_marks("other");
        assert_ne!(vm.mark(3), other.mark(3));
    }

    #[test]
    fn seed_streams_differ_by_label_and_replica() {
        let a = SeedSpec::new(1, "a", 0).seed_bytes();
        assert_ne!(a, SeedSpec::new(1, "b", 0).seed_bytes());
        assert_ne!(a, SeedSpec::new(1, "a", 1).seed_bytes());
        assert_ne!(a, SeedSpec::new(2, "a", 0).seed_bytes());
        assert_eq!(a, SeedSpec::new(1, "a", 0).seed_bytes());
    }
}
