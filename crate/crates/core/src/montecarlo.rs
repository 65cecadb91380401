//! Seeded Monte Carlo estimates of the average secrecy rate.
//!
//! Samples are drawn in fixed-size blocks. Block `i` owns the ChaCha8 stream
//! `i` of the master seed, so every sample is a pure function of
//! `(master_seed, sample index)`. Worker threads only decide which blocks run
//! where; per-block accumulators are merged in block order, which makes the
//! output bit-identical for any worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelError, SrfParams, SrfSampler};
use crate::secrecy::{secrecy_capacity, FadedLinks, FblConfig, FblPenalty, SecrecyError, SnrPair};

/// Samples per RNG stream.
pub const BLOCK_SIZE: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("invalid Monte Carlo configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Secrecy(#[from] SecrecyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub samples: u64,
    pub master_seed: u64,
    /// Worker threads.
    pub streams: usize,
    /// Average `max(R_s, 0)` instead of the raw rate.
    #[serde(default = "McConfig::default_clamp")]
    pub clamp_negative: bool,
}

impl McConfig {
    fn default_clamp() -> bool {
        true
    }

    pub fn validate(&self) -> Result<(), McError> {
        if self.samples < 1 {
            return Err(McError::Config("samples must be at least 1".into()));
        }
        if self.streams < 1 {
            return Err(McError::Config("streams must be at least 1".into()));
        }
        Ok(())
    }

    fn blocks(&self) -> u64 {
        self.samples.div_ceil(BLOCK_SIZE)
    }

    fn block_len(&self, block: u64) -> u64 {
        BLOCK_SIZE.min(self.samples - block * BLOCK_SIZE)
    }
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: 1_000_000,
            master_seed: 20_250_101,
            streams: 4,
            clamp_negative: true,
        }
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Monte Carlo estimate of the average secrecy rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecrecyEstimate {
    /// Mean rate, clamped per draw if `clamp_negative` is set.
    pub mean: f64,
    pub std_error: f64,
    pub samples_used: u64,
    /// Fraction of draws with a negative raw rate.
    pub clamped_fraction: f64,
    /// Unclamped mean.
    pub raw_mean: f64,
    pub raw_std_error: f64,
}

/// Rate and secrecy capacity estimated on the same draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecrecySummary {
    pub rate: SecrecyEstimate,
    /// `E[C_s]`, the infinite-blocklength limit.
    pub capacity: MeanEstimate,
    /// Paired difference `E[R_s − C_s]` of the reported (possibly clamped) rate.
    pub rate_minus_capacity: MeanEstimate,
}

/// Welford accumulator with Chan's pairwise merge.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    fn estimate(&self) -> MeanEstimate {
        let std_error = if self.count > 1 {
            (self.m2 / (self.count - 1) as f64 / self.count as f64).sqrt()
        } else {
            0.0
        };
        MeanEstimate {
            mean: self.mean,
            std_error,
        }
    }
}

/// Runs `per_block` over every block on `streams` workers and folds the
/// results in block order.
fn run_blocks<A, F>(mc: &McConfig, per_block: F) -> Result<A, McError>
where
    A: Send + Default,
    A: MergeInto,
    F: Fn(&mut ChaCha8Rng, u64) -> A + Sync,
{
    mc.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(mc.streams)
        .build()
        .map_err(|e| McError::Config(e.to_string()))?;
    let partials: Vec<A> = pool.install(|| {
        (0..mc.blocks())
            .into_par_iter()
            .map(|block| {
                let mut rng = ChaCha8Rng::seed_from_u64(mc.master_seed);
                rng.set_stream(block);
                per_block(&mut rng, mc.block_len(block))
            })
            .collect()
    });
    let mut total = A::default();
    for part in &partials {
        total.merge_from(part);
    }
    Ok(total)
}

trait MergeInto {
    fn merge_from(&mut self, other: &Self);
}

#[derive(Debug, Clone, Copy, Default)]
struct RateAccumulator {
    reported: Moments,
    raw: Moments,
    capacity: Moments,
    difference: Moments,
    negative: u64,
}

impl MergeInto for RateAccumulator {
    fn merge_from(&mut self, other: &Self) {
        self.reported.merge(&other.reported);
        self.raw.merge(&other.raw);
        self.capacity.merge(&other.capacity);
        self.difference.merge(&other.difference);
        self.negative += other.negative;
    }
}

/// Estimates the average secrecy rate together with `E[C_s]` on the same
/// draws. Bob and Eve fade independently.
pub fn estimate_secrecy_summary(
    links: &FadedLinks,
    cfg: &FblConfig,
    mc: &McConfig,
) -> Result<SecrecySummary, McError> {
    let bob = SrfSampler::new(&links.srf_b)?;
    let eve = SrfSampler::new(&links.srf_e)?;
    let penalty = FblPenalty::new(cfg)?;
    let (scale_b, scale_e) = (links.scale_b, links.scale_e);
    let clamp = mc.clamp_negative;

    let acc = run_blocks(mc, |rng, len| {
        let mut acc = RateAccumulator::default();
        for _ in 0..len {
            let h_b = bob.draw(rng).envelope_sq;
            let h_e = eve.draw(rng).envelope_sq;
            let snrs = SnrPair::new(scale_b * h_b, scale_e * h_e);
            let raw = penalty.rate(snrs);
            let reported = if clamp { raw.max(0.0) } else { raw };
            let cs = secrecy_capacity(snrs);
            acc.raw.push(raw);
            acc.reported.push(reported);
            acc.capacity.push(cs);
            acc.difference.push(reported - cs);
            if raw < 0.0 {
                acc.negative += 1;
            }
        }
        acc
    })?;

    let reported = acc.reported.estimate();
    let raw = acc.raw.estimate();
    Ok(SecrecySummary {
        rate: SecrecyEstimate {
            mean: reported.mean,
            std_error: reported.std_error,
            samples_used: acc.reported.count,
            clamped_fraction: acc.negative as f64 / acc.reported.count as f64,
            raw_mean: raw.mean,
            raw_std_error: raw.std_error,
        },
        capacity: acc.capacity.estimate(),
        rate_minus_capacity: acc.difference.estimate(),
    })
}

/// Monte Carlo estimate of the average finite-blocklength secrecy rate.
pub fn estimate_avg_secrecy(
    links: &FadedLinks,
    cfg: &FblConfig,
    mc: &McConfig,
) -> Result<SecrecyEstimate, McError> {
    Ok(estimate_secrecy_summary(links, cfg, mc)?.rate)
}

/// Bob's ergodic capacity next to its Jensen floor, from one sample set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityGap {
    /// `E[log₂(1 + SNR_B)]`.
    pub ergodic: MeanEstimate,
    /// `log₂(1 + exp(E[ln SNR_B]))`, standard error by the delta method.
    pub jensen_floor: MeanEstimate,
}

#[derive(Debug, Clone, Copy, Default)]
struct GapAccumulator {
    capacity: Moments,
    log_snr: Moments,
}

impl MergeInto for GapAccumulator {
    fn merge_from(&mut self, other: &Self) {
        self.capacity.merge(&other.capacity);
        self.log_snr.merge(&other.log_snr);
    }
}

pub fn estimate_avg_capacity_gap(
    srf_b: &SrfParams,
    scale_b: f64,
    mc: &McConfig,
) -> Result<CapacityGap, McError> {
    if !(scale_b > 0.0) {
        return Err(McError::Config(format!("scale_b = {scale_b} must be positive")));
    }
    let bob = SrfSampler::new(srf_b)?;
    let acc = run_blocks(mc, |rng, len| {
        let mut acc = GapAccumulator::default();
        for _ in 0..len {
            let snr = scale_b * bob.draw(rng).envelope_sq;
            acc.capacity.push(snr.ln_1p() / std::f64::consts::LN_2);
            acc.log_snr.push(snr.ln());
        }
        acc
    })?;
    let log_snr = acc.log_snr.estimate();
    let geo = log_snr.mean.exp();
    // d/du log₂(1 + eᵘ) = eᵘ / ((1 + eᵘ) ln 2)
    let slope = geo / ((1.0 + geo) * std::f64::consts::LN_2);
    Ok(CapacityGap {
        ergodic: acc.capacity.estimate(),
        jensen_floor: MeanEstimate {
            mean: geo.ln_1p() / std::f64::consts::LN_2,
            std_error: slope * log_snr.std_error,
        },
    })
}
