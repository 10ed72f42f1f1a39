//! Per-sample histograms, cumulative histograms, and the K-sample mean
//! cumulative summary that feeds the dissimilarity index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How multi-channel pixels are histogrammed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelPolicy {
    /// All channels pooled into one set of bins (default).
    #[default]
    Pooled,
    /// One block of bins per channel, concatenated in channel order.
    PerChannel,
}

/// Uniform binning over `[low, high)`. Values outside the range clamp into
/// the end bins (fused reflectance can slightly exceed 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramConfig {
    pub n_bins: usize,
    pub low: f64,
    pub high: f64,
    pub channel_policy: ChannelPolicy,
}

impl HistogramConfig {
    pub fn new(n_bins: usize, low: f64, high: f64, channel_policy: ChannelPolicy) -> Result<Self> {
        if n_bins < 2 {
            return Err(Error::InvalidConfig(format!(
                "n_bins must be at least 2, got {n_bins}"
            )));
        }
        if !(low.is_finite() && high.is_finite() && low < high) {
            return Err(Error::InvalidConfig(format!(
                "value range [{low}, {high}) is not a finite non-empty interval"
            )));
        }
        Ok(HistogramConfig {
            n_bins,
            low,
            high,
            channel_policy,
        })
    }

    /// 256 bins over [0, 1), all channels pooled — the 8-bit imagery default.
    pub fn default_256() -> Self {
        HistogramConfig {
            n_bins: 256,
            low: 0.0,
            high: 1.0,
            channel_policy: ChannelPolicy::Pooled,
        }
    }

    fn bin_of(&self, value: f64) -> usize {
        let scaled = (value - self.low) * self.n_bins as f64 / (self.high - self.low);
        if scaled <= 0.0 {
            0
        } else {
            (scaled.floor() as usize).min(self.n_bins - 1)
        }
    }
}

/// Bin counts for one sample. For the per-channel policy, `counts` holds
/// `channels` consecutive blocks of `n_bins` each; pooled histograms have a
/// single block.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub counts: Vec<u64>,
    pub channels: u32,
    pub config: HistogramConfig,
}

/// Prefix sums of a histogram's counts over the whole (concatenated) vector;
/// monotone non-decreasing, last entry equal to the total value count.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeHistogram {
    pub cum: Vec<u64>,
    pub channels: u32,
    pub config: HistogramConfig,
}

impl CumulativeHistogram {
    /// Total number of histogrammed values.
    pub fn total(&self) -> u64 {
        *self
            .cum
            .last()
            .expect("cumulative histogram is never empty")
    }
}

/// The K-sample aggregate entering the dissimilarity index:
/// `per_bin[b] = (1/K)·Σ_k cum_k[b] / #bins` and `scalar` is the mean of the
/// `per_bin` entries. `#bins` is the full vector length (bins × channel
/// blocks), so both reductions agree for pooled histograms.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanCumulativeSummary {
    pub scalar: f64,
    pub per_bin: Vec<f64>,
    pub k: usize,
}

/// Histogram a flat, channel-interleaved pixel sequence.
pub fn sample_histogram(
    pixels: &[f32],
    channels: u32,
    config: &HistogramConfig,
) -> Result<Histogram> {
    if pixels.is_empty() {
        return Err(Error::EmptyPixels);
    }
    if channels == 0 {
        return Err(Error::InvalidConfig("channels must be at least 1".into()));
    }
    for (i, &v) in pixels.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteInput(format!(
                "pixel value at flat index {i} is {v}"
            )));
        }
    }
    match config.channel_policy {
        ChannelPolicy::Pooled => {
            let mut counts = vec![0u64; config.n_bins];
            for &v in pixels {
                counts[config.bin_of(v as f64)] += 1;
            }
            Ok(Histogram {
                counts,
                channels: 1,
                config: *config,
            })
        }
        ChannelPolicy::PerChannel => {
            let ch = channels as usize;
            if !pixels.len().is_multiple_of(ch) {
                return Err(Error::InvalidConfig(format!(
                    "{} pixel values are not divisible by {ch} channels",
                    pixels.len()
                )));
            }
            let mut counts = vec![0u64; config.n_bins * ch];
            for (i, &v) in pixels.iter().enumerate() {
                let block = i % ch;
                counts[block * config.n_bins + config.bin_of(v as f64)] += 1;
            }
            Ok(Histogram {
                counts,
                channels,
                config: *config,
            })
        }
    }
}

/// Prefix-sum a histogram.
pub fn cumulate(h: &Histogram) -> CumulativeHistogram {
    let mut cum = Vec::with_capacity(h.counts.len());
    let mut acc = 0u64;
    for &c in &h.counts {
        acc += c;
        cum.push(acc);
    }
    CumulativeHistogram {
        cum,
        channels: h.channels,
        config: h.config,
    }
}

/// Mean cumulative summary over K same-config cumulative histograms.
///
/// Counts are accumulated in integer arithmetic and divided once, so the
/// result is exactly permutation-invariant in the input order.
pub fn aggregate_mean_cumulative(hs: &[CumulativeHistogram]) -> Result<MeanCumulativeSummary> {
    let first = hs
        .first()
        .ok_or_else(|| Error::InvalidConfig("need at least one histogram to aggregate".into()))?;
    for h in &hs[1..] {
        if h.config != first.config
            || h.channels != first.channels
            || h.cum.len() != first.cum.len()
        {
            return Err(Error::MixedConfigs(format!(
                "histogram with {} bins over [{}, {}) mixed with {} bins over [{}, {})",
                h.cum.len(),
                h.config.low,
                h.config.high,
                first.cum.len(),
                first.config.low,
                first.config.high,
            )));
        }
    }
    let mut sums = vec![0u64; first.cum.len()];
    for h in hs {
        for (s, &c) in sums.iter_mut().zip(&h.cum) {
            *s += c;
        }
    }
    Ok(summarize_cum_sums(&sums, hs.len()))
}

/// Shared reduction: `sums[b]` is the integer sum of K cumulative histograms.
pub(crate) fn summarize_cum_sums(sums: &[u64], k: usize) -> MeanCumulativeSummary {
    let len = sums.len() as f64;
    let denom = k as f64 * len;
    let per_bin: Vec<f64> = sums.iter().map(|&s| s as f64 / denom).collect();
    let scalar = per_bin.iter().sum::<f64>() / len;
    MeanCumulativeSummary { scalar, per_bin, k }
}
