//! The cumulative-histogram dissimilarity index and a Kolmogorov–Smirnov
//! cross-check used by evaluation reports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histogram::{CumulativeHistogram, MeanCumulativeSummary};

/// Reduction used by the index: a single scalar comparison (default) or an
/// elementwise L1 comparison of the per-bin aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ChdMode {
    #[default]
    Scalar,
    PerBinL1,
}

impl ChdMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChdMode::Scalar => "scalar",
            ChdMode::PerBinL1 => "per-bin-l1",
        }
    }
}

impl std::str::FromStr for ChdMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scalar" => Ok(ChdMode::Scalar),
            "per-bin-l1" => Ok(ChdMode::PerBinL1),
            other => Err(Error::InvalidConfig(format!(
                "unknown dissimilarity mode {other:?} (expected \"scalar\" or \"per-bin-l1\")"
            ))),
        }
    }
}

/// Dissimilarity between a train-side reference aggregate and the other
/// partition's aggregate. The reference (train) aggregate is always the
/// denominator, so the index is deliberately asymmetric:
/// `d(a, b) · s_a = d(b, a) · s_b = |s_a − s_b|`.
///
/// Scalar mode: `d = |s_ref − s_other| / s_ref`.
/// Per-bin L1 mode: `d = Σ_b |u_b − v_b| / Σ_b u_b`.
pub fn chd_index(
    reference: &MeanCumulativeSummary,
    other: &MeanCumulativeSummary,
    mode: ChdMode,
) -> Result<f64> {
    if reference.per_bin.len() != other.per_bin.len() {
        return Err(Error::MixedConfigs(format!(
            "summaries have {} and {} bins",
            reference.per_bin.len(),
            other.per_bin.len()
        )));
    }
    if reference.k != other.k {
        return Err(Error::MixedConfigs(format!(
            "summaries aggregate K = {} and K = {} samples",
            reference.k, other.k
        )));
    }
    match mode {
        ChdMode::Scalar => {
            if reference.scalar == 0.0 {
                return Err(Error::DegenerateReference);
            }
            Ok((reference.scalar - other.scalar).abs() / reference.scalar)
        }
        ChdMode::PerBinL1 => {
            let denom: f64 = reference.per_bin.iter().sum();
            if denom == 0.0 {
                return Err(Error::DegenerateReference);
            }
            let l1: f64 = reference
                .per_bin
                .iter()
                .zip(&other.per_bin)
                .map(|(u, v)| (u - v).abs())
                .sum();
            Ok(l1 / denom)
        }
    }
}

/// Two-sample Kolmogorov–Smirnov statistic between empirical CDFs:
/// `max_b |F_ref(b) − F_other(b)|`, each CDF normalized by its own total.
pub fn ks_statistic(reference: &CumulativeHistogram, other: &CumulativeHistogram) -> Result<f64> {
    if reference.config != other.config
        || reference.channels != other.channels
        || reference.cum.len() != other.cum.len()
    {
        return Err(Error::MixedConfigs(
            "cumulative histograms have different configurations".into(),
        ));
    }
    let (tr, to) = (reference.total(), other.total());
    if tr == 0 || to == 0 {
        return Err(Error::DegenerateReference);
    }
    let mut max_gap = 0.0f64;
    for (&a, &b) in reference.cum.iter().zip(&other.cum) {
        let gap = (a as f64 / tr as f64 - b as f64 / to as f64).abs();
        if gap > max_gap {
            max_gap = gap;
        }
    }
    Ok(max_gap)
}
