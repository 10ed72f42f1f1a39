//! Recompute dissimilarity metrics for existing manifests so different
//! splitting strategies can be compared on equal footing.

use std::time::Instant;

use serde::Serialize;

use crate::dataset::Dataset;
use crate::dissimilarity::{chd_index, ks_statistic, ChdMode};
use crate::error::{Error, Result};
use crate::histogram::{
    cumulate, sample_histogram, summarize_cum_sums, CumulativeHistogram, HistogramConfig,
};
use crate::manifest::SplitManifest;
use crate::rng::{substream_seed, Xoshiro256StarStar};

/// Evaluation settings. `k = None` draws as many samples as the smaller side
/// holds (the largest admissible K, and an exhaustive draw for that side).
#[derive(Debug, Clone, Copy)]
pub struct EvalConfig {
    pub hist: HistogramConfig,
    pub draws: usize,
    pub k: Option<usize>,
    pub seed: u64,
}

/// Metrics for one compared pair of partitions, averaged over `draws`
/// independent K-sample draws (standard deviation alongside each mean).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRow {
    pub strategy: String,
    pub pair: String,
    pub k: usize,
    pub draws: usize,
    pub chd_scalar_mean: f64,
    pub chd_scalar_sd: f64,
    pub chd_per_bin_mean: f64,
    pub chd_per_bin_sd: f64,
    pub ks_mean: f64,
    pub ks_sd: f64,
    pub wall_time_s: f64,
}

/// One row per evaluated pair: train/val (and train/test when present) for
/// single splits, one row per fold for k-fold manifests.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<EvalRow>,
}

/// Evaluate a manifest against the dataset it was computed on.
pub fn evaluate_manifest(
    manifest: &SplitManifest,
    dataset: &Dataset,
    config: &EvalConfig,
) -> Result<ComparisonReport> {
    if config.draws == 0 {
        return Err(Error::InvalidConfig("draws must be at least 1".into()));
    }
    manifest.verify_against(dataset)?;

    let mut pairs: Vec<(String, &[String], &[String])> = Vec::new();
    match &manifest.folds {
        Some(folds) => {
            for (j, f) in folds.iter().enumerate() {
                pairs.push((format!("fold {j}"), &f.train_ids, &f.val_ids));
            }
        }
        None => {
            pairs.push((
                "train/val".to_string(),
                &manifest.train_ids,
                &manifest.val_ids,
            ));
            if !manifest.val_equals_test && !manifest.test_ids.is_empty() {
                pairs.push((
                    "train/test".to_string(),
                    &manifest.train_ids,
                    &manifest.test_ids,
                ));
            }
        }
    }

    let mut rows = Vec::with_capacity(pairs.len());
    for (pair_index, (pair, ref_ids, other_ids)) in pairs.into_iter().enumerate() {
        let pair_seed = substream_seed(config.seed, pair_index as u64);
        rows.push(evaluate_pair(
            &manifest.strategy,
            pair,
            ref_ids,
            other_ids,
            dataset,
            config,
            pair_seed,
        )?);
    }
    Ok(ComparisonReport { rows })
}

fn evaluate_pair(
    strategy: &str,
    pair: String,
    ref_ids: &[String],
    other_ids: &[String],
    dataset: &Dataset,
    config: &EvalConfig,
    pair_seed: u64,
) -> Result<EvalRow> {
    let started = Instant::now();
    let smaller = ref_ids.len().min(other_ids.len());
    if smaller == 0 {
        return Err(Error::PartitionTooSmall(format!(
            "pair {pair:?} has an empty side"
        )));
    }
    let k = config.k.unwrap_or(smaller);
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if k > smaller {
        return Err(Error::KTooLarge(format!(
            "k = {k} exceeds the smaller side ({smaller}) of pair {pair:?}"
        )));
    }

    let cums_of = |ids: &[String]| -> Result<Vec<Vec<u64>>> {
        ids.iter()
            .map(|id| {
                let s = dataset.get(dataset.index_of(id).expect("verified membership"));
                Ok(cumulate(&sample_histogram(s.pixels(), s.channels, &config.hist)?).cum)
            })
            .collect()
    };
    let ref_cums = cums_of(ref_ids)?;
    let other_cums = cums_of(other_ids)?;
    let len = ref_cums[0].len();
    if ref_cums.iter().chain(&other_cums).any(|c| c.len() != len) {
        return Err(Error::MixedConfigs(
            "samples disagree in histogram length; channel counts are not uniform".into(),
        ));
    }

    let mut scalar_ds = Vec::with_capacity(config.draws);
    let mut per_bin_ds = Vec::with_capacity(config.draws);
    let mut ks_ds = Vec::with_capacity(config.draws);
    for draw in 0..config.draws {
        let mut rng = Xoshiro256StarStar::from_seed(substream_seed(pair_seed, draw as u64));
        let ref_sum = draw_sum(&ref_cums, k, &mut rng, len);
        let other_sum = draw_sum(&other_cums, k, &mut rng, len);
        let ref_summary = summarize_cum_sums(&ref_sum, k);
        let other_summary = summarize_cum_sums(&other_sum, k);
        scalar_ds.push(chd_index(&ref_summary, &other_summary, ChdMode::Scalar)?);
        per_bin_ds.push(chd_index(&ref_summary, &other_summary, ChdMode::PerBinL1)?);
        let as_cum = |cum: Vec<u64>| CumulativeHistogram {
            cum,
            channels: 1,
            config: config.hist,
        };
        ks_ds.push(ks_statistic(&as_cum(ref_sum), &as_cum(other_sum))?);
    }

    let (chd_scalar_mean, chd_scalar_sd) = mean_sd(&scalar_ds);
    let (chd_per_bin_mean, chd_per_bin_sd) = mean_sd(&per_bin_ds);
    let (ks_mean, ks_sd) = mean_sd(&ks_ds);
    Ok(EvalRow {
        strategy: strategy.to_string(),
        pair,
        k,
        draws: config.draws,
        chd_scalar_mean,
        chd_scalar_sd,
        chd_per_bin_mean,
        chd_per_bin_sd,
        ks_mean,
        ks_sd,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

fn draw_sum(cums: &[Vec<u64>], k: usize, rng: &mut Xoshiro256StarStar, len: usize) -> Vec<u64> {
    let picks = rng.sample_indices(cums.len(), k);
    let mut sum = vec![0u64; len];
    for p in picks {
        for (s, &c) in sum.iter_mut().zip(&cums[p]) {
            *s += c;
        }
    }
    sum
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
