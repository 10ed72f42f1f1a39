//! Dataset representation, fraction arithmetic, and raw random partitioning.

use std::collections::HashSet;
use std::path::PathBuf;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::rng::Xoshiro256StarStar;

/// Where a sample's pixels came from.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleSource {
    File(PathBuf),
    /// Synthetic descriptor, e.g. `"uniform[0,0.2] seed=7"`.
    Synthetic(String),
}

/// One image patch. Pixels are stored flat and channel-interleaved
/// (`(y * width + x) * channels + c`), normalized to [0, 1] at ingestion.
#[derive(Debug, Clone)]
pub struct SampleRecord {
    pub id: String,
    pub source: SampleSource,
    pub label: String,
    pub width: u32,
    pub height: u32,
    pub channels: u32,
    /// Band names in channel order, when known (e.g. five-band rasters).
    pub band_names: Option<Vec<String>>,
    /// Optional acquisition coordinates carried through from metadata.
    pub lat: Option<f64>,
    pub lon: Option<f64>,
    /// Source size in bytes; part of the dataset fingerprint.
    pub byte_len: u64,
    pixels: Arc<[f32]>,
}

impl SampleRecord {
    pub fn new(
        id: impl Into<String>,
        source: SampleSource,
        label: impl Into<String>,
        width: u32,
        height: u32,
        channels: u32,
        pixels: Vec<f32>,
    ) -> Self {
        let byte_len = (pixels.len() * std::mem::size_of::<f32>()) as u64;
        SampleRecord {
            id: id.into(),
            source,
            label: label.into(),
            width,
            height,
            channels,
            band_names: None,
            lat: None,
            lon: None,
            byte_len,
            pixels: pixels.into(),
        }
    }

    pub fn with_band_names(mut self, names: Vec<String>) -> Self {
        self.band_names = Some(names);
        self
    }

    pub fn with_coords(mut self, lat: f64, lon: f64) -> Self {
        self.lat = Some(lat);
        self.lon = Some(lon);
        self
    }

    pub fn with_byte_len(mut self, byte_len: u64) -> Self {
        self.byte_len = byte_len;
        self
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }
}

/// An immutable, canonically ordered collection of samples.
///
/// Samples are sorted by id at construction so iteration order (and therefore
/// every seeded shuffle) is machine-independent.
#[derive(Debug, Clone)]
pub struct Dataset {
    samples: Vec<SampleRecord>,
}

impl Dataset {
    pub fn new(mut samples: Vec<SampleRecord>) -> Result<Self> {
        samples.sort_by(|a, b| a.id.cmp(&b.id));
        let mut seen = HashSet::with_capacity(samples.len());
        for s in &samples {
            if !seen.insert(s.id.as_str()) {
                return Err(Error::InvalidDataset(format!(
                    "duplicate sample id {:?}",
                    s.id
                )));
            }
            if s.width == 0 || s.height == 0 || s.channels == 0 {
                return Err(Error::InvalidDataset(format!(
                    "sample {:?} has zero dimension ({}x{}x{})",
                    s.id, s.width, s.height, s.channels
                )));
            }
            let expect = s.width as usize * s.height as usize * s.channels as usize;
            if s.pixels.len() != expect {
                return Err(Error::InvalidDataset(format!(
                    "sample {:?} has {} pixel values, dimensions imply {}",
                    s.id,
                    s.pixels.len(),
                    expect
                )));
            }
        }
        Ok(Dataset { samples })
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Samples in canonical (id-sorted) order.
    pub fn samples(&self) -> &[SampleRecord] {
        &self.samples
    }

    pub fn get(&self, index: usize) -> &SampleRecord {
        &self.samples[index]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.samples
            .binary_search_by(|s| s.id.as_str().cmp(id))
            .ok()
    }

    /// Distinct labels in sorted order.
    pub fn labels(&self) -> Vec<&str> {
        let mut labels: Vec<&str> = self.samples.iter().map(|s| s.label.as_str()).collect();
        labels.sort_unstable();
        labels.dedup();
        labels
    }

    /// New dataset restricted to `ids`. Every id must exist.
    pub fn subset(&self, ids: &[String]) -> Result<Dataset> {
        let mut picked = Vec::with_capacity(ids.len());
        for id in ids {
            let idx = self
                .index_of(id)
                .ok_or_else(|| Error::InvalidDataset(format!("unknown sample id {id:?}")))?;
            picked.push(self.samples[idx].clone());
        }
        Dataset::new(picked)
    }

    pub fn ids(&self) -> Vec<String> {
        self.samples.iter().map(|s| s.id.clone()).collect()
    }
}

/// Train/validation/test fractions. `alpha` and `beta` must lie in (0, 1),
/// `gamma` in [0, 1); their sum must not exceed 1 (tolerance 1e-9).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitFractions {
    alpha: f64,
    beta: f64,
    gamma: f64,
}

impl SplitFractions {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
            if !v.is_finite() {
                return Err(Error::InvalidFractions(format!("{name} is not finite")));
            }
        }
        if alpha <= 0.0 || alpha >= 1.0 {
            return Err(Error::InvalidFractions(format!(
                "alpha must be in (0,1), got {alpha}"
            )));
        }
        if beta <= 0.0 || beta >= 1.0 {
            return Err(Error::InvalidFractions(format!(
                "beta must be in (0,1), got {beta}"
            )));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidFractions(format!(
                "gamma must be in [0,1), got {gamma}"
            )));
        }
        if alpha + beta + gamma > 1.0 + 1e-9 {
            return Err(Error::InvalidFractions(format!(
                "alpha + beta + gamma = {} exceeds 1",
                alpha + beta + gamma
            )));
        }
        Ok(SplitFractions { alpha, beta, gamma })
    }

    /// Two-way fractions (no test partition).
    pub fn two_way(alpha: f64, beta: f64) -> Result<Self> {
        SplitFractions::new(alpha, beta, 0.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Integer partition sizes derived from fractions by the floor rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionSizes {
    pub m: usize,
    pub p: usize,
    pub q: usize,
}

impl PartitionSizes {
    pub fn total(&self) -> usize {
        self.m + self.p + self.q
    }
}

/// Sizes from fractions: `m = floor(alpha*n)`, `p = floor(beta*n)`,
/// `q = floor(gamma*n)`. Flooring all three guarantees `m + p + q <= n`.
/// The remainder `n - m - p - q` stays unassigned and is listed in manifests.
pub fn compute_partition_sizes(n: usize, fractions: &SplitFractions) -> Result<PartitionSizes> {
    let nf = n as f64;
    let m = (fractions.alpha * nf).floor() as usize;
    let p = (fractions.beta * nf).floor() as usize;
    let q = (fractions.gamma * nf).floor() as usize;
    if m == 0 {
        return Err(Error::PartitionTooSmall(format!(
            "alpha = {} of n = {n} rounds to zero",
            fractions.alpha
        )));
    }
    if p == 0 {
        return Err(Error::PartitionTooSmall(format!(
            "beta = {} of n = {n} rounds to zero",
            fractions.beta
        )));
    }
    if fractions.gamma > 0.0 && q == 0 {
        return Err(Error::PartitionTooSmall(format!(
            "gamma = {} of n = {n} rounds to zero",
            fractions.gamma
        )));
    }
    Ok(PartitionSizes { m, p, q })
}

/// Disjoint id lists for the three partitions, each sorted.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SplitAssignment {
    pub train_ids: Vec<String>,
    pub val_ids: Vec<String>,
    pub test_ids: Vec<String>,
}

impl SplitAssignment {
    pub(crate) fn from_sorted(
        mut train: Vec<String>,
        mut val: Vec<String>,
        mut test: Vec<String>,
    ) -> Self {
        train.sort_unstable();
        val.sort_unstable();
        test.sort_unstable();
        SplitAssignment {
            train_ids: train,
            val_ids: val,
            test_ids: test,
        }
    }

    /// Check pairwise disjointness and membership in `dataset`.
    pub fn validate_against(&self, dataset: &Dataset) -> Result<()> {
        let mut seen: HashSet<&str> = HashSet::new();
        for id in self
            .train_ids
            .iter()
            .chain(&self.val_ids)
            .chain(&self.test_ids)
        {
            if dataset.index_of(id).is_none() {
                return Err(Error::InvalidDataset(format!(
                    "assigned id {id:?} is not in the dataset"
                )));
            }
            if !seen.insert(id) {
                return Err(Error::InvalidDataset(format!(
                    "id {id:?} assigned to more than one partition"
                )));
            }
        }
        Ok(())
    }
}

/// Uniformly random assignment: shuffle the canonical id order with `rng` and
/// take the first `m` ids as train, the next `p` as val, the next `q` as test.
/// Advances `rng`.
pub fn random_partition(
    dataset: &Dataset,
    sizes: &PartitionSizes,
    rng: &mut Xoshiro256StarStar,
) -> Result<SplitAssignment> {
    let (train_idx, val_idx, test_idx) = random_partition_indices(dataset.n(), sizes, rng)?;
    let to_ids = |idx: Vec<usize>| -> Vec<String> {
        idx.into_iter().map(|i| dataset.get(i).id.clone()).collect()
    };
    Ok(SplitAssignment::from_sorted(
        to_ids(train_idx),
        to_ids(val_idx),
        to_ids(test_idx),
    ))
}

/// Index-level partition over `0..n` in canonical order; used internally by
/// the split search so iterations avoid id cloning.
pub(crate) fn random_partition_indices(
    n: usize,
    sizes: &PartitionSizes,
    rng: &mut Xoshiro256StarStar,
) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    if sizes.total() > n {
        return Err(Error::SizesExceedDataset(format!(
            "m + p + q = {} but n = {n}",
            sizes.total()
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let val_end = sizes.m + sizes.p;
    let test_end = val_end + sizes.q;
    Ok((
        order[..sizes.m].to_vec(),
        order[sizes.m..val_end].to_vec(),
        order[val_end..test_end].to_vec(),
    ))
}
