//! Iterative dissimilarity-minimizing split search: propose S random splits,
//! score each by comparing mean cumulative histograms of its two sides, keep
//! the argmin.

use rayon::prelude::*;

use crate::dataset::{random_partition_indices, Dataset, PartitionSizes, SplitAssignment};
use crate::dissimilarity::{chd_index, ChdMode};
use crate::error::{Error, Result};
use crate::histogram::{cumulate, sample_histogram, summarize_cum_sums, HistogramConfig};
use crate::rng::{substream_seed, Xoshiro256StarStar};

/// Configuration of one search phase. `fractions` must be two-way
/// (gamma = 0): a phase always carves exactly two partitions out of its
/// input, and three-way splits compose two phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChdConfig {
    /// Number of random splits proposed (S).
    pub iterations: usize,
    /// Histogram sample count drawn from each side per iteration (K).
    pub k: usize,
    pub fractions: crate::dataset::SplitFractions,
    pub hist: HistogramConfig,
    pub mode: ChdMode,
    pub seed: u64,
}

impl ChdConfig {
    fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.fractions.gamma() != 0.0 {
            return Err(Error::InvalidConfig(
                "phase fractions must be two-way (gamma = 0); three-way splits compose two phases"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// Whether iterations are scored on a thread pool or one by one. Both orders
/// produce bit-identical results; the switch exists so tests can prove it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

/// One scored iteration: its index, its dissimilarity, and the derived seed
/// of the substream that produced its partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub d: f64,
    pub substream: u64,
}

/// The full dissimilarity vector of a search, one entry per iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub entries: Vec<TraceEntry>,
}

/// Outcome of one search phase.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    /// Winning assignment; the phase's second side is stored as `val_ids`
    /// (a train-test phase reads it as the test set).
    pub assignment: SplitAssignment,
    pub best_d: f64,
    /// Smallest iteration index attaining `best_d`.
    pub best_iteration: usize,
    pub trace: IterationTrace,
    /// Sizes actually used: (m, p) of this phase.
    pub sizes: PartitionSizes,
}

/// Three-way outcome: phase-1 train-val composed with phase-2 train-test.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeWaySplit {
    /// Combined assignment: phase-2 train, phase-1 val, phase-2 second side
    /// as test. In val-equals-test mode `test_ids` is empty and the flag is
    /// set; manifests duplicate the val ids into the test role on output.
    pub assignment: SplitAssignment,
    pub phase1: SplitResult,
    pub phase2: Option<SplitResult>,
    pub val_equals_test: bool,
}

/// Search for the train/validation split with the lowest dissimilarity.
pub fn split_train_val(dataset: &Dataset, config: &ChdConfig) -> Result<SplitResult> {
    run_phase(dataset, config, Execution::Parallel)
}

/// Same algorithm applied to a phase-1 training subset; the second side is
/// the test set (train side stays the normalizing reference).
pub fn split_train_test(train_subset: &Dataset, config: &ChdConfig) -> Result<SplitResult> {
    run_phase(train_subset, config, Execution::Parallel)
}

/// [`split_train_val`] with an explicit execution strategy.
pub fn split_train_val_with(
    dataset: &Dataset,
    config: &ChdConfig,
    execution: Execution,
) -> Result<SplitResult> {
    run_phase(dataset, config, execution)
}

/// [`split_train_test`] with an explicit execution strategy.
pub fn split_train_test_with(
    train_subset: &Dataset,
    config: &ChdConfig,
    execution: Execution,
) -> Result<SplitResult> {
    run_phase(train_subset, config, execution)
}

/// Compose a train-val phase and a train-test phase into a train/val/test
/// split. `phase2: None` requests val = test: only phase 1 runs and the
/// result is flagged accordingly.
pub fn split_three_way(
    dataset: &Dataset,
    phase1: &ChdConfig,
    phase2: Option<&ChdConfig>,
) -> Result<ThreeWaySplit> {
    split_three_way_with(dataset, phase1, phase2, Execution::Parallel)
}

/// [`split_three_way`] with an explicit execution strategy.
pub fn split_three_way_with(
    dataset: &Dataset,
    phase1: &ChdConfig,
    phase2: Option<&ChdConfig>,
    execution: Execution,
) -> Result<ThreeWaySplit> {
    // The phase-1 train size is fixed by the floor rule, so phase 2's size
    // arithmetic and draw bound can be validated before either phase does
    // any histogram work.
    if let Some(p2) = phase2 {
        p2.validate()?;
        let m1 = crate::dataset::compute_partition_sizes(dataset.n(), &phase1.fractions)?.m;
        let s2 = crate::dataset::compute_partition_sizes(m1, &p2.fractions)?;
        let smaller = s2.m.min(s2.p);
        if p2.k > smaller {
            return Err(Error::KTooLarge(format!(
                "phase 2 k = {} exceeds min(m, p) = {smaller} (m = {}, p = {})",
                p2.k, s2.m, s2.p
            )));
        }
    }
    let r1 = run_phase(dataset, phase1, execution)?;
    match phase2 {
        Some(p2) => {
            let subset = dataset.subset(&r1.assignment.train_ids)?;
            let r2 = run_phase(&subset, p2, execution)?;
            let assignment = SplitAssignment::from_sorted(
                r2.assignment.train_ids.clone(),
                r1.assignment.val_ids.clone(),
                r2.assignment.val_ids.clone(),
            );
            Ok(ThreeWaySplit {
                assignment,
                phase1: r1,
                phase2: Some(r2),
                val_equals_test: false,
            })
        }
        None => Ok(ThreeWaySplit {
            assignment: r1.assignment.clone(),
            phase1: r1,
            phase2: None,
            val_equals_test: true,
        }),
    }
}

fn run_phase(dataset: &Dataset, config: &ChdConfig, execution: Execution) -> Result<SplitResult> {
    config.validate()?;
    let n = dataset.n();
    let sizes = crate::dataset::compute_partition_sizes(n, &config.fractions)?;
    let smaller = sizes.m.min(sizes.p);
    // Constraint check comes before any histogram work.
    if config.k > smaller {
        return Err(Error::KTooLarge(format!(
            "k = {} exceeds min(m, p) = {smaller} (m = {}, p = {})",
            config.k, sizes.m, sizes.p
        )));
    }

    // Per-sample cumulative histograms, computed once and shared read-only by
    // every iteration.
    let cums = precompute_cums(dataset, config, execution)?;
    let len = cums[0].len();
    if let Some(bad) = cums.iter().position(|c| c.len() != len) {
        return Err(Error::MixedConfigs(format!(
            "sample {:?} yields {} bins where {:?} yields {len}; per-channel \
             histograms need a uniform channel count",
            dataset.get(bad).id,
            cums[bad].len(),
            dataset.get(0).id,
        )));
    }

    let eval_one = |i: usize| -> Result<TraceEntry> {
        let substream = substream_seed(config.seed, i as u64);
        let mut rng = Xoshiro256StarStar::from_seed(substream);
        let (train_idx, other_idx, _) = random_partition_indices(n, &sizes, &mut rng)?;
        let train_sum = sum_drawn(&cums, &train_idx, config.k, &mut rng, len);
        let other_sum = sum_drawn(&cums, &other_idx, config.k, &mut rng, len);
        let d = chd_index(
            &summarize_cum_sums(&train_sum, config.k),
            &summarize_cum_sums(&other_sum, config.k),
            config.mode,
        )?;
        Ok(TraceEntry {
            iteration: i,
            d,
            substream,
        })
    };

    let entries: Vec<TraceEntry> = match execution {
        Execution::Parallel => (0..config.iterations)
            .into_par_iter()
            .map(eval_one)
            .collect::<Result<_>>()?,
        Execution::Sequential => (0..config.iterations)
            .map(eval_one)
            .collect::<Result<_>>()?,
    };

    // Argmin with lowest-index tie-break: strict comparison over an
    // index-ordered scan.
    let mut best = &entries[0];
    for e in &entries[1..] {
        if e.d < best.d {
            best = e;
        }
    }
    let (best_d, best_iteration) = (best.d, best.iteration);

    // Replay the winning substream to reconstruct its partition.
    let mut rng = Xoshiro256StarStar::from_seed(best.substream);
    let (train_idx, other_idx, _) = random_partition_indices(n, &sizes, &mut rng)?;
    let to_ids = |idx: &[usize]| idx.iter().map(|&i| dataset.get(i).id.clone()).collect();
    let assignment =
        SplitAssignment::from_sorted(to_ids(&train_idx), to_ids(&other_idx), Vec::new());

    Ok(SplitResult {
        assignment,
        best_d,
        best_iteration,
        trace: IterationTrace { entries },
        sizes,
    })
}

fn precompute_cums(
    dataset: &Dataset,
    config: &ChdConfig,
    execution: Execution,
) -> Result<Vec<Vec<u64>>> {
    let one = |s: &crate::dataset::SampleRecord| -> Result<Vec<u64>> {
        Ok(cumulate(&sample_histogram(s.pixels(), s.channels, &config.hist)?).cum)
    };
    match execution {
        Execution::Parallel => dataset.samples().par_iter().map(one).collect(),
        Execution::Sequential => dataset.samples().iter().map(one).collect(),
    }
}

/// Draw `k` members of `side` without replacement and sum their cumulative
/// histograms in integer arithmetic (order-invariant by construction).
fn sum_drawn(
    cums: &[Vec<u64>],
    side: &[usize],
    k: usize,
    rng: &mut Xoshiro256StarStar,
    len: usize,
) -> Vec<u64> {
    let picks = rng.sample_indices(side.len(), k);
    let mut sum = vec![0u64; len];
    for p in picks {
        for (s, &c) in sum.iter_mut().zip(&cums[side[p]]) {
            *s += c;
        }
    }
    sum
}
