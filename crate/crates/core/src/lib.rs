//! Dataset splitting by cumulative-histogram dissimilarity (CHD) search.
//!
//! The toolkit partitions an image dataset into train/validation/test subsets
//! by proposing random splits and keeping the one whose two sides have the
//! most similar mean cumulative pixel histograms. Baseline splitters (plain
//! random, k-fold, stratified), SWIR/RGB band fusion, seed-stamped split
//! manifests, and an evaluation harness round out the pipeline.
//!
//! All randomness flows through one fixed, documented generator
//! ([`rng::Xoshiro256StarStar`]) so a (dataset, config, seed) triple produces
//! byte-identical results on every platform and at any degree of parallelism.

pub mod baselines;
pub mod dataset;
pub mod dissimilarity;
pub mod error;
pub mod evaluate;
pub mod fusion;
pub mod histogram;
pub mod ingest;
pub mod manifest;
pub mod rng;
pub mod splitter;
pub mod synth;

pub use dataset::{
    compute_partition_sizes, random_partition, Dataset, PartitionSizes, SampleRecord, SampleSource,
    SplitAssignment, SplitFractions,
};
pub use dissimilarity::{chd_index, ks_statistic, ChdMode};
pub use error::{Error, Result};
pub use histogram::{
    aggregate_mean_cumulative, cumulate, sample_histogram, ChannelPolicy, CumulativeHistogram,
    Histogram, HistogramConfig, MeanCumulativeSummary,
};
pub use manifest::{read_manifest, write_manifest, write_trace, SplitManifest};
pub use splitter::{
    split_three_way, split_three_way_with, split_train_test, split_train_test_with,
    split_train_val, split_train_val_with, ChdConfig, Execution, IterationTrace, SplitResult,
    ThreeWaySplit, TraceEntry,
};
