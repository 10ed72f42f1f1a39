use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use histsplit::synth::{parse_synth_config, synth_dataset};
use histsplit::{
    split_train_val_with, ChannelPolicy, ChdConfig, ChdMode, Dataset, Execution, HistogramConfig,
    SplitFractions,
};

const SPEC: &str = "width = 8\nheight = 8\nchannels = 1\nn_per_class = 32\n\n\
                    [classes.low]\ndistribution = \"uniform\"\nlow = 0.0\nhigh = 0.2\n\n\
                    [classes.high]\ndistribution = \"uniform\"\nlow = 0.8\nhigh = 1.0\n";

fn dataset() -> Dataset {
    let sc = parse_synth_config(SPEC).unwrap();
    synth_dataset(&sc.spec(), sc.n_per_class, 42).unwrap()
}

fn config(mode: ChdMode) -> ChdConfig {
    ChdConfig {
        iterations: 32,
        k: 16,
        fractions: SplitFractions::two_way(0.5, 0.5).unwrap(),
        hist: HistogramConfig::new(256, 0.0, 1.0, ChannelPolicy::Pooled).unwrap(),
        mode,
        seed: 7,
    }
}

fn split_search(c: &mut Criterion) {
    let ds = dataset();
    c.bench_function("chd-search-n64-s32-sequential", |b| {
        b.iter(|| {
            split_train_val_with(
                black_box(&ds),
                &config(ChdMode::Scalar),
                Execution::Sequential,
            )
            .unwrap()
        })
    });
    c.bench_function("chd-search-n64-s32-parallel", |b| {
        b.iter(|| {
            split_train_val_with(
                black_box(&ds),
                &config(ChdMode::Scalar),
                Execution::Parallel,
            )
            .unwrap()
        })
    });
    c.bench_function("chd-search-n64-s32-per-bin-l1", |b| {
        b.iter(|| {
            split_train_val_with(
                black_box(&ds),
                &config(ChdMode::PerBinL1),
                Execution::Parallel,
            )
            .unwrap()
        })
    });
}

criterion_group!(splits, split_search);
criterion_main!(splits);
