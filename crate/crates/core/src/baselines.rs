//! Baseline splitters: plain random, k-fold cross-validation, and stratified
//! sampling with largest-remainder per-class apportionment.

use std::collections::BTreeMap;

use crate::dataset::{Dataset, SplitAssignment, SplitFractions};
use crate::error::{Error, Result};
use crate::rng::Xoshiro256StarStar;

/// k assignments, one per fold: `val` = the fold, `train` = everything else.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSet {
    pub folds: Vec<SplitAssignment>,
}

/// Plain random split: `val` gets `floor(factor·n)` ids, `train` the rest.
pub fn random_split(dataset: &Dataset, factor: f64, seed: u64) -> Result<SplitAssignment> {
    if !factor.is_finite() || factor <= 0.0 || factor >= 1.0 {
        return Err(Error::InvalidFractions(format!(
            "factor must be in (0,1), got {factor}"
        )));
    }
    let n = dataset.n();
    let p = (factor * n as f64).floor() as usize;
    if p == 0 {
        return Err(Error::PartitionTooSmall(format!(
            "factor = {factor} of n = {n} rounds to zero"
        )));
    }
    if p >= n {
        return Err(Error::PartitionTooSmall(format!(
            "factor = {factor} of n = {n} leaves an empty train side"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = Xoshiro256StarStar::from_seed(seed);
    rng.shuffle(&mut order);
    let id_of = |i: &usize| dataset.get(*i).id.clone();
    Ok(SplitAssignment::from_sorted(
        order[p..].iter().map(id_of).collect(),
        order[..p].iter().map(id_of).collect(),
        Vec::new(),
    ))
}

/// Shuffle then deal round-robin into k folds, so fold sizes differ by at
/// most one.
pub fn kfold(dataset: &Dataset, k: usize, seed: u64) -> Result<FoldSet> {
    let n = dataset.n();
    if k < 2 || k > n {
        return Err(Error::InvalidK(format!(
            "k must satisfy 2 <= k <= n = {n}, got {k}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = Xoshiro256StarStar::from_seed(seed);
    rng.shuffle(&mut order);

    let mut fold_members: Vec<Vec<usize>> = vec![Vec::with_capacity(n / k + 1); k];
    for (pos, &idx) in order.iter().enumerate() {
        fold_members[pos % k].push(idx);
    }

    let folds = fold_members
        .iter()
        .enumerate()
        .map(|(j, val)| {
            let train: Vec<String> = fold_members
                .iter()
                .enumerate()
                .filter(|(jj, _)| *jj != j)
                .flat_map(|(_, f)| f.iter().map(|&i| dataset.get(i).id.clone()))
                .collect();
            let val: Vec<String> = val.iter().map(|&i| dataset.get(i).id.clone()).collect();
            SplitAssignment::from_sorted(train, val, Vec::new())
        })
        .collect();
    Ok(FoldSet { folds })
}

/// Stratified split: within every class, partition counts follow
/// largest-remainder apportionment of the fractions (ties favor train, then
/// val, then test); membership within a class is random by seed.
pub fn stratified_split(
    dataset: &Dataset,
    fractions: &SplitFractions,
    seed: u64,
) -> Result<SplitAssignment> {
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in dataset.samples().iter().enumerate() {
        by_class.entry(s.label.as_str()).or_default().push(i);
    }
    if by_class.is_empty() {
        return Err(Error::PartitionTooSmall("dataset has no samples".into()));
    }

    let mut rng = Xoshiro256StarStar::from_seed(seed);
    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for (label, mut members) in by_class {
        let quotas = class_quotas(members.len(), fractions, label)?;
        rng.shuffle(&mut members);
        let id_of = |i: &usize| dataset.get(*i).id.clone();
        train.extend(members[..quotas[0]].iter().map(id_of));
        val.extend(members[quotas[0]..quotas[0] + quotas[1]].iter().map(id_of));
        test.extend(
            members[quotas[0] + quotas[1]..quotas[0] + quotas[1] + quotas[2]]
                .iter()
                .map(id_of),
        );
    }
    Ok(SplitAssignment::from_sorted(train, val, test))
}

/// Largest-remainder (Hamilton) apportionment of one class: hand out
/// `floor(Σ fractions · n_c)` seats, first the floors of each ideal share,
/// then one extra to the largest remainders.
fn class_quotas(n_c: usize, fractions: &SplitFractions, label: &str) -> Result<[usize; 3]> {
    let shares = [fractions.alpha(), fractions.beta(), fractions.gamma()];
    let ideals: Vec<f64> = shares.iter().map(|f| f * n_c as f64).collect();
    let mut quotas: Vec<usize> = ideals.iter().map(|q| q.floor() as usize).collect();
    let house = (shares.iter().sum::<f64>() * n_c as f64).floor() as usize;
    let assigned: usize = quotas.iter().sum();
    let leftover = house.saturating_sub(assigned);

    // Order parties by remainder, ties toward the earlier partition.
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (ideals[a] - ideals[a].floor(), ideals[b] - ideals[b].floor());
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for j in 0..leftover {
        quotas[order[j % 3]] += 1;
    }

    for (i, &share) in shares.iter().enumerate() {
        if share > 0.0 && quotas[i] == 0 {
            let part = ["train", "val", "test"][i];
            return Err(Error::ClassTooSmall(format!(
                "class {label:?} with {n_c} members gets no {part} samples \
                 under fractions ({}, {}, {})",
                shares[0], shares[1], shares[2]
            )));
        }
    }
    Ok([quotas[0], quotas[1], quotas[2]])
}
