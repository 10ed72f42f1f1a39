//! Split manifests: the tool's external contract. Canonical JSON (sorted
//! keys, decimal-string reals, trailing newline) so identical results are
//! byte-identical files on every platform.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::FoldSet;
use crate::dataset::{Dataset, SplitAssignment, SplitFractions};
use crate::error::{Error, Result};
use crate::fusion::BandFusionParams;
use crate::rng::GENERATOR_NAME;
use crate::splitter::{ChdConfig, IterationTrace, SplitResult, ThreeWaySplit};

pub const SCHEMA_VERSION: u64 = 1;

/// Fractions as decimal strings (exact round-trip, platform-stable).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FractionsRecord {
    pub alpha: String,
    pub beta: String,
    pub gamma: String,
}

impl FractionsRecord {
    fn from_fractions(f: &SplitFractions) -> Self {
        FractionsRecord {
            alpha: f.alpha().to_string(),
            beta: f.beta().to_string(),
            gamma: f.gamma().to_string(),
        }
    }

    pub fn to_fractions(&self) -> Result<SplitFractions> {
        let parse = |name: &str, s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::ManifestParse(format!("{name} = {s:?} is not a number")))
        };
        SplitFractions::new(
            parse("alpha", &self.alpha)?,
            parse("beta", &self.beta)?,
            parse("gamma", &self.gamma)?,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizesRecord {
    pub train: u64,
    pub val: u64,
    pub test: u64,
}

/// Search metadata of the second (train-test) phase of a three-way split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseRecord {
    /// Fractions relative to the phase input (the phase-1 train subset).
    pub fractions: FractionsRecord,
    pub iterations: u64,
    pub k: u64,
    pub best_iteration: u64,
    pub best_d: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestFold {
    pub train_ids: Vec<String>,
    pub val_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionRecord {
    pub alpha1: String,
    pub alpha2: String,
    pub alpha3: String,
    pub swir_offset: String,
}

impl FusionRecord {
    fn from_params(p: &BandFusionParams) -> Self {
        FusionRecord {
            alpha1: p.alpha1.to_string(),
            alpha2: p.alpha2.to_string(),
            alpha3: p.alpha3.to_string(),
            swir_offset: p.swir_offset.to_string(),
        }
    }

    pub fn to_params(&self) -> Result<BandFusionParams> {
        let parse = |name: &str, s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::ManifestParse(format!("{name} = {s:?} is not a number")))
        };
        BandFusionParams::new(
            parse("alpha1", &self.alpha1)?,
            parse("alpha2", &self.alpha2)?,
            parse("alpha3", &self.alpha3)?,
            parse("swir_offset", &self.swir_offset)?,
        )
    }
}

/// Seed-stamped record of one split. Optional fields appear only for the
/// strategies that define them (`k`/`iterations`/`best_d` for the
/// dissimilarity search, `factor` for random, `n_folds`+`folds` for k-fold).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub schema_version: u64,
    /// "chd" | "random" | "kfold" | "stratified".
    pub strategy: String,
    pub seed: u64,
    /// Name and constants of the pseudo-random generator, for auditability.
    pub generator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fractions: Option<FractionsRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_folds: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<SizesRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_bins: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_iteration: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_d: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase2: Option<PhaseRecord>,
    pub train_ids: Vec<String>,
    pub val_ids: Vec<String>,
    pub test_ids: Vec<String>,
    /// Leftover ids the floor rule assigned nowhere; recorded, never guessed
    /// at.
    pub unassigned_ids: Vec<String>,
    pub val_equals_test: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub folds: Option<Vec<ManifestFold>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fusion: Option<FusionRecord>,
    /// Hash over the dataset's sorted (id, byte length) pairs.
    pub dataset_fingerprint: String,
}

/// Content hash binding a manifest to the dataset it was computed on.
pub fn dataset_fingerprint(dataset: &Dataset) -> String {
    let mut hasher = Sha256::new();
    for s in dataset.samples() {
        hasher.update(s.id.as_bytes());
        hasher.update([0u8]);
        hasher.update(s.byte_len.to_le_bytes());
    }
    hex(&hasher.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn unassigned(dataset: &Dataset, assigned: &[&[String]]) -> Vec<String> {
    let used: HashSet<&str> = assigned
        .iter()
        .flat_map(|ids| ids.iter().map(|s| s.as_str()))
        .collect();
    dataset
        .ids()
        .into_iter()
        .filter(|id| !used.contains(id.as_str()))
        .collect()
}

impl SplitManifest {
    fn base(strategy: &str, seed: u64, dataset: &Dataset) -> Self {
        SplitManifest {
            schema_version: SCHEMA_VERSION,
            strategy: strategy.to_string(),
            seed,
            generator: GENERATOR_NAME.to_string(),
            fractions: None,
            factor: None,
            n_folds: None,
            sizes: None,
            k: None,
            n_bins: None,
            mode: None,
            iterations: None,
            best_iteration: None,
            best_d: None,
            phase2: None,
            train_ids: Vec::new(),
            val_ids: Vec::new(),
            test_ids: Vec::new(),
            unassigned_ids: Vec::new(),
            val_equals_test: false,
            folds: None,
            fusion: None,
            dataset_fingerprint: dataset_fingerprint(dataset),
        }
    }

    fn sizes_of(train: &[String], val: &[String], test: &[String]) -> SizesRecord {
        SizesRecord {
            train: train.len() as u64,
            val: val.len() as u64,
            test: test.len() as u64,
        }
    }

    /// Manifest of a dissimilarity-search split. In val-equals-test mode the
    /// val ids are duplicated into the test role, flagged as such.
    pub fn from_chd(
        split: &ThreeWaySplit,
        dataset: &Dataset,
        global_fractions: &SplitFractions,
        phase1: &ChdConfig,
        phase2: Option<&ChdConfig>,
        fusion: Option<&BandFusionParams>,
    ) -> Self {
        let a = &split.assignment;
        let test_ids = if split.val_equals_test {
            a.val_ids.clone()
        } else {
            a.test_ids.clone()
        };
        let mut m = SplitManifest::base("chd", phase1.seed, dataset);
        m.fractions = Some(FractionsRecord::from_fractions(global_fractions));
        m.sizes = Some(Self::sizes_of(&a.train_ids, &a.val_ids, &test_ids));
        m.k = Some(phase1.k as u64);
        m.n_bins = Some(phase1.hist.n_bins as u64);
        m.mode = Some(phase1.mode.as_str().to_string());
        m.iterations = Some(phase1.iterations as u64);
        m.best_iteration = Some(split.phase1.best_iteration as u64);
        m.best_d = Some(split.phase1.best_d.to_string());
        m.phase2 = match (&split.phase2, phase2) {
            (Some(r2), Some(c2)) => Some(PhaseRecord {
                fractions: FractionsRecord::from_fractions(&c2.fractions),
                iterations: c2.iterations as u64,
                k: c2.k as u64,
                best_iteration: r2.best_iteration as u64,
                best_d: r2.best_d.to_string(),
            }),
            _ => None,
        };
        m.train_ids = a.train_ids.clone();
        m.val_ids = a.val_ids.clone();
        m.test_ids = test_ids;
        m.unassigned_ids = unassigned(dataset, &[&a.train_ids, &a.val_ids, &a.test_ids]);
        m.val_equals_test = split.val_equals_test;
        m.fusion = fusion.map(FusionRecord::from_params);
        m
    }

    pub fn from_random(
        assignment: &SplitAssignment,
        dataset: &Dataset,
        factor: f64,
        seed: u64,
        fusion: Option<&BandFusionParams>,
    ) -> Self {
        let mut m = SplitManifest::base("random", seed, dataset);
        m.factor = Some(factor.to_string());
        m.sizes = Some(Self::sizes_of(
            &assignment.train_ids,
            &assignment.val_ids,
            &assignment.test_ids,
        ));
        m.train_ids = assignment.train_ids.clone();
        m.val_ids = assignment.val_ids.clone();
        m.test_ids = assignment.test_ids.clone();
        m.unassigned_ids = unassigned(
            dataset,
            &[
                &assignment.train_ids,
                &assignment.val_ids,
                &assignment.test_ids,
            ],
        );
        m.fusion = fusion.map(FusionRecord::from_params);
        m
    }

    pub fn from_stratified(
        assignment: &SplitAssignment,
        dataset: &Dataset,
        fractions: &SplitFractions,
        seed: u64,
        fusion: Option<&BandFusionParams>,
    ) -> Self {
        let mut m = SplitManifest::base("stratified", seed, dataset);
        m.fractions = Some(FractionsRecord::from_fractions(fractions));
        m.sizes = Some(Self::sizes_of(
            &assignment.train_ids,
            &assignment.val_ids,
            &assignment.test_ids,
        ));
        m.train_ids = assignment.train_ids.clone();
        m.val_ids = assignment.val_ids.clone();
        m.test_ids = assignment.test_ids.clone();
        m.unassigned_ids = unassigned(
            dataset,
            &[
                &assignment.train_ids,
                &assignment.val_ids,
                &assignment.test_ids,
            ],
        );
        m.fusion = fusion.map(FusionRecord::from_params);
        m
    }

    pub fn from_kfold(
        folds: &FoldSet,
        dataset: &Dataset,
        seed: u64,
        fusion: Option<&BandFusionParams>,
    ) -> Self {
        let mut m = SplitManifest::base("kfold", seed, dataset);
        m.n_folds = Some(folds.folds.len() as u64);
        m.folds = Some(
            folds
                .folds
                .iter()
                .map(|f| ManifestFold {
                    train_ids: f.train_ids.clone(),
                    val_ids: f.val_ids.clone(),
                })
                .collect(),
        );
        m.fusion = fusion.map(FusionRecord::from_params);
        m
    }

    /// Check this manifest against a dataset: fingerprint, membership, and
    /// partition disjointness (val = test allowed only under the flag).
    pub fn verify_against(&self, dataset: &Dataset) -> Result<()> {
        let fp = dataset_fingerprint(dataset);
        if fp != self.dataset_fingerprint {
            return Err(Error::FingerprintMismatch(format!(
                "manifest was built on {} but this dataset hashes to {fp}",
                self.dataset_fingerprint
            )));
        }
        let all_lists: Vec<&[String]> = match &self.folds {
            Some(folds) => folds
                .iter()
                .flat_map(|f| [f.train_ids.as_slice(), f.val_ids.as_slice()])
                .collect(),
            None => vec![&self.train_ids, &self.val_ids, &self.test_ids],
        };
        for ids in &all_lists {
            for id in *ids {
                if dataset.index_of(id).is_none() {
                    return Err(Error::FingerprintMismatch(format!(
                        "manifest id {id:?} is not in the dataset"
                    )));
                }
            }
        }
        if self.folds.is_none() {
            let mut seen: HashSet<&str> = HashSet::new();
            for id in self.train_ids.iter().chain(&self.val_ids) {
                if !seen.insert(id) {
                    return Err(Error::FingerprintMismatch(format!(
                        "id {id:?} appears in more than one partition"
                    )));
                }
            }
            if self.val_equals_test {
                if self.test_ids != self.val_ids {
                    return Err(Error::FingerprintMismatch(
                        "val_equals_test is set but test_ids differ from val_ids".into(),
                    ));
                }
            } else {
                for id in &self.test_ids {
                    if !seen.insert(id) {
                        return Err(Error::FingerprintMismatch(format!(
                            "id {id:?} appears in more than one partition"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Serialize as canonical JSON: keys sorted at every level, two-space
/// indentation, one trailing newline.
pub fn manifest_to_canonical_json(manifest: &SplitManifest) -> Result<String> {
    let value = serde_json::to_value(manifest)
        .map_err(|e| Error::ManifestParse(format!("serialization failed: {e}")))?;
    let mut text = serde_json::to_string_pretty(&value)
        .map_err(|e| Error::ManifestParse(format!("serialization failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

pub fn write_manifest(manifest: &SplitManifest, path: &Path) -> Result<()> {
    fs::write(path, manifest_to_canonical_json(manifest)?).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<SplitManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::ManifestParse(format!("{}: {e}", path.display())))?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(SCHEMA_VERSION) => {}
        Some(other) => return Err(Error::SchemaMismatch(other)),
        None => {
            return Err(Error::ManifestParse(format!(
                "{}: missing schema_version",
                path.display()
            )))
        }
    }
    serde_json::from_value(value)
        .map_err(|e| Error::ManifestParse(format!("{}: {e}", path.display())))
}

/// Persist a search trace as CSV (`iteration,d`), values at full precision.
pub fn write_trace(trace: &IterationTrace, path: &Path) -> Result<()> {
    if trace.entries.is_empty() {
        return Err(Error::InvalidConfig("trace has no entries".into()));
    }
    let mut text = String::from("iteration,d\n");
    for e in &trace.entries {
        text.push_str(&format!("{},{}\n", e.iteration, e.d));
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Convenience: manifest + optional trace for a single-phase search result.
pub fn write_split_outputs(
    manifest: &SplitManifest,
    result: Option<&SplitResult>,
    manifest_path: &Path,
    trace_path: Option<&Path>,
) -> Result<()> {
    write_manifest(manifest, manifest_path)?;
    if let (Some(r), Some(tp)) = (result, trace_path) {
        write_trace(&r.trace, tp)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{SampleRecord, SampleSource};
    use crate::rng::Xoshiro256StarStar;

    fn dataset() -> Dataset {
        Dataset::new(
            (0..10)
                .map(|i| {
                    SampleRecord::new(
                        format!("s{i:02}"),
                        SampleSource::Synthetic("t".into()),
                        if i < 5 { "a" } else { "b" },
                        2,
                        2,
                        1,
                        vec![0.1 * i as f32; 4],
                    )
                })
                .collect(),
        )
        .unwrap()
    }

    fn random_manifest(seed: u64) -> (SplitManifest, Dataset) {
        let ds = dataset();
        let a = crate::baselines::random_split(&ds, 0.3, seed).unwrap();
        let m = SplitManifest::from_random(&a, &ds, 0.3, seed, None);
        (m, ds)
    }

    #[test]
    fn roundtrip_preserves_everything() {
        let tmp = tempfile::tempdir().unwrap();
        let (m, _) = random_manifest(4);
        let path = tmp.path().join("m.json");
        write_manifest(&m, &path).unwrap();
        let back = read_manifest(&path).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn canonical_output_is_byte_stable() {
        let tmp = tempfile::tempdir().unwrap();
        let (m, _) = random_manifest(4);
        let p1 = tmp.path().join("a.json");
        let p2 = tmp.path().join("b.json");
        write_manifest(&m, &p1).unwrap();
        write_manifest(&m, &p2).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
        let text = fs::read_to_string(&p1).unwrap();
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn fingerprint_detects_dataset_changes() {
        let (m, ds) = random_manifest(4);
        m.verify_against(&ds).unwrap();

        // Same ids, one perturbed byte length.
        let mut samples: Vec<SampleRecord> = ds.samples().to_vec();
        samples[3] = samples[3].clone().with_byte_len(999_999);
        let perturbed = Dataset::new(samples).unwrap();
        assert!(matches!(
            m.verify_against(&perturbed),
            Err(Error::FingerprintMismatch(_))
        ));

        // One sample missing.
        let fewer = Dataset::new(ds.samples()[1..].to_vec()).unwrap();
        assert!(matches!(
            m.verify_against(&fewer),
            Err(Error::FingerprintMismatch(_))
        ));
    }

    #[test]
    fn schema_mismatch_detected() {
        let tmp = tempfile::tempdir().unwrap();
        let (m, _) = random_manifest(4);
        let path = tmp.path().join("m.json");
        write_manifest(&m, &path).unwrap();
        let text = fs::read_to_string(&path)
            .unwrap()
            .replace("\"schema_version\": 1", "\"schema_version\": 99");
        fs::write(&path, text).unwrap();
        assert!(matches!(
            read_manifest(&path),
            Err(Error::SchemaMismatch(99))
        ));
    }

    #[test]
    fn malformed_json_reports_parse_error() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("m.json");
        fs::write(&path, "{not json").unwrap();
        assert!(matches!(read_manifest(&path), Err(Error::ManifestParse(_))));
        assert!(matches!(
            read_manifest(&tmp.path().join("absent.json")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn trace_csv_roundtrips_at_full_precision() {
        let tmp = tempfile::tempdir().unwrap();
        let entries: Vec<crate::splitter::TraceEntry> = (0..3)
            .map(|i| {
                let mut rng = Xoshiro256StarStar::from_seed(i as u64);
                crate::splitter::TraceEntry {
                    iteration: i,
                    d: rng.next_f64() / 7.0,
                    substream: 0,
                }
            })
            .collect();
        let trace = IterationTrace {
            entries: entries.clone(),
        };
        let path = tmp.path().join("trace.csv");
        write_trace(&trace, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4, "header plus one row per iteration");
        assert_eq!(lines[0], "iteration,d");
        for (line, e) in lines[1..].iter().zip(&entries) {
            let (i, d) = line.split_once(',').unwrap();
            assert_eq!(i.parse::<usize>().unwrap(), e.iteration);
            assert_eq!(d.parse::<f64>().unwrap(), e.d, "full-precision roundtrip");
        }
    }

    #[test]
    fn val_equals_test_manifests_validate() {
        let ds = dataset();
        let a = crate::baselines::random_split(&ds, 0.3, 1).unwrap();
        let mut m = SplitManifest::from_random(&a, &ds, 0.3, 1, None);
        m.val_equals_test = true;
        m.test_ids = m.val_ids.clone();
        m.verify_against(&ds).unwrap();

        m.test_ids.pop();
        assert!(matches!(
            m.verify_against(&ds),
            Err(Error::FingerprintMismatch(_))
        ));
    }

    #[test]
    fn overlapping_partitions_rejected() {
        let ds = dataset();
        let a = crate::baselines::random_split(&ds, 0.3, 1).unwrap();
        let mut m = SplitManifest::from_random(&a, &ds, 0.3, 1, None);
        m.test_ids = vec![m.train_ids[0].clone()];
        assert!(matches!(
            m.verify_against(&ds),
            Err(Error::FingerprintMismatch(_))
        ));
    }
}
