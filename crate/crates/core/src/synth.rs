//! Deterministic synthetic datasets for demos and test oracles.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, SampleRecord, SampleSource};
use crate::error::{Error, Result};
use crate::rng::Xoshiro256StarStar;

/// Pixel-value distribution of one synthetic class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "distribution", rename_all = "kebab-case")]
pub enum PixelDistribution {
    /// Uniform over [low, high).
    Uniform { low: f64, high: f64 },
    /// Two-point mixture: `values[0]` with probability `weight`, else
    /// `values[1]`.
    TwoPoint { values: [f64; 2], weight: f64 },
}

impl PixelDistribution {
    fn validate(&self, label: &str) -> Result<()> {
        match self {
            PixelDistribution::Uniform { low, high } => {
                if !(low.is_finite() && high.is_finite()) {
                    return Err(Error::InvalidSpec(format!(
                        "class {label:?} has a non-finite range"
                    )));
                }
                if *low < 0.0 {
                    return Err(Error::InvalidSpec(format!(
                        "class {label:?} range starts below zero ({low})"
                    )));
                }
                if high <= low {
                    return Err(Error::InvalidSpec(format!(
                        "class {label:?} range [{low}, {high}) is empty"
                    )));
                }
            }
            PixelDistribution::TwoPoint { values, weight } => {
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::InvalidSpec(format!(
                        "class {label:?} has a negative or non-finite point value"
                    )));
                }
                if !(0.0..=1.0).contains(weight) {
                    return Err(Error::InvalidSpec(format!(
                        "class {label:?} mixture weight {weight} is outside [0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }

    fn sample(&self, rng: &mut Xoshiro256StarStar) -> f32 {
        match self {
            PixelDistribution::Uniform { low, high } => {
                (low + rng.next_f64() * (high - low)) as f32
            }
            PixelDistribution::TwoPoint { values, weight } => {
                if rng.next_f64() < *weight {
                    values[0] as f32
                } else {
                    values[1] as f32
                }
            }
        }
    }
}

/// Shape and per-class distributions of a synthetic dataset. Classes are
/// keyed by label; the map's sorted order is the generation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub width: u32,
    pub height: u32,
    pub channels: u32,
    pub classes: BTreeMap<String, PixelDistribution>,
}

/// On-disk config: a [`SynthSpec`] plus the per-class sample count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub width: u32,
    pub height: u32,
    #[serde(default = "one")]
    pub channels: u32,
    pub n_per_class: usize,
    pub classes: BTreeMap<String, PixelDistribution>,
}

fn one() -> u32 {
    1
}

impl SynthConfig {
    pub fn spec(&self) -> SynthSpec {
        SynthSpec {
            width: self.width,
            height: self.height,
            channels: self.channels,
            classes: self.classes.clone(),
        }
    }
}

/// Parse a TOML synthetic-dataset config.
///
/// ```toml
/// width = 8
/// height = 8
/// channels = 1
/// n_per_class = 100
///
/// [classes.low]
/// distribution = "uniform"
/// low = 0.0
/// high = 0.2
///
/// [classes.high]
/// distribution = "two-point"
/// values = [0.85, 0.95]
/// weight = 0.5
/// ```
pub fn parse_synth_config(text: &str) -> Result<SynthConfig> {
    toml::from_str(text).map_err(|e| Error::InvalidSpec(format!("synthetic config: {e}")))
}

/// Generate a dataset: `n_per_class` samples per class, pixels drawn from the
/// class distribution. Pure function of (spec, n_per_class, seed).
pub fn synth_dataset(spec: &SynthSpec, n_per_class: usize, seed: u64) -> Result<Dataset> {
    if spec.classes.is_empty() {
        return Err(Error::InvalidSpec("no classes defined".into()));
    }
    if n_per_class == 0 {
        return Err(Error::InvalidSpec("n_per_class must be at least 1".into()));
    }
    if spec.width == 0 || spec.height == 0 || spec.channels == 0 {
        return Err(Error::InvalidSpec(format!(
            "image shape {}x{}x{} has a zero dimension",
            spec.width, spec.height, spec.channels
        )));
    }
    for (label, dist) in &spec.classes {
        dist.validate(label)?;
    }

    let px_per_image = spec.width as usize * spec.height as usize * spec.channels as usize;
    let mut rng = Xoshiro256StarStar::from_seed(seed);
    let mut samples = Vec::with_capacity(spec.classes.len() * n_per_class);
    for (label, dist) in &spec.classes {
        for i in 0..n_per_class {
            let pixels: Vec<f32> = (0..px_per_image).map(|_| dist.sample(&mut rng)).collect();
            samples.push(SampleRecord::new(
                format!("{label}_{i:04}"),
                SampleSource::Synthetic(format!("synth:{label} seed={seed}")),
                label.clone(),
                spec.width,
                spec.height,
                spec.channels,
                pixels,
            ));
        }
    }
    Dataset::new(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bimodal_spec() -> SynthSpec {
        let mut classes = BTreeMap::new();
        classes.insert(
            "low".to_string(),
            PixelDistribution::Uniform {
                low: 0.0,
                high: 0.2,
            },
        );
        classes.insert(
            "high".to_string(),
            PixelDistribution::Uniform {
                low: 0.8,
                high: 1.0,
            },
        );
        SynthSpec {
            width: 4,
            height: 4,
            channels: 1,
            classes,
        }
    }

    #[test]
    fn bimodal_population() {
        let ds = synth_dataset(&bimodal_spec(), 8, 7).unwrap();
        assert_eq!(ds.n(), 16);
        assert_eq!(ds.labels(), vec!["high", "low"]);
        for s in ds.samples() {
            let in_low = s.pixels().iter().all(|&v| (0.0..0.2).contains(&v));
            let in_high = s.pixels().iter().all(|&v| (0.8..1.0).contains(&v));
            match s.label.as_str() {
                "low" => assert!(in_low, "sample {} leaked out of its range", s.id),
                "high" => assert!(in_high, "sample {} leaked out of its range", s.id),
                other => panic!("unexpected label {other}"),
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let a = synth_dataset(&bimodal_spec(), 8, 7).unwrap();
        let b = synth_dataset(&bimodal_spec(), 8, 7).unwrap();
        assert_eq!(a.n(), b.n());
        for (x, y) in a.samples().iter().zip(b.samples()) {
            assert_eq!(x.id, y.id);
            let xb: Vec<u32> = x.pixels().iter().map(|v| v.to_bits()).collect();
            let yb: Vec<u32> = y.pixels().iter().map(|v| v.to_bits()).collect();
            assert_eq!(xb, yb, "pixel buffers differ for {}", x.id);
        }
        let c = synth_dataset(&bimodal_spec(), 8, 8).unwrap();
        assert_ne!(
            a.get(0).pixels(),
            c.get(0).pixels(),
            "different seeds should differ"
        );
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(matches!(
            synth_dataset(&bimodal_spec(), 0, 7),
            Err(Error::InvalidSpec(_))
        ));

        let mut empty = bimodal_spec();
        empty.classes.clear();
        assert!(matches!(
            synth_dataset(&empty, 4, 7),
            Err(Error::InvalidSpec(_))
        ));

        let mut negative = bimodal_spec();
        negative.classes.insert(
            "bad".to_string(),
            PixelDistribution::Uniform {
                low: -0.1,
                high: 0.5,
            },
        );
        assert!(matches!(
            synth_dataset(&negative, 4, 7),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn two_point_mixture_emits_exactly_the_two_values() {
        let mut classes = BTreeMap::new();
        classes.insert(
            "mix".to_string(),
            PixelDistribution::TwoPoint {
                values: [0.25, 0.75],
                weight: 0.5,
            },
        );
        let spec = SynthSpec {
            width: 8,
            height: 8,
            channels: 1,
            classes,
        };
        let ds = synth_dataset(&spec, 4, 3).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for s in ds.samples() {
            for &v in s.pixels() {
                seen.insert(v.to_bits());
            }
        }
        assert_eq!(seen.len(), 2);
        assert!(seen.contains(&0.25f32.to_bits()));
        assert!(seen.contains(&0.75f32.to_bits()));
    }

    #[test]
    fn toml_config_parses() {
        let text = r#"
width = 8
height = 8
n_per_class = 100

[classes.low]
distribution = "uniform"
low = 0.0
high = 0.2

[classes.high]
distribution = "two-point"
values = [0.85, 0.95]
weight = 0.5
"#;
        let cfg = parse_synth_config(text).unwrap();
        assert_eq!(cfg.channels, 1, "channels defaults to 1");
        assert_eq!(cfg.n_per_class, 100);
        assert_eq!(cfg.classes.len(), 2);
        assert!(matches!(
            cfg.classes["high"],
            PixelDistribution::TwoPoint { .. }
        ));
        let ds = synth_dataset(&cfg.spec(), cfg.n_per_class, 1).unwrap();
        assert_eq!(ds.n(), 200);
    }

    #[test]
    fn malformed_toml_reports_invalid_spec() {
        assert!(matches!(
            parse_synth_config("width = \"eight\""),
            Err(Error::InvalidSpec(_))
        ));
    }
}
