//! SWIR/RGB band fusion: fold short-wave infrared energy into the red and
//! green channels so hot surfaces stand out in an RGB composite.

use crate::dataset::SampleRecord;
use crate::error::{Error, Result};

pub const FUSED_BAND_NAMES: [&str; 3] = ["B4n", "B3n", "B2n"];
pub const REQUIRED_BAND_NAMES: [&str; 5] = ["B2", "B3", "B4", "SWIR1", "SWIR2"];

/// Per-channel gains and the SWIR activation threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandFusionParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub swir_offset: f64,
}

impl Default for BandFusionParams {
    fn default() -> Self {
        BandFusionParams {
            alpha1: 2.5,
            alpha2: 2.5,
            alpha3: 2.5,
            swir_offset: 0.1,
        }
    }
}

impl BandFusionParams {
    pub fn new(alpha1: f64, alpha2: f64, alpha3: f64, swir_offset: f64) -> Result<Self> {
        for (name, v) in [
            ("alpha1", alpha1),
            ("alpha2", alpha2),
            ("alpha3", alpha3),
            ("swir_offset", swir_offset),
        ] {
            if !v.is_finite() {
                return Err(Error::NonFiniteInput(format!("{name} is {v}")));
            }
        }
        if alpha1 <= 0.0 || alpha2 <= 0.0 || alpha3 <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "fusion gains must be positive, got ({alpha1}, {alpha2}, {alpha3})"
            )));
        }
        Ok(BandFusionParams {
            alpha1,
            alpha2,
            alpha3,
            swir_offset,
        })
    }
}

/// Fuse one pixel:
///
/// ```text
/// b4n = alpha1·b4 + max(0, swir2 − offset)
/// b3n = alpha2·b3 + max(0, swir1 − offset)
/// b2n = alpha3·b2
/// ```
///
/// No clipping is applied; downstream histogramming clamps out-of-range
/// values into its end bins.
pub fn fuse_swir_rgb(
    b2: f64,
    b3: f64,
    b4: f64,
    swir1: f64,
    swir2: f64,
    params: &BandFusionParams,
) -> Result<(f64, f64, f64)> {
    for (name, v) in [
        ("B2", b2),
        ("B3", b3),
        ("B4", b4),
        ("SWIR1", swir1),
        ("SWIR2", swir2),
    ] {
        if !v.is_finite() {
            return Err(Error::NonFiniteInput(format!("band {name} value is {v}")));
        }
    }
    let b4n = params.alpha1 * b4 + (swir2 - params.swir_offset).max(0.0);
    let b3n = params.alpha2 * b3 + (swir1 - params.swir_offset).max(0.0);
    let b2n = params.alpha3 * b2;
    Ok((b2n, b3n, b4n))
}

/// Fuse a five-band sample into a three-band one (channel order B4n, B3n,
/// B2n — red, green, blue of the composite). Band positions come from the
/// sample's `band_names`.
pub fn fuse_image(sample: &SampleRecord, params: &BandFusionParams) -> Result<SampleRecord> {
    let names = sample.band_names.as_deref().unwrap_or(&[]);
    let mut band_pos = [0usize; 5];
    for (slot, want) in REQUIRED_BAND_NAMES.iter().enumerate() {
        band_pos[slot] = names
            .iter()
            .position(|n| n == want)
            .ok_or_else(|| Error::MissingBand((*want).to_string()))?;
    }
    let ch = sample.channels as usize;
    let px = sample.pixels();
    let n_px = px.len() / ch;
    let mut fused = Vec::with_capacity(n_px * 3);
    for i in 0..n_px {
        let at = |slot: usize| px[i * ch + band_pos[slot]] as f64;
        let (b2n, b3n, b4n) = fuse_swir_rgb(at(0), at(1), at(2), at(3), at(4), params)?;
        fused.push(b4n as f32);
        fused.push(b3n as f32);
        fused.push(b2n as f32);
    }
    let mut out = SampleRecord::new(
        sample.id.clone(),
        sample.source.clone(),
        sample.label.clone(),
        sample.width,
        sample.height,
        3,
        fused,
    )
    .with_band_names(FUSED_BAND_NAMES.iter().map(|s| s.to_string()).collect());
    out.lat = sample.lat;
    out.lon = sample.lon;
    out = out.with_byte_len(sample.byte_len);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::SampleSource;
    use approx::assert_relative_eq;

    const TOL: f64 = 1e-12;

    #[test]
    fn red_channel_with_active_swir() {
        let p = BandFusionParams::default();
        let (_, _, b4n) = fuse_swir_rgb(0.0, 0.0, 0.2, 0.0, 0.3, &p).unwrap();
        // Same operations the implementation performs, spelled out.
        assert_eq!(b4n, 2.5 * 0.2 + (0.3 - 0.1));
        assert_relative_eq!(b4n, 0.7, epsilon = TOL);
    }

    #[test]
    fn swir_below_threshold_contributes_nothing() {
        let p = BandFusionParams::default();
        let (_, _, b4n) = fuse_swir_rgb(0.0, 0.0, 0.2, 0.0, 0.05, &p).unwrap();
        assert_eq!(b4n, 2.5 * 0.2);
        assert_relative_eq!(b4n, 0.5, epsilon = TOL);
    }

    #[test]
    fn blue_channel_is_pure_gain() {
        let p = BandFusionParams::default();
        let (b2n, _, _) = fuse_swir_rgb(0.1, 0.0, 0.0, 0.0, 0.0, &p).unwrap();
        assert_eq!(b2n, 2.5 * 0.1);
        assert_relative_eq!(b2n, 0.25, epsilon = TOL);
    }

    #[test]
    fn green_channel_uses_swir1() {
        let p = BandFusionParams::default();
        let (_, b3n, _) = fuse_swir_rgb(0.0, 0.3, 0.0, 0.4, 0.0, &p).unwrap();
        assert_eq!(b3n, 2.5 * 0.3 + (0.4 - 0.1));
    }

    #[test]
    fn non_finite_band_rejected() {
        let p = BandFusionParams::default();
        assert!(matches!(
            fuse_swir_rgb(0.1, 0.1, f64::NAN, 0.1, 0.1, &p),
            Err(Error::NonFiniteInput(_))
        ));
    }

    #[test]
    fn swir_monotonicity() {
        let p = BandFusionParams::default();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..50 {
            let swir2 = i as f64 / 25.0;
            let (_, _, b4n) = fuse_swir_rgb(0.0, 0.0, 0.2, 0.0, swir2, &p).unwrap();
            assert!(b4n >= prev, "b4n decreased as swir2 grew");
            prev = b4n;
        }
    }

    #[test]
    fn below_threshold_swir_reduces_to_channel_scaling() {
        let p = BandFusionParams::default();
        let (b2n, b3n, b4n) = fuse_swir_rgb(0.12, 0.3, 0.25, 0.09, 0.01, &p).unwrap();
        assert_eq!(b2n, p.alpha3 * 0.12);
        assert_eq!(b3n, p.alpha2 * 0.3);
        assert_eq!(b4n, p.alpha1 * 0.25);
    }

    fn five_band_sample(width: u32, height: u32, pixels: Vec<f32>) -> SampleRecord {
        SampleRecord::new(
            "s0",
            SampleSource::Synthetic("test".into()),
            "c",
            width,
            height,
            5,
            pixels,
        )
        .with_band_names(REQUIRED_BAND_NAMES.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn constant_image_matches_scalar_op() {
        let p = BandFusionParams::default();
        let bands = [0.1f32, 0.2, 0.3, 0.15, 0.25]; // B2, B3, B4, SWIR1, SWIR2
        let pixels: Vec<f32> = std::iter::repeat_n(bands, 4).flatten().collect();
        let fused = fuse_image(&five_band_sample(2, 2, pixels), &p).unwrap();
        let (b2n, b3n, b4n) = fuse_swir_rgb(
            bands[0] as f64,
            bands[1] as f64,
            bands[2] as f64,
            bands[3] as f64,
            bands[4] as f64,
            &p,
        )
        .unwrap();
        assert_eq!(fused.channels, 3);
        for px in fused.pixels().chunks(3) {
            assert_eq!(px, [b4n as f32, b3n as f32, b2n as f32]);
        }
    }

    #[test]
    fn random_image_matches_per_pixel_oracle_bitwise() {
        let p = BandFusionParams::default();
        let mut rng = crate::rng::Xoshiro256StarStar::from_seed(17);
        let pixels: Vec<f32> = (0..4 * 4 * 5).map(|_| rng.next_f64() as f32).collect();
        let sample = five_band_sample(4, 4, pixels.clone());
        let fused = fuse_image(&sample, &p).unwrap();
        for (i, chunk) in pixels.chunks(5).enumerate() {
            let (b2n, b3n, b4n) = fuse_swir_rgb(
                chunk[0] as f64,
                chunk[1] as f64,
                chunk[2] as f64,
                chunk[3] as f64,
                chunk[4] as f64,
                &p,
            )
            .unwrap();
            let got = &fused.pixels()[i * 3..i * 3 + 3];
            assert_eq!(got[0].to_bits(), (b4n as f32).to_bits());
            assert_eq!(got[1].to_bits(), (b3n as f32).to_bits());
            assert_eq!(got[2].to_bits(), (b2n as f32).to_bits());
        }
    }

    #[test]
    fn missing_band_is_named() {
        let p = BandFusionParams::default();
        let mut sample = five_band_sample(2, 2, vec![0.1; 20]);
        sample.band_names = Some(vec![
            "B2".into(),
            "B3".into(),
            "B4".into(),
            "SWIR2".into(),
            "EXTRA".into(),
        ]);
        match fuse_image(&sample, &p).unwrap_err() {
            Error::MissingBand(b) => assert_eq!(b, "SWIR1"),
            other => panic!("expected MissingBand, got {other:?}"),
        }
    }

    #[test]
    fn unnamed_bands_rejected() {
        let p = BandFusionParams::default();
        let sample = SampleRecord::new(
            "s0",
            SampleSource::Synthetic("test".into()),
            "c",
            2,
            2,
            5,
            vec![0.1; 20],
        );
        assert!(matches!(
            fuse_image(&sample, &p),
            Err(Error::MissingBand(_))
        ));
    }
}
