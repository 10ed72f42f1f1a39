//! Dataset ingestion from labeled directory trees and float-TIFF writing for
//! synthetic/fused datasets.
//!
//! Layout: one subdirectory per class label under the root, each holding
//! PNG, JPEG, or single/multi-band TIFF rasters. Integer pixel formats are
//! normalized to [0, 1] by their type maximum; float formats are taken as-is.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use tiff::decoder::{Decoder, DecodingResult};
use tiff::encoder::{colortype, TiffEncoder};
use tiff::ColorType as TiffColorType;

use crate::dataset::{Dataset, SampleRecord, SampleSource};
use crate::error::{Error, Result};
use crate::fusion::{fuse_image, BandFusionParams, REQUIRED_BAND_NAMES};

/// Ingestion options. `fuse` applies SWIR/RGB band fusion to every five-band
/// sample at load time; files it cannot be applied to are reported as
/// skipped.
#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    pub fuse: Option<BandFusionParams>,
}

/// A loaded dataset plus the files that could not be used, with reasons.
/// Skipped files are reported, never silently dropped.
#[derive(Debug)]
pub struct LoadReport {
    pub dataset: Dataset,
    pub skipped: Vec<(PathBuf, String)>,
}

/// Load every decodable raster under `root` (one subdirectory per label).
pub fn load_dataset(root: &Path, options: &IngestOptions) -> Result<LoadReport> {
    let mut samples = Vec::new();
    let mut skipped = Vec::new();

    let mut labels: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    labels.sort();

    for label_dir in labels {
        let label = label_dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut files: Vec<PathBuf> = fs::read_dir(&label_dir)
            .map_err(|e| Error::io(&label_dir, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && known_extension(p))
            .collect();
        files.sort();

        for path in files {
            match load_sample(&path, &label, options) {
                Ok(sample) => samples.push(sample),
                Err(e) => skipped.push((path, e.to_string())),
            }
        }
    }

    if samples.is_empty() {
        return Err(Error::EmptyDataset(root.to_path_buf()));
    }
    Ok(LoadReport {
        dataset: Dataset::new(samples)?,
        skipped,
    })
}

fn known_extension(path: &Path) -> bool {
    matches!(
        path.extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref(),
        Some("png" | "jpg" | "jpeg" | "tif" | "tiff")
    )
}

fn load_sample(path: &Path, label: &str, options: &IngestOptions) -> Result<SampleRecord> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    let (width, height, channels, pixels) = if ext == "tif" || ext == "tiff" {
        decode_tiff(path)?
    } else {
        decode_common(path)?
    };

    if pixels.len() != width as usize * height as usize * channels as usize {
        return Err(Error::InvalidDataset(format!(
            "{}: decoded {} values for a {}x{}x{} image",
            path.display(),
            pixels.len(),
            width,
            height,
            channels
        )));
    }
    if let Some(i) = pixels.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput(format!(
            "{}: non-finite pixel at flat index {i}",
            path.display()
        )));
    }

    let byte_len = fs::metadata(path).map_err(|e| Error::io(path, e))?.len();
    let file_name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut sample = SampleRecord::new(
        format!("{label}/{file_name}"),
        SampleSource::File(path.to_path_buf()),
        label,
        width,
        height,
        channels,
        pixels,
    )
    .with_byte_len(byte_len);
    if channels == 5 {
        sample =
            sample.with_band_names(REQUIRED_BAND_NAMES.iter().map(|s| s.to_string()).collect());
    }

    match &options.fuse {
        Some(params) => fuse_image(&sample, params),
        None => Ok(sample),
    }
}

/// PNG/JPEG via the common image decoder; alpha channels are dropped.
fn decode_common(path: &Path) -> Result<(u32, u32, u32, Vec<f32>)> {
    let img =
        image::open(path).map_err(|e| Error::InvalidDataset(format!("{}: {e}", path.display())))?;
    use image::DynamicImage as D;
    let (w, h) = (img.width(), img.height());
    let out = match img {
        D::ImageLuma8(b) => (w, h, 1, norm_u8(b.into_raw())),
        D::ImageLumaA8(b) => (w, h, 1, drop_alpha(norm_u8(b.into_raw()), 2)),
        D::ImageRgb8(b) => (w, h, 3, norm_u8(b.into_raw())),
        D::ImageRgba8(b) => (w, h, 3, drop_alpha(norm_u8(b.into_raw()), 4)),
        D::ImageLuma16(b) => (w, h, 1, norm_u16(b.into_raw())),
        D::ImageLumaA16(b) => (w, h, 1, drop_alpha(norm_u16(b.into_raw()), 2)),
        D::ImageRgb16(b) => (w, h, 3, norm_u16(b.into_raw())),
        D::ImageRgba16(b) => (w, h, 3, drop_alpha(norm_u16(b.into_raw()), 4)),
        D::ImageRgb32F(b) => (w, h, 3, b.into_raw()),
        D::ImageRgba32F(b) => (w, h, 3, drop_alpha(b.into_raw(), 4)),
        other => {
            let b = other.to_rgb8();
            (w, h, 3, norm_u8(b.into_raw()))
        }
    };
    Ok(out)
}

fn decode_tiff(path: &Path) -> Result<(u32, u32, u32, Vec<f32>)> {
    let show =
        |e: &dyn std::fmt::Display| Error::InvalidDataset(format!("{}: {e}", path.display()));
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut dec = Decoder::new(BufReader::new(file)).map_err(|e| show(&e))?;
    let (w, h) = dec.dimensions().map_err(|e| show(&e))?;
    let channels = match dec.colortype().map_err(|e| show(&e))? {
        TiffColorType::Gray(_) => 1,
        TiffColorType::GrayA(_) => 2,
        TiffColorType::RGB(_) => 3,
        TiffColorType::RGBA(_) => 4,
        TiffColorType::Multiband { num_samples, .. } => num_samples as u32,
        other => {
            return Err(Error::InvalidDataset(format!(
                "{}: unsupported TIFF color type {other:?}",
                path.display()
            )))
        }
    };
    let pixels = match dec.read_image().map_err(|e| show(&e))? {
        DecodingResult::U8(v) => norm_u8(v),
        DecodingResult::U16(v) => norm_u16(v),
        DecodingResult::U32(v) => v
            .into_iter()
            .map(|x| (x as f64 / u32::MAX as f64) as f32)
            .collect(),
        DecodingResult::U64(v) => v
            .into_iter()
            .map(|x| (x as f64 / u64::MAX as f64) as f32)
            .collect(),
        DecodingResult::F32(v) => v,
        DecodingResult::F64(v) => v.into_iter().map(|x| x as f32).collect(),
        other => {
            return Err(Error::InvalidDataset(format!(
                "{}: unsupported TIFF sample format {:?}",
                path.display(),
                std::mem::discriminant(&other)
            )))
        }
    };
    Ok((w, h, channels, pixels))
}

fn norm_u8(v: Vec<u8>) -> Vec<f32> {
    v.into_iter().map(|x| x as f32 / u8::MAX as f32).collect()
}

fn norm_u16(v: Vec<u16>) -> Vec<f32> {
    v.into_iter().map(|x| x as f32 / u16::MAX as f32).collect()
}

fn drop_alpha(v: Vec<f32>, stride: usize) -> Vec<f32> {
    v.chunks(stride)
        .flat_map(|c| c[..stride - 1].iter().copied())
        .collect()
}

/// Five interleaved 32-bit float samples per pixel.
struct Band5F32;
impl colortype::ColorType for Band5F32 {
    type Inner = f32;
    const TIFF_VALUE: tiff::tags::PhotometricInterpretation =
        tiff::tags::PhotometricInterpretation::BlackIsZero;
    const BITS_PER_SAMPLE: &'static [u16] = &[32; 5];
    const SAMPLE_FORMAT: &'static [tiff::tags::SampleFormat] =
        &[tiff::tags::SampleFormat::IEEEFP; 5];
    fn horizontal_predict(_: &[f32], _: &mut Vec<f32>) {
        unreachable!()
    }
}

/// Write interleaved f32 pixels as an uncompressed TIFF. Supports 1, 3, or
/// 5 channels (grayscale, RGB, five-band).
pub fn write_tiff_f32(
    path: &Path,
    width: u32,
    height: u32,
    channels: u32,
    pixels: &[f32],
) -> Result<()> {
    if pixels.len() != width as usize * height as usize * channels as usize {
        return Err(Error::InvalidDataset(format!(
            "{} values do not fill a {width}x{height}x{channels} image",
            pixels.len()
        )));
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = TiffEncoder::new(std::io::BufWriter::new(file))
        .map_err(|e| Error::InvalidDataset(format!("{}: {e}", path.display())))?;
    let res = match channels {
        1 => enc.write_image::<colortype::Gray32Float>(width, height, pixels),
        3 => enc.write_image::<colortype::RGB32Float>(width, height, pixels),
        5 => enc.write_image::<Band5F32>(width, height, pixels),
        other => {
            return Err(Error::InvalidConfig(format!(
                "TIFF writing supports 1, 3, or 5 channels, got {other}"
            )))
        }
    };
    res.map_err(|e| Error::InvalidDataset(format!("{}: {e}", path.display())))
}

/// Persist a dataset as a labeled TIFF tree: `root/<label>/<file>.tif`.
/// Sample ids must be usable as file names (synthetic ids are); a trailing
/// `.tif`/`.tiff` is not doubled, other extensions are kept in the name so
/// re-exported trees cannot collide.
pub fn write_dataset_tree(root: &Path, dataset: &Dataset) -> Result<()> {
    for s in dataset.samples() {
        let dir = root.join(&s.label);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let name = s.id.rsplit('/').next().unwrap_or(&s.id);
        let stem = name
            .strip_suffix(".tif")
            .or_else(|| name.strip_suffix(".tiff"))
            .unwrap_or(name);
        let path = dir.join(format!("{stem}.tif"));
        write_tiff_f32(&path, s.width, s.height, s.channels, s.pixels())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Xoshiro256StarStar;

    fn gray_png(path: &Path, w: u32, h: u32, value: u8) {
        let img = image::GrayImage::from_pixel(w, h, image::Luma([value]));
        img.save(path).unwrap();
    }

    #[test]
    fn loads_labeled_tree_with_normalization() {
        let tmp = tempfile::tempdir().unwrap();
        for (label, values) in [("eruption", [10u8, 20, 30]), ("quiet", [200, 210, 220])] {
            let dir = tmp.path().join(label);
            fs::create_dir(&dir).unwrap();
            for (i, v) in values.iter().enumerate() {
                gray_png(&dir.join(format!("img{i}.png")), 2, 2, *v);
            }
        }
        let report = load_dataset(tmp.path(), &IngestOptions::default()).unwrap();
        assert_eq!(report.dataset.n(), 6);
        assert!(report.skipped.is_empty());
        assert_eq!(report.dataset.labels(), vec!["eruption", "quiet"]);
        let first = report.dataset.get(0);
        assert_eq!(first.id, "eruption/img0.png");
        assert!(first
            .pixels()
            .iter()
            .all(|&v| (v - 10.0 / 255.0).abs() < 1e-6));
        assert!(first.byte_len > 0);
    }

    #[test]
    fn corrupt_file_is_reported_not_fatal() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("a");
        fs::create_dir(&dir).unwrap();
        gray_png(&dir.join("good.png"), 2, 2, 128);
        fs::write(dir.join("broken.png"), b"not a png").unwrap();
        let report = load_dataset(tmp.path(), &IngestOptions::default()).unwrap();
        assert_eq!(report.dataset.n(), 1);
        assert_eq!(report.skipped.len(), 1);
        assert!(report.skipped[0].0.ends_with("broken.png"));
    }

    #[test]
    fn empty_tree_is_an_error() {
        let tmp = tempfile::tempdir().unwrap();
        fs::create_dir(tmp.path().join("emptyclass")).unwrap();
        assert!(matches!(
            load_dataset(tmp.path(), &IngestOptions::default()),
            Err(Error::EmptyDataset(_))
        ));
    }

    #[test]
    fn reload_is_identical() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("c");
        fs::create_dir(&dir).unwrap();
        for i in 0..4 {
            gray_png(&dir.join(format!("img{i}.png")), 3, 2, 40 * i as u8);
        }
        let a = load_dataset(tmp.path(), &IngestOptions::default()).unwrap();
        let b = load_dataset(tmp.path(), &IngestOptions::default()).unwrap();
        assert_eq!(a.dataset.ids(), b.dataset.ids());
        for (x, y) in a.dataset.samples().iter().zip(b.dataset.samples()) {
            assert_eq!(x.pixels(), y.pixels());
        }
    }

    #[test]
    fn float_tiff_roundtrip_is_exact() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("c");
        fs::create_dir(&dir).unwrap();
        let mut rng = Xoshiro256StarStar::from_seed(5);
        for channels in [1u32, 3, 5] {
            let px: Vec<f32> = (0..4 * 4 * channels)
                .map(|_| rng.next_f64() as f32)
                .collect();
            write_tiff_f32(&dir.join(format!("b{channels}.tif")), 4, 4, channels, &px).unwrap();
        }
        let report = load_dataset(tmp.path(), &IngestOptions::default()).unwrap();
        assert_eq!(report.dataset.n(), 3);
        for s in report.dataset.samples() {
            let want: u32 = s.id["c/b".len()..s.id.len() - ".tif".len()]
                .parse()
                .unwrap();
            assert_eq!(s.channels, want);
            assert_eq!(s.pixels().len(), (16 * want) as usize);
        }
        // Bit-exact roundtrip for the five-band file.
        let mut rng = Xoshiro256StarStar::from_seed(5);
        let px1: Vec<f32> = (0..16).map(|_| rng.next_f64() as f32).collect();
        let got = report
            .dataset
            .get(report.dataset.index_of("c/b1.tif").unwrap());
        assert_eq!(got.pixels(), &px1[..]);
        assert_eq!(
            got.band_names, None,
            "band names only attach to five-band rasters"
        );
        let five = report
            .dataset
            .get(report.dataset.index_of("c/b5.tif").unwrap());
        assert!(five.band_names.is_some());
    }

    #[test]
    fn fusion_at_ingest() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("c");
        fs::create_dir(&dir).unwrap();
        // Constant five-band image: B2..SWIR2 = 0.1, 0.2, 0.3, 0.15, 0.25.
        let bands = [0.1f32, 0.2, 0.3, 0.15, 0.25];
        let px: Vec<f32> = std::iter::repeat_n(bands, 4).flatten().collect();
        write_tiff_f32(&dir.join("x.tif"), 2, 2, 5, &px).unwrap();

        let opts = IngestOptions {
            fuse: Some(BandFusionParams::default()),
        };
        let report = load_dataset(tmp.path(), &opts).unwrap();
        let s = report.dataset.get(0);
        assert_eq!(s.channels, 3);
        let expect =
            crate::fusion::fuse_swir_rgb(0.1, 0.2, 0.3, 0.15, 0.25, &BandFusionParams::default())
                .unwrap();
        // f32 storage on write, f64 fusion math on load.
        let same = |a: f32, b: f64| (a as f64 - b).abs() < 1e-6;
        assert!(same(s.pixels()[0], expect.2), "B4n");
        assert!(same(s.pixels()[1], expect.1), "B3n");
        assert!(same(s.pixels()[2], expect.0), "B2n");
    }

    #[test]
    fn fusion_failure_is_reported_per_file() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("c");
        fs::create_dir(&dir).unwrap();
        gray_png(&dir.join("mono.png"), 2, 2, 128); // 1 channel, unfusable
        let opts = IngestOptions {
            fuse: Some(BandFusionParams::default()),
        };
        let err = load_dataset(tmp.path(), &opts).unwrap_err();
        // The only file fails to fuse, leaving zero samples.
        assert!(matches!(err, Error::EmptyDataset(_)));
    }
}
