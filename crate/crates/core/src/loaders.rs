//! Dataset ingestion: IDX image files, CIFAR-10 binary batches, folders of
//! encoded images, and a deterministic synthetic digit corpus for
//! self-contained benchmark runs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::data::{DatasetSpec, Image};
use crate::error::{Error, Result};

/// Magic number of an IDX file holding unsigned-byte images (rank 3).
const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
/// Bytes per CIFAR-10 binary record: 1 label + 3 x 32 x 32 samples.
const CIFAR_RECORD: usize = 3073;

/// Decode an IDX unsigned-byte image file (big-endian header: magic, count,
/// rows, cols). Pixels are scaled from `0..=255` to `[0, 1]`.
pub fn load_idx(path: &Path) -> Result<Vec<Image>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 16 {
        return Err(Error::Format(format!(
            "{}: IDX header needs 16 bytes, file has {}",
            path.display(),
            bytes.len()
        )));
    }
    let word = |i: usize| u32::from_be_bytes(bytes[i..i + 4].try_into().unwrap());
    let magic = word(0);
    if magic != IDX_IMAGE_MAGIC {
        return Err(Error::Format(format!(
            "{}: bad IDX magic {magic:#010x}, expected {IDX_IMAGE_MAGIC:#010x}",
            path.display()
        )));
    }
    let count = word(4) as usize;
    let rows = word(8) as usize;
    let cols = word(12) as usize;
    let need = 16 + count * rows * cols;
    if bytes.len() < need {
        return Err(Error::Format(format!(
            "{}: truncated IDX payload, {} bytes present but {need} required for {count} images of {rows}x{cols}",
            path.display(),
            bytes.len()
        )));
    }
    let mut images = Vec::with_capacity(count);
    for i in 0..count {
        let start = 16 + i * rows * cols;
        let pixels = bytes[start..start + rows * cols]
            .iter()
            .map(|&b| b as f64 / 255.0)
            .collect();
        images.push(Image::new(1, rows, cols, pixels)?);
    }
    Ok(images)
}

/// Write images as an IDX unsigned-byte file. All images must be
/// single-channel and share one geometry; samples are quantized to bytes.
pub fn write_idx(path: &Path, images: &[Image]) -> Result<()> {
    let first = images
        .first()
        .ok_or_else(|| Error::EmptyDataset("write_idx needs at least one image".into()))?;
    let (rows, cols) = (first.height(), first.width());
    let mut bytes = Vec::with_capacity(16 + images.len() * rows * cols);
    bytes.extend_from_slice(&IDX_IMAGE_MAGIC.to_be_bytes());
    bytes.extend_from_slice(&(images.len() as u32).to_be_bytes());
    bytes.extend_from_slice(&(rows as u32).to_be_bytes());
    bytes.extend_from_slice(&(cols as u32).to_be_bytes());
    for img in images {
        if img.channels() != 1 || img.height() != rows || img.width() != cols {
            return Err(Error::Precondition(
                "write_idx requires uniform single-channel images".into(),
            ));
        }
        bytes.extend(img.as_slice().iter().map(|v| (v * 255.0).round() as u8));
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Decode a CIFAR-10 binary batch: 3073-byte records of one label byte
/// followed by a channel-major RGB 32x32 image.
pub fn load_cifar_binary(path: &Path) -> Result<Vec<Image>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.is_empty() || bytes.len() % CIFAR_RECORD != 0 {
        return Err(Error::Format(format!(
            "{}: CIFAR-10 batches are a multiple of {CIFAR_RECORD} bytes, got {}",
            path.display(),
            bytes.len()
        )));
    }
    let mut images = Vec::with_capacity(bytes.len() / CIFAR_RECORD);
    for record in bytes.chunks_exact(CIFAR_RECORD) {
        // record[0] is the class label, which the benchmark ignores.
        let pixels = record[1..].iter().map(|&b| b as f64 / 255.0).collect();
        images.push(Image::new(3, 32, 32, pixels)?);
    }
    Ok(images)
}

/// Outcome of scanning a folder: decoded images in deterministic name order
/// plus the files that failed to decode.
#[derive(Debug)]
pub struct FolderLoad {
    pub images: Vec<Image>,
    pub failures: Vec<(PathBuf, String)>,
}

fn is_image_name(name: &str) -> bool {
    let lower = name.to_ascii_lowercase();
    ["png", "pgm", "ppm", "pnm"]
        .iter()
        .any(|ext| lower.ends_with(&format!(".{ext}")))
}

fn decode_image_file(path: &Path) -> Result<Image> {
    let decoded = image::open(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    match decoded {
        image::DynamicImage::ImageLuma8(buf) => {
            let (w, h) = buf.dimensions();
            let pixels = buf.into_raw().iter().map(|&b| b as f64 / 255.0).collect();
            Image::new(1, h as usize, w as usize, pixels)
        }
        image::DynamicImage::ImageLuma16(buf) => {
            let (w, h) = buf.dimensions();
            let pixels = buf.into_raw().iter().map(|&b| b as f64 / 65535.0).collect();
            Image::new(1, h as usize, w as usize, pixels)
        }
        other => {
            let buf = other.into_rgb8();
            let (w, h) = buf.dimensions();
            let n = (w * h) as usize;
            let raw = buf.into_raw();
            let mut pixels = vec![0.0; 3 * n];
            for (i, px) in raw.chunks_exact(3).enumerate() {
                for c in 0..3 {
                    pixels[c * n + i] = px[c] as f64 / 255.0;
                }
            }
            Image::new(3, h as usize, w as usize, pixels)
        }
    }
}

/// Decode a single encoded image file (PNG or a PNM flavor).
pub fn load_image(path: &Path) -> Result<Image> {
    decode_image_file(path)
}

/// Encode an image to `path`, quantizing samples to bytes; the extension
/// picks the format (`.png`, `.pgm`, `.ppm`, `.pnm`).
pub fn save_image(path: &Path, img: &Image) -> Result<Image> {
    let quantize = |v: f64| (v * 255.0).round() as u8;
    let (w, h) = (img.width() as u32, img.height() as u32);
    let result = if img.channels() == 1 {
        let raw: Vec<u8> = img.as_slice().iter().map(|&v| quantize(v)).collect();
        image::GrayImage::from_raw(w, h, raw)
            .expect("buffer sized from the image")
            .save(path)
    } else {
        let n = img.pixels_per_channel();
        let mut raw = Vec::with_capacity(3 * n);
        for i in 0..n {
            for c in 0..3 {
                raw.push(quantize(img.channel(c)[i]));
            }
        }
        image::RgbImage::from_raw(w, h, raw)
            .expect("buffer sized from the image")
            .save(path)
    };
    result.map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    // Hand back the quantized view so callers can compare metrics against
    // what a reader of the file will actually see.
    let pixels = img.as_slice().iter().map(|&v| quantize(v) as f64 / 255.0).collect();
    Image::new(img.channels(), img.height(), img.width(), pixels)
}

/// Conform a decoded image to a dataset spec: center-crop to the target
/// aspect ratio, bilinear-resample to the target size, then fix the channel
/// count (BT.601 reduction or channel replication).
pub fn conform_to_spec(img: &Image, spec: &DatasetSpec) -> Result<Image> {
    let mut img = img.clone();
    if img.height() != spec.height || img.width() != spec.width {
        // Crop the largest centered window with the target aspect ratio.
        let src_h = img.height() as f64;
        let src_w = img.width() as f64;
        let target_ar = spec.width as f64 / spec.height as f64;
        let (crop_h, crop_w) = if src_w / src_h > target_ar {
            (img.height(), (src_h * target_ar).round() as usize)
        } else {
            (img.width() * spec.height / spec.width.max(1), img.width())
        };
        let crop_h = crop_h.clamp(1, img.height());
        let crop_w = crop_w.clamp(1, img.width());
        let top = (img.height() - crop_h) / 2;
        let left = (img.width() - crop_w) / 2;
        img = img.crop(top, left, crop_h, crop_w)?;
        img = img.resize(spec.height, spec.width)?;
    }
    if spec.channels == 1 && img.channels() == 3 {
        img = img.to_grayscale()?;
    } else if spec.channels == 3 && img.channels() == 1 {
        img = img.to_rgb()?;
    }
    Ok(img)
}

/// Load every decodable image under `dir` (non-recursive), conforming each
/// to `spec`. Files are visited in lexicographic name order so repeat runs
/// enumerate identically; non-image extensions are skipped, decode failures
/// are collected per file rather than aborting the scan.
pub fn load_image_folder(dir: &Path, spec: &DatasetSpec) -> Result<FolderLoad> {
    let mut names: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .filter(|p| {
            p.file_name()
                .map(|n| is_image_name(&n.to_string_lossy()))
                .unwrap_or(false)
        })
        .collect();
    names.sort();

    let mut images = Vec::new();
    let mut failures = Vec::new();
    for path in names {
        match decode_image_file(&path).and_then(|img| conform_to_spec(&img, spec)) {
            Ok(img) => images.push(img),
            Err(e) => failures.push((path, e.to_string())),
        }
    }
    if images.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "{}: no decodable images found",
            dir.display()
        )));
    }
    Ok(FolderLoad { images, failures })
}

/// Load a dataset from a path that may be an IDX file, a CIFAR-10 binary
/// batch, a single image file, or a folder of images, then conform all
/// images to `spec`. `limit` truncates after loading; `0` keeps everything.
pub fn load_dataset(path: &Path, spec: &DatasetSpec, limit: usize) -> Result<FolderLoad> {
    let mut load = if path.is_dir() {
        // A directory may hold IDX or CIFAR containers rather than loose
        // image files; containers win when present.
        let mut entries: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        entries.sort();
        let idx: Vec<&PathBuf> = entries
            .iter()
            .filter(|p| {
                let name = p.file_name().unwrap_or_default().to_string_lossy().to_ascii_lowercase();
                name.contains("idx3") || name.ends_with(".idx")
            })
            .collect();
        let cifar: Vec<&PathBuf> = entries
            .iter()
            .filter(|p| p.extension().is_some_and(|e| e == "bin"))
            .collect();
        if !idx.is_empty() {
            let mut images = Vec::new();
            for file in idx {
                images.extend(load_idx(file)?);
            }
            FolderLoad {
                images,
                failures: Vec::new(),
            }
        } else if !cifar.is_empty() {
            let mut images = Vec::new();
            for file in cifar {
                images.extend(load_cifar_binary(file)?);
            }
            FolderLoad {
                images,
                failures: Vec::new(),
            }
        } else {
            load_image_folder(path, spec)?
        }
    } else {
        let name = path.file_name().unwrap_or_default().to_string_lossy().to_ascii_lowercase();
        let images = if name.contains("idx") {
            load_idx(path)?
        } else if name.ends_with(".bin") {
            load_cifar_binary(path)?
        } else {
            vec![decode_image_file(path)?]
        };
        FolderLoad {
            images,
            failures: Vec::new(),
        }
    };

    if limit > 0 && load.images.len() > limit {
        load.images.truncate(limit);
    }
    let mut conformed = Vec::with_capacity(load.images.len());
    for img in &load.images {
        // Containers may hold smaller frames than `spec` asks for (28x28
        // MNIST in a 32x32 benchmark): zero-padded instead of resampled.
        let img = if img.height() <= spec.height
            && img.width() <= spec.width
            && (img.height() < spec.height || img.width() < spec.width)
        {
            img.pad_to(spec.height, spec.width)?
        } else {
            img.clone()
        };
        conformed.push(conform_to_spec(&img, spec)?);
    }
    load.images = conformed;
    if load.images.is_empty() {
        return Err(Error::EmptyDataset(format!("{}", path.display())));
    }
    Ok(load)
}

/// Seven-segment activation per digit, segments ordered a (top), b
/// (top-right), c (bottom-right), d (bottom), e (bottom-left), f
/// (top-left), g (middle).
const SEGMENTS: [[bool; 7]; 10] = [
    [true, true, true, true, true, true, false],    // 0
    [false, true, true, false, false, false, false], // 1
    [true, true, false, true, true, false, true],   // 2
    [true, true, true, true, false, false, true],   // 3
    [false, true, true, false, false, true, true],  // 4
    [true, false, true, true, false, true, true],   // 5
    [true, false, true, true, true, true, true],    // 6
    [true, true, true, false, false, false, false], // 7
    [true, true, true, true, true, true, true],     // 8
    [true, true, true, true, false, true, true],    // 9
];

fn fill_rect(pixels: &mut [f64], w: usize, y0: i64, x0: i64, y1: i64, x1: i64, value: f64) {
    let h = (pixels.len() / w) as i64;
    for y in y0.max(0)..y1.min(h) {
        for x in x0.max(0)..x1.min(w as i64) {
            pixels[y as usize * w + x as usize] = value;
        }
    }
}

/// Deterministic corpus of 28x28 digit glyphs rendered from a seven-segment
/// template with per-glyph jitter and stroke intensity. The images are
/// sparse and piecewise constant, the same regime as handwritten-digit
/// scans, and make solver benchmarks reproducible without bundling any
/// binary data. Glyph `i` draws the digit `i % 10`.
pub fn synthetic_digits(count: usize, seed: u64) -> Vec<Image> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (h, w) = (28usize, 28usize);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let digit = i % 10;
        let jy = rng.gen_range(-2i64..=2);
        let jx = rng.gen_range(-2i64..=2);
        let value: f64 = rng.gen_range(0.7..=1.0);
        let thick = rng.gen_range(2i64..=3);

        // Glyph box: rows 4..24, columns 8..20, middle bar at row 14.
        let (top, bottom, mid) = (4 + jy, 24 + jy, 14 + jy);
        let (left, right) = (8 + jx, 20 + jx);
        let mut pixels = vec![0.0; h * w];
        let segs = SEGMENTS[digit];
        let t = thick;
        if segs[0] {
            fill_rect(&mut pixels, w, top, left, top + t, right, value);
        }
        if segs[1] {
            fill_rect(&mut pixels, w, top, right - t, mid + t / 2, right, value);
        }
        if segs[2] {
            fill_rect(&mut pixels, w, mid, right - t, bottom, right, value);
        }
        if segs[3] {
            fill_rect(&mut pixels, w, bottom - t, left, bottom, right, value);
        }
        if segs[4] {
            fill_rect(&mut pixels, w, mid, left, bottom, left + t, value);
        }
        if segs[5] {
            fill_rect(&mut pixels, w, top, left, mid + t / 2, left + t, value);
        }
        if segs[6] {
            fill_rect(&mut pixels, w, mid - t / 2, left, mid - t / 2 + t, right, value);
        }
        out.push(Image::new(1, h, w, pixels).expect("synthetic glyph in range"));
    }
    out
}
