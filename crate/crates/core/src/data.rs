//! In-memory image representation and the shaping operations applied before
//! sensing: grayscale conversion, zero padding and patch extraction.

use num_rational::Ratio;

use crate::error::{Error, Result};

/// BT.601 luma weights used for RGB -> grayscale reduction.
const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

/// A planar image with 1 (grayscale) or 3 (RGB) channels.
///
/// Pixels are stored channel-major: the full first channel in row-major
/// order, then the next channel. Every sample lies in `[0, 1]`; the
/// constructor rejects anything else, so downstream numeric code never has
/// to re-validate ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    channels: usize,
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(channels: usize, height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::Precondition(format!(
                "image must have 1 or 3 channels, got {channels}"
            )));
        }
        if height == 0 || width == 0 {
            return Err(Error::Precondition(format!(
                "image dimensions must be positive, got {height}x{width}"
            )));
        }
        if pixels.len() != channels * height * width {
            return Err(Error::Precondition(format!(
                "pixel buffer holds {} samples, expected {} ({channels} x {height} x {width})",
                pixels.len(),
                channels * height * width
            )));
        }
        if let Some(bad) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Precondition(format!(
                "pixel value {bad} outside [0, 1]"
            )));
        }
        Ok(Image {
            channels,
            height,
            width,
            pixels,
        })
    }

    /// Constant-valued single-channel image; handy in tests and baselines.
    pub fn constant(height: usize, width: usize, value: f64) -> Result<Self> {
        Image::new(1, height, width, vec![value; height * width])
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Samples per channel (`height * width`).
    pub fn pixels_per_channel(&self) -> usize {
        self.height * self.width
    }

    /// The full channel-major sample buffer.
    pub fn as_slice(&self) -> &[f64] {
        &self.pixels
    }

    /// One channel as a row-major slice.
    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.pixels_per_channel();
        &self.pixels[c * n..(c + 1) * n]
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.pixels[c * self.pixels_per_channel() + y * self.width + x]
    }

    /// Reduce RGB to grayscale with BT.601 luma weights. Grayscale input is
    /// rejected rather than passed through so callers notice redundant
    /// conversions in their pipelines.
    pub fn to_grayscale(&self) -> Result<Image> {
        if self.channels != 3 {
            return Err(Error::Precondition(
                "to_grayscale expects a 3-channel image".into(),
            ));
        }
        let n = self.pixels_per_channel();
        let (r, g, b) = (self.channel(0), self.channel(1), self.channel(2));
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            // Clamp guards against 0.299 + 0.587 + 0.114 rounding a hair
            // above 1 for pure white.
            out.push((LUMA[0] * r[i] + LUMA[1] * g[i] + LUMA[2] * b[i]).min(1.0));
        }
        Image::new(1, self.height, self.width, out)
    }

    /// Embed the image centered in a `height x width` zero canvas. Odd
    /// margins put the extra row/column on the bottom/right. The target must
    /// be at least as large as the source in both dimensions; equal size
    /// returns an identical copy.
    pub fn pad_to(&self, height: usize, width: usize) -> Result<Image> {
        if height < self.height || width < self.width {
            return Err(Error::Precondition(format!(
                "pad target {height}x{width} smaller than source {}x{}",
                self.height, self.width
            )));
        }
        if height == self.height && width == self.width {
            return Ok(self.clone());
        }
        let top = (height - self.height) / 2;
        let left = (width - self.width) / 2;
        let mut pixels = vec![0.0; self.channels * height * width];
        for c in 0..self.channels {
            let src = self.channel(c);
            let dst = &mut pixels[c * height * width..(c + 1) * height * width];
            for y in 0..self.height {
                let src_row = &src[y * self.width..(y + 1) * self.width];
                let off = (top + y) * width + left;
                dst[off..off + self.width].copy_from_slice(src_row);
            }
        }
        Image::new(self.channels, height, width, pixels)
    }

    /// Crop a window; used by padding round-trips and folder preparation.
    pub fn crop(&self, top: usize, left: usize, height: usize, width: usize) -> Result<Image> {
        if top + height > self.height || left + width > self.width {
            return Err(Error::Precondition(format!(
                "crop {height}x{width}+{top}+{left} exceeds source {}x{}",
                self.height, self.width
            )));
        }
        let mut pixels = Vec::with_capacity(self.channels * height * width);
        for c in 0..self.channels {
            let src = self.channel(c);
            for y in 0..height {
                let row = &src[(top + y) * self.width + left..];
                pixels.extend_from_slice(&row[..width]);
            }
        }
        Image::new(self.channels, height, width, pixels)
    }

    /// Bilinear resample to `height x width`. Sample positions use the
    /// half-pixel convention with clamped borders, so identity size is a
    /// no-op up to float identity.
    pub fn resize(&self, height: usize, width: usize) -> Result<Image> {
        if height == 0 || width == 0 {
            return Err(Error::Precondition("resize target must be positive".into()));
        }
        if height == self.height && width == self.width {
            return Ok(self.clone());
        }
        let sy = self.height as f64 / height as f64;
        let sx = self.width as f64 / width as f64;
        let mut pixels = Vec::with_capacity(self.channels * height * width);
        for c in 0..self.channels {
            let src = self.channel(c);
            for y in 0..height {
                let fy = ((y as f64 + 0.5) * sy - 0.5).max(0.0);
                let y0 = (fy.floor() as usize).min(self.height - 1);
                let y1 = (y0 + 1).min(self.height - 1);
                let wy = fy - y0 as f64;
                for x in 0..width {
                    let fx = ((x as f64 + 0.5) * sx - 0.5).max(0.0);
                    let x0 = (fx.floor() as usize).min(self.width - 1);
                    let x1 = (x0 + 1).min(self.width - 1);
                    let wx = fx - x0 as f64;
                    let top = src[y0 * self.width + x0] * (1.0 - wx) + src[y0 * self.width + x1] * wx;
                    let bottom =
                        src[y1 * self.width + x0] * (1.0 - wx) + src[y1 * self.width + x1] * wx;
                    pixels.push((top * (1.0 - wy) + bottom * wy).clamp(0.0, 1.0));
                }
            }
        }
        Image::new(self.channels, height, width, pixels)
    }

    /// Replicate a grayscale image into three identical channels.
    pub fn to_rgb(&self) -> Result<Image> {
        if self.channels != 1 {
            return Err(Error::Precondition(
                "to_rgb expects a single-channel image".into(),
            ));
        }
        let mut pixels = Vec::with_capacity(3 * self.pixels_per_channel());
        for _ in 0..3 {
            pixels.extend_from_slice(&self.pixels);
        }
        Image::new(3, self.height, self.width, pixels)
    }

    fn rotate90(&self) -> Image {
        // Clockwise; only called on square patches.
        let p = self.height;
        let mut pixels = vec![0.0; self.pixels.len()];
        for c in 0..self.channels {
            let src = self.channel(c);
            let dst = &mut pixels[c * p * p..(c + 1) * p * p];
            for y in 0..p {
                for x in 0..p {
                    dst[y * p + x] = src[(p - 1 - x) * p + y];
                }
            }
        }
        Image {
            channels: self.channels,
            height: p,
            width: p,
            pixels,
        }
    }

    fn flip_horizontal(&self) -> Image {
        let mut pixels = vec![0.0; self.pixels.len()];
        for c in 0..self.channels {
            let src = self.channel(c);
            let dst = &mut pixels[c * self.height * self.width..(c + 1) * self.height * self.width];
            for y in 0..self.height {
                for x in 0..self.width {
                    dst[y * self.width + x] = src[y * self.width + (self.width - 1 - x)];
                }
            }
        }
        Image {
            channels: self.channels,
            height: self.height,
            width: self.width,
            pixels,
        }
    }
}

/// Grid patch extraction parameters.
#[derive(Debug, Clone, Copy)]
pub struct PatchConfig {
    /// Side length of the square patches.
    pub patch_size: usize,
    /// Step between adjacent patch origins; `patch_size` gives disjoint
    /// tiles.
    pub stride: usize,
    /// Emit the 8 dihedral variants (4 rotations, then their horizontal
    /// flips) of every patch.
    pub augment: bool,
}

/// Cut square patches on a regular grid, row-major over grid positions.
/// Partial windows at the right/bottom edge are dropped. With `augment`
/// each patch expands to 8 variants in the order r0, r90, r180, r270
/// followed by the horizontal flips of those four.
pub fn extract_patches(image: &Image, cfg: &PatchConfig) -> Result<Vec<Image>> {
    if cfg.patch_size == 0 || cfg.stride == 0 {
        return Err(Error::Precondition(
            "patch_size and stride must be positive".into(),
        ));
    }
    if cfg.patch_size > image.height() || cfg.patch_size > image.width() {
        return Err(Error::Precondition(format!(
            "patch size {} exceeds image {}x{}",
            cfg.patch_size,
            image.height(),
            image.width()
        )));
    }
    let mut out = Vec::new();
    let mut top = 0;
    while top + cfg.patch_size <= image.height() {
        let mut left = 0;
        while left + cfg.patch_size <= image.width() {
            let patch = image.crop(top, left, cfg.patch_size, cfg.patch_size)?;
            if cfg.augment {
                let r90 = patch.rotate90();
                let r180 = r90.rotate90();
                let r270 = r180.rotate90();
                let rotations = [patch, r90, r180, r270];
                let flips: Vec<Image> = rotations.iter().map(Image::flip_horizontal).collect();
                out.extend(rotations);
                out.extend(flips);
            } else {
                out.push(patch);
            }
            left += cfg.stride;
        }
        top += cfg.stride;
    }
    Ok(out)
}

/// The six benchmark datasets. Scores aggregate over exactly this set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dataset {
    Mnist,
    Cifar10,
    Cifar10Gray,
    Celeba,
    Bigset,
    BigsetGray,
}

impl Dataset {
    pub const ALL: [Dataset; 6] = [
        Dataset::Mnist,
        Dataset::Cifar10,
        Dataset::Cifar10Gray,
        Dataset::Celeba,
        Dataset::Bigset,
        Dataset::BigsetGray,
    ];

    /// Canonical lowercase identifier used in CSV files and CLI arguments.
    pub fn id(&self) -> &'static str {
        match self {
            Dataset::Mnist => "mnist",
            Dataset::Cifar10 => "cifar10",
            Dataset::Cifar10Gray => "cifar10_gray",
            Dataset::Celeba => "celeba",
            Dataset::Bigset => "bigset",
            Dataset::BigsetGray => "bigset_gray",
        }
    }

    /// Parse an identifier case-insensitively. Spaces, parentheses, hyphens
    /// and underscores are ignored, so `CIFAR10(Gray)`, `cifar10 gray` and
    /// `cifar10_gray` all name the same dataset.
    pub fn parse(name: &str) -> Option<Dataset> {
        let key: String = name
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "mnist" => Some(Dataset::Mnist),
            "cifar10" => Some(Dataset::Cifar10),
            "cifar10gray" => Some(Dataset::Cifar10Gray),
            "celeba" => Some(Dataset::Celeba),
            "bigset" => Some(Dataset::Bigset),
            "bigsetgray" => Some(Dataset::BigsetGray),
            _ => None,
        }
    }

    /// Benchmark image geometry (channels, height, width) after preparation.
    pub fn geometry(&self) -> (usize, usize, usize) {
        match self {
            Dataset::Mnist => (1, 32, 32),
            Dataset::Cifar10 => (3, 32, 32),
            Dataset::Cifar10Gray => (1, 32, 32),
            Dataset::Celeba => (3, 64, 64),
            Dataset::Bigset => (3, 64, 64),
            Dataset::BigsetGray => (1, 64, 64),
        }
    }

    /// Aggregation weight of the dataset in the benchmark score.
    pub fn weight(&self) -> Ratio<i64> {
        match self {
            Dataset::Mnist => Ratio::new(1, 21),
            Dataset::Cifar10 => Ratio::new(3, 21),
            Dataset::Cifar10Gray => Ratio::new(2, 21),
            Dataset::Celeba => Ratio::new(4, 21),
            Dataset::Bigset => Ratio::new(6, 21),
            Dataset::BigsetGray => Ratio::new(5, 21),
        }
    }
}

impl std::fmt::Display for Dataset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

/// Shape contract a loader output must satisfy before sensing.
#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub name: String,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl DatasetSpec {
    pub fn new(name: impl Into<String>, channels: usize, height: usize, width: usize) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::Precondition(format!(
                "dataset spec must have 1 or 3 channels, got {channels}"
            )));
        }
        if height == 0 || width == 0 {
            return Err(Error::Precondition(
                "dataset spec dimensions must be positive".into(),
            ));
        }
        Ok(DatasetSpec {
            name: name.into(),
            channels,
            height,
            width,
        })
    }

    /// Spec of one of the six benchmark datasets.
    pub fn builtin(dataset: Dataset) -> DatasetSpec {
        let (channels, height, width) = dataset.geometry();
        DatasetSpec {
            name: dataset.id().to_string(),
            channels,
            height,
            width,
        }
    }

    /// Signal length per channel.
    pub fn signal_len(&self) -> usize {
        self.height * self.width
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient_image(channels: usize, h: usize, w: usize) -> Image {
        let mut pixels = Vec::with_capacity(channels * h * w);
        for c in 0..channels {
            for y in 0..h {
                for x in 0..w {
                    pixels.push(((c + 1) * (y * w + x)) as f64 / (channels * h * w) as f64);
                }
            }
        }
        Image::new(channels, h, w, pixels).unwrap()
    }

    #[test]
    fn constructor_rejects_bad_shapes_and_ranges() {
        assert!(Image::new(2, 4, 4, vec![0.0; 32]).is_err());
        assert!(Image::new(1, 0, 4, vec![]).is_err());
        assert!(Image::new(1, 2, 2, vec![0.0; 3]).is_err());
        assert!(Image::new(1, 2, 2, vec![0.0, 0.5, 1.0, 1.5]).is_err());
        assert!(Image::new(1, 2, 2, vec![0.0, 0.5, 1.0, f64::NAN]).is_err());
        assert!(Image::new(1, 2, 2, vec![0.0, 0.5, 1.0, -0.1]).is_err());
    }

    #[test]
    fn grayscale_uses_bt601_weights() {
        let red = Image::new(3, 1, 1, vec![1.0, 0.0, 0.0]).unwrap();
        let green = Image::new(3, 1, 1, vec![0.0, 1.0, 0.0]).unwrap();
        let blue = Image::new(3, 1, 1, vec![0.0, 0.0, 1.0]).unwrap();
        let white = Image::new(3, 1, 1, vec![1.0, 1.0, 1.0]).unwrap();
        assert!((red.to_grayscale().unwrap().get(0, 0, 0) - 0.299).abs() < 1e-12);
        assert!((green.to_grayscale().unwrap().get(0, 0, 0) - 0.587).abs() < 1e-12);
        assert!((blue.to_grayscale().unwrap().get(0, 0, 0) - 0.114).abs() < 1e-12);
        assert!((white.to_grayscale().unwrap().get(0, 0, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grayscale_of_equal_channels_copies_them() {
        let g = gradient_image(1, 5, 7);
        let rgb = g.to_rgb().unwrap();
        let back = rgb.to_grayscale().unwrap();
        for (a, b) in back.as_slice().iter().zip(g.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn grayscale_rejects_single_channel_input() {
        let g = Image::constant(4, 4, 0.5).unwrap();
        assert!(matches!(g.to_grayscale(), Err(Error::Precondition(_))));
    }

    #[test]
    fn pad_centers_a_28_in_32_with_2_pixel_margins() {
        let ones = Image::constant(28, 28, 1.0).unwrap();
        let padded = ones.pad_to(32, 32).unwrap();
        assert_eq!(padded.height(), 32);
        for y in 0..32 {
            for x in 0..32 {
                let inside = (2..30).contains(&y) && (2..30).contains(&x);
                assert_eq!(padded.get(0, y, x), if inside { 1.0 } else { 0.0 });
            }
        }
        // Mass is preserved: padding only inserts zeros.
        let sum: f64 = padded.as_slice().iter().sum();
        assert_eq!(sum, 28.0 * 28.0);
    }

    #[test]
    fn pad_same_size_is_identity_and_shrink_is_rejected() {
        let img = gradient_image(3, 8, 8);
        assert_eq!(img.pad_to(8, 8).unwrap(), img);
        assert!(img.pad_to(4, 8).is_err());
    }

    #[test]
    fn pad_then_center_crop_round_trips() {
        let img = gradient_image(1, 7, 5);
        let padded = img.pad_to(12, 9).unwrap();
        let back = padded.crop(2, 2, 7, 5).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn patch_grid_counts() {
        let img = gradient_image(1, 96, 96);
        let plain = PatchConfig {
            patch_size: 64,
            stride: 64,
            augment: false,
        };
        assert_eq!(extract_patches(&img, &plain).unwrap().len(), 1);

        let img = gradient_image(1, 128, 128);
        assert_eq!(extract_patches(&img, &plain).unwrap().len(), 4);
        let augmented = PatchConfig {
            augment: true,
            ..plain
        };
        assert_eq!(extract_patches(&img, &augmented).unwrap().len(), 32);
    }

    #[test]
    fn patch_larger_than_image_is_rejected() {
        let img = gradient_image(1, 32, 32);
        let cfg = PatchConfig {
            patch_size: 64,
            stride: 64,
            augment: false,
        };
        assert!(extract_patches(&img, &cfg).is_err());
    }

    #[test]
    fn disjoint_patches_cover_the_grid_exactly() {
        let img = gradient_image(1, 10, 9);
        let cfg = PatchConfig {
            patch_size: 3,
            stride: 3,
            augment: false,
        };
        let patches = extract_patches(&img, &cfg).unwrap();
        assert_eq!(patches.len(), 9);
        let mut from_patches: Vec<u64> = patches
            .iter()
            .flat_map(|p| p.as_slice().iter().map(|v| v.to_bits()))
            .collect();
        let mut from_region: Vec<u64> = img
            .crop(0, 0, 9, 9)
            .unwrap()
            .as_slice()
            .iter()
            .map(|v| v.to_bits())
            .collect();
        from_patches.sort_unstable();
        from_region.sort_unstable();
        assert_eq!(from_patches, from_region);
    }

    #[test]
    fn rotations_have_period_four_and_flips_involute() {
        let img = gradient_image(3, 6, 6);
        let r4 = img.rotate90().rotate90().rotate90().rotate90();
        assert_eq!(r4, img);
        assert_eq!(img.flip_horizontal().flip_horizontal(), img);
    }

    #[test]
    fn dataset_identifiers_parse_with_aliases() {
        assert_eq!(Dataset::parse("MNIST"), Some(Dataset::Mnist));
        assert_eq!(Dataset::parse("CIFAR10(Gray)"), Some(Dataset::Cifar10Gray));
        assert_eq!(Dataset::parse("cifar10 gray"), Some(Dataset::Cifar10Gray));
        assert_eq!(Dataset::parse("Bigset(Gray)"), Some(Dataset::BigsetGray));
        assert_eq!(Dataset::parse("bigset_gray"), Some(Dataset::BigsetGray));
        assert_eq!(Dataset::parse("CelebA"), Some(Dataset::Celeba));
        assert_eq!(Dataset::parse("imagenet"), None);
    }

    #[test]
    fn dataset_weights_sum_to_one() {
        let total: Ratio<i64> = Dataset::ALL.iter().map(Dataset::weight).sum();
        assert_eq!(total, Ratio::new(1, 1));
    }

    #[test]
    fn builtin_specs_have_benchmark_geometry() {
        let mnist = DatasetSpec::builtin(Dataset::Mnist);
        assert_eq!(
            (mnist.channels, mnist.height, mnist.width, mnist.signal_len()),
            (1, 32, 32, 1024)
        );
        let celeba = DatasetSpec::builtin(Dataset::Celeba);
        assert_eq!((celeba.channels, celeba.height, celeba.width), (3, 64, 64));
        let bigset_gray = DatasetSpec::builtin(Dataset::BigsetGray);
        assert_eq!((bigset_gray.channels, bigset_gray.signal_len()), (1, 4096));
    }

    #[test]
    fn resize_identity_and_downscale_stay_in_range() {
        let img = gradient_image(1, 8, 8);
        assert_eq!(img.resize(8, 8).unwrap(), img);
        let half = img.resize(4, 4).unwrap();
        assert_eq!((half.height(), half.width()), (4, 4));
        // Downscaling a smooth ramp keeps values inside the source hull.
        for v in half.as_slice() {
            assert!((0.0..=1.0).contains(v));
        }
    }
}
