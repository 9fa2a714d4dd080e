//! Reconstruction quality metrics (PSNR, SSIM) and wall-clock throughput
//! measurement.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use crate::data::Image;
use crate::error::{Error, Result};

/// PSNR ceiling in dB; identical images quote this instead of infinity.
pub const PSNR_CEILING: f64 = 48.0;

/// Gaussian window side used by SSIM; images must be at least this big in
/// both dimensions for the index to be defined.
pub const SSIM_WINDOW: usize = 11;
/// Standard deviation of the SSIM window.
const SSIM_SIGMA: f64 = 1.5;
/// Stabilizers from the standard SSIM constants (k1 = 0.01, k2 = 0.03) at
/// unit dynamic range.
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

fn check_same_shape(a: &Image, b: &Image) -> Result<()> {
    if a.channels() != b.channels() || a.height() != b.height() || a.width() != b.width() {
        return Err(Error::Precondition(format!(
            "metric inputs differ in shape: {}x{}x{} vs {}x{}x{}",
            a.channels(),
            a.height(),
            a.width(),
            b.channels(),
            b.height(),
            b.width()
        )));
    }
    Ok(())
}

/// Peak signal-to-noise ratio in dB at unit peak, clamped to `[0, 48]`.
/// The clamp keeps perfect or near-perfect reconstructions finite and
/// comparable: a zero-MSE pair scores exactly 48.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    check_same_shape(a, b)?;
    let n = a.as_slice().len() as f64;
    let mse: f64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n;
    if mse == 0.0 {
        return Ok(PSNR_CEILING);
    }
    Ok((10.0 * (1.0 / mse).log10()).clamp(0.0, PSNR_CEILING))
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *v;
    }
    for v in k.iter_mut() {
        *v /= sum;
    }
    k
}

/// Horizontal then vertical valid-mode convolution with the separable
/// window; output is (h - 10) x (w - 10).
fn filter_valid(src: &[f64], h: usize, w: usize, kernel: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    let mut rows = vec![0.0; h * ow];
    for y in 0..h {
        for x in 0..ow {
            let mut acc = 0.0;
            for (k, g) in kernel.iter().enumerate() {
                acc += g * src[y * w + x + k];
            }
            rows[y * ow + x] = acc;
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            let mut acc = 0.0;
            for (k, g) in kernel.iter().enumerate() {
                acc += g * rows[(y + k) * ow + x];
            }
            out[y * ow + x] = acc;
        }
    }
    out
}

fn ssim_channel(a: &[f64], b: &[f64], h: usize, w: usize, kernel: &[f64; SSIM_WINDOW]) -> f64 {
    let n = a.len();
    let mut a2 = vec![0.0; n];
    let mut b2 = vec![0.0; n];
    let mut ab = vec![0.0; n];
    for i in 0..n {
        a2[i] = a[i] * a[i];
        b2[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    let mu_a = filter_valid(a, h, w, kernel);
    let mu_b = filter_valid(b, h, w, kernel);
    let m_a2 = filter_valid(&a2, h, w, kernel);
    let m_b2 = filter_valid(&b2, h, w, kernel);
    let m_ab = filter_valid(&ab, h, w, kernel);

    let mut total = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = m_a2[i] - ma * ma;
        let vb = m_b2[i] - mb * mb;
        let cov = m_ab[i] - ma * mb;
        let num = (2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2);
        let den = (ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2);
        total += num / den;
    }
    total / mu_a.len() as f64
}

/// Structural similarity with an 11x11 Gaussian window (sigma 1.5) over all
/// fully interior window positions, averaged across channels and clamped to
/// `[0, 1]`. Windowed moments follow Wang et al. 2003: weighted means,
/// variances and covariance per position.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    check_same_shape(a, b)?;
    if a.height() < SSIM_WINDOW || a.width() < SSIM_WINDOW {
        return Err(Error::Precondition(format!(
            "ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW} images, got {}x{}",
            a.height(),
            a.width()
        )));
    }
    let kernel = gaussian_kernel();
    let mut total = 0.0;
    for c in 0..a.channels() {
        total += ssim_channel(a.channel(c), b.channel(c), a.height(), a.width(), &kernel);
    }
    Ok((total / a.channels() as f64).clamp(0.0, 1.0))
}

/// One benchmark cell: reconstruction quality plus solver throughput in
/// images per second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricTriple {
    pub psnr: f64,
    pub ssim: f64,
    pub speed: f64,
}

impl MetricTriple {
    pub fn new(psnr: f64, ssim: f64, speed: f64) -> Result<Self> {
        if !(0.0..=PSNR_CEILING).contains(&psnr) {
            return Err(Error::Precondition(format!("psnr {psnr} outside [0, 48]")));
        }
        if !(0.0..=1.0).contains(&ssim) {
            return Err(Error::Precondition(format!("ssim {ssim} outside [0, 1]")));
        }
        if !speed.is_finite() || speed < 0.0 {
            return Err(Error::Precondition(format!(
                "speed {speed} must be finite and non-negative"
            )));
        }
        Ok(MetricTriple { psnr, ssim, speed })
    }
}

// Throughput numbers feed the benchmark score, so two timed segments must
// never overlap; a process-wide lock serializes them.
static TIMING_LOCK: Mutex<()> = Mutex::new(());

/// Accumulates wall-clock time over solved images and quotes images per
/// second.
#[derive(Debug, Default)]
pub struct ThroughputClock {
    images: usize,
    elapsed: Duration,
}

impl ThroughputClock {
    pub fn new() -> Self {
        Self::default()
    }

    /// Run one solve under the global timing lock, attributing its wall
    /// time to this clock.
    pub fn time<T>(&mut self, f: impl FnOnce() -> T) -> T {
        let _guard = TIMING_LOCK.lock().unwrap_or_else(|e| e.into_inner());
        let start = Instant::now();
        let out = f();
        self.elapsed += start.elapsed();
        self.images += 1;
        out
    }

    pub fn images(&self) -> usize {
        self.images
    }

    pub fn elapsed(&self) -> Duration {
        self.elapsed
    }

    /// Images per second over everything timed so far.
    pub fn speed(&self) -> Result<f64> {
        if self.images == 0 {
            return Err(Error::Precondition(
                "throughput needs at least one timed image".into(),
            ));
        }
        let secs = self.elapsed.as_secs_f64();
        if secs <= 0.0 {
            return Err(Error::TimerResolution(format!(
                "{} images finished in zero measurable time",
                self.images
            )));
        }
        Ok(self.images as f64 / secs)
    }
}

/// Time a solver over a batch sequentially and return images per second.
pub fn measure_throughput<T>(items: &[T], mut solve: impl FnMut(&T)) -> Result<f64> {
    if items.is_empty() {
        return Err(Error::EmptyDataset(
            "throughput needs a non-empty batch".into(),
        ));
    }
    let mut clock = ThroughputClock::new();
    for item in items {
        clock.time(|| solve(item));
    }
    clock.speed()
}
