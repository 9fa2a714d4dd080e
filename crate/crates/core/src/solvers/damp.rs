//! Approximate message passing with a plug-in denoiser (D-AMP).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::sensing::SensingMatrix;

use super::tv::TvProx;
use super::{ChannelSolve, Diagnostics, SolverConfig, Specifics};

/// Distinct stream for the divergence probe signs.
const PROBE_SEED_SALT: u64 = 0xd1b5_4a32_d192_ed03;

/// The denoisers D-AMP can plug in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenoiserKind {
    /// Coordinate-wise soft thresholding at `factor * sigma`; the right
    /// choice for signals that are sparse in the pixel basis.
    SoftThreshold,
    /// 3x3 median filter with replicated borders; `sigma` is ignored.
    Median3,
    /// Fixed-iteration TV proximal smoothing with weight proportional to
    /// `sigma`.
    TvChambolle,
}

impl DenoiserKind {
    pub fn parse(name: &str) -> Option<DenoiserKind> {
        match name.to_ascii_lowercase().as_str() {
            "soft_threshold" => Some(DenoiserKind::SoftThreshold),
            "median3" => Some(DenoiserKind::Median3),
            "tv_chambolle" => Some(DenoiserKind::TvChambolle),
            _ => None,
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            DenoiserKind::SoftThreshold => "soft_threshold",
            DenoiserKind::Median3 => "median3",
            DenoiserKind::TvChambolle => "tv_chambolle",
        }
    }
}

/// Apply one registered denoiser to a signal at noise level `sigma`.
///
/// The map is pure and deterministic in its inputs: D-AMP estimates the
/// denoiser divergence by finite differences, which requires evaluating the
/// exact same function twice at nearby points.
pub fn denoise(
    kind: DenoiserKind,
    v: &[f64],
    sigma: f64,
    height: usize,
    width: usize,
    specifics: &Specifics,
) -> Result<Vec<f64>> {
    if v.len() != height * width {
        return Err(Error::Precondition(format!(
            "signal of length {} does not match geometry {height}x{width}",
            v.len()
        )));
    }
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::Precondition(format!(
            "noise level must be finite and non-negative, got {sigma}"
        )));
    }
    match kind {
        DenoiserKind::SoftThreshold => {
            let threshold = sigma * specifics.f64_or("threshold_factor", 1.0)?;
            Ok(v.iter().map(|&x| super::tv::shrink(x, threshold)).collect())
        }
        DenoiserKind::Median3 => Ok(median3(v, height, width)),
        DenoiserKind::TvChambolle => {
            let weight = sigma * specifics.f64_or("tv_weight_factor", 1.0)?;
            let iters = specifics.usize_or("tv_denoise_iterations", 20)?.max(1);
            // Fresh duals every call keep the map pure.
            let mut prox = TvProx::new(height, width);
            Ok(prox.apply(v, weight, iters))
        }
    }
}

fn median3(v: &[f64], h: usize, w: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len());
    let mut window = [0.0; 9];
    for y in 0..h {
        for x in 0..w {
            let mut k = 0;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let yy = (y as i64 + dy).clamp(0, h as i64 - 1) as usize;
                    let xx = (x as i64 + dx).clamp(0, w as i64 - 1) as usize;
                    window[k] = v[yy * w + xx];
                    k += 1;
                }
            }
            window.sort_by(|a, b| a.partial_cmp(b).unwrap());
            out.push(window[4]);
        }
    }
    out
}

/// Recover one channel with denoising-based approximate message passing.
///
/// Starting from `x = 0`, `z = y`, each iteration computes the effective
/// noise level `sigma = ||z|| / sqrt(m)`, forms the pseudo-data
/// `v = x + A^T z`, denoises it into the next iterate, and rebuilds the
/// residual with an Onsager correction term
/// `z' = y - A x' + (1/m) * z * div`, where `div` is a Monte-Carlo estimate
/// of the denoiser divergence at `v`. The correction keeps the effective
/// noise approximately Gaussian across iterations, which is what lets a
/// plain denoiser act as the signal prior.
///
/// The divergence uses a single probe: `div = eta . (D(v + eps eta) - D(v))
/// / eps` with i.i.d. +/-1 signs `eta` and `eps = max|v| / 1000 + 1e-12`.
///
/// Knobs read from `specifics`: `denoiser` (default `soft_threshold`),
/// `iterations` (default 30, still capped by `max_iterations`), plus the
/// denoiser's own factors.
pub fn damp_reconstruct(
    y: &[f64],
    matrix: &SensingMatrix,
    height: usize,
    width: usize,
    cfg: &SolverConfig,
) -> Result<ChannelSolve> {
    cfg.validate()?;
    let n = matrix.n();
    let m = matrix.m();
    if height * width != n {
        return Err(Error::Precondition(format!(
            "geometry {height}x{width} does not match operator width {n}"
        )));
    }
    if y.len() != m {
        return Err(Error::Precondition(format!(
            "measurement vector of length {} does not match m = {m}",
            y.len()
        )));
    }
    let denoiser_name = cfg.specifics.get("denoiser").unwrap_or("soft_threshold");
    let kind = DenoiserKind::parse(denoiser_name)
        .ok_or_else(|| Error::Config(format!("unknown denoiser `{denoiser_name}`")))?;
    let iterations_budget = cfg
        .specifics
        .usize_or("iterations", 30)?
        .min(cfg.max_iterations)
        .max(1);

    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed ^ PROBE_SEED_SALT);
    let sqrt_m = (m as f64).sqrt();
    let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();

    let mut x = vec![0.0; n];
    let mut z = y.to_vec();
    let mut diag = Diagnostics::default();
    let mut iterations = 0;

    for it in 0..iterations_budget {
        iterations = it + 1;
        let sigma = z.iter().map(|v| v * v).sum::<f64>().sqrt() / sqrt_m;
        if !sigma.is_finite() {
            return Err(Error::Divergence {
                iteration: it,
                reason: format!("effective noise level became {sigma}"),
            });
        }
        diag.sigma.push(sigma);

        let mut v = matrix.apply_transpose(&z);
        for (vi, xi) in v.iter_mut().zip(&x) {
            *vi += xi;
        }
        let x_next = denoise(kind, &v, sigma, height, width, &cfg.specifics)?;

        // Single-probe Monte-Carlo divergence of the denoiser at v.
        let eta: Vec<f64> = (0..n).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
        let eps = v.iter().fold(0.0f64, |acc, u| acc.max(u.abs())) / 1000.0 + 1e-12;
        let v_probe: Vec<f64> = v.iter().zip(&eta).map(|(u, e)| u + eps * e).collect();
        let d_probe = denoise(kind, &v_probe, sigma, height, width, &cfg.specifics)?;
        let divergence: f64 = eta
            .iter()
            .zip(d_probe.iter().zip(&x_next))
            .map(|(e, (a, b))| e * (a - b))
            .sum::<f64>()
            / eps;

        let ax = matrix.apply(&x_next);
        let onsager = divergence / m as f64;
        let z_next: Vec<f64> = y
            .iter()
            .zip(ax.iter().zip(&z))
            .map(|(yi, (axi, zi))| yi - axi + onsager * zi)
            .collect();

        let change: f64 = x_next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let scale = x.iter().map(|u| u * u).sum::<f64>().sqrt().max(1e-12);
        let res_norm = z_next.iter().map(|u| u * u).sum::<f64>().sqrt();
        diag.residual.push(if y_norm > 0.0 { res_norm / y_norm } else { 0.0 });

        x = x_next;
        z = z_next;
        if change / scale < cfg.tolerance {
            break;
        }
    }

    Ok(ChannelSolve {
        signal: x,
        iterations,
        diagnostics: diag,
    })
}
