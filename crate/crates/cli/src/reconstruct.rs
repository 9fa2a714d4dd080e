//! `reconstruct`: rebuild an image from a measurement container and report
//! quality against an optional ground truth.

use std::fs;
use std::path::{Path, PathBuf};

use csbench::loaders::{load_image, save_image};
use csbench::metrics::{psnr, ssim, SSIM_WINDOW};
use csbench::sensing::{read_measurements, SensingMatrix};
use csbench::solvers::reconstruct;
use csbench::{Error, Result};

use crate::config::RunConfig;

pub struct ReconstructArgsResolved<'a> {
    pub measurements: &'a Path,
    pub size: Option<(usize, usize)>,
    pub truth: Option<&'a Path>,
    pub output: Option<&'a Path>,
}

pub fn run(cfg: &RunConfig, args: &ReconstructArgsResolved) -> Result<PathBuf> {
    let group = read_measurements(args.measurements)?;
    let method = if cfg.reconstruction.is_empty() {
        return Err(Error::Config(
            "no reconstruction method configured; set `reconstruction` or pass --method".into(),
        ));
    } else {
        cfg.reconstruction.as_str()
    };

    let (height, width) = resolve_geometry(cfg, args.size, group.n)?;
    if height * width != group.n {
        return Err(Error::Config(format!(
            "geometry {height}x{width} gives n = {} but the container holds n = {}",
            height * width,
            group.n
        )));
    }

    // The container pins the operator: same seed, kind and shape rebuild
    // the exact matrix the measurements were taken with.
    let matrix = SensingMatrix::build(group.seed, group.m, group.n, group.kind)?;
    let solver_cfg = cfg.solver_config()?;
    let result = reconstruct(method, &group, &matrix, height, width, &solver_cfg)?;

    let out_path = match args.output {
        Some(p) => p.to_path_buf(),
        None => {
            let stem = args
                .measurements
                .file_stem()
                .map(|s| s.to_string_lossy().to_string())
                .unwrap_or_else(|| "reconstruction".into());
            cfg.output_dir.join(format!("{stem}_recon.png"))
        }
    };
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    save_image(&out_path, &result.image)?;

    println!(
        "reconstructed {} with {method}: {} iteration(s), residual {:.3e} -> {}",
        args.measurements.display(),
        result.iterations_used,
        result.final_residual,
        out_path.display()
    );
    if let Some(truth_path) = args.truth {
        let truth = load_image(truth_path)?;
        let p = psnr(&result.image, &truth)?;
        if height >= SSIM_WINDOW && width >= SSIM_WINDOW {
            let s = ssim(&result.image, &truth)?;
            println!("psnr = {p:.4} dB  ssim = {s:.5}");
        } else {
            println!("psnr = {p:.4} dB  (image too small for ssim)");
        }
    }
    if cfg.verbose {
        for (c, diag) in result.diagnostics.iter().enumerate() {
            let path = out_path.with_extension(format!("diag_c{c}.csv"));
            diag.write_csv(&path)?;
            println!("wrote solver trace {}", path.display());
        }
    }
    Ok(out_path)
}

fn resolve_geometry(
    cfg: &RunConfig,
    flag: Option<(usize, usize)>,
    n: usize,
) -> Result<(usize, usize)> {
    if let Some(hw) = flag {
        return Ok(hw);
    }
    if cfg.input_height > 0 {
        return Ok((cfg.input_height, cfg.input_width));
    }
    // No geometry given anywhere: accept a square signal.
    let side = (n as f64).sqrt().round() as usize;
    if side * side == n {
        Ok((side, side))
    } else {
        Err(Error::Config(format!(
            "signal length {n} is not square; pass --size HxW or configure input geometry"
        )))
    }
}

/// Parse `HxW` (or `H,W`) into a pair.
pub fn parse_size(text: &str) -> Result<(usize, usize)> {
    let cleaned = text.to_ascii_lowercase();
    let parts: Vec<&str> = cleaned.split(['x', ',']).collect();
    if parts.len() == 2 {
        if let (Ok(h), Ok(w)) = (parts[0].trim().parse(), parts[1].trim().parse()) {
            if h > 0 && w > 0 {
                return Ok((h, w));
            }
        }
    }
    Err(Error::Config(format!(
        "`{text}` is not a size; expected HxW like 32x32"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_parse_and_reject_garbage() {
        assert_eq!(parse_size("32x32").unwrap(), (32, 32));
        assert_eq!(parse_size("28X64").unwrap(), (28, 64));
        assert_eq!(parse_size("4,6").unwrap(), (4, 6));
        assert!(parse_size("32").is_err());
        assert!(parse_size("0x4").is_err());
        assert!(parse_size("axb").is_err());
    }

    #[test]
    fn geometry_resolution_prefers_flag_then_config_then_square() {
        let cfg = RunConfig {
            input_height: 16,
            input_width: 64,
            ..RunConfig::default()
        };
        assert_eq!(resolve_geometry(&cfg, Some((32, 32)), 1024).unwrap(), (32, 32));
        assert_eq!(resolve_geometry(&cfg, None, 1024).unwrap(), (16, 64));
        let bare = RunConfig::default();
        assert_eq!(resolve_geometry(&bare, None, 1024).unwrap(), (32, 32));
        assert!(resolve_geometry(&bare, None, 1000).is_err());
    }
}
