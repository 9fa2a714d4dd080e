//! `sense`: compress one image into a measurement container.

use std::fs;
use std::path::{Path, PathBuf};

use csbench::loaders::load_image;
use csbench::sensing::{sense_image, write_measurements, SensingMatrix};
use csbench::{Error, Result};

use crate::config::RunConfig;

pub fn run(cfg: &RunConfig, image_path: &Path, output: Option<&Path>) -> Result<PathBuf> {
    let image = load_image(image_path)?;
    if cfg.input_height > 0
        && (image.height() != cfg.input_height || image.width() != cfg.input_width)
    {
        return Err(Error::Config(format!(
            "configured input geometry {}x{} (n = {}) does not match image {}x{} (n = {})",
            cfg.input_height,
            cfg.input_width,
            cfg.input_height * cfg.input_width,
            image.height(),
            image.width(),
            image.pixels_per_channel()
        )));
    }
    if image.channels() != cfg.input_channels && cfg.input_height > 0 {
        return Err(Error::Config(format!(
            "configured input_channel = {} but the image has {} channels",
            cfg.input_channels,
            image.channels()
        )));
    }

    let n = image.pixels_per_channel();
    let m = cfg.resolve_m(n)?;
    let matrix = SensingMatrix::build(cfg.seed, m, n, cfg.sensing)?;
    let group = sense_image(&image, &matrix)?;

    let out_path = match output {
        Some(p) => p.to_path_buf(),
        None => {
            let stem = image_path
                .file_stem()
                .map(|s| s.to_string_lossy().to_string())
                .unwrap_or_else(|| "measurements".into());
            cfg.output_dir.join(format!("{stem}.csm"))
        }
    };
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    write_measurements(&out_path, &group)?;
    println!(
        "sensed {} ({} channel(s), n = {n}) with {} m = {m} seed = {} -> {}",
        image_path.display(),
        image.channels(),
        cfg.sensing.id(),
        cfg.seed,
        out_path.display()
    );
    Ok(out_path)
}
