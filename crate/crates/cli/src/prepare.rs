//! `datasets prepare`: decode a source corpus, conform it to a benchmark
//! geometry, optionally cut augmented patches, and write the images with a
//! checksum manifest so prepared datasets are verifiable and reproducible.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use csbench::data::{extract_patches, Dataset, DatasetSpec, PatchConfig};
use csbench::loaders::{load_dataset, save_image};
use csbench::{Error, Result};

use crate::reconstruct::parse_size;

pub struct PrepareOptions {
    pub spec: String,
    pub gray: bool,
    pub patch: Option<usize>,
    pub stride: Option<usize>,
    pub augment: bool,
    pub limit: usize,
}

pub fn run(source: &Path, out_dir: &Path, opts: &PrepareOptions) -> Result<()> {
    let mut spec = resolve_spec(&opts.spec)?;
    if opts.gray {
        spec.channels = 1;
    }

    let load = load_dataset(source, &spec, opts.limit)?;
    for (file, message) in &load.failures {
        eprintln!("skipping {}: {message}", file.display());
    }

    let images = if let Some(patch_size) = opts.patch {
        let patch_cfg = PatchConfig {
            patch_size,
            stride: opts.stride.unwrap_or(patch_size),
            augment: opts.augment,
        };
        let mut patches = Vec::new();
        for img in &load.images {
            patches.extend(extract_patches(img, &patch_cfg)?);
        }
        patches
    } else {
        load.images
    };
    if images.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "{}: nothing left to write after preparation",
            source.display()
        )));
    }

    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut manifest_lines = Vec::with_capacity(images.len());
    for (i, img) in images.iter().enumerate() {
        let name = format!("img_{i:06}.png");
        let path = out_dir.join(&name);
        save_image(&path, img)?;
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let digest = Sha256::digest(&bytes);
        manifest_lines.push(format!("{digest:x}  {name}"));
    }
    manifest_lines.sort();

    let manifest = out_dir.join("manifest.txt");
    fs::write(&manifest, manifest_lines.join("\n") + "\n").map_err(|e| Error::io(&manifest, e))?;
    println!(
        "prepared {} image(s) ({}x{}, {} channel(s)) -> {} (manifest {})",
        images.len(),
        images[0].height(),
        images[0].width(),
        images[0].channels(),
        out_dir.display(),
        manifest.display()
    );
    Ok(())
}

/// A spec is either one of the six benchmark dataset names or an explicit
/// `HxW` geometry (3-channel unless `--gray`).
fn resolve_spec(spec: &str) -> Result<DatasetSpec> {
    if let Some(dataset) = Dataset::parse(spec) {
        return Ok(DatasetSpec::builtin(dataset));
    }
    let (h, w) = parse_size(spec).map_err(|_| {
        Error::Config(format!(
            "`{spec}` is neither a dataset name nor a size like 64x64"
        ))
    })?;
    DatasetSpec::new(format!("custom_{h}x{w}"), 3, h, w)
}
