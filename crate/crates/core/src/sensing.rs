//! Seeded sensing operators and measurement containers.
//!
//! A sensing matrix maps a flattened image channel of length `n` to `m`
//! linear measurements. Matrices are generated from an explicit seed with a
//! fixed, platform-independent sampling procedure, so a (seed, m, n, kind)
//! tuple always denotes the same operator.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::data::Image;
use crate::error::{Error, Result};

/// Magic prefix of the measurement container format.
const MEASUREMENT_MAGIC: &[u8; 4] = b"CSMG";
const MEASUREMENT_VERSION: u16 = 1;

/// How the sensing operator is populated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    /// I.i.d. Gaussian entries with variance `1/m`.
    Gaussian,
    /// Gaussian rows orthonormalized with modified Gram-Schmidt.
    GaussianOrthonormalRows,
    /// The identity operator; requires `m == n`.
    Identity,
}

impl MatrixKind {
    pub fn id(&self) -> &'static str {
        match self {
            MatrixKind::Gaussian => "gaussian",
            MatrixKind::GaussianOrthonormalRows => "gaussian_orthonormal_rows",
            MatrixKind::Identity => "identity",
        }
    }

    pub fn parse(name: &str) -> Option<MatrixKind> {
        match name.to_ascii_lowercase().as_str() {
            "gaussian" => Some(MatrixKind::Gaussian),
            "gaussian_orthonormal_rows" | "orthonormal" => Some(MatrixKind::GaussianOrthonormalRows),
            "identity" => Some(MatrixKind::Identity),
            _ => None,
        }
    }

    fn tag(&self) -> u8 {
        match self {
            MatrixKind::Gaussian => 0,
            MatrixKind::GaussianOrthonormalRows => 1,
            MatrixKind::Identity => 2,
        }
    }

    fn from_tag(tag: u8) -> Option<MatrixKind> {
        match tag {
            0 => Some(MatrixKind::Gaussian),
            1 => Some(MatrixKind::GaussianOrthonormalRows),
            2 => Some(MatrixKind::Identity),
            _ => None,
        }
    }
}

impl std::fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

/// Convert a compression ratio `n/m` into a measurement count:
/// `round(n / ratio)`, at least 1. Ratios below 1 would ask for more
/// measurements than samples and are rejected.
pub fn ratio_to_m(n: usize, ratio: f64) -> Result<usize> {
    if !ratio.is_finite() || ratio < 1.0 {
        return Err(Error::Precondition(format!(
            "compression ratio must be >= 1, got {ratio}"
        )));
    }
    if n == 0 {
        return Err(Error::Precondition("signal length must be positive".into()));
    }
    Ok(((n as f64 / ratio).round() as usize).max(1))
}

/// Draw one standard normal variate via the Box-Muller transform.
///
/// `rng.gen::<f64>()` yields 53-bit uniforms in `[0, 1)`; the transform on
/// top of them is plain arithmetic, so matrix entries are bit-reproducible
/// across platforms for a given seed, which a distribution-sampling helper
/// will not guarantee across library versions.
fn standard_normal(rng: &mut ChaCha20Rng) -> f64 {
    let mut u1: f64 = rng.gen();
    while u1 <= 0.0 {
        u1 = rng.gen();
    }
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// A dense `m x n` sensing operator in row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingMatrix {
    m: usize,
    n: usize,
    kind: MatrixKind,
    seed: u64,
    entries: Vec<f64>,
}

impl SensingMatrix {
    /// Generate the operator for `(seed, m, n, kind)`.
    pub fn build(seed: u64, m: usize, n: usize, kind: MatrixKind) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Precondition(
                "matrix dimensions must be positive".into(),
            ));
        }
        if m > n {
            return Err(Error::Precondition(format!(
                "undersampling operator needs m <= n, got {m} > {n}"
            )));
        }
        if kind == MatrixKind::Identity && m != n {
            return Err(Error::Precondition(format!(
                "identity sensing requires m == n, got {m} != {n}"
            )));
        }
        let mut entries = vec![0.0; m * n];
        match kind {
            MatrixKind::Identity => {
                for i in 0..m {
                    entries[i * n + i] = 1.0;
                }
            }
            MatrixKind::Gaussian | MatrixKind::GaussianOrthonormalRows => {
                let mut rng = ChaCha20Rng::seed_from_u64(seed);
                let scale = 1.0 / (m as f64).sqrt();
                for e in entries.iter_mut() {
                    *e = standard_normal(&mut rng) * scale;
                }
                if kind == MatrixKind::GaussianOrthonormalRows {
                    orthonormalize_rows(&mut entries, m, n)?;
                }
            }
        }
        Ok(SensingMatrix {
            m,
            n,
            kind,
            seed,
            entries,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        let mut y = Vec::with_capacity(self.m);
        for i in 0..self.m {
            y.push(dot(self.row(i), x));
        }
        y
    }

    /// `x = A^T z`.
    pub fn apply_transpose(&self, z: &[f64]) -> Vec<f64> {
        debug_assert_eq!(z.len(), self.m);
        let mut x = vec![0.0; self.n];
        for i in 0..self.m {
            let zi = z[i];
            if zi == 0.0 {
                continue;
            }
            for (xj, aij) in x.iter_mut().zip(self.row(i)) {
                *xj += zi * aij;
            }
        }
        x
    }

    /// Largest squared singular value, estimated with `iters` rounds of
    /// power iteration on `A^T A` from a seeded start vector.
    pub fn operator_norm_squared(&self, iters: usize, seed: u64) -> f64 {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut v: Vec<f64> = (0..self.n).map(|_| standard_normal(&mut rng)).collect();
        normalize(&mut v);
        let mut lambda = 1.0;
        for _ in 0..iters {
            let av = self.apply(&v);
            let mut atav = self.apply_transpose(&av);
            lambda = dot(&atav, &v).abs().max(f64::MIN_POSITIVE);
            normalize(&mut atav);
            v = atav;
        }
        lambda
    }

    /// Serialize as a little-endian binary file: `m` and `n` as u64, then
    /// the `m * n` row-major entries as f64.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(16 + self.entries.len() * 8);
        bytes.extend_from_slice(&(self.m as u64).to_le_bytes());
        bytes.extend_from_slice(&(self.n as u64).to_le_bytes());
        for e in &self.entries {
            bytes.extend_from_slice(&e.to_le_bytes());
        }
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(&bytes).map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Read back a matrix file written by [`SensingMatrix::write_binary`],
/// returning `(m, n, row-major entries)`.
pub fn read_matrix_binary(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 16 {
        return Err(Error::Format(format!(
            "{}: matrix header needs 16 bytes",
            path.display()
        )));
    }
    let m = u64::from_le_bytes(bytes[0..8].try_into().unwrap()) as usize;
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let need = 16 + m * n * 8;
    if bytes.len() != need {
        return Err(Error::Format(format!(
            "{}: expected {need} bytes for a {m}x{n} matrix, found {}",
            path.display(),
            bytes.len()
        )));
    }
    let entries = bytes[16..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((m, n, entries))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

/// Modified Gram-Schmidt on the rows, in place. Gaussian rows with m <= n
/// are almost surely independent; degeneracy still gets a clear error
/// instead of a division blow-up.
fn orthonormalize_rows(entries: &mut [f64], m: usize, n: usize) -> Result<()> {
    for i in 0..m {
        for j in 0..i {
            let (head, tail) = entries.split_at_mut(i * n);
            let prev = &head[j * n..(j + 1) * n];
            let row = &mut tail[..n];
            let d = dot(row, prev);
            for (r, p) in row.iter_mut().zip(prev) {
                *r -= d * p;
            }
        }
        let row = &mut entries[i * n..(i + 1) * n];
        let norm = dot(row, row).sqrt();
        if norm < 1e-12 {
            return Err(Error::LinearAlgebra(format!(
                "row {i} became numerically dependent during orthonormalization"
            )));
        }
        for r in row.iter_mut() {
            *r /= norm;
        }
    }
    Ok(())
}

/// Per-channel measurements of one image under one operator.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementGroup {
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    pub kind: MatrixKind,
    /// One measurement vector per image channel, in channel order.
    pub channels: Vec<Vec<f64>>,
}

impl MeasurementGroup {
    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }
}

/// Measure every channel of an image with the same operator. The flattened
/// row-major channel is the sensing-domain signal.
pub fn sense_image(image: &Image, matrix: &SensingMatrix) -> Result<MeasurementGroup> {
    if image.pixels_per_channel() != matrix.n() {
        return Err(Error::Precondition(format!(
            "image has {} samples per channel but the operator expects {}",
            image.pixels_per_channel(),
            matrix.n()
        )));
    }
    let channels = (0..image.channels())
        .map(|c| matrix.apply(image.channel(c)))
        .collect();
    Ok(MeasurementGroup {
        m: matrix.m(),
        n: matrix.n(),
        seed: matrix.seed(),
        kind: matrix.kind(),
        channels,
    })
}

/// Serialize a measurement group: a fixed 40-byte header (magic, version,
/// kind, channel count, m, n, seed, then a reserved f64) followed by the
/// per-channel vectors as little-endian f64.
pub fn write_measurements(path: &Path, group: &MeasurementGroup) -> Result<()> {
    if group.channels.iter().any(|c| c.len() != group.m) {
        return Err(Error::Precondition(
            "measurement vectors must all have length m".into(),
        ));
    }
    let mut bytes = Vec::with_capacity(40 + group.channels.len() * group.m * 8);
    bytes.extend_from_slice(MEASUREMENT_MAGIC);
    bytes.extend_from_slice(&MEASUREMENT_VERSION.to_le_bytes());
    bytes.push(group.kind.tag());
    bytes.push(group.channels.len() as u8);
    bytes.extend_from_slice(&(group.m as u64).to_le_bytes());
    bytes.extend_from_slice(&(group.n as u64).to_le_bytes());
    bytes.extend_from_slice(&group.seed.to_le_bytes());
    bytes.extend_from_slice(&0u64.to_le_bytes());
    for channel in &group.channels {
        for v in channel {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Read a measurement container written by [`write_measurements`].
pub fn read_measurements(path: &Path) -> Result<MeasurementGroup> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 40 || &bytes[0..4] != MEASUREMENT_MAGIC {
        return Err(Error::Format(format!(
            "{}: not a measurement container",
            path.display()
        )));
    }
    let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
    if version != MEASUREMENT_VERSION {
        return Err(Error::Format(format!(
            "{}: unsupported container version {version}",
            path.display()
        )));
    }
    let kind = MatrixKind::from_tag(bytes[6]).ok_or_else(|| {
        Error::Format(format!("{}: unknown matrix kind tag {}", path.display(), bytes[6]))
    })?;
    let channel_count = bytes[7] as usize;
    let m = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let n = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    let seed = u64::from_le_bytes(bytes[24..32].try_into().unwrap());
    let need = 40 + channel_count * m * 8;
    if bytes.len() != need {
        return Err(Error::Format(format!(
            "{}: expected {need} bytes for {channel_count} channels of {m} measurements, found {}",
            path.display(),
            bytes.len()
        )));
    }
    let mut channels = Vec::with_capacity(channel_count);
    for c in 0..channel_count {
        let start = 40 + c * m * 8;
        channels.push(
            bytes[start..start + m * 8]
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect(),
        );
    }
    Ok(MeasurementGroup {
        m,
        n,
        seed,
        kind,
        channels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_to_m_rounds_and_floors_at_one() {
        assert_eq!(ratio_to_m(1024, 2.0).unwrap(), 512);
        assert_eq!(ratio_to_m(1024, 32.0).unwrap(), 32);
        assert_eq!(ratio_to_m(1000, 32.0).unwrap(), 31);
        assert_eq!(ratio_to_m(4, 8.0).unwrap(), 1);
        assert!(ratio_to_m(1024, 0.5).is_err());
        assert!(ratio_to_m(1024, f64::NAN).is_err());
    }

    #[test]
    fn identity_kind_requires_square_and_reproduces_the_signal() {
        assert!(SensingMatrix::build(0, 8, 16, MatrixKind::Identity).is_err());
        let a = SensingMatrix::build(0, 16, 16, MatrixKind::Identity).unwrap();
        let x: Vec<f64> = (0..16).map(|i| i as f64 / 16.0).collect();
        assert_eq!(a.apply(&x), x);
    }

    #[test]
    fn oversampling_is_rejected() {
        assert!(SensingMatrix::build(0, 17, 16, MatrixKind::Gaussian).is_err());
    }

    #[test]
    fn same_seed_is_bit_identical_and_different_seed_is_not() {
        let a = SensingMatrix::build(42, 32, 64, MatrixKind::Gaussian).unwrap();
        let b = SensingMatrix::build(42, 32, 64, MatrixKind::Gaussian).unwrap();
        let bits = |m: &SensingMatrix| -> Vec<u64> { m.entries().iter().map(|v| v.to_bits()).collect() };
        assert_eq!(bits(&a), bits(&b));
        let c = SensingMatrix::build(43, 32, 64, MatrixKind::Gaussian).unwrap();
        assert_ne!(bits(&a), bits(&c));
    }

    #[test]
    fn gaussian_entries_match_the_declared_variance() {
        let a = SensingMatrix::build(7, 64, 256, MatrixKind::Gaussian).unwrap();
        let k = a.entries().len() as f64;
        let mean: f64 = a.entries().iter().sum::<f64>() / k;
        let var: f64 = a.entries().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / k;
        assert!(mean.abs() < 3.0 / 64.0, "mean = {mean}");
        let expected = 1.0 / 64.0;
        assert!((var - expected).abs() < 0.15 * expected, "var = {var}");
    }

    #[test]
    fn orthonormal_rows_have_identity_gram_within_1e10() {
        let a = SensingMatrix::build(3, 16, 64, MatrixKind::GaussianOrthonormalRows).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                let g = dot(a.row(i), a.row(j));
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((g - expected).abs() < 1e-10, "gram[{i}][{j}] = {g}");
            }
        }
    }

    #[test]
    fn operator_norm_of_orthonormal_rows_is_one() {
        let a = SensingMatrix::build(5, 32, 128, MatrixKind::GaussianOrthonormalRows).unwrap();
        let l = a.operator_norm_squared(20, 11);
        assert!((l - 1.0).abs() < 1e-6, "norm^2 = {l}");
    }

    #[test]
    fn sensing_is_linear() {
        let a = SensingMatrix::build(9, 24, 48, MatrixKind::Gaussian).unwrap();
        let x: Vec<f64> = (0..48).map(|i| (i as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = (0..48).map(|i| (i as f64 * 0.73).cos()).collect();
        let combo: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * a + 2.0 * b).collect();
        let lhs = a.apply(&combo);
        let ax = a.apply(&x);
        let ay = a.apply(&y);
        for i in 0..24 {
            assert!((lhs[i] - (0.5 * ax[i] + 2.0 * ay[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn transpose_is_the_adjoint() {
        let a = SensingMatrix::build(1, 12, 30, MatrixKind::Gaussian).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let x: Vec<f64> = (0..30).map(|_| standard_normal(&mut rng)).collect();
        let z: Vec<f64> = (0..12).map(|_| standard_normal(&mut rng)).collect();
        let lhs = dot(&a.apply(&x), &z);
        let rhs = dot(&x, &a.apply_transpose(&z));
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn rgb_sensing_measures_each_channel_independently() {
        let mut pixels = Vec::new();
        for c in 0..3 {
            for i in 0..1024 {
                pixels.push(((i + c * 131) % 256) as f64 / 255.0);
            }
        }
        let img = Image::new(3, 32, 32, pixels).unwrap();
        let a = SensingMatrix::build(4, 256, 1024, MatrixKind::Gaussian).unwrap();
        let group = sense_image(&img, &a).unwrap();
        assert_eq!(group.channel_count(), 3);
        assert_eq!(group.m, 256);
        for c in 0..3 {
            assert_eq!(group.channels[c], a.apply(img.channel(c)));
        }
    }

    #[test]
    fn sensing_dimension_mismatch_is_rejected() {
        let img = Image::constant(16, 16, 0.5).unwrap();
        let a = SensingMatrix::build(0, 100, 1024, MatrixKind::Gaussian).unwrap();
        assert!(matches!(sense_image(&img, &a), Err(Error::Precondition(_))));
    }

    #[test]
    fn matrix_file_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.mat");
        let a = SensingMatrix::build(21, 8, 20, MatrixKind::GaussianOrthonormalRows).unwrap();
        a.write_binary(&path).unwrap();
        let (m, n, entries) = read_matrix_binary(&path).unwrap();
        assert_eq!((m, n), (8, 20));
        let same = entries
            .iter()
            .zip(a.entries())
            .all(|(x, y)| x.to_bits() == y.to_bits());
        assert!(same);
        // Header layout: two little-endian u64 then the payload.
        let bytes = fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 16 + 8 * 20 * 8);
        assert_eq!(u64::from_le_bytes(bytes[0..8].try_into().unwrap()), 8);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 20);
    }

    #[test]
    fn truncated_matrix_file_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.mat");
        let a = SensingMatrix::build(0, 4, 6, MatrixKind::Gaussian).unwrap();
        a.write_binary(&path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 8);
        fs::write(&path, bytes).unwrap();
        assert!(matches!(read_matrix_binary(&path), Err(Error::Format(_))));
    }

    #[test]
    fn measurement_container_round_trips_with_header_intact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("y.csm");
        let img = Image::constant(32, 32, 0.25).unwrap();
        let a = SensingMatrix::build(6, 256, 1024, MatrixKind::GaussianOrthonormalRows).unwrap();
        let group = sense_image(&img, &a).unwrap();
        write_measurements(&path, &group).unwrap();
        let back = read_measurements(&path).unwrap();
        assert_eq!(back, group);
        assert_eq!(back.seed, 6);
        assert_eq!(back.kind, MatrixKind::GaussianOrthonormalRows);
    }

    #[test]
    fn corrupt_measurement_container_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("y.csm");
        fs::write(&path, b"definitely not measurements").unwrap();
        assert!(matches!(read_measurements(&path), Err(Error::Format(_))));
    }
}
