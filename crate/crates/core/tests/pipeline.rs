//! Cross-module pipeline: synthesize an image, sense it, push the
//! measurements through file round-trips and solvers, and feed the measured
//! metrics into the score aggregation.

use csbench::data::Dataset;
use csbench::loaders::synthetic_digits;
use csbench::metrics::{psnr, ssim};
use csbench::scoring::{compute_score, RawResultCell, RawResultTable, WeightScheme, RATIOS};
use csbench::sensing::{
    ratio_to_m, read_matrix_binary, read_measurements, sense_image, write_measurements,
    MatrixKind, SensingMatrix,
};
use csbench::solvers::{pinv_baseline, reconstruct, SolverConfig};
use csbench::Image;

#[test]
fn sensed_digit_survives_file_round_trips_and_reconstructs() {
    let digit = synthetic_digits(1, 7).pop().unwrap().pad_to(32, 32).unwrap();
    let n = digit.pixels_per_channel();
    let m = ratio_to_m(n, 2.0).unwrap();
    let matrix = SensingMatrix::build(11, m, n, MatrixKind::GaussianOrthonormalRows).unwrap();
    let group = sense_image(&digit, &matrix).unwrap();

    // Measurements and the operator itself round-trip through their binary
    // containers before reconstruction, as they would across CLI invocations.
    let dir = tempfile::tempdir().unwrap();
    let meas_path = dir.path().join("digit.csm");
    write_measurements(&meas_path, &group).unwrap();
    let group = read_measurements(&meas_path).unwrap();
    let mat_path = dir.path().join("operator.bin");
    matrix.write_binary(&mat_path).unwrap();
    let (rm, rn, entries) = read_matrix_binary(&mat_path).unwrap();
    assert_eq!((rm, rn), (m, n));
    assert_eq!(entries, matrix.entries());

    let cfg = SolverConfig::default();
    let tval3 = reconstruct("tval3", &group, &matrix, 32, 32, &cfg).unwrap();
    let l1 = reconstruct("l1", &group, &matrix, 32, 32, &cfg).unwrap();

    let baseline_signal = pinv_baseline(&group.channels[0], &matrix).unwrap();
    let clamped: Vec<f64> = baseline_signal.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let baseline = Image::new(1, 32, 32, clamped).unwrap();

    let p_tval3 = psnr(&tval3.image, &digit).unwrap();
    let p_l1 = psnr(&l1.image, &digit).unwrap();
    let p_base = psnr(&baseline, &digit).unwrap();
    assert!(p_tval3 >= 36.0, "tval3 psnr = {p_tval3}");
    assert!(p_tval3 >= p_base, "tval3 {p_tval3} below baseline {p_base}");
    assert!(p_l1 >= p_base, "l1 {p_l1} below baseline {p_base}");

    let s_tval3 = ssim(&tval3.image, &digit).unwrap();
    assert!(s_tval3 > 0.9, "tval3 ssim = {s_tval3}");

    // Feed the measured triple through score aggregation as a full table.
    let mut cells = Vec::new();
    for d in Dataset::ALL {
        for r in RATIOS {
            cells.push(RawResultCell::new(d, r, p_tval3, s_tval3, 4.2).unwrap());
        }
    }
    let table = RawResultTable::new("tval3", cells).unwrap();
    let score = compute_score(&table, &WeightScheme::default()).unwrap();
    assert!(score.total > 0.0 && score.total < 100.0);
    assert!((score.total - (score.speed_score + score.accuracy_score)).abs() < 1e-9);
}

#[test]
fn rgb_images_reconstruct_channel_by_channel() {
    // A three-channel image whose channels differ: each must come back from
    // its own measurement vector, not from a shared luma.
    let mut pixels = Vec::new();
    for c in 0..3 {
        for i in 0..16 * 16 {
            let (y, x) = (i / 16, i % 16);
            let v = match c {
                0 => if x < 8 { 0.9 } else { 0.2 },
                1 => if y < 8 { 0.7 } else { 0.3 },
                _ => 0.5,
            };
            pixels.push(v);
        }
    }
    let image = Image::new(3, 16, 16, pixels).unwrap();
    let n = 256;
    let m = ratio_to_m(n, 2.0).unwrap();
    let matrix = SensingMatrix::build(3, m, n, MatrixKind::GaussianOrthonormalRows).unwrap();
    let group = sense_image(&image, &matrix).unwrap();
    assert_eq!(group.channel_count(), 3);

    let out = reconstruct("tval3", &group, &matrix, 16, 16, &SolverConfig::default()).unwrap();
    assert_eq!(out.image.channels(), 3);
    let p = psnr(&out.image, &image).unwrap();
    assert!(p >= 30.0, "rgb psnr = {p}");
    // The red channel keeps its vertical edge rather than the green one's
    // horizontal edge.
    let red = out.image.channel(0);
    assert!(red[8 * 16 + 2] > 0.6 && red[8 * 16 + 13] < 0.5);
}
