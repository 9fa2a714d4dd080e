//! Property tests for the algebraic contracts the pipeline leans on.

use proptest::prelude::*;

use csbench::data::Dataset;
use csbench::scoring::{
    compute_score, normalize_psnr, normalize_speed, RawResultCell, RawResultTable, WeightScheme,
    RATIOS,
};
use csbench::sensing::{MatrixKind, SensingMatrix};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    /// <Ax, z> == <x, A^T z> for every operator kind; the solvers' gradient
    /// steps silently assume this pairing.
    #[test]
    fn sensing_adjoint_pairs_with_the_forward_map(
        seed in 0u64..1000,
        m in 1usize..12,
        extra in 0usize..12,
        kind in prop::sample::select(vec![MatrixKind::Gaussian, MatrixKind::GaussianOrthonormalRows]),
        x_seed in 0u64..1000,
    ) {
        let n = m + extra;
        let matrix = SensingMatrix::build(seed, m, n, kind).unwrap();
        // Deterministic pseudo-random test vectors, decoupled from the
        // matrix seed.
        let x: Vec<f64> = (0..n).map(|i| (((x_seed + i as u64) * 2654435761) % 1000) as f64 / 500.0 - 1.0).collect();
        let z: Vec<f64> = (0..m).map(|i| (((x_seed + 77 + i as u64) * 2246822519) % 1000) as f64 / 500.0 - 1.0).collect();
        let lhs = dot(&matrix.apply(&x), &z);
        let rhs = dot(&x, &matrix.apply_transpose(&z));
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    /// The forward map is linear: A(ax + by) == a*Ax + b*Ay.
    #[test]
    fn sensing_is_linear(
        seed in 0u64..1000,
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let (m, n) = (6, 15);
        let matrix = SensingMatrix::build(seed, m, n, MatrixKind::Gaussian).unwrap();
        let x: Vec<f64> = (0..n).map(|i| ((i * 37 + 11) % 19) as f64 / 19.0).collect();
        let y: Vec<f64> = (0..n).map(|i| ((i * 53 + 5) % 23) as f64 / 23.0).collect();
        let mixed: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let lhs = matrix.apply(&mixed);
        let ax = matrix.apply(&x);
        let ay = matrix.apply(&y);
        for i in 0..m {
            let rhs = a * ax[i] + b * ay[i];
            prop_assert!((lhs[i] - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }
    }

    /// Normalizers are monotone and stay on the score scale over their whole
    /// domain, so a better raw metric can never lower a score.
    #[test]
    fn normalizers_are_monotone_on_random_pairs(
        p1 in 0.0f64..48.0,
        p2 in 0.0f64..48.0,
        s1 in 0.0f64..1e6,
        s2 in 0.0f64..1e6,
    ) {
        let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
        let (nlo, nhi) = (normalize_psnr(lo).unwrap(), normalize_psnr(hi).unwrap());
        prop_assert!(nlo <= nhi);
        prop_assert!((10.0..=100.0).contains(&nlo) && (10.0..=100.0).contains(&nhi));

        let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        let (nlo, nhi) = (normalize_speed(lo).unwrap(), normalize_speed(hi).unwrap());
        prop_assert!(nlo <= nhi);
        prop_assert!((0.0..100.0).contains(&nlo) && (0.0..100.0).contains(&nhi));
    }

    /// Scores are bit-identical under any permutation of the input cells.
    #[test]
    fn scoring_ignores_cell_order(
        values in prop::collection::vec((0.0f64..48.0, 0.0f64..1.0, 0.0f64..500.0), 30),
        permutation in Just((0..30usize).collect::<Vec<_>>()).prop_shuffle(),
    ) {
        let mut cells = Vec::with_capacity(30);
        for (i, d) in Dataset::ALL.iter().enumerate() {
            for (j, r) in RATIOS.iter().enumerate() {
                let (p, s, v) = values[i * 5 + j];
                cells.push(RawResultCell::new(*d, *r, p, s, v).unwrap());
            }
        }
        let canonical = RawResultTable::new("m", cells.clone()).unwrap();
        let shuffled: Vec<RawResultCell> = permutation.iter().map(|&i| cells[i]).collect();
        let reordered = RawResultTable::new("m", shuffled).unwrap();
        let scheme = WeightScheme::default();
        let a = compute_score(&canonical, &scheme).unwrap();
        let b = compute_score(&reordered, &scheme).unwrap();
        prop_assert_eq!(a.total.to_bits(), b.total.to_bits());
        prop_assert_eq!(a.speed_score.to_bits(), b.speed_score.to_bits());
    }
}
