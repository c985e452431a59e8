mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use suitegauge::similarity::{energy_statistic, permutation_pvalue};
use suitegauge::Matrix;

fn matrix(k: usize, n: usize, values: Vec<f64>) -> Matrix {
    Matrix::new(k, n, values).unwrap()
}

fn pair(max_k: usize, max_n: usize, lo: f64, hi: f64) -> impl Strategy<Value = (Matrix, Matrix)> {
    (1..=max_k, 1..=max_k, 1..=max_n).prop_flat_map(move |(k1, k2, n)| {
        (
            prop::collection::vec(lo..hi, k1 * n).prop_map(move |v| matrix(k1, n, v)),
            prop::collection::vec(lo..hi, k2 * n).prop_map(move |v| matrix(k2, n, v)),
        )
    })
}

fn integer_pair(max_k: usize, max_n: usize) -> impl Strategy<Value = (Matrix, Matrix)> {
    (1..=max_k, 1..=max_k, 1..=max_n).prop_flat_map(move |(k1, k2, n)| {
        (
            prop::collection::vec(0..3i32, k1 * n)
                .prop_map(move |v| matrix(k1, n, v.into_iter().map(f64::from).collect())),
            prop::collection::vec(0..3i32, k2 * n)
                .prop_map(move |v| matrix(k2, n, v.into_iter().map(f64::from).collect())),
        )
    })
}

/// Distinct rows with their counts.
fn multiset(m: &Matrix) -> Vec<(Vec<f64>, usize)> {
    let mut rows: Vec<Vec<f64>> = m.rows().map(<[f64]>::to_vec).collect();
    rows.sort_by(|a, b| suitegauge::numeric::cmp_rows(a, b));
    let mut out: Vec<(Vec<f64>, usize)> = Vec::new();
    for r in rows {
        match out.last_mut() {
            Some((last, c)) if *last == r => *c += 1,
            _ => out.push((r, 1)),
        }
    }
    out
}

/// The statistic compares empirical distributions, so {x, x} and {x} are
/// the same sample in its eyes; for equal sizes this is multiset equality.
fn same_empirical_distribution(p: &Matrix, q: &Matrix) -> bool {
    let (a, b) = (multiset(p), multiset(q));
    a.len() == b.len()
        && a.iter().zip(&b).all(|((ra, ca), (rb, cb))| {
            ra == rb && ca * q.nrows() == cb * p.nrows()
        })
}

fn permute_rows(m: &Matrix, order: &[usize]) -> Matrix {
    let rows: Vec<&[f64]> = order.iter().map(|&i| m.row(i)).collect();
    Matrix::from_rows(&rows).unwrap()
}

/// Rotation built from Givens rotations in every coordinate plane.
fn rotate_translate(m: &Matrix, angles: &[f64], shift: &[f64]) -> Matrix {
    let n = m.ncols();
    let mut out = m.clone();
    let mut a = angles.iter().cycle();
    for i in 0..n {
        for j in (i + 1)..n {
            let t = *a.next().unwrap();
            let (s, c) = t.sin_cos();
            for r in 0..out.nrows() {
                let row = out.row_mut(r);
                let (x, y) = (row[i], row[j]);
                row[i] = c * x - s * y;
                row[j] = s * x + c * y;
            }
        }
    }
    for r in 0..out.nrows() {
        for (v, d) in out.row_mut(r).iter_mut().zip(shift.iter().cycle()) {
            *v += d;
        }
    }
    out
}

#[test]
fn matches_naive_oracle_on_random_instances() {
    let mut rng = common::rng(20240501);
    for _ in 0..100 {
        use rand::Rng;
        let (k1, k2, n) = (rng.gen_range(1..=10), rng.gen_range(1..=10), rng.gen_range(1..=5));
        let p = common::random_matrix(&mut rng, k1, n, -5.0, 5.0);
        let q = common::random_matrix(&mut rng, k2, n, -5.0, 5.0);
        let fast = energy_statistic(&p, &q).unwrap();
        let slow = common::naive_energy(&p, &q).max(0.0);
        assert!(
            (fast - slow).abs() <= 1e-10 * slow.abs().max(1e-300) || (fast - slow).abs() < 1e-13,
            "{fast} vs {slow}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn nonnegative((p, q) in pair(8, 5, -100.0, 100.0)) {
        prop_assert!(energy_statistic(&p, &q).unwrap() >= 0.0);
    }

    #[test]
    fn symmetric((p, q) in pair(8, 5, -10.0, 10.0)) {
        let a = energy_statistic(&p, &q).unwrap();
        let b = energy_statistic(&q, &p).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn invariant_under_rigid_motion(
        (p, q) in pair(8, 4, -10.0, 10.0),
        angles in prop::collection::vec(-3.2f64..3.2, 6),
        shift in prop::collection::vec(-50.0f64..50.0, 4),
    ) {
        let a = energy_statistic(&p, &q).unwrap();
        let b = energy_statistic(
            &rotate_translate(&p, &angles, &shift),
            &rotate_translate(&q, &angles, &shift),
        ).unwrap();
        prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn invariant_under_row_permutation((p, q) in pair(8, 5, -10.0, 10.0), seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let mut op: Vec<usize> = (0..p.nrows()).collect();
        let mut oq: Vec<usize> = (0..q.nrows()).collect();
        op.shuffle(&mut rng);
        oq.shuffle(&mut rng);
        let a = energy_statistic(&p, &q).unwrap();
        let b = energy_statistic(&permute_rows(&p, &op), &permute_rows(&q, &oq)).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn zero_exactly_for_identical_multisets((p, _) in pair(6, 4, -10.0, 10.0), seed in any::<u64>()) {
        let mut order: Vec<usize> = (0..p.nrows()).collect();
        order.shuffle(&mut common::rng(seed));
        let q = permute_rows(&p, &order);
        prop_assert_eq!(energy_statistic(&p, &q).unwrap(), 0.0);
    }

    #[test]
    fn positive_for_distinct_multisets((p, q) in integer_pair(6, 4)) {
        let e = energy_statistic(&p, &q).unwrap();
        if same_empirical_distribution(&p, &q) {
            prop_assert_eq!(e, 0.0);
        } else {
            prop_assert!(e > 0.0, "E = {} for distinct multisets", e);
        }
    }

    #[test]
    fn pvalue_is_a_multiple_of_the_grid(
        (p, q) in pair(6, 3, -5.0, 5.0).prop_filter("need 4 pooled rows", |(p, q)| p.nrows() + q.nrows() >= 4),
        r in 1usize..60,
        seed in any::<u64>(),
    ) {
        let res = permutation_pvalue(&p, &q, r, seed, 0.05).unwrap();
        let c = res.p_value * (r + 1) as f64;
        prop_assert!((c - c.round()).abs() < 1e-9);
        prop_assert!(c.round() >= 1.0 && c.round() <= (r + 1) as f64);
        prop_assert_eq!(res.significant, res.p_value <= 0.05);
    }
}

#[test]
fn permutation_test_is_deterministic_per_seed() {
    let mut rng = common::rng(3);
    let p = common::random_matrix(&mut rng, 8, 3, 0.0, 1.0);
    let q = common::random_matrix(&mut rng, 9, 3, 0.3, 1.3);
    let a = permutation_pvalue(&p, &q, 99, 17, 0.05).unwrap();
    let b = permutation_pvalue(&p, &q, 99, 17, 0.05).unwrap();
    assert_eq!(a, b);
}
