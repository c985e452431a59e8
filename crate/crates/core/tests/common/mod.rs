#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use suitegauge::Matrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut impl Rng, k: usize, n: usize, lo: f64, hi: f64) -> Matrix {
    let data = (0..k * n).map(|_| rng.gen_range(lo..hi)).collect();
    Matrix::new(k, n, data).unwrap()
}

pub fn gaussian_matrix(rng: &mut impl Rng, k: usize, n: usize, mean: f64) -> Matrix {
    let normal = Normal::new(mean, 1.0).unwrap();
    let data = (0..k * n).map(|_| normal.sample(rng)).collect();
    Matrix::new(k, n, data).unwrap()
}

/// Target surface shared by suites drawn from the reference distribution.
pub fn base_target(x: &[f64]) -> f64 {
    -3.0 + 0.8 * x[0] + 0.4 * (1.5 * x[1]).sin()
}

/// Target surface for the shifted suite.
pub fn shifted_target(x: &[f64]) -> f64 {
    -1.0 - 0.8 * x[0] + 0.6 * x[2] * x[3]
}

pub struct Fixture {
    pub features: PathBuf,
    pub performance: PathBuf,
}

pub struct SuiteSpec<'a> {
    pub id: &'a str,
    pub k: usize,
    pub feature_mean: f64,
    pub target: fn(&[f64]) -> f64,
}

/// Writes one feature CSV and one performance CSV (single algorithm `alg`)
/// with log10 precision = target(x) + N(0, noise).
pub fn write_fixture(
    dir: &Path,
    suites: &[SuiteSpec<'_>],
    n: usize,
    noise: f64,
    seed: u64,
) -> Fixture {
    let mut r = rng(seed);
    let eps = Normal::new(0.0, noise).unwrap();
    let mut feat = String::from("instance_id,suite_id,dimensionality");
    for j in 0..n {
        write!(feat, ",f{j}").unwrap();
    }
    feat.push('\n');
    let mut perf = String::from("instance_id,suite_id,algorithm_id,median_target_precision\n");
    for s in suites {
        let x = gaussian_matrix(&mut r, s.k, n, s.feature_mean);
        for (i, row) in x.rows().enumerate() {
            let id = format!("{}_{i:03}", s.id);
            write!(feat, "{id},{},10", s.id).unwrap();
            for v in row {
                write!(feat, ",{v:?}").unwrap();
            }
            feat.push('\n');
            let y = (s.target)(row) + eps.sample(&mut r);
            writeln!(perf, "{id},{},alg,{:?}", s.id, 10f64.powf(y)).unwrap();
        }
    }
    let features = dir.join("features.csv");
    let performance = dir.join("performance.csv");
    std::fs::write(&features, feat).unwrap();
    std::fs::write(&performance, perf).unwrap();
    Fixture {
        features,
        performance,
    }
}

/// Three suites: A and B from one distribution and target, C shifted in both.
pub fn shifted_suites(dir: &Path, k: usize, seed: u64) -> Fixture {
    shifted_suites_with_noise(dir, k, 0.3, seed)
}

pub fn shifted_suites_with_noise(dir: &Path, k: usize, noise: f64, seed: u64) -> Fixture {
    write_fixture(
        dir,
        &[
            SuiteSpec {
                id: "A",
                k,
                feature_mean: 0.0,
                target: base_target,
            },
            SuiteSpec {
                id: "B",
                k,
                feature_mean: 0.0,
                target: base_target,
            },
            SuiteSpec {
                id: "C",
                k,
                feature_mean: 1.5,
                target: shifted_target,
            },
        ],
        10,
        noise,
        seed,
    )
}

/// Energy statistic written directly from its definition: plain triple
/// loops, no sorting, no compensation.
pub fn naive_energy(p: &Matrix, q: &Matrix) -> f64 {
    let (k1, k2, n) = (p.nrows(), q.nrows(), p.ncols());
    let dist = |a: &Matrix, i: usize, b: &Matrix, j: usize| {
        let mut s = 0.0;
        for d in 0..n {
            let t = a.get(i, d) - b.get(j, d);
            s += t * t;
        }
        s.sqrt()
    };
    let mut cross = 0.0;
    for i in 0..k1 {
        for j in 0..k2 {
            cross += dist(p, i, q, j);
        }
    }
    let mut within_p = 0.0;
    for i in 0..k1 {
        for j in 0..k1 {
            within_p += dist(p, i, p, j);
        }
    }
    let mut within_q = 0.0;
    for i in 0..k2 {
        for j in 0..k2 {
            within_q += dist(q, i, q, j);
        }
    }
    let (a, b) = (k1 as f64, k2 as f64);
    a * b / (a + b) * (2.0 / (a * b) * cross - within_p / (a * a) - within_q / (b * b))
}

/// KS distance by scanning a dense grid: every pooled value, midpoints
/// between neighbours, and points outside the range.
pub fn brute_ks_d(x: &[f64], y: &[f64]) -> f64 {
    let mut pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let mut grid = vec![pooled[0] - 1.0, pooled[pooled.len() - 1] + 1.0];
    for w in pooled.windows(2) {
        grid.push(w[0]);
        grid.push(0.5 * (w[0] + w[1]));
    }
    grid.push(pooled[pooled.len() - 1]);
    let ecdf = |s: &[f64], t: f64| s.iter().filter(|&&v| v <= t).count() as f64 / s.len() as f64;
    grid.iter()
        .map(|&t| (ecdf(x, t) - ecdf(y, t)).abs())
        .fold(0.0, f64::max)
}

/// Erdős–Rényi G(n, p) adjacency lists.
pub fn erdos_renyi(rng: &mut impl Rng, n: usize, p: f64) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen_bool(p) {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
    }
    adj
}
