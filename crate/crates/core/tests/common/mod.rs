//! Test-only oracles, written independently of the code paths they check.
#![allow(dead_code, clippy::needless_range_loop)]

use flatsearch::projection::{joint_probabilities, kl_divergence, kl_gradient, student_t_affinities};
use flatsearch::{Birads, EmbeddingSet, LabelTable, MetricKind};
use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_rows(rng: &mut StdRng, n: usize, d: usize) -> Vec<Vec<f32>> {
    (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0f32..1.0)).collect()).collect()
}

pub fn unit_rows(rng: &mut StdRng, n: usize, d: usize) -> Vec<Vec<f32>> {
    random_rows(rng, n, d)
        .into_iter()
        .map(|v| {
            let norm = v.iter().map(|&x| f64::from(x).powi(2)).sum::<f64>().sqrt();
            v.iter().map(|&x| (f64::from(x) / norm) as f32).collect()
        })
        .collect()
}

pub fn set_of(rows: &[Vec<f32>]) -> EmbeddingSet {
    EmbeddingSet::from_rows(rows, "test").unwrap()
}

/// Scores every row and fully sorts: ascending squared distance for L2,
/// descending dot product otherwise, ties by ascending id. L2 scores are
/// reported as the square root.
pub fn full_sort_reference<R: AsRef<[f32]>>(
    rows: &[R],
    query: &[f32],
    kind: MetricKind,
    k: usize,
) -> Vec<(usize, f64)> {
    let mut scored: Vec<(usize, f64)> = rows
        .iter()
        .enumerate()
        .map(|(id, r)| {
            let r = r.as_ref();
            let mut acc = 0.0f64;
            for i in 0..r.len() {
                let (a, b) = (f64::from(query[i]), f64::from(r[i]));
                acc += match kind {
                    MetricKind::L2 => (a - b) * (a - b),
                    MetricKind::InnerProduct => a * b,
                };
            }
            (id, acc)
        })
        .collect();
    scored.sort_by(|x, y| {
        let primary = match kind {
            MetricKind::L2 => x.1.partial_cmp(&y.1).unwrap(),
            MetricKind::InnerProduct => y.1.partial_cmp(&x.1).unwrap(),
        };
        primary.then(x.0.cmp(&y.0))
    });
    scored.truncate(k);
    if kind == MetricKind::L2 {
        for s in &mut scored {
            s.1 = s.1.sqrt();
        }
    }
    scored
}

/// `clusters` isotropic Gaussian blobs of `per` points with centers
/// `separation` apart along distinct axes; labels are 1-based cluster ids.
pub fn gaussian_clusters(
    rng: &mut StdRng,
    clusters: usize,
    per: usize,
    d: usize,
    sigma: f64,
    separation: f64,
) -> (EmbeddingSet, LabelTable) {
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for c in 0..clusters {
        for _ in 0..per {
            let row: Vec<f32> = (0..d)
                .map(|j| {
                    let center = if j == c % d { separation } else { 0.0 };
                    (center + noise.sample(rng)) as f32
                })
                .collect();
            rows.push(row);
            labels.push((format!("c{c}"), Birads::new(c as u8 + 1).unwrap()));
        }
    }
    (set_of(&rows), LabelTable::from_pairs(labels))
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let diag: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum();
        if off <= 1e-30 * diag.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
    ev
}

/// Sample covariance (denominator n - 1) of row-major data.
pub fn sample_covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let d = rows[0].len();
    let mut mean = vec![0.0; d];
    for r in rows {
        for j in 0..d {
            mean[j] += r[j];
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut cov = vec![vec![0.0; d]; d];
    for r in rows {
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    for row in &mut cov {
        for v in row {
            *v /= (n - 1) as f64;
        }
    }
    cov
}

/// Term-by-term KL over P's support, evaluated in a different order from the
/// library (row by row, then reversed accumulation).
pub fn kl_reference(p: &[Vec<f64>], q: &[Vec<f64>]) -> f64 {
    let mut terms = Vec::new();
    for i in 0..p.len() {
        for j in 0..p.len() {
            if p[i][j] > 0.0 {
                terms.push(p[i][j] * (p[i][j].ln() - q[i][j].ln()));
            }
        }
    }
    terms.iter().rev().sum()
}

/// Worst relative error between the analytic KL gradient and central
/// differences of the KL objective on a random 10-point instance.
pub fn gradient_fd_error(seed: u64, step: f64) -> f64 {
    let mut rng = rng(seed);
    let data = DMatrix::from_fn(10, 4, |_, _| rng.random_range(-1.0..1.0));
    let p = joint_probabilities(&data, 2.5).unwrap();
    let y: Vec<[f64; 2]> = (0..10).map(|_| [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
    let analytic = kl_gradient(&p, &y);
    let kl = |pts: &[[f64; 2]]| kl_divergence(&p, &student_t_affinities(pts)).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        for c in 0..2 {
            let mut plus = y.clone();
            plus[i][c] += step;
            let mut minus = y.clone();
            minus[i][c] -= step;
            let fd = (kl(&plus) - kl(&minus)) / (2.0 * step);
            worst = worst.max((analytic[i][c] - fd).abs() / fd.abs().max(1e-3));
        }
    }
    worst
}
