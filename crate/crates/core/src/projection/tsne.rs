//! Exact (all-pairs) t-SNE.
//!
//! Input affinities are Gaussian conditionals calibrated per point to a
//! target perplexity and symmetrized into a joint distribution `P`. Output
//! affinities `Q` use a Student-t kernel with one degree of freedom. The map
//! is optimized by gradient descent with momentum and per-coordinate adaptive
//! gains, exaggerating `P` during the first iterations.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::pca::{fit_pca, transform_pca};
use super::{Projection2D, ProjectionError};

/// Lower bound applied to `Q` inside logarithms and divisions.
pub const FLOOR: f64 = 1e-12;

const CALIBRATION_TOL: f64 = 1e-5;
const CALIBRATION_STEPS: usize = 50;
const INIT_STD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TsneInit {
    /// First two principal components, rescaled so the first has standard
    /// deviation `1e-4`.
    Pca,
    /// Isotropic Gaussian with standard deviation `1e-4`, drawn from `seed`.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub n_iter: usize,
    pub early_exaggeration: f64,
    pub exaggeration_end_iter: usize,
    pub learning_rate: f64,
    pub momentum_initial: f64,
    pub momentum_final: f64,
    pub momentum_switch_iter: usize,
    pub min_gain: f64,
    /// Reduce inputs wider than this with PCA before computing affinities.
    pub pca_dims: Option<usize>,
    pub init: TsneInit,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            n_iter: 1000,
            early_exaggeration: 12.0,
            exaggeration_end_iter: 250,
            learning_rate: 200.0,
            momentum_initial: 0.5,
            momentum_final: 0.8,
            momentum_switch_iter: 250,
            min_gain: 0.01,
            pca_dims: Some(50),
            init: TsneInit::Pca,
            seed: 0,
        }
    }
}

/// Result of fitting one point's Gaussian bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    /// Precision `1 / (2 sigma^2)` of the Gaussian kernel.
    pub beta: f64,
    /// Conditional probabilities, aligned with the input distances.
    pub probabilities: Vec<f64>,
    /// `exp(H)` of the returned distribution.
    pub perplexity: f64,
}

fn conditional(distances: &[f64], min: f64, beta: f64, out: &mut [f64]) -> f64 {
    let mut sum = 0.0;
    for (p, &d) in out.iter_mut().zip(distances) {
        *p = (-(d - min) * beta).exp();
        sum += *p;
    }
    let mut weighted = 0.0;
    for (p, &d) in out.iter_mut().zip(distances) {
        *p /= sum;
        weighted += *p * (d - min);
    }
    // Shannon entropy in nats of the normalized distribution.
    sum.ln() + beta * weighted
}

/// Bisects the kernel precision until the conditional distribution over
/// `distances` (squared, to the other points) has the target perplexity.
pub fn perplexity_calibration(distances: &[f64], target: f64) -> Result<Calibration, ProjectionError> {
    if !distances.iter().any(|&d| d > 0.0) {
        return Err(ProjectionError::DegenerateDistances);
    }
    let min = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let target_entropy = target.ln();
    let mut probabilities = vec![0.0; distances.len()];

    let mut beta = 1.0;
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let mut best: Option<(f64, f64)> = None;
    for _ in 0..CALIBRATION_STEPS {
        let h = conditional(distances, min, beta, &mut probabilities);
        let perp = h.exp();
        let err = (perp - target).abs();
        if best.is_none_or(|(_, e)| err < e) {
            best = Some((beta, err));
        }
        if err <= CALIBRATION_TOL * target {
            break;
        }
        if h > target_entropy {
            lo = beta;
            beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = (beta + lo) / 2.0;
        }
    }
    let beta = best.map_or(beta, |(b, _)| b);
    let h = conditional(distances, min, beta, &mut probabilities);
    Ok(Calibration { beta, probabilities, perplexity: h.exp() })
}

fn squared_distances(x: &DMatrix<f64>) -> Vec<f64> {
    let n = x.nrows();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let mut acc = 0.0;
            for c in 0..x.ncols() {
                let d = x[(i, c)] - x[(j, c)];
                acc += d * d;
            }
            out[i * n + j] = acc;
            out[j * n + i] = acc;
        }
    }
    out
}

/// Symmetrized input affinities `(p_j|i + p_i|j) / 2n` for the rows of `x`.
pub fn joint_probabilities(x: &DMatrix<f64>, perplexity: f64) -> Result<DMatrix<f64>, ProjectionError> {
    let n = x.nrows();
    let d2 = squared_distances(x);
    let mut cond = DMatrix::zeros(n, n);
    let mut others = Vec::with_capacity(n.saturating_sub(1));
    for i in 0..n {
        others.clear();
        others.extend((0..n).filter(|&j| j != i).map(|j| d2[i * n + j]));
        let cal = perplexity_calibration(&others, perplexity)?;
        for (slot, j) in (0..n).filter(|&j| j != i).enumerate() {
            cond[(i, j)] = cal.probabilities[slot];
        }
    }
    let scale = 2.0 * n as f64;
    Ok(DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { (cond[(i, j)] + cond[(j, i)]) / scale }))
}

/// Unnormalized Student-t kernel `1 / (1 + |yi - yj|^2)` (zero diagonal) and
/// its off-diagonal sum.
fn kernel(y: &[[f64; 2]]) -> (Vec<f64>, f64) {
    let n = y.len();
    let mut num = vec![0.0; n * n];
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = y[i][0] - y[j][0];
            let dy = y[i][1] - y[j][1];
            let v = 1.0 / (1.0 + dx * dx + dy * dy);
            num[i * n + j] = v;
            num[j * n + i] = v;
            sum += 2.0 * v;
        }
    }
    (num, sum)
}

/// Normalized output affinities `Q` for map points `y`.
pub fn student_t_affinities(y: &[[f64; 2]]) -> DMatrix<f64> {
    let n = y.len();
    let (num, sum) = kernel(y);
    DMatrix::from_fn(n, n, |i, j| num[i * n + j] / sum)
}

/// `KL(P || Q)` over the support of `P`.
pub fn kl_divergence(p: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<f64, ProjectionError> {
    if p.shape() != q.shape() || p.nrows() != p.ncols() {
        return Err(ProjectionError::ShapeMismatch(format!("P is {:?}, Q is {:?}", p.shape(), q.shape())));
    }
    for m in [p, q] {
        if let Some(idx) = m.iter().position(|&v| v < 0.0) {
            let (row, col) = (idx % m.nrows(), idx / m.nrows());
            return Err(ProjectionError::NegativeEntry { row, col, value: m[(row, col)] });
        }
    }
    Ok(kl_floored(p.as_slice(), q.as_slice()).0)
}

fn kl_floored(p: &[f64], q: &[f64]) -> (f64, u64) {
    let mut kl = 0.0;
    let mut floors = 0;
    for (&pij, &qij) in p.iter().zip(q) {
        if pij > 0.0 {
            let q = if qij < FLOOR {
                floors += 1;
                FLOOR
            } else {
                qij
            };
            kl += pij * (pij / q).ln();
        }
    }
    (kl.max(0.0), floors)
}

/// Gradient of `KL(P || Q(y))` with respect to each map point.
pub fn kl_gradient(p: &DMatrix<f64>, y: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let (num, sum) = kernel(y);
    gradient(p, 1.0, &num, sum, y)
}

fn gradient(p: &DMatrix<f64>, exaggeration: f64, num: &[f64], sum: f64, y: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let n = y.len();
    let mut grad = vec![[0.0; 2]; n];
    for i in 0..n {
        let mut g = [0.0; 2];
        for j in 0..n {
            if i == j {
                continue;
            }
            let w = num[i * n + j];
            let mult = (exaggeration * p[(i, j)] - w / sum) * w;
            g[0] += mult * (y[i][0] - y[j][0]);
            g[1] += mult * (y[i][1] - y[j][1]);
        }
        grad[i] = [4.0 * g[0], 4.0 * g[1]];
    }
    grad
}

fn initial_map(x: &DMatrix<f64>, config: &TsneConfig) -> Result<Vec<[f64; 2]>, ProjectionError> {
    let n = x.nrows();
    if config.init == TsneInit::Pca && x.ncols() >= 2 {
        let model = fit_pca(x, 2)?;
        let z = transform_pca(&model, x)?;
        let col = z.column(0);
        let mean = col.mean();
        let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        if std > 0.0 {
            let s = INIT_STD / std;
            return Ok((0..n).map(|i| [z[(i, 0)] * s, z[(i, 1)] * s]).collect());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::new(0.0, INIT_STD).expect("valid std");
    Ok((0..n).map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)]).collect())
}

/// Embeds the rows of `data` in two dimensions.
pub fn tsne(data: &DMatrix<f64>, config: &TsneConfig) -> Result<Projection2D, ProjectionError> {
    let n = data.nrows();
    if n < 4 {
        return Err(ProjectionError::TooFewSamples { needed: 4, got: n });
    }
    let perplexity = config.perplexity;
    if !(perplexity > 1.0 && perplexity < (n - 1) as f64 / 3.0) {
        return Err(ProjectionError::InfeasiblePerplexity { perplexity, n });
    }

    let reduced;
    let x = match config.pca_dims {
        Some(m) if data.ncols() > m => {
            let model = fit_pca(data, m.min(n - 1))?;
            reduced = transform_pca(&model, data)?;
            &reduced
        }
        _ => data,
    };

    let p = joint_probabilities(x, perplexity)?;
    let mut y = initial_map(x, config)?;
    let mut update = vec![[0.0f64; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut kl_trace = Vec::with_capacity(config.n_iter);
    let mut floor_events = 0u64;
    let mut q = vec![0.0; n * n];

    for iter in 0..config.n_iter {
        let exaggeration = if iter < config.exaggeration_end_iter { config.early_exaggeration } else { 1.0 };
        let momentum = if iter < config.momentum_switch_iter { config.momentum_initial } else { config.momentum_final };

        let (num, sum) = kernel(&y);
        for (qv, &w) in q.iter_mut().zip(&num) {
            *qv = w / sum;
        }
        // P is exactly symmetric, so its column-major slice lines up with
        // the row-major kernel buffer.
        let (kl, floors) = kl_floored(p.as_slice(), &q);
        floor_events += floors;
        if !kl.is_finite() {
            return Err(ProjectionError::NonFinite { iteration: iter });
        }
        kl_trace.push(kl);

        let grad = gradient(&p, exaggeration, &num, sum, &y);
        for i in 0..n {
            for c in 0..2 {
                let g = grad[i][c];
                if !g.is_finite() {
                    return Err(ProjectionError::NonFinite { iteration: iter });
                }
                let gain = &mut gains[i][c];
                *gain = if (g > 0.0) != (update[i][c] > 0.0) { *gain + 0.2 } else { *gain * 0.8 };
                *gain = gain.max(config.min_gain);
                update[i][c] = momentum * update[i][c] - config.learning_rate * *gain * g;
                y[i][c] += update[i][c];
            }
        }
        let mut centroid = [0.0; 2];
        for pt in &y {
            centroid[0] += pt[0];
            centroid[1] += pt[1];
        }
        centroid[0] /= n as f64;
        centroid[1] /= n as f64;
        for pt in &mut y {
            pt[0] -= centroid[0];
            pt[1] -= centroid[1];
            if !(pt[0].is_finite() && pt[1].is_finite()) {
                return Err(ProjectionError::NonFinite { iteration: iter });
            }
        }
    }

    Ok(Projection2D { coords: y, labels: None, kl_trace, floor_events })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equidistant_neighbors_give_uniform_conditional() {
        let d = vec![4.0; 9];
        let cal = perplexity_calibration(&d, 9.0).unwrap();
        for p in &cal.probabilities {
            assert!((p - 1.0 / 9.0).abs() < 1e-6);
        }
    }

    #[test]
    fn near_neighbor_dominates_at_low_perplexity() {
        let cal = perplexity_calibration(&[1.0, 100.0], 1.0 + 1e-9).unwrap();
        assert!(cal.probabilities[0] >= 0.99);
    }

    #[test]
    fn calibration_reaches_target() {
        let d: Vec<f64> = (1..40).map(|i| (i as f64).powf(1.3)).collect();
        for target in [2.0, 5.0, 12.5, 30.0] {
            let cal = perplexity_calibration(&d, target).unwrap();
            assert!((cal.perplexity - target).abs() <= 1e-5 * target, "{target}: {}", cal.perplexity);
            let sum: f64 = cal.probabilities.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn all_zero_distances_rejected() {
        assert!(matches!(perplexity_calibration(&[0.0, 0.0], 1.5), Err(ProjectionError::DegenerateDistances)));
    }

    #[test]
    fn kl_identities() {
        let n = 4;
        let uniform = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 / 12.0 });
        assert_eq!(kl_divergence(&uniform, &uniform).unwrap(), 0.0);
        let y = [[0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [3.0, 1.0]];
        let q = student_t_affinities(&y);
        assert_eq!(kl_divergence(&q, &q).unwrap(), 0.0);
        assert!(kl_divergence(&uniform, &q).unwrap() > 0.0);
    }

    #[test]
    fn kl_rejects_bad_input() {
        let a = DMatrix::<f64>::zeros(3, 3);
        let b = DMatrix::<f64>::zeros(2, 2);
        assert!(matches!(kl_divergence(&a, &b), Err(ProjectionError::ShapeMismatch(_))));
        let mut neg = DMatrix::<f64>::zeros(3, 3);
        neg[(1, 2)] = -0.1;
        assert!(matches!(kl_divergence(&neg, &a), Err(ProjectionError::NegativeEntry { row: 1, col: 2, .. })));
    }

    #[test]
    fn perplexity_bounds_enforced() {
        let data = DMatrix::from_fn(10, 3, |i, j| (i * 3 + j) as f64);
        let cfg = TsneConfig { perplexity: 3.0, ..Default::default() };
        assert!(matches!(tsne(&data, &cfg), Err(ProjectionError::InfeasiblePerplexity { .. })));
        let cfg = TsneConfig { perplexity: 1.0, ..Default::default() };
        assert!(tsne(&data, &cfg).is_err());
        let tiny = DMatrix::from_fn(3, 2, |i, j| (i + j) as f64);
        assert!(matches!(tsne(&tiny, &TsneConfig::default()), Err(ProjectionError::TooFewSamples { .. })));
    }
}
