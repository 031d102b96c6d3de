//! Scalar kernels. Inputs are single precision; every sum is accumulated in
//! `f64` in index order so results do not depend on the platform.

use super::IndexError;

/// Vectors with a norm below this cannot be normalized.
pub const MIN_NORM: f64 = 1e-12;

fn check_dims(a: &[f32], b: &[f32]) -> Result<(), IndexError> {
    if a.len() != b.len() {
        return Err(IndexError::DimensionMismatch { expected: a.len(), actual: b.len() });
    }
    Ok(())
}

#[inline]
pub(crate) fn squared_l2_unchecked(a: &[f32], b: &[f32]) -> f64 {
    let mut acc = 0.0f64;
    for (&x, &y) in a.iter().zip(b) {
        let d = f64::from(x) - f64::from(y);
        acc += d * d;
    }
    acc
}

#[inline]
pub(crate) fn dot_unchecked(a: &[f32], b: &[f32]) -> f64 {
    let mut acc = 0.0f64;
    for (&x, &y) in a.iter().zip(b) {
        acc += f64::from(x) * f64::from(y);
    }
    acc
}

pub fn squared_l2_distance(a: &[f32], b: &[f32]) -> Result<f64, IndexError> {
    check_dims(a, b)?;
    Ok(squared_l2_unchecked(a, b))
}

/// Euclidean distance.
pub fn l2_distance(a: &[f32], b: &[f32]) -> Result<f64, IndexError> {
    squared_l2_distance(a, b).map(f64::sqrt)
}

pub fn inner_product(a: &[f32], b: &[f32]) -> Result<f64, IndexError> {
    check_dims(a, b)?;
    Ok(dot_unchecked(a, b))
}

pub fn norm(v: &[f32]) -> f64 {
    dot_unchecked(v, v).sqrt()
}

/// Scales `v` to unit Euclidean norm.
pub fn normalize(v: &[f32]) -> Result<Vec<f32>, IndexError> {
    let n = norm(v);
    if n.is_nan() || n < MIN_NORM {
        return Err(IndexError::DegenerateVector { row: None });
    }
    Ok(v.iter().map(|&x| (f64::from(x) / n) as f32).collect())
}
