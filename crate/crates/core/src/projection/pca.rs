use nalgebra::{DMatrix, DVector};

use super::ProjectionError;

/// Principal axes of a data matrix, strongest first.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: DVector<f64>,
    /// `c x d`, orthonormal rows.
    pub components: DMatrix<f64>,
    /// Sample variance (denominator `n - 1`) along each component.
    pub explained_variance: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    pub total_variance: f64,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn cumulative_ratio(&self, c: usize) -> f64 {
        self.explained_variance_ratio.iter().take(c).sum()
    }
}

/// Fits `c` components by SVD of the centered data. Each component is signed
/// so that its largest-magnitude entry is positive.
pub fn fit_pca(data: &DMatrix<f64>, c: usize) -> Result<PcaModel, ProjectionError> {
    let (n, d) = data.shape();
    if n < 2 {
        return Err(ProjectionError::TooFewSamples { needed: 2, got: n });
    }
    let max = (n - 1).min(d);
    if c == 0 || c > max {
        return Err(ProjectionError::TooManyComponents { requested: c, max });
    }

    let mean = data.row_mean().transpose();
    let mut centered = data.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }

    let denom = (n - 1) as f64;
    let total_ss = centered.iter().map(|v| v * v).sum::<f64>();
    let scale = data.iter().map(|v| v * v).sum::<f64>() / (n * d) as f64;
    if total_ss <= 1e-24 * scale * (n * d) as f64 || total_ss == 0.0 {
        return Err(ProjectionError::ZeroVariance);
    }
    let total_variance = total_ss / denom;

    // R from a QR of a tall matrix has the same singular values and right
    // singular vectors, and is only d x d.
    let svd = if n > d { centered.qr().r().svd(false, true) } else { centered.svd(false, true) };
    let v_t = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));

    let mut components = DMatrix::zeros(c, d);
    let mut explained_variance = Vec::with_capacity(c);
    for (out, &src) in order.iter().take(c).enumerate() {
        let mut axis = v_t.row(src).clone_owned();
        let pivot = axis
            .iter()
            .enumerate()
            .fold((0usize, 0.0f64), |best, (j, &v)| if v.abs() > best.1.abs() { (j, v) } else { best });
        if pivot.1 < 0.0 {
            axis.neg_mut();
        }
        components.set_row(out, &axis);
        let s = svd.singular_values[src];
        explained_variance.push(s * s / denom);
    }
    let explained_variance_ratio = explained_variance.iter().map(|v| v / total_variance).collect();

    Ok(PcaModel { mean, components, explained_variance, explained_variance_ratio, total_variance })
}

/// Projects rows of `data` onto the model's components.
pub fn transform_pca(model: &PcaModel, data: &DMatrix<f64>) -> Result<DMatrix<f64>, ProjectionError> {
    if data.ncols() != model.dim() {
        return Err(ProjectionError::DimensionMismatch { expected: model.dim(), actual: data.ncols() });
    }
    let mut centered = data.clone();
    for mut row in centered.row_iter_mut() {
        row -= model.mean.transpose();
    }
    Ok(centered * model.components.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_points_are_rank_one() {
        let data = DMatrix::from_row_slice(5, 2, &[0.0, 0.0, 1.0, 1.0, 2.0, 2.0, -3.0, -3.0, 7.5, 7.5]);
        let m = fit_pca(&data, 2).unwrap();
        assert!((m.explained_variance_ratio[0] - 1.0).abs() < 1e-9);
        assert!(m.explained_variance_ratio[1].abs() < 1e-9);
        let axis = m.components.row(0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((axis[0] - h).abs() < 1e-12 && (axis[1] - h).abs() < 1e-12);
    }

    #[test]
    fn mean_row_maps_to_origin() {
        let data = DMatrix::from_row_slice(4, 3, &[1.0, 2.0, 0.5, -1.0, 0.0, 2.0, 3.0, 1.0, 1.0, 0.0, 4.0, -2.0]);
        let m = fit_pca(&data, 2).unwrap();
        let mean_row = DMatrix::from_row_slice(1, 3, m.mean.as_slice());
        let z = transform_pca(&m, &mean_row).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn errors() {
        let one = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        assert!(matches!(fit_pca(&one, 1), Err(ProjectionError::TooFewSamples { .. })));
        let same = DMatrix::from_row_slice(3, 2, &[0.1, 0.7, 0.1, 0.7, 0.1, 0.7]);
        assert!(matches!(fit_pca(&same, 1), Err(ProjectionError::ZeroVariance)));
        let data = DMatrix::from_row_slice(3, 2, &[0.0, 1.0, 2.0, 0.0, 1.0, 1.0]);
        assert!(matches!(fit_pca(&data, 3), Err(ProjectionError::TooManyComponents { max: 2, .. })));
        let m = fit_pca(&data, 2).unwrap();
        let wrong = DMatrix::zeros(2, 3);
        assert!(matches!(transform_pca(&m, &wrong), Err(ProjectionError::DimensionMismatch { .. })));
    }
}
