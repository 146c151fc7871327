use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::autodiff::Tensor;
use crate::error::{dim_err, Result};

fn as_matrix(t: &Tensor) -> Result<DMatrix<f64>> {
    if t.shape().len() != 2 {
        return dim_err(format!("feature cloud must be [n, d], got {:?}", t.shape()));
    }
    Ok(DMatrix::from_row_slice(t.shape()[0], t.shape()[1], t.data()))
}

/// Mean and unbiased covariance of the rows of `x: [n × d]`, `n ≥ 2`.
pub fn moments(x: &Tensor) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let m = as_matrix(x)?;
    let n = m.nrows();
    if n < 2 {
        return dim_err(format!("covariance needs at least 2 samples, got {n}"));
    }
    let mean = m.row_mean().transpose();
    let mut centered = m;
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    Ok((mean, cov))
}

/// Principal square root of a symmetric PSD matrix, negative eigenvalues
/// clamped to zero.
fn sqrt_psd(a: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// `‖μ₁−μ₂‖² + Tr(Σ₁ + Σ₂ − 2(Σ₁Σ₂)^{1/2})`, with the trace of the root taken
/// from the spectrum of `Σ₁^{1/2} Σ₂ Σ₁^{1/2}`.
pub fn fid_from_moments(mu1: &DVector<f64>, s1: &DMatrix<f64>, mu2: &DVector<f64>, s2: &DMatrix<f64>) -> Result<f64> {
    let d = mu1.len();
    if mu2.len() != d || s1.shape() != (d, d) || s2.shape() != (d, d) {
        return dim_err(format!("moment dimensions disagree: {d} vs {}", mu2.len()));
    }
    let r1 = sqrt_psd(s1);
    let a = &r1 * s2 * &r1;
    let a = (&a + a.transpose()) * 0.5;
    let tr_root: f64 = SymmetricEigen::new(a).eigenvalues.iter().map(|v| v.max(0.0).sqrt()).sum();
    let diff = mu1 - mu2;
    let value = diff.dot(&diff) + s1.trace() + s2.trace() - 2.0 * tr_root;
    Ok(value.max(0.0))
}

/// Fréchet distance between Gaussian fits of two feature clouds.
pub fn fid(real: &Tensor, fake: &Tensor) -> Result<f64> {
    if real.shape().len() != 2 || fake.shape().len() != 2 || real.shape()[1] != fake.shape()[1] {
        return dim_err(format!("feature clouds {:?} and {:?} differ in dimension", real.shape(), fake.shape()));
    }
    let (m1, s1) = moments(real)?;
    let (m2, s2) = moments(fake)?;
    fid_from_moments(&m1, &s1, &m2, &s2)
}
