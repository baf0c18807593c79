//! Internal complex linear-algebra helpers.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

pub(crate) type C64 = Complex<f64>;
pub(crate) type CMat = DMatrix<C64>;

/// Eigenvalues below this (after whitening) are clipped before the log.
const EIG_CLIP: f64 = -1e-12;

/// Relative eigenvalue tolerance for the positive-semidefinite check.
const PSD_TOL: f64 = 1e-9;

pub(crate) fn hermitian_part(m: &CMat) -> CMat {
    let mut h = m.adjoint();
    h += m;
    h *= C64::new(0.5, 0.0);
    h
}

/// Ascending eigenvalues of the Hermitian part of `m`.
pub(crate) fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let eig = hermitian_part(m).symmetric_eigenvalues();
    let mut vals: Vec<f64> = eig.iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

/// Validates that `m` is Hermitian PSD within tolerance and returns its
/// ascending eigenvalues with round-off negatives clamped to zero.
///
/// The check accepts eigenvalues down to `-1e-9 * trace`; anything below
/// is a genuine negative direction and rejected.
pub(crate) fn psd_eigenvalues(m: &CMat, what: &str) -> Result<Vec<f64>> {
    let fro = m.norm();
    let skew = (m - m.adjoint()).norm();
    if skew > 1e-9 * fro.max(1.0) {
        return Err(Error::Domain(format!("{what} is not Hermitian")));
    }
    let trace: f64 = m.diagonal().iter().map(|z| z.re).sum();
    let tol = PSD_TOL * trace.max(0.0);
    let mut vals = hermitian_eigenvalues(m);
    if let Some(&min) = vals.first() {
        if min < -tol {
            return Err(Error::Domain(format!(
                "{what} is not positive semidefinite (eigenvalue {min:.3e}, trace {trace:.3e})"
            )));
        }
    }
    for v in &mut vals {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(vals)
}

/// `log2 |I + A|` for Hermitian PSD `A`, via eigendecomposition of the
/// symmetrized matrix with eigenvalues clipped at `-1e-12`.
pub(crate) fn log2_det_eye_plus(a: &CMat) -> f64 {
    hermitian_eigenvalues(a)
        .into_iter()
        .map(|l| l.max(EIG_CLIP).ln_1p())
        .sum::<f64>()
        / std::f64::consts::LN_2
}

/// `log2(1 + x)` in exact cancellation-free form.
pub(crate) fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

#[cfg(test)]
pub(crate) fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Builds a matrix from a row-major `[re, im]` pair list.
pub(crate) fn from_row_major_pairs(n: usize, pairs: &[[f64; 2]]) -> CMat {
    CMat::from_fn(n, n, |i, j| {
        let [re, im] = pairs[i * n + j];
        C64::new(re, im)
    })
}

/// Row-major `[re, im]` pair list of a square matrix.
pub(crate) fn to_row_major_pairs(m: &CMat) -> Vec<[f64; 2]> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            out.push([z.re, z.im]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn logdet_diagonal() {
        let a = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(3.0, 0.0), c(1.0, 0.0)]));
        // |I + diag(3,1)| = 4 * 2
        assert!((log2_det_eye_plus(&a) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn psd_check_rejects_negative() {
        let a = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(-0.5, 0.0)]));
        assert!(psd_eigenvalues(&a, "q").is_err());
    }

    #[test]
    fn psd_check_accepts_roundoff() {
        let a = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(1.0, 0.0),
            c(-1e-12, 0.0),
        ]));
        let vals = psd_eigenvalues(&a, "q").unwrap();
        assert_eq!(vals.len(), 2);
        assert!(vals[0] >= 0.0);
    }

    #[test]
    fn row_major_round_trip() {
        let m = CMat::from_fn(3, 3, |i, j| c(i as f64, j as f64));
        let pairs = to_row_major_pairs(&m);
        let back = from_row_major_pairs(3, &pairs);
        assert_eq!(m, back);
    }
}
