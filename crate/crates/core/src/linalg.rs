//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;

const MAX_QR_SWEEPS: usize = 500;

/// Eigenvalues of a real nonsymmetric matrix (Hessenberg reduction followed
/// by shifted QR), sorted by real part then imaginary part.
///
/// Deflation at machine epsilon can stall forever on highly degenerate
/// spectra, so the deflation threshold is relaxed step by step (up to
/// ~1e-12 relative) until the iteration converges.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex64> {
    let sweeps = MAX_QR_SWEEPS * m.nrows().max(1);
    let mut eps = f64::EPSILON;
    let schur = loop {
        if let Some(s) = m.clone().try_schur(eps, sweeps) {
            break s;
        }
        assert!(eps < 1e-12, "QR iteration did not converge");
        eps *= 8.0;
    };
    let mut ev: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    ev
}

/// Largest real part in a spectrum (−∞ when empty).
pub fn spectral_abscissa(ev: &[Complex64]) -> f64 {
    ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Central finite-difference Jacobian of `f` at `x`.
pub fn finite_difference_jacobian<F>(f: F, x: &[f64], h: f64) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let m = f(x).len();
    let mut jac = DMatrix::zeros(m, x.len());
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        xp[j] = x[j] + h;
        let fp = f(&xp);
        xp[j] = x[j] - h;
        let fm = f(&xp);
        xp[j] = x[j];
        for i in 0..m {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}
