use nalgebra::DMatrix;
use num_complex::Complex64;

const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITER: usize = 10_000;
const SQUARINGS: usize = 60;

/// Eigenvalues of a small complex matrix from its Schur form, or `None` if
/// the QR iteration does not converge.
pub fn eigenvalues(m: &DMatrix<Complex64>) -> Option<Vec<Complex64>> {
    if m.nrows() == 0 {
        return Some(Vec::new());
    }
    let schur = m.clone().try_schur(SCHUR_EPS, SCHUR_MAX_ITER)?;
    schur.eigenvalues().map(|v| v.iter().copied().collect())
}

/// Spectral radius from the Schur eigenvalues, falling back to
/// [`spectral_radius_by_squaring`] when the QR iteration fails.
pub fn spectral_radius(m: &DMatrix<Complex64>) -> f64 {
    match eigenvalues(m) {
        Some(ev) => ev.iter().map(|z| z.norm()).fold(0.0, f64::max),
        None => spectral_radius_by_squaring(m),
    }
}

fn max_entry(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Power iteration on the matrix itself: `ρ = lim ‖E^{2^k}‖^{1/2^k}`,
/// renormalizing after every squaring. Unlike vector power iteration this
/// converges when several eigenvalues share the largest modulus.
pub fn spectral_radius_by_squaring(m: &DMatrix<Complex64>) -> f64 {
    let n0 = max_entry(m);
    if n0 == 0.0 {
        return 0.0;
    }
    let mut b = m.unscale(n0);
    // E^(2^k) = exp(log_scale) · b
    let mut log_scale = n0.ln();
    let mut power = 1.0;
    for _ in 0..SQUARINGS {
        b = &b * &b;
        let nb = max_entry(&b);
        if nb == 0.0 {
            return 0.0;
        }
        b.unscale_mut(nb);
        log_scale = 2.0 * log_scale + nb.ln();
        power *= 2.0;
    }
    (log_scale / power).exp()
}
