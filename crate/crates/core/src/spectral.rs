//! Periodic pseudo-spectral operators: differentiation, stream-function
//! inversion, 2/3-rule dealiasing, and implicit diffusion.
//!
//! Transforms are normalized so node values round-trip exactly; wavenumbers
//! are `2*pi*k` with `k = -n/2+1 .. n/2` in FFT bin order. Odd-order
//! derivatives zero the Nyquist bin (its sine companion is invisible on the
//! grid), even-order ones keep it.

use num_complex::Complex64;

use crate::error::ModelError;
use crate::grid::ScalarField;

use std::f64::consts::PI;

/// Spectral first derivative. Exact for trigonometric polynomials below the
/// Nyquist mode; the result is mean-free.
pub fn derivative(f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    let n = grid.len();
    let mut spec = grid.fft(f.values());
    for (i, c) in spec.iter_mut().enumerate() {
        let k = grid.wavenumber(i);
        if k.unsigned_abs() as usize == n / 2 {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c *= Complex64::new(0.0, 2.0 * PI * k as f64);
        }
    }
    ScalarField::from_values(grid, grid.ifft(spec))
}

/// Spectral second derivative: mode-wise multiplication by `-(2*pi*k)^2`.
pub fn second_derivative(f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    let mut spec = grid.fft(f.values());
    for (i, c) in spec.iter_mut().enumerate() {
        let k = grid.wavenumber(i) as f64;
        *c *= -(2.0 * PI * k) * (2.0 * PI * k);
    }
    ScalarField::from_values(grid, grid.ifft(spec))
}

/// Relative tolerance on `|mean(v)|` below which a field counts as mean-free
/// for stream inversion.
pub const MEAN_FREE_TOL: f64 = 1e-12;

/// Recover the stream function `psi` with `d psi/dz = -v` and `mean(psi) = 0`.
///
/// A periodic antiderivative exists only for mean-free `v`; returns
/// [`ModelError::NonZeroMean`] when `|mean(v)| > 1e-12 * ||v||_inf`.
pub fn invert_stream(v: &ScalarField) -> Result<ScalarField, ModelError> {
    let mean = v.mean();
    let tol = MEAN_FREE_TOL * v.max_abs();
    if mean.abs() > tol {
        return Err(ModelError::NonZeroMean { mean, tol });
    }
    let grid = v.grid();
    let n = grid.len();
    let mut spec = grid.fft(v.values());
    for (i, c) in spec.iter_mut().enumerate() {
        let k = grid.wavenumber(i);
        if k == 0 || k.unsigned_abs() as usize == n / 2 {
            *c = Complex64::new(0.0, 0.0);
        } else {
            // psi_hat = -v_hat / (i 2 pi k)
            *c = -*c / Complex64::new(0.0, 2.0 * PI * k as f64);
        }
    }
    Ok(ScalarField::from_values(grid, grid.ifft(spec)))
}

/// 2/3-rule truncation: zero all modes with `|k| > n/3`. Idempotent.
pub fn dealias(f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    let cutoff = grid.len() as f64 / 3.0;
    let mut spec = grid.fft(f.values());
    for (i, c) in spec.iter_mut().enumerate() {
        if (grid.wavenumber(i).abs() as f64) > cutoff {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    ScalarField::from_values(grid, grid.ifft(spec))
}

/// Backward-Euler diffusion solve: returns `g` with `g - nu_dt * g_zz = f`,
/// i.e. mode-wise division by `1 + nu_dt (2 pi k)^2`. Preserves the mean and
/// contracts the L2 norm.
pub fn diffuse_implicit(f: &ScalarField, nu_dt: f64) -> ScalarField {
    assert!(nu_dt >= 0.0, "nu*dt must be nonnegative");
    if nu_dt == 0.0 {
        return f.clone();
    }
    let grid = f.grid();
    let mut spec = grid.fft(f.values());
    for (i, c) in spec.iter_mut().enumerate() {
        let k = grid.wavenumber(i) as f64;
        *c /= 1.0 + nu_dt * (2.0 * PI * k) * (2.0 * PI * k);
    }
    ScalarField::from_values(grid, grid.ifft(spec))
}

/// Spectral l2 norm computed from the transform, for Parseval checks.
pub fn spectral_l2_norm(f: &ScalarField) -> f64 {
    let grid = f.grid();
    let n = grid.len() as f64;
    let spec = grid.fft(f.values());
    (spec.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt() / n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;
    use std::sync::Arc;

    const TAU: f64 = 2.0 * PI;

    fn max_diff(a: &ScalarField, b: &ScalarField) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
    }

    /// Random real field band-limited to |k| <= kmax, from a seeded generator.
    fn random_band_limited(
        grid: &Arc<PeriodicGrid>,
        kmax: usize,
        rng: &mut impl rand::Rng,
        mean_free: bool,
    ) -> ScalarField {
        let mut coeffs = Vec::new();
        for k in 1..=kmax {
            let a: f64 = rng.gen_range(-1.0..1.0);
            let b: f64 = rng.gen_range(-1.0..1.0);
            coeffs.push((k as f64, a, b));
        }
        let c0: f64 = if mean_free { 0.0 } else { rng.gen_range(-1.0..1.0) };
        ScalarField::from_fn(grid, |z| {
            c0 + coeffs
                .iter()
                .map(|(k, a, b)| a * (TAU * k * z).sin() + b * (TAU * k * z).cos())
                .sum::<f64>()
        })
    }

    #[test]
    fn derivative_of_sine() {
        let g = PeriodicGrid::new(64).unwrap();
        let f = ScalarField::from_fn(&g, |z| (TAU * z).sin());
        let expect = ScalarField::from_fn(&g, |z| TAU * (TAU * z).cos());
        assert!(max_diff(&derivative(&f), &expect) < 1e-12);
    }

    #[test]
    fn derivative_annihilates_constants() {
        let g = PeriodicGrid::new(32).unwrap();
        let f = ScalarField::constant(&g, 3.5);
        assert!(derivative(&f).max_abs() < 1e-13);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        // Finite-difference oracle: centered differences at h = 1e-5 on
        // f = exp(sin(2 pi z)), compared in relative terms.
        let g = PeriodicGrid::new(256).unwrap();
        let f = ScalarField::from_fn(&g, |z| (TAU * z).sin().exp());
        let d = derivative(&f);
        let h = 1e-5;
        let fd = ScalarField::from_fn(&g, |z| {
            let fp = (TAU * (z + h)).sin().exp();
            let fm = (TAU * (z - h)).sin().exp();
            (fp - fm) / (2.0 * h)
        });
        let scale = fd.max_abs();
        assert!(max_diff(&d, &fd) / scale < 1e-8);
    }

    #[test]
    fn derivative_result_is_mean_free() {
        let g = PeriodicGrid::new(128).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(7);
        let f = random_band_limited(&g, 20, &mut rng, false);
        assert!(derivative(&f).mean().abs() < 1e-13);
    }

    #[test]
    fn second_derivative_of_sine() {
        let g = PeriodicGrid::new(64).unwrap();
        let f = ScalarField::from_fn(&g, |z| (TAU * z).sin());
        let expect = ScalarField::from_fn(&g, |z| -TAU * TAU * (TAU * z).sin());
        assert!(max_diff(&second_derivative(&f), &expect) < 1e-10);
        let c = ScalarField::constant(&g, 2.0);
        assert!(second_derivative(&c).max_abs() < 1e-12);
    }

    #[test]
    fn second_derivative_agrees_with_composition() {
        // Operator-composition oracle on random band-limited fields.
        let g = PeriodicGrid::new(128).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(11);
        for _ in 0..5 {
            let f = random_band_limited(&g, 30, &mut rng, false);
            let twice = derivative(&derivative(&f));
            let second = second_derivative(&f);
            let scale = second.max_abs().max(1.0);
            assert!(max_diff(&twice, &second) / scale < 1e-10);
        }
    }

    #[test]
    fn invert_stream_of_sine() {
        let g = PeriodicGrid::new(64).unwrap();
        let v = ScalarField::from_fn(&g, |z| (TAU * z).sin());
        let psi = invert_stream(&v).unwrap();
        let expect = ScalarField::from_fn(&g, |z| (TAU * z).cos() / TAU);
        assert!(max_diff(&psi, &expect) < 1e-12);

        let zero = ScalarField::zeros(&g);
        assert!(invert_stream(&zero).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn invert_stream_rejects_nonzero_mean() {
        let g = PeriodicGrid::new(32).unwrap();
        let v = ScalarField::constant(&g, 0.3);
        assert!(matches!(
            invert_stream(&v),
            Err(ModelError::NonZeroMean { .. })
        ));
    }

    #[test]
    fn invert_stream_round_trip() {
        // derivative(invert_stream(v)) = -v for mean-free band-limited v.
        let g = PeriodicGrid::new(256).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
        for _ in 0..5 {
            let v = random_band_limited(&g, 60, &mut rng, true);
            let psi = invert_stream(&v).unwrap();
            assert!(psi.mean().abs() < 1e-12);
            let dv = derivative(&psi).map(|x| -x);
            let scale = v.max_abs().max(1.0);
            assert!(max_diff(&dv, &v) / scale < 1e-10);
        }
    }

    #[test]
    fn dealias_keeps_low_modes_and_kills_nyquist() {
        let g = PeriodicGrid::new(64).unwrap();
        // max mode 21 = floor(64/3) stays
        let f = ScalarField::from_fn(&g, |z| (TAU * 21.0 * z).sin() + (TAU * z).cos());
        assert!(max_diff(&dealias(&f), &f) < 1e-13);
        // pure Nyquist mode k = n/2 is removed
        let nyq = ScalarField::from_fn(&g, |z| (TAU * 32.0 * z).cos());
        assert!(dealias(&nyq).max_abs() < 1e-13);
    }

    #[test]
    fn dealias_is_idempotent() {
        let g = PeriodicGrid::new(128).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
        let f = random_band_limited(&g, 63, &mut rng, false);
        let once = dealias(&f);
        let twice = dealias(&once);
        assert!(max_diff(&once, &twice) < 1e-13);
    }

    #[test]
    fn diffuse_identity_at_zero() {
        let g = PeriodicGrid::new(64).unwrap();
        let f = ScalarField::from_fn(&g, |z| (TAU * z).sin() + 0.5);
        let out = diffuse_implicit(&f, 0.0);
        assert_eq!(f.values(), out.values());
    }

    #[test]
    fn diffuse_single_mode_closed_form() {
        let g = PeriodicGrid::new(64).unwrap();
        let f = ScalarField::from_fn(&g, |z| (TAU * z).sin());
        let out = diffuse_implicit(&f, 1.0);
        let expect = f.map(|x| x / (1.0 + 4.0 * PI * PI));
        assert!(max_diff(&out, &expect) < 1e-12);
    }

    #[test]
    fn diffuse_residual_and_contraction() {
        // Residual oracle: g - nu_dt g_zz = f to rounding; L2 contraction.
        let g = PeriodicGrid::new(128).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(17);
        let f = random_band_limited(&g, 40, &mut rng, false);
        let nu_dt = 0.37;
        let out = diffuse_implicit(&f, nu_dt);
        let resid = out
            .zip_with(&second_derivative(&out), |g_, gzz| g_ - nu_dt * gzz)
            .zip_with(&f, |lhs, rhs| lhs - rhs);
        assert!(resid.max_abs() < 1e-10 * f.max_abs());
        assert!(out.l2_norm() <= f.l2_norm());
        assert!((out.mean() - f.mean()).abs() < 1e-13);
        // strict contraction on a non-constant field
        assert!(out.l2_norm() < f.l2_norm());
    }

    #[test]
    fn parseval_holds() {
        let g = PeriodicGrid::new(256).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(23);
        let f = random_band_limited(&g, 100, &mut rng, false);
        let node_norm = f.l2_norm();
        let spec_norm = spectral_l2_norm(&f);
        assert!((node_norm - spec_norm).abs() <= 1e-12 * node_norm);
    }
}
