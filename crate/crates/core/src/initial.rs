//! Initial-data factory: the stiff reaction-diffusion profile, the Gaussian
//! trough used for the convection runs, and the scaled odd family
//! `psi = (A/M^2) Psi(zM)`, `u = (A/M) U(zM)`, `omega = A W(zM)` with
//! `W = -Psi''`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::ModelError;
use crate::grid::{PeriodicGrid, ScalarField};
use crate::model1d::{EulerState, RdState};
use crate::spectral;

const TAU: f64 = 2.0 * PI;

/// Which initial profile to build.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialData {
    /// `u0 = eps (2 + sin 2 pi z)`, `v0 = -1/eps - sin 2 pi z`.
    ReactionDiffusion { epsilon: f64 },
    /// `u0 = 1`, `v0 = 1 - (1/delta) exp(-(z-1/2)^2/eps)` with
    /// `delta = sqrt(eps pi)`, so the trough integrates to about 1.
    Gaussian { epsilon: f64 },
    /// Scaled odd family with amplitude `a` and integer frequency `m`;
    /// profiles default to `sin(2 pi y)`.
    ScaledFamily { amplitude: f64, frequency: u32 },
}

fn check_epsilon(epsilon: f64) -> Result<(), ModelError> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(ModelError::BadParams(format!(
            "epsilon must be finite and positive, got {epsilon}"
        )));
    }
    Ok(())
}

/// The raw `(u0, v0)` node values for a profile, before any model-specific
/// projection.
pub fn initial_fields(
    data: InitialData,
    grid: &Arc<PeriodicGrid>,
) -> Result<(ScalarField, ScalarField), ModelError> {
    match data {
        InitialData::ReactionDiffusion { epsilon } => {
            check_epsilon(epsilon)?;
            let u = ScalarField::from_fn(grid, |z| epsilon * (2.0 + (TAU * z).sin()));
            let v = ScalarField::from_fn(grid, |z| -1.0 / epsilon - (TAU * z).sin());
            Ok((u, v))
        }
        InitialData::Gaussian { epsilon } => {
            check_epsilon(epsilon)?;
            let delta = (epsilon * PI).sqrt();
            let u = ScalarField::constant(grid, 1.0);
            let v = ScalarField::from_fn(grid, |z| {
                let d = z - 0.5;
                1.0 - (-d * d / epsilon).exp() / delta
            });
            Ok((u, v))
        }
        InitialData::ScaledFamily {
            amplitude,
            frequency,
        } => {
            let fields = scaled_family(amplitude, frequency, grid)?;
            Ok((fields.u, fields.v))
        }
    }
}

/// Scaled-family construction artifacts: the state fields plus the stream
/// function, the vorticity `W` profile, and the amplification constant
/// `C0 = ||(U'^2 + W^2)^(1/2)||_inf` of the unscaled profiles.
#[derive(Debug, Clone)]
pub struct ScaledFamilyInit {
    pub u: ScalarField,
    pub v: ScalarField,
    pub psi: ScalarField,
    pub omega: ScalarField,
    pub c0: f64,
}

/// Build the scaled family from the default odd profiles
/// `Psi(y) = U(y) = sin(2 pi y)`. The vorticity profile `W = -Psi''` and the
/// velocity `v = -psi_z` are computed spectrally.
pub fn scaled_family(
    amplitude: f64,
    frequency: u32,
    grid: &Arc<PeriodicGrid>,
) -> Result<ScaledFamilyInit, ModelError> {
    if !(amplitude.is_finite() && amplitude > 0.0) {
        return Err(ModelError::BadParams(format!(
            "amplitude must be finite and positive, got {amplitude}"
        )));
    }
    if frequency == 0 {
        return Err(ModelError::BadParams("frequency must be >= 1".into()));
    }
    if frequency as usize * 4 > grid.len() {
        return Err(ModelError::BadParams(format!(
            "frequency {frequency} is not resolvable on {} nodes",
            grid.len()
        )));
    }
    let a = amplitude;
    let m = frequency as f64;
    let psi = ScalarField::from_fn(grid, |z| a / (m * m) * (TAU * m * z).sin());
    let u = ScalarField::from_fn(grid, |z| a / m * (TAU * m * z).sin());
    let v = spectral::derivative(&psi).map(|x| -x);
    let omega = spectral::second_derivative(&psi).map(|x| -x);

    // C0 of the unscaled profiles: U' and W evaluated at y = z m scale out
    // of u_z/a and omega/a exactly.
    let uz = spectral::derivative(&u);
    let c0 = uz
        .values()
        .iter()
        .zip(omega.values())
        .fold(0.0f64, |acc, (du, w)| acc.max(du.hypot(*w)))
        / a;

    Ok(ScaledFamilyInit {
        u,
        v,
        psi,
        omega,
        c0,
    })
}

/// Initial reaction-diffusion state.
pub fn make_rd_state(data: InitialData, grid: &Arc<PeriodicGrid>) -> Result<RdState, ModelError> {
    let (u, v) = initial_fields(data, grid)?;
    Ok(RdState::new(u, v, 0.0))
}

/// Initial state for the full 1D model; `v` is projected to exact zero mean.
pub fn make_euler_state(
    data: InitialData,
    grid: &Arc<PeriodicGrid>,
) -> Result<EulerState, ModelError> {
    let (u, v) = initial_fields(data, grid)?;
    EulerState::new(u, v, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rd_profile_values_at_origin() {
        let g = PeriodicGrid::new(64).unwrap();
        let (u, v) = initial_fields(InitialData::ReactionDiffusion { epsilon: 1e-3 }, &g).unwrap();
        assert!((u.values()[0] - 0.002).abs() < 1e-15);
        assert!((v.values()[0] + 1000.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_trough_mean_is_tiny_before_projection() {
        let g = PeriodicGrid::new(4096).unwrap();
        let (_, v) = initial_fields(InitialData::Gaussian { epsilon: 1e-4 }, &g).unwrap();
        // Gaussian-integral oracle: the trough integrates to ~1, cancelling
        // the unit baseline up to sub-1e-6 tail corrections.
        assert!(v.mean().abs() <= 1e-6, "pre-projection mean {:e}", v.mean());
        let s = make_euler_state(InitialData::Gaussian { epsilon: 1e-4 }, &g).unwrap();
        // projection is exact up to the rounding of one re-summation
        assert!(s.v.mean().abs() <= 1e-14 * s.v.max_abs().max(1.0));
    }

    #[test]
    fn scaled_family_vorticity_profile() {
        // A = 1, M = 4, Psi = sin: omega = A (2 pi)^2 sin(2 pi M z)
        let g = PeriodicGrid::new(256).unwrap();
        let init = scaled_family(1.0, 4, &g).unwrap();
        let expect = ScalarField::from_fn(&g, |z| TAU * TAU * (TAU * 4.0 * z).sin());
        for (a, b) in init.omega.values().iter().zip(expect.values()) {
            assert!((a - b).abs() < 1e-8);
        }
        // C0 for sin profiles is ||(U'^2 + W^2)^(1/2)|| = (2 pi)^2 at the crest
        assert!((init.c0 - TAU * TAU).abs() < 1e-8);
        // v = -(psi)_z = -(A/M) 2 pi cos(2 pi M z)
        let vexpect = ScalarField::from_fn(&g, |z| -(1.0 / 4.0) * TAU * (TAU * 4.0 * z).cos());
        for (a, b) in init.v.values().iter().zip(vexpect.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn bad_params_are_rejected() {
        let g = PeriodicGrid::new(64).unwrap();
        assert!(initial_fields(InitialData::Gaussian { epsilon: 0.0 }, &g).is_err());
        assert!(initial_fields(InitialData::ReactionDiffusion { epsilon: -1.0 }, &g).is_err());
        assert!(scaled_family(1.0, 0, &g).is_err());
        assert!(scaled_family(1.0, 63, &g).is_err());
        assert!(scaled_family(-2.0, 1, &g).is_err());
    }
}
