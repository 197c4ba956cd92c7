//! The pointwise ODE model obtained by dropping convection and diffusion,
//! its generalized coefficient-`d` family, the polar-coordinate form, and
//! blowup/decay classification.

use crate::error::ModelError;

/// Sup-norm threshold beyond which a trajectory counts as blown up.
pub const BLOWUP_NORM: f64 = 1e12;

/// State of the reduced ODE system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeState {
    pub u: f64,
    pub v: f64,
    pub t: f64,
}

impl OdeState {
    pub fn new(u: f64, v: f64, t: f64) -> Self {
        Self { u, v, t }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite() && self.t.is_finite()
    }

    /// Radius in the (v, u) phase plane.
    pub fn radius(&self) -> f64 {
        self.u.hypot(self.v)
    }
}

/// Coefficient family: `u' = -d v u`, `v' = u^2 - v^2`. `d = 2` is the base
/// model; `d >= 0` is accepted for exploration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeParams {
    pub d: f64,
}

impl OdeParams {
    pub fn new(d: f64) -> Result<Self, ModelError> {
        if !d.is_finite() || d < 0.0 {
            return Err(ModelError::BadParams(format!(
                "coefficient d must be finite and >= 0, got {d}"
            )));
        }
        Ok(Self { d })
    }

    /// The base model, `d = 2`.
    pub fn base() -> Self {
        Self { d: 2.0 }
    }
}

/// Polar phase-plane coordinates: `v = r cos(theta)`, `u = r sin(theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarState {
    pub r: f64,
    pub theta: f64,
}

impl PolarState {
    pub fn new(r: f64, theta: f64) -> Self {
        assert!(r >= 0.0, "radius must be nonnegative");
        Self { r, theta }
    }

    pub fn from_cartesian(u: f64, v: f64) -> Self {
        Self {
            r: u.hypot(v),
            theta: u.atan2(v),
        }
    }

    pub fn to_cartesian(self) -> (f64, f64) {
        (self.r * self.theta.sin(), self.r * self.theta.cos())
    }
}

/// Closed-form solution of the base model (`d = 2`), valid for all `t >= 0`
/// when `u0 != 0`. For `u0 = 0` the `v` equation decouples and has a pole at
/// `t = -1/v0` when `v0 < 0`.
pub fn ode_exact(u0: f64, v0: f64, t: f64) -> Result<OdeState, ModelError> {
    if u0 == 0.0 && v0 < 0.0 && t >= -1.0 / v0 {
        return Err(ModelError::BlowupAtPole { t_pole: -1.0 / v0 });
    }
    let a = 1.0 + v0 * t;
    let denom = a * a + (u0 * t) * (u0 * t);
    let u = (u0 * a - u0 * v0 * t) / denom;
    let v = (v0 * a + u0 * u0 * t) / denom;
    Ok(OdeState { u, v, t })
}

/// Right-hand side of the coefficient-`d` family.
pub fn ode_rhs(s: &OdeState, p: &OdeParams) -> (f64, f64) {
    (-p.d * s.v * s.u, s.u * s.u - s.v * s.v)
}

/// Right-hand side in polar coordinates.
pub fn polar_rhs(s: &PolarState, p: &OdeParams) -> (f64, f64) {
    let (sin, cos) = s.theta.sin_cos();
    let dr = -s.r * s.r * cos * (cos * cos + (p.d - 1.0) * sin * sin);
    let dtheta = -s.r * sin * ((p.d - 1.0) * cos * cos + sin * sin);
    (dr, dtheta)
}

/// Decay envelope for first-quadrant starts with `d >= 1`:
/// `r(t) <= r0 / (1 + r0 cos^3(theta0) t)`.
pub fn r_envelope_bound(r0: f64, theta0: f64, t: f64) -> f64 {
    let c = theta0.cos();
    r0 / (1.0 + r0 * c * c * c * t)
}

/// How a trajectory ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OdeTermination {
    /// Reached the requested end time with finite values.
    Completed,
    /// Norm explosion or loss of finiteness; `t_star` is the last finite time.
    Blowup { t_star: f64 },
}

/// Trajectory sampled at multiples of the output step.
#[derive(Debug, Clone)]
pub struct OdeTrajectory {
    pub states: Vec<OdeState>,
    pub termination: OdeTermination,
}

impl OdeTrajectory {
    pub fn last(&self) -> &OdeState {
        self.states.last().expect("trajectory holds at least t=0")
    }
}

fn rk4_step(s: &OdeState, p: &OdeParams, dt: f64) -> OdeState {
    let (k1u, k1v) = ode_rhs(s, p);
    let s2 = OdeState::new(s.u + 0.5 * dt * k1u, s.v + 0.5 * dt * k1v, s.t);
    let (k2u, k2v) = ode_rhs(&s2, p);
    let s3 = OdeState::new(s.u + 0.5 * dt * k2u, s.v + 0.5 * dt * k2v, s.t);
    let (k3u, k3v) = ode_rhs(&s3, p);
    let s4 = OdeState::new(s.u + dt * k3u, s.v + dt * k3v, s.t);
    let (k4u, k4v) = ode_rhs(&s4, p);
    OdeState::new(
        s.u + dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
        s.v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
        s.t + dt,
    )
}

fn blown_up(s: &OdeState) -> bool {
    !s.is_finite() || s.u.abs() + s.v.abs() > BLOWUP_NORM
}

/// Fixed-step classical RK4 integration, sampled at multiples of `dt` up to
/// `t_end` (the final partial step is clamped to land on `t_end`). Stops at
/// detected blowup; the trajectory then ends at the last finite state.
pub fn integrate_ode(s0: &OdeState, p: &OdeParams, t_end: f64, dt: f64) -> OdeTrajectory {
    assert!(dt > 0.0, "dt must be positive");
    let mut states = vec![*s0];
    let mut s = *s0;
    while s.t < t_end - 1e-15 * t_end.max(1.0) {
        let step = dt.min(t_end - s.t);
        let next = rk4_step(&s, p, step);
        if blown_up(&next) {
            return OdeTrajectory {
                states,
                termination: OdeTermination::Blowup { t_star: s.t },
            };
        }
        s = next;
        states.push(s);
    }
    OdeTrajectory {
        states,
        termination: OdeTermination::Completed,
    }
}

/// Step-doubling adaptive RK4: output states are recorded every `dt_out`,
/// while internal substeps keep the one-step error estimate below `tol`
/// relative to the state scale.
pub fn integrate_ode_adaptive(
    s0: &OdeState,
    p: &OdeParams,
    t_end: f64,
    dt_out: f64,
    tol: f64,
) -> OdeTrajectory {
    assert!(dt_out > 0.0 && tol > 0.0);
    let mut states = vec![*s0];
    let mut s = *s0;
    let mut h = dt_out.min(t_end - s.t).max(1e-300);
    while s.t < t_end - 1e-15 * t_end.max(1.0) {
        let t_next_out = (states.len() as f64) * dt_out;
        let target = t_next_out.min(t_end);
        // advance to `target` with error-controlled substeps
        while s.t < target - 1e-15 * target.max(1.0) {
            h = h.min(target - s.t);
            let full = rk4_step(&s, p, h);
            let half = rk4_step(&rk4_step(&s, p, 0.5 * h), p, 0.5 * h);
            let err = (full.u - half.u).abs().max((full.v - half.v).abs());
            let scale = s.u.abs().max(s.v.abs()).max(1.0);
            let accepted = full.is_finite() && half.is_finite() && err <= tol * scale;
            if accepted {
                s = half;
                if blown_up(&s) {
                    return OdeTrajectory {
                        states,
                        termination: OdeTermination::Blowup { t_star: s.t },
                    };
                }
                // grow cautiously; RK4 local error is O(h^5)
                let grow = (tol * scale / err.max(1e-300)).powf(0.2).min(2.0);
                h = (h * 0.9 * grow).min(dt_out);
            } else {
                // too inaccurate (or the trial diverged): retry with a
                // smaller step until it underflows, which is blowup
                h *= 0.5;
                if h < 1e-16 * s.t.abs().max(1e-3) {
                    return OdeTrajectory {
                        states,
                        termination: OdeTermination::Blowup { t_star: s.t },
                    };
                }
            }
        }
        s.t = target; // suppress accumulated rounding in the output clock
        states.push(s);
    }
    OdeTrajectory {
        states,
        termination: OdeTermination::Completed,
    }
}

/// Long-run fate of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Classification {
    Decay,
    Blowup { t_star: f64 },
    Undetermined,
}

/// Classify the trajectory from `s0` over `[0, t_end]`.
///
/// Decay requires either a drop of the phase radius below `1e-6` of its
/// initial scale, or a monotone tail that has already lost an order of
/// magnitude by `t_end` (the `1/t` envelope of the `d >= 2` dynamics decays
/// too slowly to cross a fixed 1e-6 threshold on practical horizons).
pub fn classify_trajectory(s0: &OdeState, p: &OdeParams, t_end: f64) -> Classification {
    let dt_out = (t_end / 512.0).max(1e-6);
    let traj = integrate_ode_adaptive(s0, p, t_end, dt_out, 1e-10);
    if let OdeTermination::Blowup { t_star } = traj.termination {
        return Classification::Blowup { t_star };
    }
    let scale = s0.radius().max(1.0);
    let r_end = traj.last().radius();
    if r_end <= 1e-6 * scale {
        return Classification::Decay;
    }
    // asymptotic decay: monotone non-increasing radius over the last quarter
    // of samples and at least a 10x drop from the initial scale
    let tail_start = traj.states.len() * 3 / 4;
    let tail = &traj.states[tail_start..];
    let monotone = tail.windows(2).all(|w| w[1].radius() <= w[0].radius() * (1.0 + 1e-9));
    if monotone && r_end <= 0.1 * scale {
        return Classification::Decay;
    }
    Classification::Undetermined
}
