//! The inviscid model in flow-map coordinates: `J' = -2Jv`, `u' = -2uv`,
//! `v' = u^2 - v^2 + 3 int v^2 J - int u^2 J`, particle positions advected
//! by twice the stream function, conserved quantities, the derivative
//! identity `sqrt(u_a^2 + v_a^2) = g0 J`, and resampling back to an
//! Eulerian grid.

use std::sync::Arc;

use crate::diagnostics::{DiagnosticsRecord, LagrangianExtras};
use crate::error::{BlowupCause, ModelError};
use crate::grid::{PeriodicGrid, ScalarField};
use crate::model1d::{adapt_dt, StepController, Termination, FIELD_BLOWUP_NORM};
use crate::spectral;

/// Particle-label state. Positions are carried as the periodic displacement
/// `zeta(alpha) = z(alpha) - alpha`, and the per-particle integral of `v`
/// is accumulated alongside for the `log J` consistency check.
#[derive(Debug, Clone)]
pub struct LagrangianState {
    /// Flow-map Jacobian `z_alpha`, positive.
    pub jac: ScalarField,
    pub u: ScalarField,
    pub v: ScalarField,
    /// `z(alpha) - alpha`, periodic in the label.
    pub zeta: ScalarField,
    /// Accumulated `int_0^t v(alpha, s) ds` from the same integrator.
    pub int_v_dt: ScalarField,
    pub t: f64,
}

impl LagrangianState {
    /// Start from `(u0, v0)` with `J = 1`, `z = alpha`. `v0` is projected so
    /// that `int v0 J0 = 0` holds exactly (with `J0 = 1` this is the plain
    /// mean).
    pub fn new(u0: ScalarField, mut v0: ScalarField) -> Result<Self, ModelError> {
        assert_eq!(u0.len(), v0.len());
        if !u0.is_finite() || !v0.is_finite() {
            return Err(ModelError::BadParams(
                "initial Lagrangian fields must be finite".into(),
            ));
        }
        v0.project_mean_free();
        let grid = Arc::clone(u0.grid());
        Ok(Self {
            jac: ScalarField::constant(&grid, 1.0),
            u: u0,
            v: v0,
            zeta: ScalarField::zeros(&grid),
            int_v_dt: ScalarField::zeros(&grid),
            t: 0.0,
        })
    }

    pub fn grid(&self) -> &Arc<PeriodicGrid> {
        self.u.grid()
    }

    /// Particle positions `z(alpha_j)`.
    pub fn positions(&self) -> Vec<f64> {
        self.grid()
            .nodes()
            .zip(self.zeta.values())
            .map(|(a, dz)| a + dz)
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.jac.is_finite() && self.u.is_finite() && self.v.is_finite() && self.zeta.is_finite()
    }
}

/// Initial label-derivative magnitude `g0 = sqrt((u0)_a^2 + (v0)_a^2)`,
/// frozen at t=0 for the derivative identity.
#[derive(Debug, Clone)]
pub struct IdentityLedger {
    g0: ScalarField,
}

impl IdentityLedger {
    pub fn new(state: &LagrangianState) -> Self {
        let ua = spectral::derivative(&state.u);
        let va = spectral::derivative(&state.v);
        Self {
            g0: ua.zip_with(&va, |a, b| a.hypot(b)),
        }
    }

    pub fn g0(&self) -> &ScalarField {
        &self.g0
    }
}

/// Label-space integral `int f J dalpha` by the rectangle rule.
fn weighted_integral(f: &ScalarField, jac: &ScalarField) -> f64 {
    f.values()
        .iter()
        .zip(jac.values())
        .map(|(a, j)| a * j)
        .sum::<f64>()
        / f.len() as f64
}

/// Stream function evaluated at the particles: the antiderivative of `-vJ`
/// in the label (since `d psi(z(alpha))/d alpha = psi_z z_alpha = -vJ`),
/// normalized so its Eulerian mean `int psi J dalpha` vanishes.
fn stream_at_particles(v: &ScalarField, jac: &ScalarField) -> ScalarField {
    let mut vj = v.zip_with(jac, |a, b| a * b);
    // int vJ = 0 is conserved; remove the rounding-level drift before the
    // spectral antiderivative, which requires an exactly mean-free input.
    vj.project_mean_free();
    let mut psi = spectral::invert_stream(&vj).expect("mean-free by projection");
    let shift = weighted_integral(&psi, jac);
    psi.shift(-shift);
    psi
}

/// Time derivatives of `(J, u, v, zeta)` plus the `v`-equation constant.
#[derive(Debug, Clone)]
pub struct LagRhs {
    pub dj: ScalarField,
    pub du: ScalarField,
    pub dv: ScalarField,
    pub dzeta: ScalarField,
    /// `3 int v^2 J - int u^2 J`, the Lagrangian form of `c(t)`.
    pub constant: f64,
}

/// Right-hand side of the flow-map system at a state.
pub fn lag_rhs(s: &LagrangianState) -> LagRhs {
    let v2j = weighted_integral(&s.v.zip_with(&s.v, |a, b| a * b), &s.jac);
    let u2j = weighted_integral(&s.u.zip_with(&s.u, |a, b| a * b), &s.jac);
    let constant = 3.0 * v2j - u2j;
    let dj = s.jac.zip_with(&s.v, |j, v| -2.0 * j * v);
    let du = s.u.zip_with(&s.v, |u, v| -2.0 * u * v);
    let dv = s
        .u
        .zip_with(&s.v, |u, v| u * u - v * v)
        .map(|x| x + constant);
    let psi = stream_at_particles(&s.v, &s.jac);
    let dzeta = psi.map(|p| 2.0 * p);
    LagRhs {
        dj,
        du,
        dv,
        dzeta,
        constant,
    }
}

fn advance(s: &LagrangianState, rhs: &LagRhs, dt: f64) -> LagrangianState {
    let mut out = s.clone();
    out.jac.add_scaled(&rhs.dj, dt);
    out.u.add_scaled(&rhs.du, dt);
    out.v.add_scaled(&rhs.dv, dt);
    out.zeta.add_scaled(&rhs.dzeta, dt);
    out.int_v_dt.add_scaled(&s.v, dt);
    out.t = s.t + dt;
    out
}

/// One Heun step with a fixed `dt`; enforces Jacobian positivity.
pub fn lag_step_with_dt(s: &LagrangianState, dt: f64) -> Result<LagrangianState, ModelError> {
    let k1 = lag_rhs(s);
    let mid = advance(s, &k1, dt);
    let k2 = lag_rhs(&mid);

    let mut next = s.clone();
    next.t = s.t + dt;
    let half = 0.5 * dt;
    next.jac.add_scaled(&k1.dj, half);
    next.jac.add_scaled(&k2.dj, half);
    next.u.add_scaled(&k1.du, half);
    next.u.add_scaled(&k2.du, half);
    next.v.add_scaled(&k1.dv, half);
    next.v.add_scaled(&k2.dv, half);
    next.zeta.add_scaled(&k1.dzeta, half);
    next.zeta.add_scaled(&k2.dzeta, half);
    next.int_v_dt.add_scaled(&s.v, half);
    next.int_v_dt.add_scaled(&mid.v, half);

    if !next.is_finite() {
        return Err(ModelError::Blowup {
            t: s.t,
            cause: BlowupCause::NonFinite,
        });
    }
    if next.jac.min() <= 0.0 {
        return Err(ModelError::Blowup {
            t: s.t,
            cause: BlowupCause::JacobianCollapse,
        });
    }
    Ok(next)
}

/// Adapt the step with the shared controller rule and advance once.
pub fn lag_step(
    s: &LagrangianState,
    ctrl: &mut StepController,
) -> Result<LagrangianState, ModelError> {
    let dt = adapt_dt(&s.u, &s.v, ctrl).map_err(|cause| ModelError::Blowup { t: s.t, cause })?;
    ctrl.dt = dt;
    lag_step_with_dt(s, dt)
}

/// Conservation and identity residuals of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagInvariants {
    /// `int J dalpha` (conserved, 1).
    pub int_j: f64,
    /// `int v J dalpha` (conserved, 0).
    pub int_vj: f64,
    /// Relative sup residual of `sqrt(u_a^2 + v_a^2) - g0 J`.
    pub identity_residual: f64,
    /// Sup residual of `log J + 2 int v dt` against the accumulated integral.
    pub log_j_residual: f64,
    /// Sup residual of `dz/dalpha - J` for the carried positions.
    pub z_consistency: f64,
}

/// Evaluate the conserved quantities and identity residuals.
pub fn lag_invariants(s: &LagrangianState, ledger: &IdentityLedger) -> LagInvariants {
    let int_j = s.jac.mean();
    let int_vj = weighted_integral(&s.v, &s.jac);

    let ua = spectral::derivative(&s.u);
    let va = spectral::derivative(&s.v);
    let lhs = ua.zip_with(&va, |a, b| a.hypot(b));
    let rhs = ledger.g0.zip_with(&s.jac, |g, j| g * j);
    let scale = rhs.max_abs().max(1e-300);
    let identity_residual = lhs
        .values()
        .iter()
        .zip(rhs.values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        / scale;

    let log_j_residual = s
        .jac
        .values()
        .iter()
        .zip(s.int_v_dt.values())
        .fold(0.0f64, |m, (j, iv)| m.max((j.ln() + 2.0 * iv).abs()));

    let za = spectral::derivative(&s.zeta);
    let z_consistency = za
        .values()
        .iter()
        .zip(s.jac.values())
        .fold(0.0f64, |m, (dz, j)| m.max((1.0 + dz - j).abs()));

    LagInvariants {
        int_j,
        int_vj,
        identity_residual,
        log_j_residual,
        z_consistency,
    }
}

/// Shape-preserving cubic tangents (the weighted-harmonic-mean rule) for a
/// strictly increasing periodic knot sequence.
fn monotone_tangents(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h = |i: usize| x[(i + 1) % n] + if i + 1 == n { 1.0 } else { 0.0 } - x[i];
    let wrap = |i: usize| -> f64 {
        // periodic secant over interval i
        let dy = y[(i + 1) % n] - y[i];
        dy / h(i)
    };
    let mut m = vec![0.0; n];
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let d0 = wrap(prev);
        let d1 = wrap(i);
        if d0 * d1 <= 0.0 {
            m[i] = 0.0;
        } else {
            let (h0, h1) = (h(prev), h(i));
            let w1 = 2.0 * h1 + h0;
            let w2 = h1 + 2.0 * h0;
            m[i] = (w1 + w2) / (w1 / d0 + w2 / d1);
        }
    }
    m
}

fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, m0: f64, m1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let s = (x - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    y0 * (2.0 * s3 - 3.0 * s2 + 1.0)
        + m0 * h * (s3 - 2.0 * s2 + s)
        + y1 * (-2.0 * s3 + 3.0 * s2)
        + m1 * h * (s3 - s2)
}

/// Resample `u(alpha)` and `v(alpha)` onto the target Eulerian grid by
/// monotone cubic interpolation of `(z(alpha), u)` and `(z(alpha), v)` with
/// periodic wrap. Requires a strictly increasing particle map.
pub fn lag_to_euler(
    s: &LagrangianState,
    target: &Arc<PeriodicGrid>,
) -> Result<(ScalarField, ScalarField), ModelError> {
    let z = s.positions();
    let n = z.len();
    for i in 0..n {
        let next = if i + 1 == n { z[0] + 1.0 } else { z[i + 1] };
        if !(next > z[i]) {
            return Err(ModelError::ParticleCrossing { t: s.t });
        }
    }
    let mu = monotone_tangents(&z, s.u.values());
    let mv = monotone_tangents(&z, s.v.values());

    let interp = |y: &[f64], m: &[f64], zt: f64| -> f64 {
        // shift the query into [z[0], z[0] + 1)
        let shifted = zt - (zt - z[0]).floor();
        // binary search for the containing interval
        let mut lo = 0usize;
        let mut hi = n; // interval index in [0, n), interval n-1 wraps
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if mid < n && z[mid] <= shifted {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let i = lo;
        let (x0, y0, m0) = (z[i], y[i], m[i]);
        let (x1, y1, m1) = if i + 1 == n {
            (z[0] + 1.0, y[0], m[0])
        } else {
            (z[i + 1], y[i + 1], m[i + 1])
        };
        hermite(x0, x1, y0, y1, m0, m1, shifted)
    };

    let u = ScalarField::from_fn(target, |zt| interp(s.u.values(), &mu, zt));
    let v = ScalarField::from_fn(target, |zt| interp(s.v.values(), &mv, zt));
    Ok((u, v))
}

/// Result of a Lagrangian run.
#[derive(Debug, Clone)]
pub struct LagRunResult {
    pub termination: Termination,
    pub final_state: LagrangianState,
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<LagrangianState>,
}

/// Advance to `t_end`, emitting one record per step (with the Lagrangian
/// extras) and cloning the state at the requested snapshot times.
pub fn run_lagrangian(
    init: LagrangianState,
    ctrl: &mut StepController,
    t_end: f64,
    snapshot_times: &[f64],
) -> Result<LagRunResult, ModelError> {
    if !(t_end > init.t) {
        return Err(ModelError::BadParams(format!(
            "t_end = {t_end} must exceed the initial time {}",
            init.t
        )));
    }
    let ledger = IdentityLedger::new(&init);
    let mut events: Vec<f64> = snapshot_times
        .iter()
        .copied()
        .filter(|&t| t > init.t && t <= t_end)
        .collect();
    events.push(t_end);
    events.sort_by(|a, b| a.partial_cmp(b).unwrap());
    events.dedup();
    let wants_snapshot = |t: f64| {
        snapshot_times
            .iter()
            .any(|&s| (s - t).abs() <= 1e-12 * s.abs().max(1.0))
    };

    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let mut state = init;
    let mut bkm = 0.0;
    let mut prev_sup_v = state.v.max_abs();

    let build = |state: &LagrangianState, dt: f64, bkm: f64| -> DiagnosticsRecord {
        let ua = spectral::derivative(&state.u);
        let va = spectral::derivative(&state.v);
        let m_inf = ua
            .values()
            .iter()
            .zip(va.values())
            .fold(0.0f64, |m, (a, b)| m.max(a * a + b * b));
        let inv = lag_invariants(state, &ledger);
        let v2j = weighted_integral(&state.v.zip_with(&state.v, |a, b| a * b), &state.jac);
        let u2j = weighted_integral(&state.u.zip_with(&state.u, |a, b| a * b), &state.jac);
        let psi = stream_at_particles(&state.v, &state.jac);
        DiagnosticsRecord {
            t: state.t,
            dt,
            max_u: state.u.max(),
            min_u: state.u.min(),
            max_v: state.v.max(),
            min_v: state.v.min(),
            m_inf,
            c: 3.0 * v2j - u2j,
            l2_u: u2j.max(0.0).sqrt(),
            l2_v: v2j.max(0.0).sqrt(),
            energy_residual_u: None,
            energy_residual_v: None,
            max_abs_psi: Some(psi.max_abs()),
            max_abs_uz: ua.max_abs(),
            max_abs_vz: va.max_abs(),
            bkm_integral: bkm,
            lagrangian: Some(LagrangianExtras {
                int_j: inv.int_j,
                int_vj: inv.int_vj,
                identity_residual: inv.identity_residual,
                z_consistency: inv.z_consistency,
            }),
        }
    };

    records.push(build(&state, 0.0, bkm));
    if wants_snapshot(state.t) {
        snapshots.push(state.clone());
    }

    let mut next_event_idx = 0;
    let eps_t = 1e-12 * t_end.abs().max(1.0);
    let termination = loop {
        if state.t >= t_end - eps_t {
            break Termination::Completed;
        }
        while events[next_event_idx] <= state.t + eps_t {
            next_event_idx += 1;
        }
        let target = events[next_event_idx];
        let dt_rule = match adapt_dt(&state.u, &state.v, ctrl) {
            Ok(dt) => dt,
            Err(cause) => {
                let mut rec = records.last().expect("initial record").clone();
                rec.dt = ctrl.dt_min / 2.0;
                records.push(rec);
                break Termination::Blowup { t: state.t, cause };
            }
        };
        let landing = dt_rule >= target - state.t - eps_t;
        let dt = if landing { target - state.t } else { dt_rule };
        ctrl.dt = dt;
        let mut next = match lag_step_with_dt(&state, dt) {
            Ok(next) => next,
            Err(err) => match err.as_blowup() {
                Some((t, cause)) => {
                    let mut rec = records.last().expect("initial record").clone();
                    rec.t = t;
                    records.push(rec);
                    break Termination::Blowup { t, cause };
                }
                None => return Err(err),
            },
        };
        if landing {
            next.t = target;
        }
        bkm += dt * prev_sup_v;
        prev_sup_v = next.v.max_abs();
        let rec = build(&next, dt, bkm);
        let sup = rec.sup_u().max(rec.sup_v());
        records.push(rec);
        state = next;
        if sup > FIELD_BLOWUP_NORM {
            break Termination::Blowup {
                t: state.t,
                cause: BlowupCause::NormExplosion,
            };
        }
        if wants_snapshot(state.t) {
            snapshots.push(state.clone());
        }
    };

    Ok(LagRunResult {
        termination,
        final_state: state,
        records,
        snapshots,
    })
}
