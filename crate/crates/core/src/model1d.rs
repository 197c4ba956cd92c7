//! Time integration of the reaction-diffusion system and the full 1D
//! convection model: forward-Euler nonlinear terms with backward-Euler
//! diffusion (IMEX), a Heun scheme for inviscid runs, the adaptive step
//! rule capping `dt * (|max u| + |min u| + |max v| + |min v|)`, the
//! mean-enforcing constant `c(t)`, and the flipped-sign convection variant.

use num_complex::Complex64;

use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::{BlowupCause, ModelError};
use crate::grid::ScalarField;
use crate::spectral;

use std::f64::consts::PI;

/// Sup-norm threshold beyond which a field state counts as blown up.
pub const FIELD_BLOWUP_NORM: f64 = 1e12;

/// Sign of the convection velocity `sigma * 2 psi`. `Minus` runs the
/// wrong-sign experiment that focuses instead of spreading.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvectionSign {
    Plus,
    Minus,
}

impl ConvectionSign {
    pub fn factor(self) -> f64 {
        match self {
            ConvectionSign::Plus => 1.0,
            ConvectionSign::Minus => -1.0,
        }
    }
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Forward Euler for nonlinear terms, backward Euler for diffusion.
    ImexEuler,
    /// Heun's second-order method; requires `nu = 0`.
    Rk2Inviscid,
}

/// Model parameters shared by the reaction-diffusion and convection models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    /// Kinematic viscosity, `>= 0`.
    pub nu: f64,
    /// Convection-velocity sign (ignored by the reaction-diffusion model).
    pub sign: ConvectionSign,
    /// Apply the 2/3 rule after quadratic products.
    pub dealias_on: bool,
    pub scheme: Scheme,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            nu: 1.0,
            sign: ConvectionSign::Plus,
            dealias_on: true,
            scheme: Scheme::ImexEuler,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.nu.is_finite() || self.nu < 0.0 {
            return Err(ModelError::BadParams(format!(
                "viscosity must be finite and >= 0, got {}",
                self.nu
            )));
        }
        if self.scheme == Scheme::Rk2Inviscid && self.nu != 0.0 {
            return Err(ModelError::BadParams(
                "the Heun scheme is inviscid-only (nu must be 0)".into(),
            ));
        }
        Ok(())
    }
}

/// Adaptive step controller: `dt = min(dt0, cap / S)` with
/// `S = |max u| + |min u| + |max v| + |min v|`, refusing steps below `dt_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepController {
    pub cap: f64,
    pub dt0: f64,
    pub dt_min: f64,
    /// Step actually used most recently.
    pub dt: f64,
}

impl StepController {
    pub fn new(dt0: f64) -> Self {
        Self {
            cap: 0.01,
            dt0,
            dt_min: 1e-13,
            dt: dt0,
        }
    }
}

/// The step the controller's rule allows for the current extrema.
pub fn adapt_dt(u: &ScalarField, v: &ScalarField, ctrl: &StepController) -> Result<f64, BlowupCause> {
    let s = u.max().abs() + u.min().abs() + v.max().abs() + v.min().abs();
    if !s.is_finite() {
        return Err(BlowupCause::NonFinite);
    }
    let dt = if s > 0.0 {
        ctrl.dt0.min(ctrl.cap / s)
    } else {
        ctrl.dt0
    };
    if dt < ctrl.dt_min {
        return Err(BlowupCause::DtUnderflow);
    }
    Ok(dt)
}

/// CFL-style guard for explicit convection: `dt <= 0.25 / (n max|2 psi|)`.
/// The adaptive rule controls reaction stiffness only.
pub fn convective_dt_limit(psi: &ScalarField) -> f64 {
    let speed = 2.0 * psi.max_abs();
    if speed == 0.0 {
        f64::INFINITY
    } else {
        0.25 / (psi.len() as f64 * speed)
    }
}

/// The mean-enforcing constant `c(t) = 3 int v^2 dz - int u^2 dz`.
pub fn compute_c(u: &ScalarField, v: &ScalarField) -> f64 {
    assert_eq!(u.len(), v.len(), "fields must share a grid");
    let n = u.len() as f64;
    let mut v2 = 0.0;
    let mut u2 = 0.0;
    for (&a, &b) in u.values().iter().zip(v.values()) {
        u2 += a * a;
        v2 += b * b;
    }
    (3.0 * v2 - u2) / n
}

/// Reaction-diffusion state.
#[derive(Debug, Clone)]
pub struct RdState {
    pub u: ScalarField,
    pub v: ScalarField,
    pub t: f64,
}

impl RdState {
    pub fn new(u: ScalarField, v: ScalarField, t: f64) -> Self {
        assert_eq!(u.len(), v.len());
        Self { u, v, t }
    }
}

/// Full 1D convection-model state. Caches the stream function recovered
/// from `v` and the constant `c(t)`; `v` is kept exactly mean-free.
#[derive(Debug, Clone)]
pub struct EulerState {
    pub u: ScalarField,
    pub v: ScalarField,
    pub psi: ScalarField,
    pub c: f64,
    pub t: f64,
}

impl EulerState {
    /// Build a state from raw fields: projects `v` to exact zero mean,
    /// recovers `psi`, and caches `c`.
    pub fn new(u: ScalarField, mut v: ScalarField, t: f64) -> Result<Self, ModelError> {
        assert_eq!(u.len(), v.len());
        v.project_mean_free();
        let psi = spectral::invert_stream(&v)?;
        let c = compute_c(&u, &v);
        Ok(Self { u, v, psi, c, t })
    }
}

/// Reaction-diffusion nonlinearity: `du = -2 v u`, `dv = u^2 - v^2`,
/// dealiased per component when requested.
pub fn rd_rhs(u: &ScalarField, v: &ScalarField, dealias_on: bool) -> (ScalarField, ScalarField) {
    let du = u.zip_with(v, |a, b| -2.0 * b * a);
    let dv = u.zip_with(v, |a, b| a * a - b * b);
    if dealias_on {
        (spectral::dealias(&du), spectral::dealias(&dv))
    } else {
        (du, dv)
    }
}

/// Explicit part of the full 1D model:
/// `du = -sigma 2 psi u_z - 2 v u`, `dv = -sigma 2 psi v_z + u^2 - v^2 + c`.
/// The constant is added after dealiasing, so `mean(dv) = 0` holds exactly
/// up to quadrature rounding for sign `+1`.
pub fn euler1d_rhs(s: &EulerState, cfg: &ModelConfig) -> (ScalarField, ScalarField) {
    let sigma = cfg.sign.factor();
    let uz = spectral::derivative(&s.u);
    let vz = spectral::derivative(&s.v);
    let mut du = ScalarField::zeros(s.u.grid());
    let mut dv = ScalarField::zeros(s.u.grid());
    {
        let (dus, dvs) = (du.values_mut(), dv.values_mut());
        let (us, vs) = (s.u.values(), s.v.values());
        let (psis, uzs, vzs) = (s.psi.values(), uz.values(), vz.values());
        for i in 0..us.len() {
            let conv = sigma * 2.0 * psis[i];
            dus[i] = -conv * uzs[i] - 2.0 * vs[i] * us[i];
            dvs[i] = -conv * vzs[i] + us[i] * us[i] - vs[i] * vs[i];
        }
    }
    if cfg.dealias_on {
        du = spectral::dealias(&du);
        dv = spectral::dealias(&dv);
    }
    dv.shift(s.c);
    (du, dv)
}

/// One IMEX advance of a single component in spectral space:
/// `f_hat <- (fft(f) + dt * [mask] fft(df)) / (1 + nu dt k^2)`.
/// Returns the new field and its spatial derivative (one extra inverse
/// transform, reusing the spectrum).
fn imex_advance(
    f: &ScalarField,
    df: &ScalarField,
    dt: f64,
    nu: f64,
    dealias_on: bool,
) -> (ScalarField, ScalarField) {
    let grid = f.grid();
    let n = grid.len();
    let cutoff = n as f64 / 3.0;
    let mut spec = grid.fft(f.values());
    let dspec = grid.fft(df.values());
    for (i, (c, d)) in spec.iter_mut().zip(dspec).enumerate() {
        let k = grid.wavenumber(i);
        let masked = if dealias_on && (k.abs() as f64) > cutoff {
            Complex64::new(0.0, 0.0)
        } else {
            d
        };
        let kk = 2.0 * PI * k as f64;
        *c = (*c + dt * masked) / (1.0 + nu * dt * kk * kk);
    }
    let mut deriv_spec = spec.clone();
    for (i, c) in deriv_spec.iter_mut().enumerate() {
        let k = grid.wavenumber(i);
        if k.unsigned_abs() as usize == n / 2 {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c *= Complex64::new(0.0, 2.0 * PI * k as f64);
        }
    }
    (
        ScalarField::from_values(grid, grid.ifft(spec)),
        ScalarField::from_values(grid, grid.ifft(deriv_spec)),
    )
}

/// One IMEX step of the reaction-diffusion model with a fixed `dt`.
/// Returns the new state together with the spectral derivatives of the new
/// fields (needed by the per-step diagnostics).
pub fn step_rd_with_dt(
    s: &RdState,
    cfg: &ModelConfig,
    dt: f64,
) -> (RdState, ScalarField, ScalarField) {
    // raw products; the 2/3 mask is applied inside the spectral advance
    let du = s.u.zip_with(&s.v, |a, b| -2.0 * b * a);
    let dv = s.u.zip_with(&s.v, |a, b| a * a - b * b);
    let (u_new, uz) = imex_advance(&s.u, &du, dt, cfg.nu, cfg.dealias_on);
    let (v_new, vz) = imex_advance(&s.v, &dv, dt, cfg.nu, cfg.dealias_on);
    (RdState::new(u_new, v_new, s.t + dt), uz, vz)
}

/// One IMEX step of the full 1D model with a fixed `dt`: explicit
/// convection + reaction + `c(t)`, implicit diffusion, then exact
/// re-projection of `mean(v)` and refresh of `psi` and `c`.
pub fn step_euler_imex_with_dt(
    s: &EulerState,
    cfg: &ModelConfig,
    dt: f64,
) -> Result<EulerState, ModelError> {
    let (du, dv) = euler1d_rhs(s, cfg);
    let mut u_star = s.u.clone();
    u_star.add_scaled(&du, dt);
    let mut v_star = s.v.clone();
    v_star.add_scaled(&dv, dt);
    let u_new = spectral::diffuse_implicit(&u_star, cfg.nu * dt);
    let v_new = spectral::diffuse_implicit(&v_star, cfg.nu * dt);
    EulerState::new(u_new, v_new, s.t + dt)
}

/// One Heun (second-order Runge-Kutta) step of the inviscid full model.
pub fn step_euler_rk2_with_dt(
    s: &EulerState,
    cfg: &ModelConfig,
    dt: f64,
) -> Result<EulerState, ModelError> {
    let (k1u, k1v) = euler1d_rhs(s, cfg);
    let mut u_mid = s.u.clone();
    u_mid.add_scaled(&k1u, dt);
    let mut v_mid = s.v.clone();
    v_mid.add_scaled(&k1v, dt);
    let mid = EulerState::new(u_mid, v_mid, s.t + dt)?;
    let (k2u, k2v) = euler1d_rhs(&mid, cfg);

    let mut u_new = s.u.clone();
    u_new.add_scaled(&k1u, 0.5 * dt);
    u_new.add_scaled(&k2u, 0.5 * dt);
    let mut v_new = s.v.clone();
    v_new.add_scaled(&k1v, 0.5 * dt);
    v_new.add_scaled(&k2v, 0.5 * dt);
    EulerState::new(u_new, v_new, s.t + dt)
}

/// Adapt the step and advance the reaction-diffusion model once.
pub fn step_rd(
    s: &RdState,
    cfg: &ModelConfig,
    ctrl: &mut StepController,
) -> Result<RdState, ModelError> {
    let dt = adapt_dt(&s.u, &s.v, ctrl).map_err(|cause| ModelError::Blowup { t: s.t, cause })?;
    ctrl.dt = dt;
    let (next, _, _) = step_rd_with_dt(s, cfg, dt);
    if !next.u.is_finite() || !next.v.is_finite() {
        return Err(ModelError::Blowup {
            t: s.t,
            cause: BlowupCause::NonFinite,
        });
    }
    Ok(next)
}

/// Adapt the step (including the convective CFL guard) and advance the full
/// model once with the configured scheme.
pub fn step_euler(
    s: &EulerState,
    cfg: &ModelConfig,
    ctrl: &mut StepController,
) -> Result<EulerState, ModelError> {
    let dt_rule =
        adapt_dt(&s.u, &s.v, ctrl).map_err(|cause| ModelError::Blowup { t: s.t, cause })?;
    let dt = dt_rule.min(convective_dt_limit(&s.psi));
    if dt < ctrl.dt_min {
        return Err(ModelError::Blowup {
            t: s.t,
            cause: BlowupCause::DtUnderflow,
        });
    }
    ctrl.dt = dt;
    let next = match cfg.scheme {
        Scheme::ImexEuler => step_euler_imex_with_dt(s, cfg, dt)?,
        Scheme::Rk2Inviscid => step_euler_rk2_with_dt(s, cfg, dt)?,
    };
    if !next.u.is_finite() || !next.v.is_finite() {
        return Err(ModelError::Blowup {
            t: s.t,
            cause: BlowupCause::NonFinite,
        });
    }
    Ok(next)
}

/// A state of either 1D PDE model.
#[derive(Debug, Clone)]
pub enum State1d {
    Rd(RdState),
    Euler(EulerState),
}

impl State1d {
    pub fn t(&self) -> f64 {
        match self {
            State1d::Rd(s) => s.t,
            State1d::Euler(s) => s.t,
        }
    }

    pub fn u(&self) -> &ScalarField {
        match self {
            State1d::Rd(s) => &s.u,
            State1d::Euler(s) => &s.u,
        }
    }

    pub fn v(&self) -> &ScalarField {
        match self {
            State1d::Rd(s) => &s.v,
            State1d::Euler(s) => &s.v,
        }
    }

    pub fn psi(&self) -> Option<&ScalarField> {
        match self {
            State1d::Rd(_) => None,
            State1d::Euler(s) => Some(&s.psi),
        }
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Completed,
    Blowup { t: f64, cause: BlowupCause },
}

/// Field snapshot captured at a requested output time.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub u: ScalarField,
    pub v: ScalarField,
    pub psi: Option<ScalarField>,
}

/// Run options: horizon and exact snapshot times (the stepper clamps `dt`
/// to land on them).
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
}

/// Everything a run produces: termination status, final state, the per-step
/// scalar record stream, and any requested field snapshots.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub termination: Termination,
    pub final_state: State1d,
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<Snapshot>,
}

struct RecordBuilder {
    bkm: f64,
    prev_sup_v: f64,
    prev_uz: ScalarField,
    prev_vz: ScalarField,
    prev_eu: f64,
    prev_ev: f64,
    prev_rates: (f64, f64),
}

impl RecordBuilder {
    fn energy(f: &ScalarField) -> f64 {
        0.5 * f.l2_norm().powi(2)
    }

    fn new(state: &State1d, uz: ScalarField, vz: ScalarField, cfg: &ModelConfig) -> Self {
        let rates = match state {
            State1d::Rd(s) => diagnostics::rd_energy_rates(&s.u, &s.v, &uz, &vz, cfg.nu),
            State1d::Euler(s) => diagnostics::euler_energy_rates(&s.u, &s.v, &uz, &vz, cfg.nu),
        };
        Self {
            bkm: 0.0,
            prev_sup_v: state.v().max_abs(),
            prev_eu: Self::energy(state.u()),
            prev_ev: Self::energy(state.v()),
            prev_rates: rates,
            prev_uz: uz,
            prev_vz: vz,
        }
    }

    /// Assemble the record for `state`, reached with step `dt` (0 at t=0),
    /// and roll the energy-budget baseline forward.
    fn build(
        &mut self,
        state: &State1d,
        dt: f64,
        uz: ScalarField,
        vz: ScalarField,
        cfg: &ModelConfig,
    ) -> DiagnosticsRecord {
        let (u, v) = (state.u(), state.v());
        let m_inf = uz
            .values()
            .iter()
            .zip(vz.values())
            .fold(0.0f64, |m, (a, b)| m.max(a * a + b * b));
        let eu = Self::energy(u);
        let ev = Self::energy(v);
        let (res_u, res_v) = if dt > 0.0 {
            let scale_u = self.prev_eu.abs().max(eu.abs()).max(1e-30);
            let scale_v = self.prev_ev.abs().max(ev.abs()).max(1e-30);
            (
                Some(((eu - self.prev_eu) - dt * self.prev_rates.0).abs() / scale_u),
                Some(((ev - self.prev_ev) - dt * self.prev_rates.1).abs() / scale_v),
            )
        } else {
            (None, None)
        };
        self.bkm += dt * self.prev_sup_v;
        let rec = DiagnosticsRecord {
            t: state.t(),
            dt,
            max_u: u.max(),
            min_u: u.min(),
            max_v: v.max(),
            min_v: v.min(),
            m_inf,
            c: match state {
                State1d::Euler(s) => s.c,
                State1d::Rd(s) => compute_c(&s.u, &s.v),
            },
            l2_u: u.l2_norm(),
            l2_v: v.l2_norm(),
            energy_residual_u: res_u,
            energy_residual_v: res_v,
            max_abs_psi: state.psi().map(|p| p.max_abs()),
            max_abs_uz: uz.max_abs(),
            max_abs_vz: vz.max_abs(),
            bkm_integral: self.bkm,
            lagrangian: None,
        };
        self.prev_sup_v = v.max_abs();
        self.prev_eu = eu;
        self.prev_ev = ev;
        self.prev_rates = match state {
            State1d::Rd(s) => diagnostics::rd_energy_rates(&s.u, &s.v, &uz, &vz, cfg.nu),
            State1d::Euler(s) => diagnostics::euler_energy_rates(&s.u, &s.v, &uz, &vz, cfg.nu),
        };
        self.prev_uz = uz;
        self.prev_vz = vz;
        rec
    }
}

/// Advance a model to `opts.t_end`, emitting one scalar record per step and
/// field snapshots at the requested times. Blowup terminates the run and is
/// reported in the result, with a terminal record carrying the evidence.
pub fn run_model(
    init: State1d,
    cfg: &ModelConfig,
    ctrl: &mut StepController,
    opts: &RunOptions,
) -> Result<RunResult, ModelError> {
    cfg.validate()?;
    let t_end = opts.t_end;
    if !(t_end > init.t()) {
        return Err(ModelError::BadParams(format!(
            "t_end = {t_end} must exceed the initial time {}",
            init.t()
        )));
    }
    let mut events: Vec<f64> = opts
        .snapshot_times
        .iter()
        .copied()
        .filter(|&t| t > init.t() && t <= t_end)
        .collect();
    events.push(t_end);
    events.sort_by(|a, b| a.partial_cmp(b).unwrap());
    events.dedup();

    let wants_snapshot = |t: f64| {
        opts.snapshot_times
            .iter()
            .any(|&s| (s - t).abs() <= 1e-12 * s.abs().max(1.0))
    };

    let mut state = init;
    let mut records = Vec::new();
    let mut snapshots = Vec::new();

    let snap_of = |state: &State1d| Snapshot {
        t: state.t(),
        u: state.u().clone(),
        v: state.v().clone(),
        psi: state.psi().cloned(),
    };

    let uz0 = spectral::derivative(state.u());
    let vz0 = spectral::derivative(state.v());
    let mut builder = RecordBuilder::new(&state, uz0.clone(), vz0.clone(), cfg);
    records.push(builder.build(&state, 0.0, uz0, vz0, cfg));
    if wants_snapshot(state.t()) {
        snapshots.push(snap_of(&state));
    }

    let mut next_event_idx = 0;
    let eps_t = 1e-12 * t_end.abs().max(1.0);

    let termination = loop {
        if state.t() >= t_end - eps_t {
            break Termination::Completed;
        }
        while events[next_event_idx] <= state.t() + eps_t {
            next_event_idx += 1;
        }
        let target = events[next_event_idx];

        let dt_rule = match adapt_dt(state.u(), state.v(), ctrl) {
            Ok(dt) => dt,
            Err(cause) => {
                // terminal record carrying the evidence of the collapse
                let mut rec = records.last().expect("initial record exists").clone();
                rec.dt = ctrl.dt_min / 2.0;
                let t_star = state.t();
                rec.t = t_star;
                records.push(rec);
                break Termination::Blowup { t: t_star, cause };
            }
        };
        let mut dt = dt_rule;
        if let State1d::Euler(s) = &state {
            dt = dt.min(convective_dt_limit(&s.psi));
            if dt < ctrl.dt_min {
                let mut rec = records.last().expect("initial record exists").clone();
                rec.dt = ctrl.dt_min / 2.0;
                rec.t = state.t();
                records.push(rec);
                break Termination::Blowup {
                    t: state.t(),
                    cause: BlowupCause::DtUnderflow,
                };
            }
        }
        let landing = dt >= target - state.t() - eps_t;
        if landing {
            dt = target - state.t();
        }
        ctrl.dt = dt;

        let prev_t = state.t();
        let (mut next, uz, vz) = match &state {
            State1d::Rd(s) => {
                let (n, uz, vz) = step_rd_with_dt(s, cfg, dt);
                (State1d::Rd(n), uz, vz)
            }
            State1d::Euler(s) => {
                let n = match cfg.scheme {
                    Scheme::ImexEuler => step_euler_imex_with_dt(s, cfg, dt)?,
                    Scheme::Rk2Inviscid => step_euler_rk2_with_dt(s, cfg, dt)?,
                };
                let uz = spectral::derivative(&n.u);
                let vz = spectral::derivative(&n.v);
                (State1d::Euler(n), uz, vz)
            }
        };
        if landing {
            // suppress rounding in the time accumulator at event landings
            match &mut next {
                State1d::Rd(s) => s.t = target,
                State1d::Euler(s) => s.t = target,
            }
        }

        let finite = next.u().is_finite() && next.v().is_finite();
        let rec = builder.build(&next, dt, uz, vz, cfg);
        let sup = rec.sup_u().max(rec.sup_v());
        records.push(rec);
        if !finite {
            break Termination::Blowup {
                t: prev_t,
                cause: BlowupCause::NonFinite,
            };
        }
        state = next;
        if sup > FIELD_BLOWUP_NORM {
            break Termination::Blowup {
                t: state.t(),
                cause: BlowupCause::NormExplosion,
            };
        }
        if wants_snapshot(state.t()) {
            snapshots.push(snap_of(&state));
        }
    };

    Ok(RunResult {
        termination,
        final_state: state,
        records,
        snapshots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;
    use std::sync::Arc;

    const TAU: f64 = 2.0 * PI;

    fn grid(n: usize) -> Arc<PeriodicGrid> {
        PeriodicGrid::new(n).unwrap()
    }

    #[test]
    fn compute_c_examples() {
        let g = grid(64);
        let zero = ScalarField::zeros(&g);
        let sin = ScalarField::from_fn(&g, |z| (TAU * z).sin());
        assert!((compute_c(&zero, &sin) - 1.5).abs() < 1e-12);
        assert!((compute_c(&sin, &sin) - 1.0).abs() < 1e-12);
        assert_eq!(compute_c(&zero, &zero), 0.0);
    }

    #[test]
    fn rd_rhs_constant_fields() {
        let g = grid(32);
        let one = ScalarField::constant(&g, 1.0);
        let (du, dv) = rd_rhs(&one, &one, false);
        assert!(du.values().iter().all(|&x| (x + 2.0).abs() < 1e-14));
        assert!(dv.max_abs() < 1e-14);

        let zero = ScalarField::zeros(&g);
        let v = ScalarField::from_fn(&g, |z| (TAU * z).cos());
        let (du, dv) = rd_rhs(&zero, &v, false);
        assert_eq!(du.max_abs(), 0.0);
        let expect = v.map(|x| -x * x);
        for (a, b) in dv.values().iter().zip(expect.values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn rd_rhs_matches_pointwise_oracle() {
        let g = grid(128);
        use rand::Rng;
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(8);
        let coeffs: Vec<(f64, f64)> = (1..10).map(|_| (rng.gen(), rng.gen())).collect();
        let u = ScalarField::from_fn(&g, |z| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, (a, b))| a * (TAU * (k + 1) as f64 * z).sin() + b)
                .sum()
        });
        let v = u.map(|x| 0.7 * x - 0.3);
        let (du, dv) = rd_rhs(&u, &v, false);
        for i in 0..g.len() {
            let (uu, vv) = (u.values()[i], v.values()[i]);
            assert!((du.values()[i] - (-2.0 * vv * uu)).abs() < 1e-12);
            assert!((dv.values()[i] - (uu * uu - vv * vv)).abs() < 1e-12);
        }
    }

    #[test]
    fn euler_rhs_zero_state() {
        let g = grid(32);
        let s = EulerState::new(ScalarField::zeros(&g), ScalarField::zeros(&g), 0.0).unwrap();
        let (du, dv) = euler1d_rhs(&s, &ModelConfig::default());
        assert_eq!(du.max_abs(), 0.0);
        assert_eq!(dv.max_abs(), 0.0);
    }

    #[test]
    fn euler_rhs_term_by_term() {
        // u = 0, v = sin: dv = -2 psi v_z - v^2 + 3/2 with psi = cos/(2 pi)
        let g = grid(256);
        let v = ScalarField::from_fn(&g, |z| (TAU * z).sin());
        let s = EulerState::new(ScalarField::zeros(&g), v, 0.0).unwrap();
        let cfg = ModelConfig {
            dealias_on: false,
            ..ModelConfig::default()
        };
        let (du, dv) = euler1d_rhs(&s, &cfg);
        assert!(du.max_abs() < 1e-12);
        let expect = ScalarField::from_fn(&g, |z| {
            let psi = (TAU * z).cos() / TAU;
            let vz = TAU * (TAU * z).cos();
            let vv = (TAU * z).sin();
            -2.0 * psi * vz - vv * vv + 1.5
        });
        for (a, b) in dv.values().iter().zip(expect.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn euler_rhs_preserves_mean() {
        use rand::Rng;
        let g = grid(128);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(77);
        for _ in 0..20 {
            let coeffs: Vec<(f64, f64, f64)> = (1..8)
                .map(|k| (k as f64, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let v = ScalarField::from_fn(&g, |z| {
                coeffs
                    .iter()
                    .map(|(k, a, b)| a * (TAU * k * z).sin() + b * (TAU * k * z).cos())
                    .sum()
            });
            let amp: f64 = rng.gen_range(-1.0..1.0);
            let u = ScalarField::from_fn(&g, |z| amp * (TAU * z).sin() + 0.2);
            let s = EulerState::new(u, v, 0.0).unwrap();
            for dealias_on in [false, true] {
                let cfg = ModelConfig {
                    dealias_on,
                    ..ModelConfig::default()
                };
                let (_, dv) = euler1d_rhs(&s, &cfg);
                assert!(dv.mean().abs() < 1e-10, "mean(dv) = {:e}", dv.mean());
            }
        }
    }

    #[test]
    fn adapt_dt_examples() {
        let g = grid(32);
        let ctrl = StepController::new(0.01);
        let zero = ScalarField::zeros(&g);
        assert_eq!(adapt_dt(&zero, &zero, &ctrl).unwrap(), 0.01);

        // extrema 100, -100, 0ish, -800 -> S = 1000
        let u = ScalarField::from_fn(&g, |z| 100.0 * (TAU * z).sin());
        let v = ScalarField::from_fn(&g, |z| -400.0 - 400.0 * (TAU * z).cos());
        let dt = adapt_dt(&u, &v, &ctrl).unwrap();
        assert!((dt - 1e-5).abs() < 1e-18);

        let huge = ScalarField::constant(&g, 5e11);
        assert_eq!(
            adapt_dt(&huge, &huge, &ctrl).unwrap_err(),
            BlowupCause::DtUnderflow
        );
    }

    #[test]
    fn imex_step_zero_state_is_fixed_point() {
        let g = grid(32);
        let s = RdState::new(ScalarField::zeros(&g), ScalarField::zeros(&g), 0.0);
        let cfg = ModelConfig {
            nu: 0.0,
            ..ModelConfig::default()
        };
        let (next, _, _) = step_rd_with_dt(&s, &cfg, 0.1);
        assert_eq!(next.u.max_abs(), 0.0);
        assert_eq!(next.v.max_abs(), 0.0);
        assert_eq!(next.t, 0.1);
    }

    #[test]
    fn imex_step_pure_diffusion_single_mode() {
        // v = 0 makes du vanish, so u undergoes pure implicit diffusion.
        let g = grid(64);
        let u = ScalarField::from_fn(&g, |z| (TAU * z).sin());
        let s = RdState::new(u.clone(), ScalarField::zeros(&g), 0.0);
        let cfg = ModelConfig::default(); // nu = 1
        let (next, _, _) = step_rd_with_dt(&s, &cfg, 0.1);
        let expect = u.map(|x| x / (1.0 + 0.4 * PI * PI));
        for (a, b) in next.u.values().iter().zip(expect.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    /// Naive O(n^2) DFT used as an independent assembly of one IMEX step.
    fn naive_imex_step(
        u: &[f64],
        v: &[f64],
        dt: f64,
        nu: f64,
    ) -> (Vec<f64>, Vec<f64>) {
        let n = u.len();
        let du: Vec<f64> = (0..n).map(|i| -2.0 * v[i] * u[i]).collect();
        let dv: Vec<f64> = (0..n).map(|i| u[i] * u[i] - v[i] * v[i]).collect();
        let advance = |f: &[f64], df: &[f64]| -> Vec<f64> {
            let star: Vec<f64> = f.iter().zip(df).map(|(a, b)| a + dt * b).collect();
            // naive DFT, solve (1 + nu dt k^2), inverse
            let mut out = vec![0.0; n];
            for (idx, o) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for kbin in 0..n {
                    let k = if kbin <= n / 2 {
                        kbin as i64
                    } else {
                        kbin as i64 - n as i64
                    };
                    let kk = 2.0 * PI * k as f64;
                    let mut re = 0.0;
                    let mut im = 0.0;
                    for (j, &fj) in star.iter().enumerate() {
                        let ang = -TAU * (kbin * j) as f64 / n as f64;
                        re += fj * ang.cos();
                        im += fj * ang.sin();
                    }
                    let denom = 1.0 + nu * dt * kk * kk;
                    let ang = TAU * (kbin * idx) as f64 / n as f64;
                    acc += (re / denom) * ang.cos() - (im / denom) * ang.sin();
                }
                *o = acc / n as f64;
            }
            out
        };
        (advance(u, &du), advance(v, &dv))
    }

    #[test]
    fn imex_step_matches_independent_assembly() {
        // One step from the reaction-diffusion initial data on a small grid,
        // against a naive-DFT assembly of the same scheme.
        let g = grid(32);
        let eps = 1e-3;
        let u = ScalarField::from_fn(&g, |z| eps * (2.0 + (TAU * z).sin()));
        let v = ScalarField::from_fn(&g, |z| -1.0 / eps - (TAU * z).sin());
        let dt = 1e-5;
        let s = RdState::new(u.clone(), v.clone(), 0.0);
        let cfg = ModelConfig {
            dealias_on: false,
            ..ModelConfig::default()
        };
        let (next, _, _) = step_rd_with_dt(&s, &cfg, dt);
        let (u_ref, v_ref) = naive_imex_step(u.values(), v.values(), dt, cfg.nu);
        let scale_u = next.u.max_abs();
        let scale_v = next.v.max_abs();
        for i in 0..g.len() {
            assert!((next.u.values()[i] - u_ref[i]).abs() < 1e-12 * scale_u.max(1.0));
            assert!((next.v.values()[i] - v_ref[i]).abs() < 1e-12 * scale_v.max(1.0));
        }
    }

    #[test]
    fn euler_run_keeps_v_mean_free() {
        let g = grid(256);
        let u = ScalarField::from_fn(&g, |z| 0.5 + 0.1 * (TAU * z).sin());
        let v = ScalarField::from_fn(&g, |z| (TAU * z).sin() + 0.3 * (2.0 * TAU * z).cos());
        let init = State1d::Euler(EulerState::new(u, v, 0.0).unwrap());
        let cfg = ModelConfig::default();
        let mut ctrl = StepController::new(1e-3);
        let opts = RunOptions {
            t_end: 0.05,
            snapshot_times: vec![],
        };
        let result = run_model(init, &cfg, &mut ctrl, &opts).unwrap();
        assert_eq!(result.termination, Termination::Completed);
        if let State1d::Euler(s) = &result.final_state {
            assert!(s.v.mean().abs() <= 1e-9);
        } else {
            panic!("expected an Euler state");
        }
        assert!(result.records.len() > 10);
    }

    #[test]
    fn energy_residuals_shrink_with_dt() {
        // First-order consistency: per-step energy residual is O(dt^2), so
        // residual/dt halves when dt halves (within a factor 2.5).
        let g = grid(256);
        let u = ScalarField::from_fn(&g, |z| 0.3 * (TAU * z).sin() + 0.1);
        let v = ScalarField::from_fn(&g, |z| (TAU * z).sin() + (2.0 * TAU * z).cos());
        let residual_per_dt = |dt: f64| {
            let init = EulerState::new(u.clone(), v.clone(), 0.0).unwrap();
            let cfg = ModelConfig::default();
            let next = step_euler_imex_with_dt(&init, &cfg, dt).unwrap();
            let (ru, rv) = diagnostics::energy_budget(&init, &next, &cfg);
            (ru / dt, rv / dt)
        };
        let (ru1, rv1) = residual_per_dt(1e-4);
        let (ru2, rv2) = residual_per_dt(5e-5);
        assert!(ru1 / ru2 > 2.5 / 2.5 && ru1 / ru2 < 2.5 * 2.0, "u ratio {}", ru1 / ru2);
        assert!(rv1 / rv2 > 2.5 / 2.5 && rv1 / rv2 < 2.5 * 2.0, "v ratio {}", rv1 / rv2);
    }

    #[test]
    fn run_model_lands_snapshots_exactly() {
        let g = grid(64);
        let u = ScalarField::from_fn(&g, |z| 0.1 * (TAU * z).sin());
        let v = ScalarField::from_fn(&g, |z| 0.2 * (TAU * z).cos());
        let init = State1d::Euler(EulerState::new(u, v, 0.0).unwrap());
        let cfg = ModelConfig::default();
        let mut ctrl = StepController::new(1e-3);
        let opts = RunOptions {
            t_end: 0.02,
            snapshot_times: vec![0.0, 0.013, 0.02],
        };
        let result = run_model(init, &cfg, &mut ctrl, &opts).unwrap();
        let times: Vec<f64> = result.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(times, vec![0.0, 0.013, 0.02]);
        assert_eq!(result.final_state.t(), 0.02);
    }
}
