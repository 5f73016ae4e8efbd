//! Explicit conservative finite-volume update for
//! `u_t = ∂x( ∂x(u+ε)^m - (u+ε)^(q-2) u ∂x v )`.
//!
//! Diffusion is the exact difference of `(u+ε)^m` across each face; the drift
//! is upwinded on the sign of the face value of `∂x v`. The two boundary
//! faces carry no flux, so the update telescopes and conserves mass to
//! round-off.

use log::debug;

use crate::elliptic;
use crate::error::{Aborted, Error, Result};
use crate::model::{
    sample_initial_data, FrameDiagnostics, Grid1D, ScalarField, Scenario, SolverState, Trajectory,
    WindowStatus, BOUNDARY_CLEARANCE_CELLS, SUPPORT_FLOOR,
};
use crate::numeric::{self, pow};

/// Largest negative value silently clamped to zero after an update.
pub const CLAMP_TOLERANCE: f64 = 1e-13;
/// Per-step relative mass change that aborts a run.
pub const STEP_MASS_TOLERANCE: f64 = 1e-13;
/// Slack on the pointwise a-priori bound.
pub const LINF_SLACK: f64 = 1e-10;

/// Face fluxes `F_{i+1/2}`; `u_i += dt/dx (F_{i+1/2} - F_{i-1/2})`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxField {
    pub grid: Grid1D,
    /// `n_cells + 1` values, the first and last always zero.
    pub face_values: Vec<f64>,
}

/// `(u+ε)^(q-2) u`.
#[inline]
pub fn drift_mobility(u: f64, epsilon: f64, q: f64) -> f64 {
    pow(u + epsilon, q - 2.0) * u
}

/// Reusable buffers for the flux evaluation.
#[derive(Debug, Default)]
struct Workspace {
    pressure: Vec<f64>,
    mobility: Vec<f64>,
    flux: Vec<f64>,
}

impl Workspace {
    fn fill_flux(&mut self, u: &[f64], dxv: Option<&[f64]>, s: &Scenario) -> Result<()> {
        let n = u.len();
        let dx = s.grid.dx();
        self.pressure.clear();
        self.mobility.clear();
        for (i, &ui) in u.iter().enumerate() {
            if !ui.is_finite() {
                return Err(Error::NonFinite {
                    what: "u",
                    index: i,
                });
            }
            self.pressure.push(pow(ui + s.epsilon, s.m));
            if dxv.is_some() {
                self.mobility.push(drift_mobility(ui, s.epsilon, s.q));
            }
        }
        self.flux.clear();
        self.flux.resize(n + 1, 0.0);
        for k in 1..n {
            let mut f = (self.pressure[k] - self.pressure[k - 1]) / dx;
            if let Some(g) = dxv {
                let c = 0.5 * (g[k - 1] + g[k]);
                let upwind = if c > 0.0 {
                    self.mobility[k - 1]
                } else {
                    self.mobility[k]
                };
                f -= upwind * c;
            }
            self.flux[k] = f;
        }
        Ok(())
    }
}

fn drift_gradient(state: &SolverState, s: &Scenario) -> Result<Option<ScalarField>> {
    if s.drift_enabled {
        Ok(Some(elliptic::gradient(&state.u, &state.v, s.gamma)?))
    } else {
        Ok(None)
    }
}

pub fn compute_flux(state: &SolverState, scenario: &Scenario) -> Result<FluxField> {
    let dxv = drift_gradient(state, scenario)?;
    let mut ws = Workspace::default();
    ws.fill_flux(state.u.values(), dxv.as_ref().map(|f| f.values()), scenario)?;
    Ok(FluxField {
        grid: *state.u.grid(),
        face_values: ws.flux,
    })
}

fn dt_bound(max_u: f64, sup_dxv: f64, s: &Scenario) -> f64 {
    let dx = s.grid.dx();
    let top = max_u + s.epsilon;
    let diffusive = dx * dx / (2.0 * s.m * pow(top, s.m - 1.0));
    let speed = if s.drift_enabled {
        pow(top, s.q - 2.0) * sup_dxv
    } else {
        0.0
    };
    s.cfl_sigma * diffusive.min(dx / (speed + 1e-30))
}

/// `σ min( dx² / (2m (max u+ε)^(m-1)), dx / (drift speed) )`.
pub fn stable_dt(state: &SolverState, scenario: &Scenario) -> Result<f64> {
    let sup = match drift_gradient(state, scenario)? {
        Some(g) => numeric::max_abs(g.values()),
        None => 0.0,
    };
    Ok(dt_bound(state.u.max().max(0.0), sup, scenario))
}

/// One explicit step; also returns the mass removed by clamping.
pub fn advance(state: &SolverState, scenario: &Scenario, dt: f64) -> Result<(SolverState, f64)> {
    let mut ws = Workspace::default();
    let dxv = drift_gradient(state, scenario)?;
    advance_with(&mut ws, state, dxv.as_ref(), scenario, dt)
}

/// One explicit step of size `dt`.
pub fn step(state: &SolverState, scenario: &Scenario, dt: f64) -> Result<SolverState> {
    advance(state, scenario, dt).map(|(s, _)| s)
}

fn advance_with(
    ws: &mut Workspace,
    state: &SolverState,
    dxv: Option<&ScalarField>,
    s: &Scenario,
    dt: f64,
) -> Result<(SolverState, f64)> {
    let sup = dxv.map_or(0.0, |g| numeric::max_abs(g.values()));
    let limit = dt_bound(state.u.max().max(0.0), sup, s);
    if !(dt >= 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::StepTooLarge { dt, limit });
    }
    ws.fill_flux(state.u.values(), dxv.map(|g| g.values()), s)?;
    let ratio = dt / s.grid.dx();
    let mut u = state.u.clone();
    for (i, ui) in u.values_mut().iter_mut().enumerate() {
        *ui += ratio * (ws.flux[i + 1] - ws.flux[i]);
    }
    let before = numeric::sum(state.u.values().iter().copied());
    let after = numeric::sum(u.values().iter().copied());
    let drift = (after - before).abs() / before.max(f64::MIN_POSITIVE);
    if before > 0.0 && drift > STEP_MASS_TOLERANCE {
        return Err(Error::MassDrift {
            relative: drift,
            tolerance: STEP_MASS_TOLERANCE,
        });
    }
    let mut clamped = 0.0;
    for (i, ui) in u.values_mut().iter_mut().enumerate() {
        if *ui < 0.0 {
            if *ui < -CLAMP_TOLERANCE {
                return Err(Error::NegativeDensity {
                    cell: i,
                    value: *ui,
                });
            }
            clamped -= *ui;
            *ui = 0.0;
        }
    }
    if clamped > 0.0 {
        debug!(
            "t={:.6e}: clamped {:e} of mass",
            state.t + dt,
            clamped * s.grid.dx()
        );
    }
    let v = elliptic::solve(&u, s.gamma)?;
    Ok((
        SolverState {
            t: state.t + dt,
            u,
            v,
        },
        clamped * s.grid.dx(),
    ))
}

/// `max |Δ(u+ε)^(m-1)| / dx` over faces.
pub fn pressure_slope(u: &ScalarField, m: f64, epsilon: f64) -> f64 {
    let dx = u.grid().dx();
    u.values()
        .windows(2)
        .map(|w| (pow(w[1] + epsilon, m - 1.0) - pow(w[0] + epsilon, m - 1.0)).abs() / dx)
        .fold(0.0, f64::max)
}

fn diagnose(
    state: &SolverState,
    s: &Scenario,
    existence_time: f64,
    bound: f64,
) -> Result<FrameDiagnostics> {
    let faces = elliptic::face_gradient(&state.u, &state.v, s.gamma)?;
    let max_u = state.u.max();
    let linf = if state.t < existence_time {
        if max_u <= bound + LINF_SLACK {
            WindowStatus::Pass
        } else {
            WindowStatus::Fail
        }
    } else {
        WindowStatus::OutsideWindow
    };
    let n = s.grid.n_cells();
    let clear = match state.u.support(SUPPORT_FLOOR) {
        None => true,
        Some((a, b)) => a >= BOUNDARY_CLEARANCE_CELLS && b + BOUNDARY_CLEARANCE_CELLS < n,
    };
    Ok(FrameDiagnostics {
        t: state.t,
        mass: state.u.mass(),
        max_u,
        lip_w: pressure_slope(&state.u, s.m, s.epsilon),
        sup_dxv: numeric::max_abs(&faces),
        linf,
        clear_of_boundary: clear,
    })
}

/// Initial state `(u0, v0)` of a scenario.
pub fn initial_state(scenario: &Scenario) -> Result<SolverState> {
    let u = sample_initial_data(&scenario.u0, &scenario.grid, scenario.m)?;
    u.check_nonnegative(0.0)?;
    let v = elliptic::solve(&u, scenario.gamma)?;
    Ok(SolverState { t: 0.0, u, v })
}

/// Integrates a scenario to `t_end`, recording `n_frames + 1` evenly spaced frames.
pub fn run(scenario: &Scenario) -> std::result::Result<Trajectory, Box<Aborted<Trajectory>>> {
    let mut traj = Trajectory {
        scenario: scenario.clone(),
        existence_time: f64::NAN,
        linf_bound: f64::NAN,
        frames: Vec::new(),
        diagnostics: Vec::new(),
        clamped_mass: 0.0,
        steps: 0,
    };
    match run_into(scenario, &mut traj) {
        Ok(()) => Ok(traj),
        Err(error) => Err(Box::new(Aborted {
            error,
            partial: traj,
        })),
    }
}

fn run_into(s: &Scenario, traj: &mut Trajectory) -> Result<()> {
    s.validate()?;
    let sup0 = s.u0_sup()?;
    traj.existence_time = s.existence_time()?;
    traj.linf_bound = sup0 + 2.0;
    let mut state = initial_state(s)?;
    let record = |traj: &mut Trajectory, state: &SolverState| -> Result<()> {
        let d = diagnose(state, s, traj.existence_time, traj.linf_bound)?;
        traj.diagnostics.push(d);
        traj.frames.push(state.clone());
        Ok(())
    };
    record(traj, &state)?;
    if s.t_end == 0.0 {
        return Ok(());
    }
    let mut ws = Workspace::default();
    for k in 1..=s.n_frames {
        let target = s.t_end * k as f64 / s.n_frames as f64;
        while state.t < target {
            let dxv = drift_gradient(&state, s)?;
            let sup = dxv.as_ref().map_or(0.0, |g| numeric::max_abs(g.values()));
            let limit = dt_bound(state.u.max().max(0.0), sup, s);
            let remaining = target - state.t;
            let dt = if remaining <= limit { remaining } else { limit };
            let (mut next, clamped) = advance_with(&mut ws, &state, dxv.as_ref(), s, dt)?;
            if dt == remaining {
                next.t = target;
            }
            traj.clamped_mass += clamped;
            traj.steps += 1;
            state = next;
        }
        record(traj, &state)?;
    }
    Ok(())
}
