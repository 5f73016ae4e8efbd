//! Inner interfaces of a vacuum hole: the curves starting at the hole edges
//! and moving with the transport velocity of `u + ε`, the cone between them,
//! and the mass and vacuum checks over that cone.

use serde::{Deserialize, Serialize};

use crate::elliptic;
use crate::error::{Aborted, Error, Result};
use crate::model::{ScalarField, Scenario, SolverState, Trajectory};
use crate::numeric::{self, pow};

/// Sign convention of the interface equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SignConvention {
    /// `ξ' = -∂x w + (u+ε)^(q-3) u ∂x v`: the transport velocity of `u + ε`.
    #[default]
    Material,
    /// Both terms with the opposite sign.
    Reflected,
}

impl SignConvention {
    pub fn as_str(&self) -> &'static str {
        match self {
            SignConvention::Material => "material",
            SignConvention::Reflected => "reflected",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "material" => Ok(SignConvention::Material),
            "reflected" => Ok(SignConvention::Reflected),
            other => Err(Error::Config(format!("unknown sign convention '{other}'"))),
        }
    }
}

/// `(u+ε)^(q-3) u`, zero where `u ≤ 0`.
#[inline]
pub fn interface_mobility(u: f64, epsilon: f64, q: f64) -> f64 {
    if u > 0.0 {
        pow(u + epsilon, q - 3.0) * u
    } else {
        0.0
    }
}

/// Interface velocity of one state, ready for point evaluation.
#[derive(Debug, Clone)]
pub struct VelocityField {
    x_min: f64,
    dx: f64,
    /// `∂x w` at faces `0..=n`; only faces `1..n` are used.
    pressure_gradient: Vec<f64>,
    /// `(u+ε)^(q-3) u ∂x v` at cell centres.
    drift: Vec<f64>,
    convention: SignConvention,
}

impl VelocityField {
    pub fn new(
        state: &SolverState,
        scenario: &Scenario,
        convention: SignConvention,
    ) -> Result<Self> {
        let grid = *state.u.grid();
        let (m, eps) = (scenario.m, scenario.epsilon);
        let dx = grid.dx();
        let coef = m / (m - 1.0);
        let w: Vec<f64> = state
            .u
            .values()
            .iter()
            .map(|&u| coef * pow(u + eps, m - 1.0))
            .collect();
        let mut pressure_gradient = vec![0.0; w.len() + 1];
        for k in 1..w.len() {
            pressure_gradient[k] = (w[k] - w[k - 1]) / dx;
        }
        let drift = if scenario.drift_enabled {
            let dxv = elliptic::gradient(&state.u, &state.v, scenario.gamma)?;
            state
                .u
                .values()
                .iter()
                .zip(dxv.values())
                .map(|(&u, &g)| interface_mobility(u, eps, scenario.q) * g)
                .collect()
        } else {
            vec![0.0; w.len()]
        };
        Ok(VelocityField {
            x_min: grid.x_min(),
            dx,
            pressure_gradient,
            drift,
            convention,
        })
    }

    /// Interval on which the velocity is defined.
    pub fn interior(&self) -> (f64, f64) {
        let n = self.drift.len() as f64;
        (self.x_min + self.dx, self.x_min + (n - 1.0) * self.dx)
    }

    /// Diffusive part `∂x w` and drift part, linearly interpolated at `x`.
    pub fn components(&self, x: f64) -> Result<(f64, f64)> {
        let (lo, hi) = self.interior();
        if !(x >= lo && x <= hi) {
            return Err(Error::OutsideInterior { x, lo, hi });
        }
        let n = self.drift.len();
        let s = (x - self.x_min) / self.dx;
        let k = (s.floor() as usize).clamp(1, n - 2);
        let lam = s - k as f64;
        let dw = (1.0 - lam) * self.pressure_gradient[k] + lam * self.pressure_gradient[k + 1];
        let c = s - 0.5;
        let j = (c.floor() as usize).min(n - 2);
        let mu = c - j as f64;
        let drift = (1.0 - mu) * self.drift[j] + mu * self.drift[j + 1];
        Ok((dw, drift))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let (dw, drift) = self.components(x)?;
        Ok(match self.convention {
            SignConvention::Material => -dw + drift,
            SignConvention::Reflected => dw - drift,
        })
    }
}

pub fn interface_velocity(
    state: &SolverState,
    scenario: &Scenario,
    x: f64,
    convention: SignConvention,
) -> Result<f64> {
    VelocityField::new(state, scenario, convention)?.eval(x)
}

/// The two inner interfaces sampled at frame times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfacePair {
    pub times: Vec<f64>,
    /// Curve starting at the left hole edge.
    pub left: Vec<f64>,
    /// Curve starting at the right hole edge.
    pub right: Vec<f64>,
    pub a: f64,
    pub b: f64,
    pub convention: SignConvention,
    /// First frame time at which the curves met; samples stop before it.
    pub closed_at: Option<f64>,
}

impl InterfacePair {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest discrete `|Δξ/Δt|` over both curves.
    pub fn max_speed(&self) -> f64 {
        let mut best = 0.0_f64;
        for k in 1..self.times.len() {
            let h = self.times[k] - self.times[k - 1];
            best = best
                .max((self.left[k] - self.left[k - 1]).abs() / h)
                .max((self.right[k] - self.right[k - 1]).abs() / h);
        }
        best
    }
}

/// Heun integration of both interfaces through the frames of a trajectory.
pub fn integrate_interfaces(
    trajectory: &Trajectory,
    a: f64,
    b: f64,
    convention: SignConvention,
) -> std::result::Result<InterfacePair, Box<Aborted<InterfacePair>>> {
    let mut pair = InterfacePair {
        times: Vec::new(),
        left: Vec::new(),
        right: Vec::new(),
        a,
        b,
        convention,
        closed_at: None,
    };
    match integrate_into(trajectory, &mut pair) {
        Ok(()) => Ok(pair),
        Err(error) => Err(Box::new(Aborted {
            error,
            partial: pair,
        })),
    }
}

fn integrate_into(traj: &Trajectory, pair: &mut InterfacePair) -> Result<()> {
    if !(pair.a < pair.b) {
        return Err(Error::Precondition(format!(
            "hole [{}, {}] is empty",
            pair.a, pair.b
        )));
    }
    let Some(first) = traj.frames.first() else {
        return Ok(());
    };
    let s = &traj.scenario;
    let mut current = VelocityField::new(first, s, pair.convention)?;
    let (lo, hi) = current.interior();
    for x in [pair.a, pair.b] {
        if !(x >= lo && x <= hi) {
            return Err(Error::OutsideInterior { x, lo, hi });
        }
    }
    pair.times.push(first.t);
    pair.left.push(pair.a);
    pair.right.push(pair.b);
    let (mut xl, mut xr) = (pair.a, pair.b);
    for frame in &traj.frames[1..] {
        let t0 = *pair.times.last().unwrap();
        let h = frame.t - t0;
        let next = VelocityField::new(frame, s, pair.convention)?;
        let kl = current.eval(xl)?;
        let kr = current.eval(xr)?;
        let nl = next.eval(xl + h * kl)?;
        let nr = next.eval(xr + h * kr)?;
        let yl = xl + 0.5 * h * (kl + nl);
        let yr = xr + 0.5 * h * (kr + nr);
        if yl >= yr {
            pair.closed_at = Some(frame.t);
            return Ok(());
        }
        for x in [yl, yr] {
            if !(x >= lo && x <= hi) {
                return Err(Error::OutsideInterior { x, lo, hi });
            }
        }
        xl = yl;
        xr = yr;
        pair.times.push(frame.t);
        pair.left.push(xl);
        pair.right.push(xr);
        current = next;
    }
    Ok(())
}

/// `∫ (u+ε) dx` over `[lo, hi]` with `u` piecewise constant on cells and
/// partially covered end cells weighted by the covered length.
pub fn interval_mass(u: &ScalarField, epsilon: f64, lo: f64, hi: f64) -> f64 {
    let g = u.grid();
    let dx = g.dx();
    let n = g.n_cells();
    if !(hi > lo) {
        return 0.0;
    }
    let first = (((lo - g.x_min()) / dx).floor().max(0.0) as usize).min(n - 1);
    let last = (((hi - g.x_min()) / dx).floor().max(0.0) as usize).min(n - 1);
    let vals = u.values();
    numeric::sum((first..=last).map(|i| {
        let cl = g.face(i).max(lo);
        let cr = g.face(i + 1).min(hi);
        (cr - cl).max(0.0) * (vals[i] + epsilon)
    }))
}

/// `∫ (u+ε) dx` between the two interfaces at one frame.
pub fn cone_mass(trajectory: &Trajectory, pair: &InterfacePair, frame_index: usize) -> Result<f64> {
    if frame_index >= pair.len() || frame_index >= trajectory.frames.len() {
        return Err(Error::OutOfRange {
            index: frame_index,
            len: pair.len().min(trajectory.frames.len()),
        });
    }
    let frame = &trajectory.frames[frame_index];
    Ok(interval_mass(
        &frame.u,
        trajectory.scenario.epsilon,
        pair.left[frame_index],
        pair.right[frame_index],
    ))
}

/// Cone mass at every frame covered by the pair.
pub fn cone_masses(trajectory: &Trajectory, pair: &InterfacePair) -> Result<Vec<f64>> {
    (0..pair.len().min(trajectory.frames.len()))
        .map(|k| cone_mass(trajectory, pair, k))
        .collect()
}

/// Largest relative deviation of the cone mass from its initial value
/// (absolute when the initial cone is empty).
pub fn cone_mass_drift(trajectory: &Trajectory, pair: &InterfacePair) -> Result<f64> {
    let masses = cone_masses(trajectory, pair)?;
    let Some(&m0) = masses.first() else {
        return Ok(0.0);
    };
    let worst = masses.iter().fold(0.0_f64, |w, &m| w.max((m - m0).abs()));
    Ok(if m0 > 0.0 { worst / m0 } else { worst })
}

/// Cells kept away from each interface when probing the cone interior.
pub const VACUUM_MARGIN_CELLS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VacuumSample {
    pub t: f64,
    /// `max u` over cells whose centres lie in `(ξ + margin, Ξ - margin)`.
    pub interior_max_u: f64,
    /// `∫ u dx` over the same open interval.
    pub interior_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VacuumReport {
    pub epsilon: f64,
    pub dx: f64,
    pub samples: Vec<VacuumSample>,
}

impl VacuumReport {
    pub fn worst_max_u(&self) -> f64 {
        self.samples
            .iter()
            .fold(0.0, |w, s| w.max(s.interior_max_u))
    }
}

/// Largest `u` strictly inside the cone, `margin` away from both ends.
pub fn interior_max(u: &ScalarField, lo: f64, hi: f64) -> f64 {
    let g = u.grid();
    u.values()
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let x = g.center(*i);
            x > lo && x < hi
        })
        .fold(0.0_f64, |w, (_, &v)| w.max(v))
}

pub fn vacuum_check(trajectory: &Trajectory, pair: &InterfacePair) -> VacuumReport {
    let dx = trajectory.scenario.grid.dx();
    let margin = VACUUM_MARGIN_CELLS * dx;
    let samples = (0..pair.len().min(trajectory.frames.len()))
        .map(|k| {
            let u = &trajectory.frames[k].u;
            let lo = pair.left[k] + margin;
            let hi = pair.right[k] - margin;
            VacuumSample {
                t: pair.times[k],
                interior_max_u: interior_max(u, lo, hi),
                interior_mass: interval_mass(u, 0.0, lo, hi),
            }
        })
        .collect();
    VacuumReport {
        epsilon: trajectory.scenario.epsilon,
        dx,
        samples,
    }
}
