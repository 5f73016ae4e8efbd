use serde::{Deserialize, Serialize};

use super::grid::ScalarField;
use super::scenario::Scenario;

/// Density `u` and chemical concentration `v` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub t: f64,
    pub u: ScalarField,
    pub v: ScalarField,
}

/// Outcome of the pointwise a-priori bound on one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowStatus {
    Pass,
    Fail,
    /// Frame at or after the guaranteed existence time; nothing is claimed.
    OutsideWindow,
}

impl WindowStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            WindowStatus::Pass => "pass",
            WindowStatus::Fail => "fail",
            WindowStatus::OutsideWindow => "outside-window",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameDiagnostics {
    pub t: f64,
    pub mass: f64,
    pub max_u: f64,
    /// `max |Δ(u+ε)^(m-1)| / dx` over faces.
    pub lip_w: f64,
    pub sup_dxv: f64,
    pub linf: WindowStatus,
    /// Support (above the relative floor) still at least the clearance away from the edges.
    pub clear_of_boundary: bool,
}

/// Time-ordered frames of one run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub scenario: Scenario,
    /// `(||u0||_inf + 2)^-q`.
    pub existence_time: f64,
    /// `||u0||_inf + 2`.
    pub linf_bound: f64,
    pub frames: Vec<SolverState>,
    pub diagnostics: Vec<FrameDiagnostics>,
    /// Total mass removed by clamping round-off negatives.
    pub clamped_mass: f64,
    pub steps: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.t).collect()
    }

    /// Frames with `t < T0`.
    pub fn in_window(&self) -> impl Iterator<Item = (usize, &SolverState)> {
        let t0 = self.existence_time;
        self.frames
            .iter()
            .enumerate()
            .filter(move |(_, f)| f.t < t0)
    }

    pub fn initial_mass(&self) -> f64 {
        self.diagnostics.first().map_or(0.0, |d| d.mass)
    }

    /// Largest relative mass deviation from the first frame.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.initial_mass();
        let worst = self
            .diagnostics
            .iter()
            .fold(0.0_f64, |w, d| w.max((d.mass - m0).abs()));
        if m0 > 0.0 {
            worst / m0
        } else {
            worst
        }
    }
}
