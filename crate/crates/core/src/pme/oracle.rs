use serde::{Deserialize, Serialize};

use super::BarenblattProfile;
use crate::error::{Aborted, Error, Result};
use crate::interface::{integrate_interfaces, InterfacePair, SignConvention};
use crate::model::{InitialData, Trajectory, SUPPORT_FLOOR};
use crate::numeric;

/// Interfaces moving with `-∂x (m/(m-1)) U^(m-1)` through a drift-free run.
pub fn knerr_interface(
    trajectory: &Trajectory,
    a: f64,
    b: f64,
) -> std::result::Result<InterfacePair, Box<Aborted<InterfacePair>>> {
    if trajectory.scenario.drift_enabled {
        return Err(Box::new(Aborted {
            error: Error::Precondition("porous-medium interfaces need a drift-free run".into()),
            partial: InterfacePair {
                times: Vec::new(),
                left: Vec::new(),
                right: Vec::new(),
                a,
                b,
                convention: SignConvention::Material,
                closed_at: None,
            },
        }));
    }
    integrate_interfaces(trajectory, a, b, SignConvention::Material)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmeErrorRow {
    pub t: f64,
    pub l1_error: f64,
    /// Outermost face of the numerical support, as a distance from the origin.
    pub support_edge_numeric: f64,
    pub support_edge_exact: f64,
}

/// Per-frame L¹ distance to the Barenblatt profile at time `t0_offset + t`.
pub fn pme_error(
    trajectory: &Trajectory,
    profile: &BarenblattProfile,
    t0_offset: f64,
) -> Result<Vec<PmeErrorRow>> {
    let s = &trajectory.scenario;
    if s.drift_enabled {
        return Err(Error::Precondition(
            "comparison needs a drift-free run".into(),
        ));
    }
    match s.u0 {
        InitialData::Barenblatt { t0, mass }
            if t0 == t0_offset && mass == profile.mass() && s.m == profile.m() => {}
        _ => {
            return Err(Error::Precondition(format!(
                "scenario does not start from the Barenblatt profile with m = {}, mass = {}, t0 = {t0_offset}",
                profile.m(),
                profile.mass()
            )))
        }
    }
    let g = s.grid;
    let dx = g.dx();
    trajectory
        .frames
        .iter()
        .map(|f| {
            let t = t0_offset + f.t;
            let exact = g.centers().map(|x| profile.value_unchecked(x, t));
            let l1 = dx * numeric::sum(f.u.values().iter().zip(exact).map(|(u, e)| (u - e).abs()));
            let edge = match f.u.support(SUPPORT_FLOOR) {
                Some((i, j)) => g.face(i).abs().max(g.face(j + 1).abs()),
                None => 0.0,
            };
            Ok(PmeErrorRow {
                t: f.t,
                l1_error: l1,
                support_edge_numeric: edge,
                support_edge_exact: profile.edge(t)?,
            })
        })
        .collect()
}
