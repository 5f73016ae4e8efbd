//! Verification harness: runs scenarios and turns every checkable claim into
//! a pass/fail/outside-window verdict with the measured values and the
//! tolerances used.

use std::collections::BTreeMap;
use std::path::Path;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    cutoff_property_check, holder_check, lipschitz_sup, ratio_bounds_check, vacuum_slope,
    CutoffFamily, HolderConstant, PsiTransform,
};
use crate::error::{Aborted, Error, Result};
use crate::interface::{
    cone_mass_drift, integrate_interfaces, vacuum_check, InterfacePair, SignConvention,
    VacuumReport,
};
use crate::model::{InitialData, Scenario, Trajectory, WindowStatus};
use crate::pme::{pme_error, BarenblattProfile, PmeErrorRow};
use crate::stepper;

/// Verdict of one claim.
pub type Status = WindowStatus;

/// Default ε ladder for the uniformity sweep.
pub const DEFAULT_EPSILONS: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

/// Every threshold used by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative mass drift over a run.
    pub mass_drift: f64,
    /// Absolute slack on `max u ≤ ||u0||_inf + 2`.
    pub linf_slack: f64,
    /// Absolute slack on `sup |∂x v| ≤ 2 mass(u0)`.
    pub dxv_slack: f64,
    /// Most negative Hölder margin accepted.
    pub holder_margin: f64,
    /// Random distant pairs per frame in the Hölder check, per cell.
    pub holder_pairs_per_cell: usize,
    /// Relative cone-mass drift.
    pub cone_drift: f64,
    /// Largest accepted ratio of cone drifts when dx halves.
    pub cone_refinement_ratio: f64,
    /// Vacuum threshold is `max(vacuum_eps_factor ε, vacuum_slope_cells dx s)`
    /// with `s` the largest face slope of `u0`.
    pub vacuum_eps_factor: f64,
    pub vacuum_slope_cells: f64,
    /// Exponent offset `δ` of the near-vacuum slope diagnostic on `u^(m-1+δ)`.
    pub vacuum_delta: f64,
    /// Cells with `u ≤ vacuum_floor · max u` count as near vacuum in that diagnostic.
    pub vacuum_floor: f64,
    /// Relative increase tolerated in a sequence expected to be non-increasing.
    pub trend_noise: f64,
    /// Width of the band the Lipschitz values must fit in across an ε-sweep.
    pub lipschitz_band: f64,
    /// Smallest accepted observed order of convergence.
    pub min_order: f64,
    /// Smallest accepted L¹ error ratio against the Barenblatt profile when dx halves.
    pub pme_ratio: f64,
    /// Cells the numerical support may exceed the exact Barenblatt support by.
    pub pme_support_cells: f64,
    pub psi_samples: usize,
    pub cutoff_samples: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            mass_drift: 1e-12,
            linf_slack: 1e-10,
            dxv_slack: 1e-10,
            holder_margin: -1e-12,
            holder_pairs_per_cell: 2,
            cone_drift: 0.02,
            cone_refinement_ratio: 0.6,
            vacuum_eps_factor: 2.0,
            vacuum_slope_cells: 5.0,
            vacuum_delta: 0.5,
            vacuum_floor: 1e-2,
            trend_noise: 0.10,
            lipschitz_band: 2.0,
            min_order: 0.8,
            pme_ratio: 1.5,
            pme_support_cells: 5.0,
            psi_samples: 1001,
            cutoff_samples: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimId {
    LinfBound,
    MassConservation,
    DxvBound,
    LipschitzUniformity,
    Holder,
    ConeMass,
    Vacuum,
    PmeConvergence,
    PsiBounds,
    CutoffBounds,
}

impl ClaimId {
    pub const ALL: [ClaimId; 10] = [
        ClaimId::LinfBound,
        ClaimId::MassConservation,
        ClaimId::DxvBound,
        ClaimId::LipschitzUniformity,
        ClaimId::Holder,
        ClaimId::ConeMass,
        ClaimId::Vacuum,
        ClaimId::PmeConvergence,
        ClaimId::PsiBounds,
        ClaimId::CutoffBounds,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ClaimId::LinfBound => "linf_bound",
            ClaimId::MassConservation => "mass_conservation",
            ClaimId::DxvBound => "dxv_bound",
            ClaimId::LipschitzUniformity => "lipschitz_uniformity",
            ClaimId::Holder => "holder",
            ClaimId::ConeMass => "cone_mass",
            ClaimId::Vacuum => "vacuum",
            ClaimId::PmeConvergence => "pme_convergence",
            ClaimId::PsiBounds => "psi_bounds",
            ClaimId::CutoffBounds => "cutoff_bounds",
        }
    }

    /// The statement being checked.
    pub fn anchor(&self) -> &'static str {
        match self {
            ClaimId::LinfBound => "max u(t) <= ||u0||_inf + 2 for 0 <= t < T0 = (||u0||_inf + 2)^-q",
            ClaimId::MassConservation => "zero-flux boundaries conserve the total mass of u",
            ClaimId::DxvBound => "|d/dx v| <= 2 ||u0||_L1 from the Bessel-potential representation of v",
            ClaimId::LipschitzUniformity => "sup over eps and t < T0 of ||d/dx (u_eps + eps)^(m-1)||_inf is bounded",
            ClaimId::Holder => "|u(x) - u(y)| controlled by |u^(m-1)(x) - u^(m-1)(y)|",
            ClaimId::ConeMass => "integral of u_eps + eps between the two material interfaces is constant in time",
            ClaimId::Vacuum => "u vanishes between the interfaces starting at the edges of a vacuum hole",
            ClaimId::PmeConvergence => "drift-free runs converge to the Barenblatt source solution and keep its support",
            ClaimId::PsiBounds => "2L/3 <= psi' <= 4L/3, 1/2 <= |psi''/psi'| <= 1 and the barrier coefficient is at most -M",
            ClaimId::CutoffBounds => "|eta_k'| <= c1 eta_k^(3/4) and -c2 eta_k <= eta_k'' <= c3 with k-independent constants",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub claim: ClaimId,
    pub anchor: String,
    pub status: Status,
    pub measured: BTreeMap<String, f64>,
    pub tolerances: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl VerificationReport {
    fn new(claim: ClaimId, status: Status) -> Self {
        VerificationReport {
            claim,
            anchor: claim.anchor().to_string(),
            status,
            measured: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            note: None,
        }
    }

    fn measure(mut self, key: &str, value: f64) -> Self {
        self.measured.insert(key.to_string(), value);
        self
    }

    fn tolerance(mut self, key: &str, value: f64) -> Self {
        self.tolerances.insert(key.to_string(), value);
        self
    }

    fn note(mut self, text: impl Into<String>) -> Self {
        self.note = Some(text.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

fn verdict(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

/// Options shared by the harness entry points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarnessOptions {
    pub tolerances: Tolerances,
    pub convention: SignConvention,
    pub holder_constant: HolderConstant,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        HarnessOptions {
            tolerances: Tolerances::default(),
            convention: SignConvention::Material,
            holder_constant: HolderConstant::MeanValue,
        }
    }
}

/// One run and everything derived from it.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub trajectory: Trajectory,
    pub interfaces: Option<InterfacePair>,
    pub vacuum: Option<VacuumReport>,
    pub cone_masses: Vec<f64>,
    pub pme_errors: Option<Vec<PmeErrorRow>>,
    pub reports: Vec<VerificationReport>,
}

impl ScenarioOutcome {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(VerificationReport::passed)
    }
}

/// Error of a harness entry point: bad input versus a run that broke down.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(Error),
    #[error("run aborted: {0}")]
    Runtime(Error),
}

impl HarnessError {
    fn from_run(e: Error) -> Self {
        match e {
            Error::InvalidScenario(_)
            | Error::InvalidInitialData(_)
            | Error::InvalidGrid(_)
            | Error::Config(_)
            | Error::Precondition(_) => HarnessError::Config(e),
            other => HarnessError::Runtime(other),
        }
    }
}

impl From<Box<Aborted<Trajectory>>> for HarnessError {
    fn from(a: Box<Aborted<Trajectory>>) -> Self {
        HarnessError::from_run(a.error)
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> std::result::Result<Scenario, HarnessError> {
    let s = Scenario::from_config_file(path).map_err(HarnessError::Config)?;
    s.validate().map_err(HarnessError::Config)?;
    Ok(s)
}

/// Frames on which the cone and vacuum claims are made: before the existence
/// time and while the interfaces are apart.
fn checked_frames(traj: &Trajectory, pair: &InterfacePair) -> usize {
    let t0 = traj.existence_time;
    pair.times.iter().take_while(|&&t| t < t0).count()
}

fn truncated(pair: &InterfacePair, n: usize) -> InterfacePair {
    InterfacePair {
        times: pair.times[..n].to_vec(),
        left: pair.left[..n].to_vec(),
        right: pair.right[..n].to_vec(),
        ..pair.clone()
    }
}

/// Threshold on the interior maximum inside the cone.
pub fn vacuum_threshold(traj: &Trajectory, tol: &Tolerances) -> f64 {
    let s = &traj.scenario;
    let slope = traj.frames.first().map_or(0.0, |f| f.u.max_face_slope());
    (tol.vacuum_eps_factor * s.epsilon).max(tol.vacuum_slope_cells * s.grid.dx() * slope)
}

/// Largest `vacuum_slope` over the frames; it should shrink under refinement.
fn near_vacuum_slope(traj: &Trajectory, tol: &Tolerances) -> f64 {
    traj.frames
        .iter()
        .map(|f| vacuum_slope(&f.u, traj.scenario.m, tol.vacuum_delta, tol.vacuum_floor))
        .fold(0.0, f64::max)
}

/// Summary of the interfaces of one run over its checked frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeSummary {
    pub checked_frames: usize,
    pub cone_drift: f64,
    pub vacuum_max: f64,
    pub closed_at: Option<f64>,
}

fn cone_summary(
    traj: &Trajectory,
    convention: SignConvention,
) -> Result<Option<(InterfacePair, ConeSummary, VacuumReport)>> {
    let Some(hole) = traj.scenario.hole else {
        return Ok(None);
    };
    let pair = match integrate_interfaces(traj, hole.a, hole.b, convention) {
        Ok(p) => p,
        // a curve leaving the grid ends the comparison; keep what was integrated
        Err(a) if matches!(a.error, Error::OutsideInterior { .. }) => a.partial,
        Err(a) => return Err(a.error),
    };
    let n = checked_frames(traj, &pair);
    let checked = truncated(&pair, n);
    let drift = if n > 0 {
        cone_mass_drift(traj, &checked)?
    } else {
        0.0
    };
    let vacuum = vacuum_check(traj, &checked);
    let summary = ConeSummary {
        checked_frames: n,
        cone_drift: drift,
        vacuum_max: vacuum.worst_max_u(),
        closed_at: pair.closed_at,
    };
    Ok(Some((pair, summary, vacuum)))
}

/// Runs one scenario and evaluates every claim that applies to it.
pub fn run_scenario(
    scenario: &Scenario,
    options: &HarnessOptions,
) -> std::result::Result<ScenarioOutcome, HarnessError> {
    scenario.validate().map_err(HarnessError::Config)?;
    let traj = stepper::run(scenario)?;
    info!(
        "ran {} steps to t = {} ({} frames)",
        traj.steps,
        scenario.t_end,
        traj.len()
    );
    let tol = &options.tolerances;
    let mut reports = Vec::new();

    let in_window: Vec<_> = traj
        .diagnostics
        .iter()
        .filter(|d| d.linf != WindowStatus::OutsideWindow)
        .collect();
    let worst_max = in_window.iter().map(|d| d.max_u).fold(0.0, f64::max);
    let linf_status = if in_window.is_empty() {
        Status::OutsideWindow
    } else {
        verdict(in_window.iter().all(|d| d.linf == WindowStatus::Pass))
    };
    reports.push(
        VerificationReport::new(ClaimId::LinfBound, linf_status)
            .measure("max_u_in_window", worst_max)
            .measure("bound", traj.linf_bound)
            .measure("existence_time", traj.existence_time)
            .measure("frames_in_window", in_window.len() as f64)
            .measure(
                "frames_outside_window",
                (traj.diagnostics.len() - in_window.len()) as f64,
            )
            .tolerance("linf_slack", tol.linf_slack),
    );

    let drift = traj.mass_drift();
    reports.push(
        VerificationReport::new(ClaimId::MassConservation, verdict(drift <= tol.mass_drift))
            .measure("relative_drift", drift)
            .measure("initial_mass", traj.initial_mass())
            .measure("clamped_mass", traj.clamped_mass)
            .tolerance("mass_drift", tol.mass_drift),
    );

    let m0 = traj.initial_mass();
    let sup_dxv = traj
        .diagnostics
        .iter()
        .map(|d| d.sup_dxv)
        .fold(0.0, f64::max);
    reports.push(
        VerificationReport::new(
            ClaimId::DxvBound,
            verdict(sup_dxv <= 2.0 * m0 + tol.dxv_slack),
        )
        .measure("sup_dxv", sup_dxv)
        .measure("bound", 2.0 * m0)
        .tolerance("dxv_slack", tol.dxv_slack),
    );

    let mut worst_margin = f64::INFINITY;
    let mut pairs = 0;
    for f in &traj.frames {
        let sup = f.u.max().max(0.0);
        let n_pairs = tol.holder_pairs_per_cell * f.u.len();
        let rep = holder_check(&f.u, scenario.m, sup, options.holder_constant, n_pairs)
            .map_err(HarnessError::Runtime)?;
        worst_margin = worst_margin.min(rep.worst_margin);
        pairs += rep.pairs;
    }
    let mut holder =
        VerificationReport::new(ClaimId::Holder, verdict(worst_margin >= tol.holder_margin))
            .measure("worst_margin", worst_margin)
            .measure("pairs", pairs as f64)
            .tolerance("holder_margin", tol.holder_margin);
    if scenario.m < 2.0 {
        holder = holder.note(format!(
            "1 < m < 2 branch with the {:?} constant",
            options.holder_constant
        ));
    }
    reports.push(holder);

    let mut interfaces = None;
    let mut vacuum = None;
    let mut cone_masses = Vec::new();
    if let Some((pair, summary, vac)) =
        cone_summary(&traj, options.convention).map_err(HarnessError::Runtime)?
    {
        let threshold = vacuum_threshold(&traj, tol);
        let status = |ok: bool| {
            if summary.checked_frames <= 1 {
                Status::OutsideWindow
            } else {
                verdict(ok)
            }
        };
        let mut cone = VerificationReport::new(
            ClaimId::ConeMass,
            status(summary.cone_drift <= tol.cone_drift),
        )
        .measure("relative_drift", summary.cone_drift)
        .measure("checked_frames", summary.checked_frames as f64)
        .tolerance("cone_drift", tol.cone_drift)
        .note(format!("{} interfaces", options.convention.as_str()));
        if let Some(t) = summary.closed_at {
            cone = cone.measure("closed_at", t);
        }
        reports.push(cone);
        reports.push(
            VerificationReport::new(ClaimId::Vacuum, status(summary.vacuum_max <= threshold))
                .measure("interior_max_u", summary.vacuum_max)
                .measure("threshold", threshold)
                .measure("near_vacuum_slope", near_vacuum_slope(&traj, tol))
                .tolerance("vacuum_eps_factor", tol.vacuum_eps_factor)
                .tolerance("vacuum_slope_cells", tol.vacuum_slope_cells)
                .tolerance("vacuum_delta", tol.vacuum_delta)
                .tolerance("vacuum_floor", tol.vacuum_floor),
        );
        cone_masses = crate::interface::cone_masses(&traj, &pair).map_err(HarnessError::Runtime)?;
        interfaces = Some(pair);
        vacuum = Some(vac);
    }

    let mut pme_errors = None;
    if let (InitialData::Barenblatt { t0, mass }, false) = (scenario.u0, scenario.drift_enabled) {
        let profile = BarenblattProfile::new(scenario.m, mass).map_err(HarnessError::Config)?;
        let rows = pme_error(&traj, &profile, t0).map_err(HarnessError::Runtime)?;
        let dx = scenario.grid.dx();
        let excess = rows
            .iter()
            .map(|r| (r.support_edge_numeric - r.support_edge_exact) / dx)
            .fold(f64::NEG_INFINITY, f64::max);
        reports.push(
            VerificationReport::new(
                ClaimId::PmeConvergence,
                verdict(excess <= tol.pme_support_cells),
            )
            .measure("l1_error_final", rows.last().map_or(0.0, |r| r.l1_error))
            .measure("support_excess_cells", excess)
            .tolerance("pme_support_cells", tol.pme_support_cells)
            .note("single grid; the refinement ratio is checked by verify"),
        );
        pme_errors = Some(rows);
    }

    reports.extend(formula_reports(scenario, tol).map_err(HarnessError::Runtime)?);

    Ok(ScenarioOutcome {
        trajectory: traj,
        interfaces,
        vacuum,
        cone_masses,
        pme_errors,
        reports,
    })
}

/// Transform and cutoff checks for the scenario's exponent and data.
pub fn formula_reports(scenario: &Scenario, tol: &Tolerances) -> Result<Vec<VerificationReport>> {
    let psi = PsiTransform::new(scenario.m, scenario.u0_sup()?, scenario.epsilon)?;
    let ratio = ratio_bounds_check(&psi, tol.psi_samples)?;
    let mut psi_report = VerificationReport::new(ClaimId::PsiBounds, verdict(ratio.passed()))
        .measure("scale", psi.scale)
        .measure("barrier", ratio.barrier)
        .measure("ratio_min", ratio.ratio_range.0)
        .measure("ratio_max", ratio.ratio_range.1)
        .measure("coefficient_max", ratio.coefficient_max)
        .tolerance("samples", tol.psi_samples as f64);
    if let Some(v) = ratio.violations.first() {
        psi_report = psi_report.note(format!("{} fails at r = {} ({})", v.bound, v.r, v.value));
    }
    let cutoff = match cutoff_property_check(CutoffFamily::Continuous, tol.cutoff_samples) {
        Ok(c) => VerificationReport::new(ClaimId::CutoffBounds, Status::Pass)
            .measure("c1", c.c1)
            .measure("c2", c.c2)
            .measure("c3", c.c3),
        Err(e) => VerificationReport::new(ClaimId::CutoffBounds, Status::Fail).note(e.to_string()),
    }
    .tolerance("samples", tol.cutoff_samples as f64)
    .note("quartic coefficient 8");
    Ok(vec![psi_report, cutoff])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub lipschitz_sup: f64,
    pub vacuum_max: Option<f64>,
    pub cone_drift: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Largest over smallest Lipschitz value.
    pub lipschitz_band: f64,
    pub lipschitz_ok: bool,
    pub vacuum_ok: bool,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.lipschitz_ok && self.vacuum_ok
    }
}

/// True when each value is at most `1 + noise` times its predecessor.
pub fn non_increasing(values: &[f64], noise: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] * (1.0 + noise))
}

/// Runs the scenario once per ε (concurrently) and tabulates the Lipschitz
/// value, the vacuum interior maximum and the cone drift, largest ε first.
pub fn sweep_epsilon(
    scenario: &Scenario,
    epsilons: &[f64],
    options: &HarnessOptions,
) -> std::result::Result<SweepReport, HarnessError> {
    if epsilons.len() < 3 {
        return Err(HarnessError::Config(Error::Precondition(format!(
            "an ε-sweep needs at least 3 values, got {}",
            epsilons.len()
        ))));
    }
    let runs: Vec<std::result::Result<SweepRow, HarnessError>> = epsilons
        .par_iter()
        .map(|&eps| {
            let s = scenario.with_epsilon(eps);
            s.validate().map_err(HarnessError::Config)?;
            let attribute = |e: Error| Error::Precondition(format!("ε = {eps}: {e}"));
            let traj = stepper::run(&s).map_err(|a| HarnessError::Runtime(attribute(a.error)))?;
            let cone = cone_summary(&traj, options.convention)
                .map_err(|e| HarnessError::Runtime(attribute(e)))?;
            Ok(SweepRow {
                epsilon: eps,
                lipschitz_sup: lipschitz_sup(&traj),
                vacuum_max: cone.as_ref().map(|c| c.1.vacuum_max),
                cone_drift: cone.as_ref().map(|c| c.1.cone_drift),
            })
        })
        .collect();
    let mut rows = runs
        .into_iter()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    rows.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
    let tol = &options.tolerances;
    let lips: Vec<f64> = rows.iter().map(|r| r.lipschitz_sup).collect();
    let lo = lips.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = lips.iter().cloned().fold(0.0, f64::max);
    let band = if hi == 0.0 { 1.0 } else { hi / lo };
    let lipschitz_ok =
        band <= tol.lipschitz_band && lips[lips.len() - 1] <= tol.lipschitz_band * lips[0];
    let vac: Vec<f64> = rows.iter().filter_map(|r| r.vacuum_max).collect();
    let vacuum_ok = non_increasing(&vac, tol.trend_noise);
    Ok(SweepReport {
        rows,
        lipschitz_band: band,
        lipschitz_ok,
        vacuum_ok,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n_cells: usize,
    pub dx: f64,
    /// L¹ distance at `t_end` to the next finer run restricted to this grid.
    pub self_difference: Option<f64>,
    pub cone_drift: Option<f64>,
    pub vacuum_max: Option<f64>,
    pub pme_l1_error: Option<f64>,
    pub pme_support_excess_cells: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub self_orders: Vec<f64>,
    pub cone_orders: Vec<f64>,
    /// `error(N) / error(2N)` against the Barenblatt profile.
    pub pme_ratios: Vec<f64>,
    pub passed: bool,
}

fn orders(values: &[f64]) -> Vec<f64> {
    values
        .windows(2)
        .filter(|w| w[0] > 0.0 || w[1] > 0.0)
        .map(|w| (w[0] / w[1]).log2())
        .collect()
}

/// Runs the scenario on nested grids and reports observed orders.
pub fn convergence_study(
    scenario: &Scenario,
    sizes: &[usize],
    options: &HarnessOptions,
) -> std::result::Result<ConvergenceReport, HarnessError> {
    let bad = |msg: String| Err(HarnessError::Config(Error::Precondition(msg)));
    if sizes.len() < 3 {
        return bad(format!("need at least 3 grid sizes, got {}", sizes.len()));
    }
    if sizes.windows(2).any(|w| w[1] != 2 * w[0]) {
        return bad(format!(
            "grid sizes {sizes:?} must each double the previous"
        ));
    }
    let scenarios = sizes
        .iter()
        .map(|&n| {
            let s = scenario.with_cells(n).map_err(HarnessError::Config)?;
            s.validate().map_err(HarnessError::Config)?;
            Ok(s)
        })
        .collect::<std::result::Result<Vec<_>, HarnessError>>()?;
    let trajs = scenarios
        .par_iter()
        .map(|s| stepper::run(s).map_err(HarnessError::from))
        .collect::<std::result::Result<Vec<_>, _>>()?;

    let barenblatt = match (scenario.u0, scenario.drift_enabled) {
        (InitialData::Barenblatt { t0, mass }, false) => Some((
            BarenblattProfile::new(scenario.m, mass).map_err(HarnessError::Config)?,
            t0,
        )),
        _ => None,
    };
    let mut rows = Vec::new();
    for (k, traj) in trajs.iter().enumerate() {
        let dx = traj.scenario.grid.dx();
        let self_difference = trajs.get(k + 1).map(|fine| {
            let c = traj.frames.last().unwrap().u.values();
            let f = fine.frames.last().unwrap().u.values();
            dx * crate::numeric::sum(
                c.iter()
                    .enumerate()
                    .map(|(i, v)| (v - 0.5 * (f[2 * i] + f[2 * i + 1])).abs()),
            )
        });
        let cone = cone_summary(traj, options.convention).map_err(HarnessError::Runtime)?;
        let (pme_l1_error, pme_support_excess_cells) = match &barenblatt {
            Some((p, t0)) => {
                let rows = pme_error(traj, p, *t0).map_err(HarnessError::Runtime)?;
                let excess = rows
                    .iter()
                    .map(|r| (r.support_edge_numeric - r.support_edge_exact) / dx)
                    .fold(f64::NEG_INFINITY, f64::max);
                (rows.last().map(|r| r.l1_error), Some(excess))
            }
            None => (None, None),
        };
        rows.push(ConvergenceRow {
            n_cells: traj.scenario.grid.n_cells(),
            dx,
            self_difference,
            cone_drift: cone.as_ref().map(|c| c.1.cone_drift),
            vacuum_max: cone.as_ref().map(|c| c.1.vacuum_max),
            pme_l1_error,
            pme_support_excess_cells,
        });
    }
    let diffs: Vec<f64> = rows.iter().filter_map(|r| r.self_difference).collect();
    let drifts: Vec<f64> = rows.iter().filter_map(|r| r.cone_drift).collect();
    let pme: Vec<f64> = rows.iter().filter_map(|r| r.pme_l1_error).collect();
    let self_orders = orders(&diffs);
    let cone_orders = orders(&drifts);
    let pme_ratios = pme.windows(2).map(|w| w[0] / w[1]).collect();
    let min = options.tolerances.min_order;
    let passed = self_orders.iter().chain(&cone_orders).all(|&o| o >= min);
    Ok(ConvergenceReport {
        rows,
        self_orders,
        cone_orders,
        pme_ratios,
        passed,
    })
}

/// Everything `verify` produced.
#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub run: ScenarioOutcome,
    pub sweep: Option<SweepReport>,
    pub convergence: Option<ConvergenceReport>,
}

impl VerifyOutcome {
    pub fn reports(&self) -> &[VerificationReport] {
        &self.run.reports
    }

    pub fn passed(&self) -> bool {
        self.run.passed()
    }
}

/// Grid sizes used by `verify`: half, equal and double the scenario's.
pub fn default_sizes(scenario: &Scenario) -> Vec<usize> {
    let n = scenario.grid.n_cells();
    vec![n / 2, n, 2 * n]
}

fn upsert(reports: &mut Vec<VerificationReport>, report: VerificationReport) {
    match reports.iter_mut().find(|r| r.claim == report.claim) {
        Some(slot) => *slot = report,
        None => reports.push(report),
    }
}

/// Full verification: one run, plus an ε-sweep when the scenario is
/// regularized and a refinement study on half, equal and double the grid.
pub fn verify(
    scenario: &Scenario,
    options: &HarnessOptions,
) -> std::result::Result<VerifyOutcome, HarnessError> {
    let mut run = run_scenario(scenario, options)?;
    let tol = options.tolerances;

    let sweep = if scenario.epsilon > 0.0 {
        let sweep = sweep_epsilon(scenario, &DEFAULT_EPSILONS, options)?;
        let lips: Vec<f64> = sweep.rows.iter().map(|r| r.lipschitz_sup).collect();
        let mut rep =
            VerificationReport::new(ClaimId::LipschitzUniformity, verdict(sweep.lipschitz_ok))
                .measure("band", sweep.lipschitz_band)
                .tolerance("lipschitz_band", tol.lipschitz_band);
        for (r, l) in sweep.rows.iter().zip(&lips) {
            rep = rep.measure(&format!("lipschitz_eps_{}", r.epsilon), *l);
        }
        upsert(&mut run.reports, rep);
        Some(sweep)
    } else {
        None
    };

    let sizes = default_sizes(scenario);
    let has_hole = scenario.hole.is_some();
    let is_pme = matches!(scenario.u0, InitialData::Barenblatt { .. }) && !scenario.drift_enabled;
    let convergence = if (has_hole || is_pme) && sizes[0] >= crate::model::MIN_CELLS {
        Some(convergence_study(scenario, &sizes, options)?)
    } else {
        None
    };

    if let Some(conv) = &convergence {
        if has_hole {
            let drifts: Vec<f64> = conv.rows.iter().filter_map(|r| r.cone_drift).collect();
            let ratio = if drifts[1] > 0.0 {
                drifts[2] / drifts[1]
            } else {
                0.0
            };
            let base = run
                .reports
                .iter()
                .find(|r| r.claim == ClaimId::ConeMass)
                .cloned();
            if let Some(base) = base {
                if base.status != Status::OutsideWindow {
                    let ok = base.status == Status::Pass && ratio <= tol.cone_refinement_ratio;
                    let rep = VerificationReport {
                        status: verdict(ok),
                        ..base
                    }
                    .measure("refined_drift", drifts[2])
                    .measure("refinement_ratio", ratio)
                    .tolerance("cone_refinement_ratio", tol.cone_refinement_ratio);
                    upsert(&mut run.reports, rep);
                }
            }
            let vac_refine: Vec<f64> = conv.rows[1..].iter().filter_map(|r| r.vacuum_max).collect();
            if let Some(base) = run
                .reports
                .iter()
                .find(|r| r.claim == ClaimId::Vacuum)
                .cloned()
            {
                if base.status != Status::OutsideWindow {
                    let refine_ok = non_increasing(&vac_refine, tol.trend_noise);
                    let sweep_ok = sweep.as_ref().map_or(true, |s| s.vacuum_ok);
                    let mut rep = VerificationReport {
                        status: verdict(base.status == Status::Pass && refine_ok && sweep_ok),
                        ..base
                    }
                    .measure("refined_interior_max_u", *vac_refine.last().unwrap_or(&0.0))
                    .tolerance("trend_noise", tol.trend_noise);
                    rep = rep.measure("decreases_under_refinement", refine_ok as u8 as f64);
                    rep = rep.measure("decreases_across_eps", sweep_ok as u8 as f64);
                    upsert(&mut run.reports, rep);
                }
            }
        }
        if is_pme {
            let support_ok = conv
                .rows
                .iter()
                .filter_map(|r| r.pme_support_excess_cells)
                .all(|e| e <= tol.pme_support_cells);
            let ratios_ok = conv.pme_ratios.iter().all(|&r| r >= tol.pme_ratio);
            let mut rep =
                VerificationReport::new(ClaimId::PmeConvergence, verdict(support_ok && ratios_ok))
                    .tolerance("pme_ratio", tol.pme_ratio)
                    .tolerance("pme_support_cells", tol.pme_support_cells);
            for row in &conv.rows {
                if let Some(e) = row.pme_l1_error {
                    rep = rep.measure(&format!("l1_error_n{}", row.n_cells), e);
                }
            }
            for (k, r) in conv.pme_ratios.iter().enumerate() {
                rep = rep.measure(&format!("ratio_{k}"), *r);
            }
            upsert(&mut run.reports, rep);
        }
    }
    run.reports.sort_by_key(|r| r.claim);
    Ok(VerifyOutcome {
        run,
        sweep,
        convergence,
    })
}

/// Machine-readable summary of a set of reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSet {
    pub scenario: String,
    pub tolerances: Tolerances,
    pub convention: SignConvention,
    pub passed: bool,
    pub reports: Vec<VerificationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceReport>,
}

impl ReportSet {
    pub fn new(
        scenario: &Scenario,
        options: &HarnessOptions,
        reports: &[VerificationReport],
    ) -> Self {
        ReportSet {
            scenario: scenario.to_config_string(),
            tolerances: options.tolerances,
            convention: options.convention,
            passed: reports.iter().all(VerificationReport::passed),
            reports: reports.to_vec(),
            sweep: None,
            convergence: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }
}

/// Pretty JSON of any report type.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}
