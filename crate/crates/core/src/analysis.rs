//! Checkable forms of the gradient-estimate machinery: the quadratic
//! pressure transform and its bounds, the barrier constant, the cutoff
//! family, the Hölder inequality between `u` and `u^(m-1)`, and the
//! Lipschitz diagnostic used for ε-uniformity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ScalarField, Trajectory};
use crate::numeric::pow;
use crate::stepper::pressure_slope;

/// Quadratic transform `ψ(r) = L r (4 - r) / 3` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiTransform {
    pub m: f64,
    /// `L = m/(m-1) (||u0||_inf + 2 + ε)^(m-1)`, the largest value of `w`.
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiValue {
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

impl PsiTransform {
    pub fn new(m: f64, u0_sup: f64, epsilon: f64) -> Result<Self> {
        if !(m > 1.0) {
            return Err(Error::Domain(format!("m = {m} must exceed 1")));
        }
        if !(u0_sup >= 0.0) || !(epsilon >= 0.0) {
            return Err(Error::Domain("sup norm and ε must be nonnegative".into()));
        }
        Ok(PsiTransform {
            m,
            scale: m / (m - 1.0) * pow(u0_sup + 2.0 + epsilon, m - 1.0),
        })
    }

    /// Transform with an arbitrary positive scale.
    pub fn with_scale(m: f64, scale: f64) -> Result<Self> {
        if !(m > 1.0) || !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Domain(format!(
                "need m > 1 and L > 0, got m = {m}, L = {scale}"
            )));
        }
        Ok(PsiTransform { m, scale })
    }

    /// `r` with `ψ(r) = w`, for `0 ≤ w ≤ L`.
    pub fn inverse(&self, w: f64) -> Result<f64> {
        if !(0.0..=self.scale).contains(&w) {
            return Err(Error::Domain(format!(
                "w = {w} outside [0, {}]",
                self.scale
            )));
        }
        Ok(2.0 - (4.0 - 3.0 * w / self.scale).max(1.0).sqrt())
    }

    /// Range of `ψ⁻¹(w)` for `w = m/(m-1)(u+ε)^(m-1)` with `0 ≤ u ≤ ||u0||_inf + 2`.
    pub fn range(&self, epsilon: f64) -> Result<(f64, f64)> {
        let m = self.m;
        let floor = m / (m - 1.0) * pow(epsilon, m - 1.0);
        Ok((self.inverse(floor)?, 1.0))
    }
}

/// `ψ`, `ψ'` and `ψ''` at `r ∈ [0, 1]`.
pub fn psi_eval(p: &PsiTransform, r: f64) -> Result<PsiValue> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::Domain(format!("r = {r} outside [0, 1]")));
    }
    let l = p.scale;
    Ok(PsiValue {
        value: l * r * (4.0 - r) / 3.0,
        first: 2.0 * l / 3.0 * (2.0 - r),
        second: -2.0 * l / 3.0,
    })
}

/// `M = m (11m - 3) / (12 (m - 1))`.
pub fn barrier_constant(m: f64) -> Result<f64> {
    if !(m > 1.0) || !m.is_finite() {
        return Err(Error::Domain(format!("m = {m} must exceed 1")));
    }
    Ok(m * (11.0 * m - 3.0) / (12.0 * (m - 1.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub r: f64,
    pub bound: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub samples: usize,
    /// Extremes of `|ψ''/ψ'|` over the samples.
    pub ratio_range: (f64, f64),
    /// Extremes of `(ψ''/ψ')'` over the samples.
    pub slope_range: (f64, f64),
    /// Largest value of `(m-1) ψ (ψ''/ψ')' + m ψ''`.
    pub coefficient_max: f64,
    pub barrier: f64,
    pub violations: Vec<BoundViolation>,
}

impl RatioReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

const BOUND_SLACK: f64 = 1e-12;

/// Checks `1/2 ≤ |ψ''/ψ'| ≤ 1`, `-1 ≤ (ψ''/ψ')' = -(ψ''/ψ')² ≤ -1/4` and
/// `(m-1) ψ (ψ''/ψ')' + m ψ'' ≤ -M` at evenly spaced `r ∈ [0, 1]`.
pub fn ratio_bounds_check(p: &PsiTransform, samples: usize) -> Result<RatioReport> {
    if samples < 100 {
        return Err(Error::Precondition(format!(
            "need at least 100 samples, got {samples}"
        )));
    }
    let barrier = barrier_constant(p.m)?;
    let mut report = RatioReport {
        samples,
        ratio_range: (f64::INFINITY, f64::NEG_INFINITY),
        slope_range: (f64::INFINITY, f64::NEG_INFINITY),
        coefficient_max: f64::NEG_INFINITY,
        barrier,
        violations: Vec::new(),
    };
    let mut found = Vec::new();
    for i in 0..samples {
        let r = i as f64 / (samples - 1) as f64;
        let v = psi_eval(p, r)?;
        let q = v.second / v.first;
        // derivative of ψ''/ψ' from the closed form q(r) = -1/(2-r)
        let dq = -1.0 / ((2.0 - r) * (2.0 - r));
        let ratio = q.abs();
        report.ratio_range.0 = report.ratio_range.0.min(ratio);
        report.ratio_range.1 = report.ratio_range.1.max(ratio);
        report.slope_range.0 = report.slope_range.0.min(dq);
        report.slope_range.1 = report.slope_range.1.max(dq);
        let coef = (p.m - 1.0) * v.value * dq + p.m * v.second;
        report.coefficient_max = report.coefficient_max.max(coef);
        if ratio < 0.5 - BOUND_SLACK || ratio > 1.0 + BOUND_SLACK {
            found.push(report_violation(r, "1/2 <= |psi''/psi'| <= 1", ratio));
        }
        if (dq + q * q).abs() > BOUND_SLACK {
            found.push(report_violation(r, "(psi''/psi')' = -(psi''/psi')^2", dq));
        }
        if dq < -1.0 - BOUND_SLACK || dq > -0.25 + BOUND_SLACK {
            found.push(report_violation(r, "-1 <= (psi''/psi')' <= -1/4", dq));
        }
        if coef > -barrier + BOUND_SLACK * barrier {
            found.push(report_violation(
                r,
                "(m-1) psi (psi''/psi')' + m psi'' <= -M",
                coef,
            ));
        }
    }
    report.violations = found;
    Ok(report)
}

fn report_violation(r: f64, bound: &str, value: f64) -> BoundViolation {
    BoundViolation {
        r,
        bound: bound.to_string(),
        value,
    }
}

/// Quartic coefficient of the cutoff pieces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutoffFamily {
    /// Coefficient 2; the two pieces meeting at `|x| = 3/2` disagree (7/8 vs 1/8).
    Printed,
    /// Coefficient 8; continuous and C¹ with `η(±3/2) = 1/2`.
    Continuous,
}

impl CutoffFamily {
    pub fn coefficient(&self) -> f64 {
        match self {
            CutoffFamily::Printed => 2.0,
            CutoffFamily::Continuous => 8.0,
        }
    }

    /// Limits of `η` at `x = 3/2` from the inner and outer pieces.
    pub fn one_sided_limits(&self) -> (f64, f64) {
        let c = self.coefficient();
        (1.0 - c / 16.0, c / 16.0)
    }
}

/// `η_k(x) = η(x - k)` with `η = 1` on `[-1, 1]`, `1 - c(|y|-1)^4` up to
/// `|y| = 3/2`, `c(2-|y|)^4` up to `|y| = 2`, and zero beyond.
pub fn cutoff_eval(k: i64, x: f64, family: CutoffFamily) -> f64 {
    cutoff_derivatives(k, x, family).0
}

/// `(η_k, η_k', η_k'')` at `x`.
pub fn cutoff_derivatives(k: i64, x: f64, family: CutoffFamily) -> (f64, f64, f64) {
    let c = family.coefficient();
    let y = x - k as f64;
    let a = y.abs();
    let sign = y.signum();
    if a <= 1.0 {
        (1.0, 0.0, 0.0)
    } else if a <= 1.5 {
        let t = a - 1.0;
        (
            1.0 - c * t.powi(4),
            -4.0 * c * t.powi(3) * sign,
            -12.0 * c * t * t,
        )
    } else if a < 2.0 {
        let s = 2.0 - a;
        (c * s.powi(4), -4.0 * c * s.powi(3) * sign, 12.0 * c * s * s)
    } else {
        (0.0, 0.0, 0.0)
    }
}

/// Smallest constants with `|η'| ≤ c1 η^(3/4)` and `-c2 η ≤ η'' ≤ c3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

/// Samples `η_k` for `k ∈ {-2, ..., 2}` and returns the constants, which must
/// agree across `k`.
pub fn cutoff_property_check(family: CutoffFamily, samples: usize) -> Result<CutoffConstants> {
    let (inner, outer) = family.one_sided_limits();
    if inner != outer {
        return Err(Error::Precondition(format!(
            "cutoff family is discontinuous at |x| = 3/2 ({inner} vs {outer})"
        )));
    }
    if samples < 100 {
        return Err(Error::Precondition(format!(
            "need at least 100 samples, got {samples}"
        )));
    }
    let mut per_k = Vec::new();
    for k in -2i64..=2 {
        let mut c = CutoffConstants {
            c1: 0.0,
            c2: 0.0,
            c3: f64::NEG_INFINITY,
        };
        let uniform = (0..=samples).map(|i| -2.0 + 4.0 * i as f64 / samples as f64);
        // the piece boundaries, including the outer side of |y| = 3/2
        let above = f64::from_bits(1.5f64.to_bits() + 1);
        let breaks = [1.0, 1.5, above].into_iter().flat_map(|a| [a, -a]);
        for y in uniform.chain(breaks) {
            let x = k as f64 + y;
            let (eta, d1, d2) = cutoff_derivatives(k, x, family);
            c.c3 = c.c3.max(d2);
            if eta > 0.0 {
                c.c1 = c.c1.max(d1.abs() / eta.powf(0.75));
                c.c2 = c.c2.max(-d2 / eta);
            } else if d1 != 0.0 || d2 < 0.0 {
                return Err(Error::Precondition(format!(
                    "unbounded ratio at x = {x} for k = {k}"
                )));
            }
        }
        if ![c.c1, c.c2, c.c3].iter().all(|v| v.is_finite()) {
            return Err(Error::Precondition(format!(
                "non-finite constant for k = {k}"
            )));
        }
        per_k.push(c);
    }
    let first = per_k[0];
    for c in &per_k[1..] {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(1.0);
        if !(close(c.c1, first.c1) && close(c.c2, first.c2) && close(c.c3, first.c3)) {
            return Err(Error::Precondition("cutoff constants depend on k".into()));
        }
    }
    Ok(first)
}

/// Constant of the `1 < m < 2` branch of the Hölder inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum HolderConstant {
    /// `2^(1/m - 1) / (m - 1)`; too small near the top of the range.
    Printed,
    /// `1 / (m - 1)`, from the mean value theorem.
    #[default]
    MeanValue,
}

impl HolderConstant {
    pub fn value(&self, m: f64) -> f64 {
        match self {
            HolderConstant::Printed => 2f64.powf(1.0 / m - 1.0) / (m - 1.0),
            HolderConstant::MeanValue => 1.0 / (m - 1.0),
        }
    }
}

/// Right-hand side of the Hölder inequality for the values `a`, `b`.
pub fn holder_bound(a: f64, b: f64, m: f64, u_sup: f64, constant: HolderConstant) -> f64 {
    let diff = (pow(a, m - 1.0) - pow(b, m - 1.0)).abs();
    if m >= 2.0 {
        pow(diff, 1.0 / (m - 1.0))
    } else {
        constant.value(m) * pow(u_sup, 2.0 - m) * diff
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub pairs: usize,
    /// Smallest `rhs - lhs` over all checked pairs.
    pub worst_margin: f64,
    pub worst_pair: Option<(usize, usize)>,
}

impl HolderReport {
    pub fn passed(&self) -> bool {
        self.worst_margin >= HOLDER_TOLERANCE
    }
}

/// Most negative margin tolerated by `HolderReport::passed`.
pub const HOLDER_TOLERANCE: f64 = -1e-12;
const HOLDER_SEED: u64 = 0x5eed_4017;

/// Evaluates both sides of the Hölder inequality on all adjacent cells and
/// `distant_pairs` random pairs drawn from a fixed seed.
pub fn holder_check(
    field: &ScalarField,
    m: f64,
    u_sup: f64,
    constant: HolderConstant,
    distant_pairs: usize,
) -> Result<HolderReport> {
    if !(m > 1.0) {
        return Err(Error::Domain(format!("m = {m} must exceed 1")));
    }
    field.check_nonnegative(0.0)?;
    if field.max() > u_sup {
        return Err(Error::Precondition(format!(
            "u_sup = {u_sup} below field maximum {}",
            field.max()
        )));
    }
    let u = field.values();
    let mut report = HolderReport {
        pairs: 0,
        worst_margin: f64::INFINITY,
        worst_pair: None,
    };
    let mut visit = |i: usize, j: usize| {
        let margin = holder_bound(u[i], u[j], m, u_sup, constant) - (u[i] - u[j]).abs();
        report.pairs += 1;
        if margin < report.worst_margin {
            report.worst_margin = margin;
            report.worst_pair = Some((i, j));
        }
    };
    for i in 1..u.len() {
        visit(i - 1, i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(HOLDER_SEED);
    for _ in 0..distant_pairs {
        let i = rng.gen_range(0..u.len());
        let j = rng.gen_range(0..u.len());
        visit(i, j);
    }
    Ok(report)
}

/// Largest `|Δ(u+ε)^(m-1)| / dx` over all faces and frames.
pub fn lipschitz_sup(trajectory: &Trajectory) -> f64 {
    let s = &trajectory.scenario;
    trajectory
        .frames
        .iter()
        .map(|f| pressure_slope(&f.u, s.m, s.epsilon))
        .fold(0.0, f64::max)
}

/// Largest `|Δ u^(m-1+δ)| / dx` over faces touching a cell with
/// `u ≤ floor · max u`; tends to zero under refinement when `u^(m-1+δ)` is C¹
/// and vanishes with its derivative at vacuum points.
pub fn vacuum_slope(field: &ScalarField, m: f64, delta: f64, floor: f64) -> f64 {
    let u = field.values();
    let dx = field.grid().dx();
    let cutoff = floor * field.max();
    let p = m - 1.0 + delta;
    u.windows(2)
        .filter(|w| w[0] <= cutoff || w[1] <= cutoff)
        .map(|w| (pow(w[1].max(0.0), p) - pow(w[0].max(0.0), p)).abs() / dx)
        .fold(0.0, f64::max)
}
