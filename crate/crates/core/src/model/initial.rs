use serde::{Deserialize, Serialize};

use super::grid::{Grid1D, ScalarField};
use crate::error::{Error, Result};
use crate::numeric::pow;
use crate::pme::barenblatt::{cap_integral, BarenblattProfile};

/// Initial-data generators.
///
/// A bump is `h * max(0, 1 - ((x - c)/w)^2)^(1/(m-1))`, so its `(m-1)`-th
/// power is a paraboloid cap with a finite slope at the edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    Zero,
    Bump {
        center: f64,
        width: f64,
        height: f64,
    },
    TwoBumps {
        left_center: f64,
        right_center: f64,
        width: f64,
        height: f64,
    },
    /// Barenblatt profile of the given mass evaluated at time `t0`.
    Barenblatt {
        t0: f64,
        mass: f64,
    },
}

impl InitialData {
    pub fn kind(&self) -> &'static str {
        match self {
            InitialData::Zero => "zero",
            InitialData::Bump { .. } => "bump",
            InitialData::TwoBumps { .. } => "two_bumps",
            InitialData::Barenblatt { .. } => "barenblatt",
        }
    }

    /// Positional parameters as written in config files.
    pub fn params(&self) -> Vec<f64> {
        match *self {
            InitialData::Zero => vec![],
            InitialData::Bump {
                center,
                width,
                height,
            } => vec![center, width, height],
            InitialData::TwoBumps {
                left_center,
                right_center,
                width,
                height,
            } => vec![left_center, right_center, width, height],
            InitialData::Barenblatt { t0, mass } => vec![t0, mass],
        }
    }

    pub fn from_kind(kind: &str, params: &[f64]) -> Result<Self> {
        let want = |n: usize| -> Result<()> {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "u0.kind = {kind} takes {n} params, got {}",
                    params.len()
                )))
            }
        };
        let data = match kind {
            "zero" => {
                want(0)?;
                InitialData::Zero
            }
            "bump" => {
                want(3)?;
                InitialData::Bump {
                    center: params[0],
                    width: params[1],
                    height: params[2],
                }
            }
            "two_bumps" => {
                want(4)?;
                InitialData::TwoBumps {
                    left_center: params[0],
                    right_center: params[1],
                    width: params[2],
                    height: params[3],
                }
            }
            "barenblatt" => {
                want(2)?;
                InitialData::Barenblatt {
                    t0: params[0],
                    mass: params[1],
                }
            }
            other => return Err(Error::Config(format!("unknown u0.kind `{other}`"))),
        };
        Ok(data)
    }

    /// Parameter sanity independent of the grid.
    pub fn validate(&self, m: f64) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInitialData(msg));
        if self.params().iter().any(|p| !p.is_finite()) {
            return bad("non-finite parameter".into());
        }
        match *self {
            InitialData::Zero => Ok(()),
            InitialData::Bump { width, height, .. } => {
                if height <= 0.0 {
                    return bad(format!("height {height} <= 0"));
                }
                if width <= 0.0 {
                    return bad(format!("width {width} <= 0"));
                }
                Ok(())
            }
            InitialData::TwoBumps {
                left_center,
                right_center,
                width,
                height,
            } => {
                if height <= 0.0 {
                    return bad(format!("height {height} <= 0"));
                }
                if width <= 0.0 {
                    return bad(format!("width {width} <= 0"));
                }
                if right_center - left_center < 2.0 * width {
                    return bad(format!(
                        "bumps at {left_center} and {right_center} with width {width} overlap"
                    ));
                }
                Ok(())
            }
            InitialData::Barenblatt { t0, mass } => {
                if t0 <= 0.0 {
                    return bad(format!("t0 {t0} <= 0"));
                }
                BarenblattProfile::new(m, mass).map(|_| ())
            }
        }
    }

    /// Closed support interval, `None` for identically zero data.
    pub fn support(&self, m: f64) -> Result<Option<(f64, f64)>> {
        Ok(match *self {
            InitialData::Zero => None,
            InitialData::Bump { center, width, .. } => Some((center - width, center + width)),
            InitialData::TwoBumps {
                left_center,
                right_center,
                width,
                ..
            } => Some((left_center - width, right_center + width)),
            InitialData::Barenblatt { t0, mass } => {
                let e = BarenblattProfile::new(m, mass)?.edge(t0)?;
                Some((-e, e))
            }
        })
    }

    /// Analytic `sup |u0|`.
    pub fn sup_norm(&self, m: f64) -> Result<f64> {
        Ok(match *self {
            InitialData::Zero => 0.0,
            InitialData::Bump { height, .. } | InitialData::TwoBumps { height, .. } => height,
            InitialData::Barenblatt { t0, mass } => BarenblattProfile::new(m, mass)?.peak(t0)?,
        })
    }

    /// Analytic total mass.
    pub fn mass(&self, m: f64) -> Result<f64> {
        let cap = cap_integral(1.0 / (m - 1.0));
        Ok(match *self {
            InitialData::Zero => 0.0,
            InitialData::Bump { width, height, .. } => height * width * cap,
            InitialData::TwoBumps { width, height, .. } => 2.0 * height * width * cap,
            InitialData::Barenblatt { mass, .. } => mass,
        })
    }

    /// Pointwise value.
    pub fn value(&self, x: f64, m: f64) -> Result<f64> {
        let bump = |c: f64, w: f64, h: f64| {
            let s = (x - c) / w;
            let cap = 1.0 - s * s;
            if cap <= 0.0 {
                0.0
            } else {
                h * pow(cap, 1.0 / (m - 1.0))
            }
        };
        Ok(match *self {
            InitialData::Zero => 0.0,
            InitialData::Bump {
                center,
                width,
                height,
            } => bump(center, width, height),
            InitialData::TwoBumps {
                left_center,
                right_center,
                width,
                height,
            } => bump(left_center, width, height) + bump(right_center, width, height),
            InitialData::Barenblatt { t0, mass } => {
                BarenblattProfile::new(m, mass)?.value(x, t0)?
            }
        })
    }
}

/// Samples `data` at cell centres.
pub fn sample_initial_data(data: &InitialData, grid: &Grid1D, m: f64) -> Result<ScalarField> {
    if !(m > 1.0) {
        return Err(Error::InvalidInitialData(format!("m = {m} must exceed 1")));
    }
    data.validate(m)?;
    let values = match *data {
        InitialData::Barenblatt { t0, mass } => {
            let p = BarenblattProfile::new(m, mass)?;
            grid.centers().map(|x| p.value_unchecked(x, t0)).collect()
        }
        _ => grid
            .centers()
            .map(|x| data.value(x, m))
            .collect::<Result<Vec<_>>>()?,
    };
    ScalarField::new(*grid, values)
}
