use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::grid::Grid1D;
use super::initial::InitialData;
use crate::error::{Error, Result};

/// Cells kept clear between the support of the solution and the domain edge.
pub const BOUNDARY_CLEARANCE_CELLS: usize = 10;

pub const DEFAULT_CFL_SIGMA: f64 = 0.4;
pub const DEFAULT_EPSILON: f64 = 1e-4;
pub const DEFAULT_FRAMES: usize = 100;

/// Interval on which the initial density vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hole {
    pub a: f64,
    pub b: f64,
}

/// Where `(m, q)` sit relative to the hypothesis `q >= 2m` of the gradient theory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `q >= 2m`: the a-priori Lipschitz and propagation results apply.
    Covered,
    /// `m + 1 <= q < 2m`: runs are allowed but carry no theoretical claim.
    Exploratory,
    /// `q < m + 1`.
    Uncovered,
}

/// Full problem description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub m: f64,
    pub gamma: f64,
    pub q: f64,
    pub epsilon: f64,
    /// Off means the chemotactic drift is dropped (porous-medium mode).
    pub drift_enabled: bool,
    pub grid: Grid1D,
    pub u0: InitialData,
    pub t_end: f64,
    pub cfl_sigma: f64,
    pub hole: Option<Hole>,
    /// Number of output frames after `t = 0`, evenly spaced in time.
    pub n_frames: usize,
}

impl Scenario {
    pub fn regime(&self) -> Regime {
        if self.q >= 2.0 * self.m {
            Regime::Covered
        } else if self.q >= self.m + 1.0 {
            Regime::Exploratory
        } else {
            Regime::Uncovered
        }
    }

    /// `q >= 2m`.
    pub fn theory_applies(&self) -> bool {
        self.regime() == Regime::Covered
    }

    /// Analytic `||u0||_inf`.
    pub fn u0_sup(&self) -> Result<f64> {
        self.u0.sup_norm(self.m)
    }

    /// Guaranteed existence horizon `(||u0||_inf + 2)^-q`.
    pub fn existence_time(&self) -> Result<f64> {
        Ok((self.u0_sup()? + 2.0).powf(-self.q))
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self {
            epsilon,
            ..self.clone()
        }
    }

    pub fn with_cells(&self, n_cells: usize) -> Result<Self> {
        Ok(Self {
            grid: self.grid.with_cells(n_cells)?,
            ..self.clone()
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if !(self.m > 1.0 && self.m.is_finite()) {
            return bad(format!("m = {} must exceed 1", self.m));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma = {} must be positive", self.gamma));
        }
        if !(self.q >= 2.0 && self.q.is_finite()) {
            return bad(format!("q = {} must be at least 2", self.q));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon = {} must be non-negative", self.epsilon));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end = {} must be non-negative", self.t_end));
        }
        if !(self.cfl_sigma > 0.0 && self.cfl_sigma < 1.0) {
            return bad(format!("cfl_sigma = {} must lie in (0, 1)", self.cfl_sigma));
        }
        if self.n_frames == 0 {
            return bad("n_frames must be positive".into());
        }
        self.u0.validate(self.m)?;
        let (lo, hi) = self.grid.inset(BOUNDARY_CLEARANCE_CELLS);
        if let Some((s0, s1)) = self.u0.support(self.m)? {
            if s0 <= lo || s1 >= hi {
                return bad(format!(
                    "support [{s0}, {s1}] of u0 is not inside [{lo}, {hi}]"
                ));
            }
        }
        if let Some(Hole { a, b }) = self.hole {
            if !(a < b) {
                return bad(format!("hole [{a}, {b}] is empty"));
            }
            if a <= lo || b >= hi {
                return bad(format!("hole [{a}, {b}] is not inside [{lo}, {hi}]"));
            }
            // the generators are piecewise smooth, a dense probe suffices
            let probes = 4096;
            for k in 0..=probes {
                let x = a + (b - a) * k as f64 / probes as f64;
                if self.u0.value(x, self.m)? != 0.0 {
                    return bad(format!("u0 does not vanish on the hole at x = {x}"));
                }
            }
        }
        Ok(())
    }

    pub fn from_config_str(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        let cfg = Config { table: &table };
        cfg.reject_unknown()?;

        let grid = Grid1D::new(
            cfg.number("x_min")?,
            cfg.number("x_max")?,
            cfg.count("n_cells")?,
        )
        .map_err(|e| Error::Config(e.to_string()))?;
        let kind = cfg.string("u0.kind")?;
        let params = cfg.numbers_or_empty("u0.params")?;
        let u0 = InitialData::from_kind(&kind, &params)?;
        let hole = match (cfg.opt_number("hole.a")?, cfg.opt_number("hole.b")?) {
            (Some(a), Some(b)) => Some(Hole { a, b }),
            (None, None) => None,
            _ => {
                return Err(Error::Config(
                    "hole.a and hole.b must be given together".into(),
                ))
            }
        };
        let scenario = Scenario {
            m: cfg.number("m")?,
            gamma: cfg.number("gamma")?,
            q: cfg.number("q")?,
            epsilon: cfg.opt_number("epsilon")?.unwrap_or(DEFAULT_EPSILON),
            drift_enabled: cfg.opt_bool("drift_enabled")?.unwrap_or(true),
            grid,
            u0,
            t_end: cfg.number("t_end")?,
            cfl_sigma: cfg.opt_number("cfl_sigma")?.unwrap_or(DEFAULT_CFL_SIGMA),
            hole,
            n_frames: match cfg.opt_count("n_frames")? {
                Some(n) => n,
                None => DEFAULT_FRAMES,
            },
        };
        Ok(scenario)
    }

    pub fn from_config_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.as_ref().display())))?;
        Self::from_config_str(&text)
    }

    /// Flat `key = value` form accepted by [`Scenario::from_config_str`].
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let num = |v: f64| format!("{v:?}");
        let _ = writeln!(s, "m = {}", num(self.m));
        let _ = writeln!(s, "gamma = {}", num(self.gamma));
        let _ = writeln!(s, "q = {}", num(self.q));
        let _ = writeln!(s, "epsilon = {}", num(self.epsilon));
        let _ = writeln!(s, "drift_enabled = {}", self.drift_enabled);
        let _ = writeln!(s, "x_min = {}", num(self.grid.x_min()));
        let _ = writeln!(s, "x_max = {}", num(self.grid.x_max()));
        let _ = writeln!(s, "n_cells = {}", self.grid.n_cells());
        let _ = writeln!(s, "t_end = {}", num(self.t_end));
        let _ = writeln!(s, "cfl_sigma = {}", num(self.cfl_sigma));
        let _ = writeln!(s, "n_frames = {}", self.n_frames);
        let _ = writeln!(s, "u0.kind = \"{}\"", self.u0.kind());
        let params: Vec<String> = self.u0.params().into_iter().map(num).collect();
        let _ = writeln!(s, "u0.params = [{}]", params.join(", "));
        if let Some(Hole { a, b }) = self.hole {
            let _ = writeln!(s, "hole.a = {}", num(a));
            let _ = writeln!(s, "hole.b = {}", num(b));
        }
        s
    }
}

const TOP_KEYS: &[&str] = &[
    "m",
    "gamma",
    "q",
    "epsilon",
    "drift_enabled",
    "x_min",
    "x_max",
    "n_cells",
    "t_end",
    "cfl_sigma",
    "n_frames",
    "u0",
    "hole",
];

struct Config<'a> {
    table: &'a toml::Table,
}

impl Config<'_> {
    fn reject_unknown(&self) -> Result<()> {
        for (k, v) in self.table {
            if !TOP_KEYS.contains(&k.as_str()) {
                return Err(Error::Config(format!("unknown key `{k}`")));
            }
            let allowed: &[&str] = match k.as_str() {
                "u0" => &["kind", "params"],
                "hole" => &["a", "b"],
                _ => continue,
            };
            let sub = v
                .as_table()
                .ok_or_else(|| Error::Config(format!("`{k}` must use dotted keys")))?;
            for sk in sub.keys() {
                if !allowed.contains(&sk.as_str()) {
                    return Err(Error::Config(format!("unknown key `{k}.{sk}`")));
                }
            }
        }
        Ok(())
    }

    fn lookup(&self, key: &str) -> Option<&toml::Value> {
        match key.split_once('.') {
            Some((head, tail)) => self.table.get(head)?.as_table()?.get(tail),
            None => self.table.get(key),
        }
    }

    fn opt_number(&self, key: &str) -> Result<Option<f64>> {
        match self.lookup(key) {
            None => Ok(None),
            Some(toml::Value::Float(f)) => Ok(Some(*f)),
            Some(toml::Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(other) => Err(Error::Config(format!(
                "`{key}` must be a number, got {}",
                other.type_str()
            ))),
        }
    }

    fn number(&self, key: &str) -> Result<f64> {
        self.opt_number(key)?
            .ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    fn opt_count(&self, key: &str) -> Result<Option<usize>> {
        match self.lookup(key) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
            Some(_) => Err(Error::Config(format!(
                "`{key}` must be a non-negative integer"
            ))),
        }
    }

    fn count(&self, key: &str) -> Result<usize> {
        self.opt_count(key)?
            .ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    fn opt_bool(&self, key: &str) -> Result<Option<bool>> {
        match self.lookup(key) {
            None => Ok(None),
            Some(toml::Value::Boolean(b)) => Ok(Some(*b)),
            Some(_) => Err(Error::Config(format!("`{key}` must be true or false"))),
        }
    }

    fn string(&self, key: &str) -> Result<String> {
        match self.lookup(key) {
            Some(toml::Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(Error::Config(format!("`{key}` must be a string"))),
            None => Err(Error::Config(format!("missing key `{key}`"))),
        }
    }

    fn numbers_or_empty(&self, key: &str) -> Result<Vec<f64>> {
        let Some(v) = self.lookup(key) else {
            return Ok(vec![]);
        };
        let arr = v
            .as_array()
            .ok_or_else(|| Error::Config(format!("`{key}` must be an array")))?;
        arr.iter()
            .map(|x| match x {
                toml::Value::Float(f) => Ok(*f),
                toml::Value::Integer(i) => Ok(*i as f64),
                _ => Err(Error::Config(format!("`{key}` entries must be numbers"))),
            })
            .collect()
    }
}
