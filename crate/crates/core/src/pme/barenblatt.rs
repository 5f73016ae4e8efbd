use statrs::function::beta::beta;

use crate::error::{Error, Result};
use crate::numeric::pow;

/// `int_{-1}^{1} (1 - s^2)^p ds`.
pub(crate) fn cap_integral(p: f64) -> f64 {
    beta(0.5, p + 1.0)
}

/// Self-similar source solution of `U_t = (U^m)_xx` on the line,
///
/// ```text
/// V(x, t) = t^-alpha * max(0, C - kappa x^2 t^-2alpha)^(1/(m-1)),
/// alpha = 1/(m+1),  kappa = (m-1) / (2m(m+1)),
/// ```
///
/// with `C` fixed by the total mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarenblattProfile {
    m: f64,
    mass: f64,
    alpha: f64,
    kappa: f64,
    c: f64,
}

impl BarenblattProfile {
    pub fn new(m: f64, mass: f64) -> Result<Self> {
        if !(m > 1.0) || !m.is_finite() {
            return Err(Error::Domain(format!(
                "Barenblatt exponent m = {m} must exceed 1"
            )));
        }
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::Domain(format!(
                "Barenblatt mass {mass} must be positive"
            )));
        }
        let alpha = 1.0 / (m + 1.0);
        let kappa = (m - 1.0) / (2.0 * m * (m + 1.0));
        let p = 1.0 / (m - 1.0);
        // mass = C^(p + 1/2) kappa^(-1/2) B(1/2, p + 1)
        let c = (mass * kappa.sqrt() / cap_integral(p)).powf(1.0 / (p + 0.5));
        Ok(Self {
            m,
            mass,
            alpha,
            kappa,
            c,
        })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// The free constant `C`.
    pub fn constant(&self) -> f64 {
        self.c
    }

    /// Support edge `x*(t) = sqrt(C/kappa) t^alpha`.
    pub fn edge(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok((self.c / self.kappa).sqrt() * t.powf(self.alpha))
    }

    /// Peak value `t^-alpha C^(1/(m-1))`.
    pub fn peak(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(t.powf(-self.alpha) * self.c.powf(1.0 / (self.m - 1.0)))
    }

    pub fn value(&self, x: f64, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.value_unchecked(x, t))
    }

    #[inline]
    pub(crate) fn value_unchecked(&self, x: f64, t: f64) -> f64 {
        let s = t.powf(-self.alpha);
        let cap = self.c - self.kappa * x * x * s * s;
        if cap <= 0.0 {
            0.0
        } else {
            s * pow(cap, 1.0 / (self.m - 1.0))
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "Barenblatt time t = {t} must be positive"
        )))
    }
}
