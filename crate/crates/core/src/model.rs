//! Classical Lagrangians `L(x, v) = m v^2 / 2 - V(x)` with polynomial `V`,
//! in scaled units (hbar = 1).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Natural period of the scaled harmonic oscillator.
pub const HARMONIC_PERIOD: f64 = 2.0 * std::f64::consts::PI;

/// Parameters of `V(x) = alpha (x - x_min)^2 (x + x_min)^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleWellParams {
    pub alpha: f64,
    pub x_min: f64,
}

impl DoubleWellParams {
    pub fn new(alpha: f64, x_min: f64) -> Result<Self> {
        let p = Self { alpha, x_min };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "double-well strength must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.x_min.is_finite() && self.x_min > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "double-well minimum must be positive, got {}",
                self.x_min
            )));
        }
        Ok(())
    }

    pub fn barrier_height(&self) -> f64 {
        self.alpha * self.x_min.powi(4)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelKind {
    Harmonic,
    DoubleWell(DoubleWellParams),
    Custom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialModel {
    mass: f64,
    /// `V(x) = sum_k coeffs[k] x^k`.
    coeffs: Vec<f64>,
    label: String,
    kind: ModelKind,
}

impl PotentialModel {
    /// `V(x) = x^2 / 2`, unit mass.
    pub fn harmonic() -> Self {
        Self {
            mass: 1.0,
            coeffs: vec![0.0, 0.0, 0.5],
            label: "harmonic".into(),
            kind: ModelKind::Harmonic,
        }
    }

    /// `V(x) = alpha (x^2 - x_min^2)^2`, unit mass.
    pub fn double_well(p: DoubleWellParams) -> Result<Self> {
        p.validate()?;
        let a = p.alpha;
        let m2 = p.x_min * p.x_min;
        Ok(Self {
            mass: 1.0,
            coeffs: vec![a * m2 * m2, 0.0, -2.0 * a * m2, 0.0, a],
            label: "double_well".into(),
            kind: ModelKind::DoubleWell(p),
        })
    }

    /// Arbitrary real polynomial potential.
    pub fn custom(coeffs: Vec<f64>, mass: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter(
                "potential needs at least one coefficient".into(),
            ));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("potential coefficients must be finite".into()));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidParameter(format!("mass must be positive, got {mass}")));
        }
        Ok(Self {
            mass,
            coeffs,
            label: "custom".into(),
            kind: ModelKind::Custom,
        })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn double_well_params(&self) -> Option<DoubleWellParams> {
        match self.kind {
            ModelKind::DoubleWell(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_harmonic(&self) -> bool {
        self.kind == ModelKind::Harmonic
    }

    pub fn potential(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn lagrangian(&self, x: f64, v: f64) -> f64 {
        0.5 * self.mass * v * v - self.potential(x)
    }

    /// True when every odd coefficient vanishes.
    pub fn is_even(&self) -> bool {
        self.coeffs.iter().skip(1).step_by(2).all(|&c| c == 0.0)
    }
}
