//! Flow specifications `v(y, ξ)` on the channel `[0, 1]`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::spectral::helmholtz::BoundaryCondition;
use crate::spectral::GridFunction;

/// Cross-channel profile `u(y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Profile {
    /// `slope * y + intercept`
    Linear { slope: f64, intercept: f64 },
    /// `amplitude * cos(mode π y)`
    Cosine { mode: u32, amplitude: f64 },
    /// Tabulated on a uniform grid and interpolated in between.
    Sampled { values: GridFunction },
}

impl Profile {
    pub fn linear() -> Self {
        Profile::Linear {
            slope: 1.0,
            intercept: 0.0,
        }
    }

    pub fn cosine(mode: u32) -> Self {
        Profile::Cosine { mode, amplitude: 1.0 }
    }

    pub fn eval(&self, y: f64) -> f64 {
        match self {
            Profile::Linear { slope, intercept } => slope * y + intercept,
            Profile::Cosine { mode, amplitude } => amplitude * (*mode as f64 * std::f64::consts::PI * y).cos(),
            Profile::Sampled { values } => values.interpolate(y),
        }
    }

    pub fn to_grid(&self, n: usize) -> Result<GridFunction> {
        match self {
            Profile::Sampled { values } if values.intervals() == n => Ok(values.clone()),
            _ => GridFunction::from_fn(n, |y| self.eval(y)),
        }
    }
}

type VelocityFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// An arbitrary velocity `v(y, ξ)`.
#[derive(Clone)]
pub struct GeneralFlow {
    velocity: Arc<VelocityFn>,
    label: String,
}

impl GeneralFlow {
    pub fn new(label: impl Into<String>, velocity: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            velocity: Arc::new(velocity),
            label: label.into(),
        }
    }

    pub fn eval(&self, y: f64, xi: f64) -> f64 {
        (self.velocity)(y, xi)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn as_fn(&self) -> &VelocityFn {
        &*self.velocity
    }
}

impl fmt::Debug for GeneralFlow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralFlow").field("label", &self.label).finish()
    }
}

#[derive(Debug, Clone)]
pub enum FlowKind {
    /// `v = u(y)`, independent of the switching signal.
    Steady(Profile),
    /// `v = u(y) ξ(t)`.
    Multiplicative(Profile),
    General(GeneralFlow),
}

#[derive(Debug, Clone)]
pub struct FlowSpec {
    pub kind: FlowKind,
    pub bc: BoundaryCondition,
}

impl FlowSpec {
    pub fn steady(profile: Profile) -> Self {
        Self {
            kind: FlowKind::Steady(profile),
            bc: BoundaryCondition::NoFlux,
        }
    }

    pub fn multiplicative(profile: Profile) -> Self {
        Self {
            kind: FlowKind::Multiplicative(profile),
            bc: BoundaryCondition::NoFlux,
        }
    }

    pub fn general(flow: GeneralFlow) -> Self {
        Self {
            kind: FlowKind::General(flow),
            bc: BoundaryCondition::NoFlux,
        }
    }

    pub fn with_bc(mut self, bc: BoundaryCondition) -> Self {
        self.bc = bc;
        self
    }

    /// Velocity at cross-channel position `y` when the signal equals `xi`.
    pub fn velocity(&self, y: f64, xi: f64) -> f64 {
        match &self.kind {
            FlowKind::Steady(u) => u.eval(y),
            FlowKind::Multiplicative(u) => u.eval(y) * xi,
            FlowKind::General(g) => g.eval(y, xi),
        }
    }

    /// Whether the velocity depends on the switching signal.
    pub fn needs_signal(&self) -> bool {
        !matches!(self.kind, FlowKind::Steady(_))
    }
}
