use std::fmt;

use crate::linalg::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepKind {
    Serious,
    /// Null step, radius kept.
    NullFrozen,
    /// Null step, radius halved.
    NullHalved,
    /// `y` re-tested after a poor secondary test and rejected.
    Fallback,
}

impl StepKind {
    pub fn name(self) -> &'static str {
        match self {
            StepKind::Serious => "serious",
            StepKind::NullFrozen => "null-frozen",
            StepKind::NullHalved => "null-halved",
            StepKind::Fallback => "fallback",
        }
    }

    pub fn is_null(self) -> bool {
        self != StepKind::Serious
    }
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One tested trial point.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Outer iteration, from 1.
    pub j: usize,
    /// Inner iteration within the outer one, from 1.
    pub k: usize,
    /// Radius the tangent program was solved with.
    pub r: f64,
    /// Radius after the radius update of this iteration.
    pub r_next: f64,
    pub r_sharp: f64,
    pub fx: f64,
    /// First-order model value at `y`.
    pub t: f64,
    /// Second-order model value at `y`.
    pub obj: f64,
    /// `f(x) − Φ_k(y)`.
    pub pred: f64,
    pub y: Vector,
    pub z: Vector,
    pub fz: f64,
    /// `Φ_k(z)`.
    pub phi_z: f64,
    /// Updated first-order model at `z`; null steps only.
    pub phi_next_z: Option<f64>,
    pub rho: f64,
    pub rho_tilde: Option<f64>,
    pub gstar_norm: f64,
    /// `‖y − x‖∞`.
    pub step_norm: f64,
    pub kind: StepKind,
    /// Planes in the model the tangent program was solved with.
    pub planes: usize,
    /// `f(x) − φ(y) − ‖v‖∞‖y − x‖∞`.
    pub lemma_slack: f64,
    pub kkt: f64,
}

impl IterationRecord {
    /// Right-hand side of `ρ̃ = ρ + (f(z) − φ_{k+1}(z)) / (f(x) − Φ_k(z))`.
    pub fn rho_tilde_decomposition(&self) -> Option<f64> {
        self.phi_next_z
            .map(|p| self.rho + (self.fz - p) / (self.fx - self.phi_z))
    }
}

pub type SolveTrace = Vec<IterationRecord>;
