//! All-tangents mode: the working model is `g + h(x) + ∇h(x)ᵀ(· − x)` for a split
//! `f = g + h`, and the tangent program becomes a (box-restricted) proximal step.

use crate::error::{Result, SolverError};
use crate::linalg::{norm_inf, Vector};
use crate::objective::ProxSplit;

/// `prox_{r g}(x − r∇h(x))`, the forward-backward step.
pub fn prox_tangent_solve(split: &dyn ProxSplit, x: &Vector, r: f64) -> Result<Vector> {
    if !(r > 0.0) {
        return Err(SolverError::InvalidConfig(format!("prox parameter must be positive, got {r}")));
    }
    let w = x - split.smooth_gradient(x) * r;
    Ok(split.prox(&w, r))
}

/// Model of the all-tangents oracle at a fixed anchor.
pub(crate) struct ProxModel<'a> {
    pub split: &'a dyn ProxSplit,
    pub x: Vector,
    pub hx: f64,
    pub grad_h: Vector,
    pub r: f64,
}

pub(crate) struct ProxSolution {
    pub y: Vector,
    /// `φ(y)`.
    pub t: f64,
    /// `Φ(y)`.
    pub objective: f64,
    pub gstar: Vector,
    /// Trust-region normal `v` with `g* + (y − x)/r + v = 0`.
    pub box_mult: Vector,
}

impl<'a> ProxModel<'a> {
    pub fn new(split: &'a dyn ProxSplit, x: &Vector, r: f64) -> Self {
        ProxModel {
            split,
            x: x.clone(),
            hx: split.smooth_value(x),
            grad_h: split.smooth_gradient(x),
            r,
        }
    }

    /// First-order model `φ(z)`.
    pub fn phi(&self, z: &Vector) -> f64 {
        self.split.nonsmooth_value(z) + self.hx + self.grad_h.dot(&(z - &self.x))
    }

    pub fn big_phi(&self, z: &Vector) -> f64 {
        self.phi(z) + (z - &self.x).norm_squared() / (2.0 * self.r)
    }

    /// Minimizes `Φ` over the box `‖y − x‖∞ ≤ radius`.
    pub fn solve(&self, radius: f64) -> Result<ProxSolution> {
        let w = &self.x - &self.grad_h * self.r;
        let lo = self.x.map(|v| v - radius);
        let hi = self.x.map(|v| v + radius);
        let (y, s) = match self.split.prox_in_box(&w, self.r, &lo, &hi) {
            Some(pair) => pair,
            None => {
                let y = self.split.prox(&w, self.r);
                if norm_inf(&(&y - &self.x)) > radius {
                    return Err(SolverError::Unsupported(
                        "all-tangents mode needs a box-restricted prox when the trust region binds".into(),
                    ));
                }
                let s = (&w - &y) / self.r;
                (y, s)
            }
        };
        let box_mult = (&w - &y) / self.r - &s;
        let gstar = &s + &self.grad_h;
        let t = self.phi(&y);
        let objective = t + (&y - &self.x).norm_squared() / (2.0 * self.r);
        Ok(ProxSolution {
            y,
            t,
            objective,
            gstar,
            box_mult,
        })
    }
}
