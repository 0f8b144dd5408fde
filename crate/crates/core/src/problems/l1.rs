use crate::linalg::Vector;
use crate::objective::{Objective, ProxSplit};

pub fn soft_threshold(w: &Vector, tau: f64) -> Vector {
    w.map(|v| v.signum() * (v.abs() - tau).max(0.0))
}

/// `‖y‖₁ + ½‖y − b‖²`, split into `g = ‖·‖₁` and `h = ½‖· − b‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct L1Quadratic {
    pub b: Vector,
}

impl L1Quadratic {
    pub fn minimizer(&self) -> Vector {
        soft_threshold(&self.b, 1.0)
    }
}

fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl Objective for L1Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, z: &Vector) -> f64 {
        self.nonsmooth_value(z) + self.smooth_value(z)
    }

    fn subgradient(&self, z: &Vector) -> Vector {
        z.map(sign0) + (z - &self.b)
    }

    fn directional_subgradient(&self, z: &Vector, d: &Vector) -> Option<Vector> {
        let s = Vector::from_fn(z.len(), |i, _| if z[i] != 0.0 { sign0(z[i]) } else { sign0(d[i]) });
        Some(s + (z - &self.b))
    }

    fn split(&self) -> Option<&dyn ProxSplit> {
        Some(self)
    }
}

impl ProxSplit for L1Quadratic {
    fn nonsmooth_value(&self, y: &Vector) -> f64 {
        y.lp_norm(1)
    }

    fn smooth_value(&self, y: &Vector) -> f64 {
        0.5 * (y - &self.b).norm_squared()
    }

    fn smooth_gradient(&self, y: &Vector) -> Vector {
        y - &self.b
    }

    fn prox(&self, w: &Vector, r: f64) -> Vector {
        soft_threshold(w, r)
    }

    fn prox_in_box(&self, w: &Vector, r: f64, lo: &Vector, hi: &Vector) -> Option<(Vector, Vector)> {
        // Separable and convex per coordinate, so clipping the free prox is exact.
        let free = soft_threshold(w, r);
        let y = Vector::from_fn(w.len(), |i, _| free[i].clamp(lo[i], hi[i]));
        let s = Vector::from_fn(w.len(), |i, _| {
            if y[i] != 0.0 {
                sign0(y[i])
            } else {
                (w[i] / r).clamp(-1.0, 1.0)
            }
        });
        Some((y, s))
    }
}
