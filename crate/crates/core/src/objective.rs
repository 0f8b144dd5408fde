//! Objective functions and the optional structure oracles can exploit.

use crate::linalg::{Matrix, Vector};

/// Activity tolerance used when deciding which smooth pieces are active.
pub const ACTIVE_TOL: f64 = 1e-10;

/// A locally Lipschitz objective `f: ℝⁿ → ℝ`.
///
/// Implementations must be deterministic; oracles and diagnostics may call them
/// from several threads at once.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, z: &Vector) -> f64;

    /// One element of the Clarke subdifferential at `z`.
    fn subgradient(&self, z: &Vector) -> Vector;

    /// An element of `∂f(z)` maximizing `gᵀd`, so that `gᵀd = f°(z, d)`.
    ///
    /// `None` when the objective carries no structure to compute it.
    fn directional_subgradient(&self, _z: &Vector, _d: &Vector) -> Option<Vector> {
        None
    }

    /// Values and gradients of all smooth pieces when `f = max_i f_i`.
    fn smooth_pieces(&self, _z: &Vector) -> Option<Vec<(f64, Vector)>> {
        None
    }

    /// Splitting `f = g + h` with `g` convex and prox-friendly, `h` smooth.
    fn split(&self) -> Option<&dyn ProxSplit> {
        None
    }
}

/// Composite structure `f = g + h` used by the all-tangents (proximal) mode.
pub trait ProxSplit: Send + Sync {
    /// Value of the convex part `g`.
    fn nonsmooth_value(&self, y: &Vector) -> f64;

    fn smooth_value(&self, y: &Vector) -> f64;

    fn smooth_gradient(&self, y: &Vector) -> Vector;

    /// `argmin_y g(y) + ‖y − w‖² / (2r)`.
    fn prox(&self, w: &Vector, r: f64) -> Vector;

    /// Same minimization restricted to the box `[lo, hi]`, returning the minimizer
    /// and a subgradient `s ∈ ∂g(y)` certifying optimality together with the box normal.
    ///
    /// Only available for separable `g`.
    fn prox_in_box(&self, _w: &Vector, _r: f64, _lo: &Vector, _hi: &Vector) -> Option<(Vector, Vector)> {
        None
    }
}

/// `½ yᵀ A y + bᵀ y + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    pub a: Matrix,
    pub b: Vector,
    pub c: f64,
}

impl Quadratic {
    pub fn new(a: Matrix, b: Vector, c: f64) -> Self {
        Quadratic { a, b, c }
    }

    pub fn affine(b: Vector, c: f64) -> Self {
        let n = b.len();
        Quadratic {
            a: Matrix::zeros(n, n),
            b,
            c,
        }
    }

    pub fn value(&self, y: &Vector) -> f64 {
        0.5 * y.dot(&(&self.a * y)) + self.b.dot(y) + self.c
    }

    pub fn gradient(&self, y: &Vector) -> Vector {
        &self.a * y + &self.b
    }
}

/// `f = max_i q_i` over finitely many quadratics.
///
/// Subgradients pick the lowest-index active piece; directional subgradients
/// enumerate active pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxOfQuadratics {
    pieces: Vec<Quadratic>,
}

impl MaxOfQuadratics {
    pub fn new(pieces: Vec<Quadratic>) -> Self {
        assert!(!pieces.is_empty(), "at least one piece required");
        let n = pieces[0].b.len();
        assert!(pieces
            .iter()
            .all(|p| p.b.len() == n && p.a.nrows() == n && p.a.ncols() == n));
        MaxOfQuadratics { pieces }
    }

    pub fn pieces(&self) -> &[Quadratic] {
        &self.pieces
    }

    fn values(&self, z: &Vector) -> Vec<f64> {
        self.pieces.iter().map(|p| p.value(z)).collect()
    }

    fn active(&self, z: &Vector) -> Vec<usize> {
        let vals = self.values(z);
        let best = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let tol = ACTIVE_TOL * (1.0 + best.abs());
        (0..vals.len()).filter(|&i| vals[i] >= best - tol).collect()
    }
}

impl Objective for MaxOfQuadratics {
    fn dim(&self) -> usize {
        self.pieces[0].b.len()
    }

    fn value(&self, z: &Vector) -> f64 {
        self.values(z).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    fn subgradient(&self, z: &Vector) -> Vector {
        self.pieces[self.active(z)[0]].gradient(z)
    }

    fn directional_subgradient(&self, z: &Vector, d: &Vector) -> Option<Vector> {
        let mut best: Option<(f64, Vector)> = None;
        for i in self.active(z) {
            let g = self.pieces[i].gradient(z);
            let s = g.dot(d);
            if best.as_ref().is_none_or(|(bs, _)| s > *bs) {
                best = Some((s, g));
            }
        }
        best.map(|(_, g)| g)
    }

    fn smooth_pieces(&self, z: &Vector) -> Option<Vec<(f64, Vector)>> {
        Some(
            self.pieces
                .iter()
                .map(|p| (p.value(z), p.gradient(z)))
                .collect(),
        )
    }
}
