use crate::linalg::{Matrix, Vector};
use crate::objective::{MaxOfQuadratics, Objective, Quadratic, ACTIVE_TOL};

/// `½ d_S(x)²` for a finite set `S`: a minimum of smooth functions.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSquared {
    points: Vec<Vector>,
}

impl DistanceSquared {
    pub fn new(points: Vec<Vector>) -> Self {
        assert!(!points.is_empty());
        DistanceSquared { points }
    }

    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    fn values(&self, z: &Vector) -> Vec<f64> {
        self.points.iter().map(|p| 0.5 * (z - p).norm_squared()).collect()
    }

    fn nearest(&self, z: &Vector) -> Vec<usize> {
        let vals = self.values(z);
        let best = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let tol = ACTIVE_TOL * (1.0 + best.abs());
        (0..vals.len()).filter(|&i| vals[i] <= best + tol).collect()
    }
}

impl Objective for DistanceSquared {
    fn dim(&self) -> usize {
        self.points[0].len()
    }

    fn value(&self, z: &Vector) -> f64 {
        self.values(z).into_iter().fold(f64::INFINITY, f64::min)
    }

    fn subgradient(&self, z: &Vector) -> Vector {
        z - &self.points[self.nearest(z)[0]]
    }

    fn directional_subgradient(&self, z: &Vector, d: &Vector) -> Option<Vector> {
        let mut best: Option<(f64, Vector)> = None;
        for i in self.nearest(z) {
            let g = z - &self.points[i];
            let s = g.dot(d);
            if best.as_ref().is_none_or(|(bs, _)| s > *bs) {
                best = Some((s, g));
            }
        }
        best.map(|(_, g)| g)
    }
}

/// `−½ d_S(x)² = max_p −½‖x − p‖²` as a max of concave quadratics.
pub fn negative_distance_squared(points: &[Vector]) -> MaxOfQuadratics {
    assert!(!points.is_empty());
    let n = points[0].len();
    MaxOfQuadratics::new(
        points
            .iter()
            .map(|p| Quadratic::new(-Matrix::identity(n, n), p.clone(), -0.5 * p.norm_squared()))
            .collect(),
    )
}
