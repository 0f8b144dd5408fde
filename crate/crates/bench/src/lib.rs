//! Fixtures shared by the benchmarks.

use nstr::{Matrix, Plane, PlaneTag, Polyhedron, Vector, WorkingModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A working model with `planes` random cuts in dimension `n`, anchored at 0,
/// with `Q = δI`.
pub fn random_model(n: usize, planes: usize, delta: f64, seed: u64) -> WorkingModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cuts = vec![Plane::new(0.0, Vector::from_fn(n, |_, _| rng.gen_range(-1.0..=1.0)), PlaneTag::Exactness)];
    for _ in 1..planes {
        cuts.push(Plane::new(
            -rng.gen_range(0.0..=1.0),
            Vector::from_fn(n, |_, _| rng.gen_range(-1.0..=1.0)),
            PlaneTag::Cut,
        ));
    }
    WorkingModel::new(Vector::zeros(n), 0.0, cuts, Matrix::identity(n, n) * delta, 1e3).expect("valid model")
}

/// `{y : Σy ≤ 1}` in dimension `n`.
pub fn halfspace(n: usize) -> Polyhedron {
    Polyhedron::new(Matrix::from_element(1, n, 1.0), Vector::from_element(1, 1.0)).expect("valid row")
}

pub const SOLVE_PROBLEMS: [&str; 4] = [
    "counterexample_quadratic",
    "max_quad:seed=1",
    "l1_quadratic:b=2/-3/0.5/1.5,r=4",
    "distance_squared:sign=-,points=0_0/2_1/-1_2",
];
