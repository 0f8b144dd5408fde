//! Seeded maxima of convex quadratics in the plane.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{symmetric_eigenvalues, Matrix, Vector};
use crate::objective::{MaxOfQuadratics, Objective, Quadratic};
use crate::problems::grid::grid_minimize;

pub const PIECES: usize = 3;
/// Points per axis of the coarse dual grid.
pub const GRID: usize = 100;

/// `½xᵀA_i x + b_iᵀx + c_i` with `A_i = L_iL_iᵀ + ½I`, entries of `L_i` uniform
/// on [−1, 1], `b_i` on [−2, 2] and `c_i` on [−1, 1].
pub fn max_quad_pieces(seed: u64) -> Vec<Quadratic> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..PIECES)
        .map(|_| {
            let l = Matrix::from_fn(2, 2, |_, _| rng.gen_range(-1.0..=1.0));
            let a = &l * l.transpose() + Matrix::identity(2, 2) * 0.5;
            let b = Vector::from_fn(2, |_, _| rng.gen_range(-2.0..=2.0));
            let c = rng.gen_range(-1.0..=1.0);
            Quadratic::new(a, b, c)
        })
        .collect()
}

/// Box certain to contain the minimizer: the sublevel set of the first strongly
/// convex piece at the best piece minimizer.
pub fn reference_box(f: &MaxOfQuadratics) -> (Vector, Vector) {
    let mins: Vec<(Vector, f64)> = f
        .pieces()
        .iter()
        .filter_map(|p| {
            let ev = symmetric_eigenvalues(&p.a);
            if ev[0] <= 0.0 {
                return None;
            }
            let m = p.a.clone().lu().solve(&(-&p.b))?;
            Some((m, ev[0]))
        })
        .collect();
    assert!(!mins.is_empty(), "at least one strongly convex piece needed");
    let level = mins
        .iter()
        .map(|(m, _)| f.value(m))
        .fold(f64::INFINITY, f64::min);
    let (center, radius) = f
        .pieces()
        .iter()
        .zip(mins.iter())
        .map(|(p, (m, lmin))| {
            let r = (2.0 * (level - p.value(m)).max(0.0) / lmin).sqrt();
            (m.clone(), r)
        })
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    let pad = radius * 1.01 + 1e-3;
    (center.map(|c| c - pad), center.map(|c| c + pad))
}

/// Evaluator over plain slices, for grid searches.
pub fn fast_evaluator(f: &MaxOfQuadratics) -> impl Fn(&[f64]) -> f64 + '_ {
    move |p: &[f64]| {
        let n = p.len();
        let mut best = f64::NEG_INFINITY;
        for q in f.pieces() {
            let mut v = q.c;
            for i in 0..n {
                let mut ax = 0.0;
                for j in 0..n {
                    ax += q.a[(i, j)] * p[j];
                }
                v += p[i] * (0.5 * ax + q.b[i]);
            }
            best = best.max(v);
        }
        best
    }
}

/// `min_x Σλ_i p_i(x)` and its minimizer. Every `λ` in the simplex gives a lower
/// bound on `min max_i p_i`, with equality at the maximizing `λ`.
pub fn dual_value(f: &MaxOfQuadratics, lambda: &[f64]) -> Option<(Vector, f64)> {
    let n = f.pieces()[0].b.len();
    let mut a = Matrix::zeros(n, n);
    let mut b = Vector::zeros(n);
    let mut c = 0.0;
    for (p, &l) in f.pieces().iter().zip(lambda) {
        a += &p.a * l;
        b += &p.b * l;
        c += p.c * l;
    }
    let x = a.cholesky()?.solve(&(-&b));
    let v = c + 0.5 * b.dot(&x);
    Some((x, v))
}

/// Simplex weights from the unit cube: `λ_1 = u_1`, `λ_2 = (1 − u_1)u_2`, ...
fn simplex_point(u: &[f64]) -> Vec<f64> {
    let mut rest = 1.0;
    let mut l = Vec::with_capacity(u.len() + 1);
    for &ui in u {
        l.push(rest * ui);
        rest *= 1.0 - ui;
    }
    l.push(rest);
    l
}

/// Grid reference for a max of strongly convex quadratics: `(argmin, min)`.
///
/// The grid runs over the concave dual, which is smooth, so the shrinking-grid
/// polish does not stall in the kinks of the primal function.
pub fn max_quad_reference(f: &MaxOfQuadratics) -> (Vector, f64) {
    let m = f.pieces().len();
    if m == 1 {
        return dual_value(f, &[1.0]).expect("strongly convex piece");
    }
    let neg_dual = |u: &[f64]| dual_value(f, &simplex_point(u)).map_or(f64::INFINITY, |(_, v)| -v);
    let per_axis = if m == 2 { GRID * GRID } else { GRID };
    let (u, _) = grid_minimize(&neg_dual, &Vector::zeros(m - 1), &Vector::from_element(m - 1, 1.0), per_axis);
    dual_value(f, &simplex_point(u.as_slice())).expect("strongly convex pieces")
}
