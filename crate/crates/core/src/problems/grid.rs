//! Solver-independent reference minima by exhaustive grid search with a
//! shrinking-grid polish.

use crate::linalg::Vector;

fn best_on_grid(f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], per_axis: usize) -> (Vec<f64>, f64) {
    let n = lo.len();
    let total = per_axis.pow(n as u32);
    let mut p = vec![0.0; n];
    let mut best = (lo.to_vec(), f64::INFINITY);
    for mut idx in 0..total {
        for i in 0..n {
            let k = idx % per_axis;
            idx /= per_axis;
            p[i] = lo[i] + (hi[i] - lo[i]) * k as f64 / (per_axis - 1) as f64;
        }
        let v = f(&p);
        if v < best.1 {
            best = (p.clone(), v);
        }
    }
    best
}

/// Minimizes `f` over the box `[lo, hi]`: a `per_axis^n` grid, then repeated
/// 11-point grids on a window of ±3 cells around the incumbent, shrinking the
/// cell by 0.3 each round.
pub fn grid_minimize(f: &dyn Fn(&[f64]) -> f64, lo: &Vector, hi: &Vector, per_axis: usize) -> (Vector, f64) {
    assert!(per_axis >= 2 && lo.len() == hi.len());
    let (mut x, mut v) = best_on_grid(f, lo.as_slice(), hi.as_slice(), per_axis);
    let mut cell = (hi - lo).amax() / (per_axis - 1) as f64;
    let scale = 1.0 + x.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    while cell > 1e-15 * scale {
        let wlo: Vec<f64> = (0..x.len()).map(|i| (x[i] - 3.0 * cell).max(lo[i])).collect();
        let whi: Vec<f64> = (0..x.len()).map(|i| (x[i] + 3.0 * cell).min(hi[i])).collect();
        let (cx, cv) = best_on_grid(f, &wlo, &whi, 11);
        if cv < v {
            x = cx;
            v = cv;
        }
        cell *= 0.3;
    }
    (Vector::from_vec(x), v)
}
