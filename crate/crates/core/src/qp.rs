//! Dense primal active-set solver for small convex QPs
//! `min ½uᵀHu + cᵀu  s.t.  Gu ≤ h` with `H ⪰ 0`, started from a feasible point.
//!
//! Pivoting uses the lowest index for both entering and leaving constraints, so
//! the result is a deterministic function of the row order. When the minimizer is
//! not unique the solver optionally walks along flat directions ("purification")
//! toward a vertex, preferring directions that point away from a reference.

use crate::error::{Result, SolverError};
use crate::linalg::{null_space, Matrix, Vector};
use nalgebra::SymmetricEigen;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpOptions {
    pub max_iter: usize,
    /// Maximum number of flat moves in the purification pass; zero disables it.
    pub max_purify: usize,
}

impl Default for QpOptions {
    fn default() -> Self {
        QpOptions {
            max_iter: 2000,
            max_purify: 64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub u: Vector,
    /// Multipliers, one per row of `G`; zero off the working set.
    pub multipliers: Vector,
    pub working: Vec<usize>,
    pub iterations: usize,
}

pub struct QpProblem<'a> {
    pub h: &'a Matrix,
    pub c: &'a Vector,
    pub g: &'a Matrix,
    pub rhs: &'a Vector,
}

const NULL_TOL: f64 = 1e-12;
const MULT_ZERO: f64 = 1e-12;

impl QpProblem<'_> {
    fn nv(&self) -> usize {
        self.c.len()
    }

    fn m(&self) -> usize {
        self.g.nrows()
    }

    fn gradient(&self, u: &Vector) -> Vector {
        self.h * u + self.c
    }

    fn rows(&self, idx: &[usize]) -> Matrix {
        Matrix::from_fn(idx.len(), self.nv(), |r, c| self.g[(idx[r], c)])
    }

    fn row_dot(&self, i: usize, v: &Vector) -> f64 {
        self.g.row(i).transpose().dot(v)
    }

    fn scale(&self) -> f64 {
        1.0 + self.h.amax() + self.c.amax()
    }

    /// Least-squares multipliers for `G_Wᵀλ = −grad`.
    fn multipliers(&self, working: &[usize], grad: &Vector) -> Vector {
        if working.is_empty() {
            return Vector::zeros(0);
        }
        let gw_t = self.rows(working).transpose();
        let svd = gw_t.svd(true, true);
        svd.solve(&(-grad), 1e-14).expect("svd with u and v")
    }

    /// Step length along `p` until the first blocking constraint outside `working`.
    ///
    /// Returns `(alpha, Some(index))`, or `(limit, None)` when nothing blocks
    /// before `limit`.
    fn ratio_test(&self, u: &Vector, p: &Vector, working: &[usize], limit: f64) -> (f64, Option<usize>) {
        let pmax = p.amax();
        let mut best = limit;
        let mut block = None;
        for i in 0..self.m() {
            if working.contains(&i) {
                continue;
            }
            let gp = self.row_dot(i, p);
            let row_scale = self.g.row(i).amax();
            if gp <= 1e-12 * row_scale * pmax {
                continue;
            }
            let slack = (self.rhs[i] - self.row_dot(i, u)).max(0.0);
            let ratio = slack / gp;
            // Strict comparison keeps the lowest index on ties.
            if ratio < best {
                best = ratio;
                block = Some(i);
            }
        }
        (best, block)
    }

    /// Moves `u` by `alpha p`; if `block` is a bound row, its coordinate is snapped exactly.
    fn step(&self, u: &mut Vector, p: &Vector, alpha: f64, block: Option<usize>) {
        u.axpy(alpha, p, 1.0);
        if let Some(i) = block {
            let row = self.g.row(i);
            let nz: Vec<usize> = (0..self.nv()).filter(|&j| row[j] != 0.0).collect();
            if nz.len() == 1 && row[nz[0]].abs() == 1.0 {
                u[nz[0]] = self.rhs[i] * row[nz[0]];
            }
        }
    }

    /// Descent direction on the current working set, or `None` at a stationary point.
    ///
    /// The boolean is true for rays (unbounded step length).
    fn direction(&self, working: &[usize], grad: &Vector) -> Option<(Vector, bool)> {
        let nv = self.nv();
        let k = null_space(&self.rows(working), nv, NULL_TOL);
        if k.ncols() == 0 {
            return None;
        }
        let gr = k.transpose() * grad;
        let gtol = 1e-11 * (1.0 + grad.amax());
        if gr.amax() <= gtol {
            return None;
        }
        let hr = k.transpose() * self.h * &k;
        let eig = SymmetricEigen::new(hr);
        let curv_tol = 1e-14 * self.scale();
        // Component of the reduced gradient in the zero-curvature eigenspace.
        let mut ray = Vector::zeros(k.ncols());
        let mut newton = Vector::zeros(k.ncols());
        for (j, &ev) in eig.eigenvalues.iter().enumerate() {
            let v = eig.eigenvectors.column(j);
            let comp = v.dot(&gr);
            if ev <= curv_tol {
                ray -= v * comp;
            } else {
                newton -= v * (comp / ev);
            }
        }
        if ray.amax() > gtol {
            Some((&k * ray, true))
        } else {
            Some((&k * newton, false))
        }
    }

    fn run(&self, u: &mut Vector, working: &mut Vec<usize>, max_iter: usize, iters: &mut usize) -> Result<Vector> {
        loop {
            if *iters >= max_iter {
                return Err(SolverError::NumericalFailure(format!(
                    "active-set iteration cap {max_iter} reached"
                )));
            }
            *iters += 1;
            let grad = self.gradient(u);
            if let Some((p, is_ray)) = self.direction(working, &grad) {
                let limit = if is_ray { f64::INFINITY } else { 1.0 };
                let (alpha, block) = self.ratio_test(u, &p, working, limit);
                if !alpha.is_finite() {
                    return Err(SolverError::NumericalFailure("QP is unbounded below".into()));
                }
                self.step(u, &p, alpha, block);
                if let Some(i) = block {
                    working.push(i);
                    working.sort_unstable();
                }
                continue;
            }
            let lam = self.multipliers(working, &grad);
            let mtol = 1e-10 * (1.0 + grad.amax());
            match (0..working.len()).find(|&j| lam[j] < -mtol) {
                Some(j) => {
                    working.remove(j);
                }
                None => return Ok(lam),
            }
        }
    }

    /// One flat move, if any. `away` is the preferred direction at the current point.
    fn purify_step(&self, u: &mut Vector, working: &mut Vec<usize>, lam: &Vector, away: &Vector) -> bool {
        let nv = self.nv();
        let grad = self.gradient(u);
        let gw = self.rows(working);
        let ptol = 1e-12 * (1.0 + away.amax());

        // Directions keeping every working constraint active with zero curvature and slope.
        let mut stacked = Matrix::zeros(gw.nrows() + nv + 1, nv);
        stacked.view_mut((0, 0), (gw.nrows(), nv)).copy_from(&gw);
        stacked.view_mut((gw.nrows(), 0), (nv, nv)).copy_from(self.h);
        stacked.set_row(gw.nrows() + nv, &grad.transpose());
        let k = null_space(&stacked, nv, NULL_TOL);
        if k.ncols() > 0 {
            let mut p = &k * (k.transpose() * away);
            if p.amax() <= ptol {
                p = k.column(0).into_owned();
                if let Some(first) = p.iter().find(|v| v.abs() > 1e-12).copied() {
                    if first < 0.0 {
                        p = -p;
                    }
                }
            }
            let (alpha, block) = self.ratio_test(u, &p, working, f64::INFINITY);
            if let Some(i) = block {
                self.step(u, &p, alpha, Some(i));
                working.push(i);
                working.sort_unstable();
                return true;
            }
        }

        // Release a weakly active constraint when that moves away from the reference.
        for (pos, &j) in working.iter().enumerate() {
            if lam[pos].abs() > MULT_ZERO * (1.0 + grad.amax()) {
                continue;
            }
            let rest: Vec<usize> = working.iter().copied().filter(|&i| i != j).collect();
            let gr = self.rows(&rest);
            let mut stacked = Matrix::zeros(gr.nrows() + nv, nv);
            stacked.view_mut((0, 0), (gr.nrows(), nv)).copy_from(&gr);
            stacked.view_mut((gr.nrows(), 0), (nv, nv)).copy_from(self.h);
            let k = null_space(&stacked, nv, NULL_TOL);
            if k.ncols() == 0 {
                continue;
            }
            let gj = self.g.row(j).transpose();
            let p = -(&k * (k.transpose() * gj));
            if p.amax() <= ptol || away.dot(&p) <= ptol {
                continue;
            }
            let (alpha, block) = self.ratio_test(u, &p, &rest, f64::INFINITY);
            if let Some(i) = block {
                if alpha <= 0.0 {
                    continue;
                }
                self.step(u, &p, alpha, Some(i));
                working.retain(|&w| w != j);
                working.push(i);
                working.sort_unstable();
                return true;
            }
        }
        false
    }
}

/// Solves the QP from the feasible start `u0`.
///
/// `away` returns, for a point `u`, the direction flat moves should prefer.
pub fn solve_qp(
    prob: &QpProblem<'_>,
    u0: Vector,
    opts: QpOptions,
    away: Option<&dyn Fn(&Vector) -> Vector>,
) -> Result<QpSolution> {
    let nv = prob.nv();
    if prob.h.nrows() != nv || prob.h.ncols() != nv || prob.g.ncols() != nv || prob.rhs.len() != prob.m() {
        return Err(SolverError::DimensionMismatch {
            expected: nv,
            got: prob.g.ncols(),
        });
    }
    let mut u = u0;
    let mut working: Vec<usize> = Vec::new();
    let mut iters = 0;
    let mut lam = prob.run(&mut u, &mut working, opts.max_iter, &mut iters)?;

    if let Some(away) = away {
        let mut moved = false;
        for _ in 0..opts.max_purify {
            let dir = away(&u);
            if !prob.purify_step(&mut u, &mut working, &lam, &dir) {
                break;
            }
            moved = true;
            lam = prob.multipliers(&working, &prob.gradient(&u));
        }
        if moved {
            lam = prob.run(&mut u, &mut working, opts.max_iter + iters, &mut iters)?;
        }
    }

    let mut multipliers = Vector::zeros(prob.m());
    for (pos, &i) in working.iter().enumerate() {
        if lam[pos] > MULT_ZERO {
            multipliers[i] = lam[pos];
        }
    }
    Ok(QpSolution {
        u,
        multipliers,
        working,
        iterations: iters,
    })
}

/// Largest KKT violation of `(u, multipliers)`.
pub fn qp_kkt_residual(prob: &QpProblem<'_>, u: &Vector, multipliers: &Vector) -> f64 {
    let stat = (prob.gradient(u) + prob.g.transpose() * multipliers).amax();
    let mut worst = stat;
    for i in 0..prob.m() {
        let slack = prob.rhs[i] - prob.row_dot(i, u);
        worst = worst
            .max(-slack)
            .max(-multipliers[i])
            .max((multipliers[i] * slack).abs());
    }
    worst
}
