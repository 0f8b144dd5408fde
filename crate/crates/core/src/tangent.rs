//! The trust-region tangent program over a max-norm box and its aggregate plane.
//!
//! In the variables `(t, d = y − x)` the program reads
//!
//! ```text
//! minimize    t + ½ dᵀQd
//! subject to  a_i + g_iᵀd ≤ t        (cuts)
//!             A d ≤ b − A x          (polyhedron rows, bounds included)
//!             −R ≤ d_i ≤ R           (trust region)
//! ```
//!
//! Rows are numbered in that order; ties between minimizers are broken by the
//! lowest-index pivoting of [`crate::qp`] followed by flat moves away from `x`.

use crate::error::{Result, SolverError};
use crate::linalg::{norm_inf, Matrix, Vector};
use crate::model::{model_value, Plane, PlaneTag, Polyhedron, WorkingModel};
use crate::qp::{qp_kkt_residual, solve_qp, QpOptions, QpProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TangentStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentSolution {
    pub y: Vector,
    /// Epigraph variable, equal to the first-order model value at `y`.
    pub t: f64,
    /// `t + ½(y − x)ᵀQ(y − x)`.
    pub objective: f64,
    /// Weights on the cutting planes, in model order.
    pub lambda: Vector,
    /// Weights on the rows of the polyhedron (see [`Polyhedron::as_rows`]).
    pub mu: Vector,
    /// Signed trust-region multipliers `λ_upper − λ_lower`.
    pub box_mult: Vector,
    pub status: TangentStatus,
}

/// Feasibility slack allowed for the serious iterate.
const FEAS_TOL: f64 = 1e-9;

fn feasibility_check(x: &Vector, c: &Polyhedron) -> Result<()> {
    if c.dim() != x.len() {
        return Err(SolverError::DimensionMismatch {
            expected: x.len(),
            got: c.dim(),
        });
    }
    let viol = c.max_violation(x);
    if viol > FEAS_TOL * (1.0 + norm_inf(x)) {
        return Err(SolverError::Infeasible { violation: viol });
    }
    Ok(())
}

struct Layout {
    h: Matrix,
    c: Vector,
    g: Matrix,
    rhs: Vector,
    ncuts: usize,
    npoly: usize,
}

fn layout(wm: &WorkingModel, c: &Polyhedron, r: f64) -> Layout {
    let n = wm.dim();
    let x = wm.anchor();
    let planes = wm.planes();
    let (ca, cb) = c.as_rows();
    let ncuts = planes.len();
    let npoly = ca.nrows();
    let m = ncuts + npoly + 2 * n;
    let mut g = Matrix::zeros(m, n + 1);
    let mut rhs = Vector::zeros(m);
    for (i, p) in planes.iter().enumerate() {
        g[(i, 0)] = -1.0;
        for j in 0..n {
            g[(i, j + 1)] = p.g[j];
        }
        rhs[i] = -p.a;
    }
    for i in 0..npoly {
        let row = ca.row(i);
        for j in 0..n {
            g[(ncuts + i, j + 1)] = row[j];
        }
        rhs[ncuts + i] = cb[i] - row.transpose().dot(x);
    }
    let up = ncuts + npoly;
    for j in 0..n {
        g[(up + j, j + 1)] = 1.0;
        rhs[up + j] = r;
        g[(up + n + j, j + 1)] = -1.0;
        rhs[up + n + j] = r;
    }
    let mut h = Matrix::zeros(n + 1, n + 1);
    h.view_mut((1, 1), (n, n)).copy_from(wm.q());
    let mut cvec = Vector::zeros(n + 1);
    cvec[0] = 1.0;
    Layout {
        h,
        c: cvec,
        g,
        rhs,
        ncuts,
        npoly,
    }
}

/// Solves the tangent program with trust-region radius `r`.
pub fn solve_tangent_program(wm: &WorkingModel, c: &Polyhedron, r: f64) -> Result<TangentSolution> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(SolverError::InvalidConfig(format!("trust-region radius must be positive, got {r}")));
    }
    let x = wm.anchor();
    feasibility_check(x, c)?;
    let n = wm.dim();
    let lay = layout(wm, c, r);
    let prob = QpProblem {
        h: &lay.h,
        c: &lay.c,
        g: &lay.g,
        rhs: &lay.rhs,
    };
    let t0 = wm.planes().iter().map(|p| p.a).fold(f64::NEG_INFINITY, f64::max);
    let mut u0 = Vector::zeros(n + 1);
    u0[0] = t0;
    let away = |u: &Vector| {
        let mut w = u.clone();
        w[0] = 0.0;
        w
    };
    let sol = solve_qp(&prob, u0, QpOptions::default(), Some(&away))?;

    let d = sol.u.rows(1, n).into_owned();
    let y = x + &d;
    let mults = &sol.multipliers;
    let lambda = mults.rows(0, lay.ncuts).into_owned();
    let mu = mults.rows(lay.ncuts, lay.npoly).into_owned();
    let up = lay.ncuts + lay.npoly;
    let box_mult = Vector::from_fn(n, |j, _| mults[up + j] - mults[up + n + j]);
    let t = model_value(wm, &y)?;
    let objective = t + 0.5 * d.dot(&(wm.q() * &d));
    let out = TangentSolution {
        y,
        t,
        objective,
        lambda,
        mu,
        box_mult,
        status: TangentStatus::Optimal,
    };
    let res = kkt_residual(wm, c, r, &out);
    let scale = 1.0 + lay.g.amax() + wm.q().amax() + norm_inf(&lay.rhs);
    if !(res <= 1e-8 * scale) {
        return Err(SolverError::NumericalFailure(format!("KKT residual {res:e} after solve")));
    }
    Ok(out)
}

/// Max of stationarity, primal/dual feasibility and complementarity violations.
pub fn kkt_residual(wm: &WorkingModel, c: &Polyhedron, r: f64, sol: &TangentSolution) -> f64 {
    let n = wm.dim();
    let lay = layout(wm, c, r);
    let mut mults = Vector::zeros(lay.g.nrows());
    if sol.lambda.len() != lay.ncuts || sol.mu.len() != lay.npoly || sol.box_mult.len() != n || sol.y.len() != n {
        return f64::INFINITY;
    }
    mults.rows_mut(0, lay.ncuts).copy_from(&sol.lambda);
    mults.rows_mut(lay.ncuts, lay.npoly).copy_from(&sol.mu);
    let up = lay.ncuts + lay.npoly;
    for j in 0..n {
        mults[up + j] = sol.box_mult[j].max(0.0);
        mults[up + n + j] = (-sol.box_mult[j]).max(0.0);
    }
    let mut u = Vector::zeros(n + 1);
    u[0] = sol.t;
    u.rows_mut(1, n).copy_from(&(&sol.y - wm.anchor()));
    let prob = QpProblem {
        h: &lay.h,
        c: &lay.c,
        g: &lay.g,
        rhs: &lay.rhs,
    };
    qp_kkt_residual(&prob, &u, &mults)
}

/// Aggregate subgradient `Σλ_i g_i + Aᵀμ` (trust-region multipliers excluded).
pub fn aggregate_subgradient(wm: &WorkingModel, sol: &TangentSolution, c: &Polyhedron) -> Vector {
    let mut g = Vector::zeros(wm.dim());
    for (p, &l) in wm.planes().iter().zip(sol.lambda.iter()) {
        if l != 0.0 {
            g.axpy(l, &p.g, 1.0);
        }
    }
    if sol.mu.len() > 0 {
        let (ca, _) = c.as_rows();
        g += ca.transpose() * &sol.mu;
    }
    g
}

/// The aggregate plane `t + g*ᵀ(· − y)`, anchored at `x`.
pub fn aggregate_from_solution(wm: &WorkingModel, sol: &TangentSolution, c: &Polyhedron) -> Result<Plane> {
    if sol.status != TangentStatus::Optimal {
        return Err(SolverError::NumericalFailure("aggregate needs an optimal tangent solution".into()));
    }
    if sol.lambda.len() != wm.planes().len() {
        return Err(SolverError::DimensionMismatch {
            expected: wm.planes().len(),
            got: sol.lambda.len(),
        });
    }
    let g = aggregate_subgradient(wm, sol, c);
    let d = &sol.y - wm.anchor();
    // Convexity of the model gives a ≤ f(x); the clamp only removes round-off.
    let a = (sol.t - g.dot(&d)).min(wm.fx());
    Ok(Plane::new(a, g, PlaneTag::Aggregate))
}

/// Slack in the max-norm estimate `f(x) − φ(y) ≥ ‖v‖∞‖y − x‖∞`; nonnegative in exact arithmetic.
pub fn lemma_slack(wm: &WorkingModel, sol: &TangentSolution) -> f64 {
    let d = &sol.y - wm.anchor();
    (wm.fx() - sol.t) - norm_inf(&sol.box_mult) * norm_inf(&d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn wm(planes: Vec<Plane>, n: usize, q: Matrix) -> WorkingModel {
        WorkingModel::new(Vector::zeros(n), 0.0, planes, q, 10.0).unwrap()
    }

    fn m0() -> Plane {
        Plane::new(0.0, v(&[-1.0, 0.0]), PlaneTag::Exactness)
    }

    #[test]
    fn single_plane_corner() {
        let w = wm(vec![m0()], 2, Matrix::zeros(2, 2));
        let c = Polyhedron::unconstrained(2);
        let s = solve_tangent_program(&w, &c, 1.0).unwrap();
        assert_eq!(s.t, -1.0);
        assert_eq!(s.y, v(&[1.0, 1.0]));
        assert_eq!(s.lambda, v(&[1.0]));
        assert!(kkt_residual(&w, &c, 1.0, &s) < 1e-12);
        let agg = aggregate_from_solution(&w, &s, &c).unwrap();
        assert_eq!((agg.a, agg.g.clone()), (0.0, v(&[-1.0, 0.0])));
    }

    #[test]
    fn second_model_moves_to_opposite_corner() {
        let m1 = Plane::new(-0.75, v(&[0.0, 0.5]), PlaneTag::Cut).with_birth(1);
        let agg = m0().with_tag(PlaneTag::Aggregate).with_birth(1);
        let w = wm(vec![m0(), agg, m1], 2, Matrix::zeros(2, 2));
        let c = Polyhedron::unconstrained(2);
        let s = solve_tangent_program(&w, &c, 1.0).unwrap();
        assert_eq!(s.y, v(&[1.0, -1.0]));
        assert_eq!(s.t, -1.0);
        let a = aggregate_from_solution(&w, &s, &c).unwrap();
        assert_eq!(a.g, v(&[-1.0, 0.0]));
        assert_eq!(a.a, 0.0);
    }

    #[test]
    fn flat_model_stays_put() {
        let w = wm(vec![Plane::new(0.0, v(&[0.0, 0.0]), PlaneTag::Exactness)], 2, Matrix::identity(2, 2));
        let s = solve_tangent_program(&w, &Polyhedron::unconstrained(2), 1.0).unwrap();
        assert_eq!(s.y, v(&[0.0, 0.0]));
        assert_eq!(s.t, 0.0);
    }

    #[test]
    fn symmetric_vee() {
        let w = wm(
            vec![
                Plane::new(0.0, v(&[1.0]), PlaneTag::Exactness),
                Plane::new(0.0, v(&[-1.0]), PlaneTag::Cut),
            ],
            1,
            Matrix::zeros(1, 1),
        );
        let c = Polyhedron::unconstrained(1);
        let s = solve_tangent_program(&w, &c, 1.0).unwrap();
        assert_eq!(s.y, v(&[0.0]));
        assert_eq!(s.t, 0.0);
        assert!((s.lambda.clone() - v(&[0.5, 0.5])).amax() < 1e-12);
        let agg = aggregate_from_solution(&w, &s, &c).unwrap();
        assert!(agg.g[0].abs() < 1e-12 && agg.a == 0.0);
    }

    #[test]
    fn infeasible_anchor_rejected() {
        let w = wm(vec![Plane::new(0.0, v(&[1.0]), PlaneTag::Exactness)], 1, Matrix::zeros(1, 1));
        let c = Polyhedron::boxed(v(&[1.0]), v(&[2.0])).unwrap();
        assert!(matches!(
            solve_tangent_program(&w, &c, 1.0),
            Err(SolverError::Infeasible { .. })
        ));
    }

    #[test]
    fn polyhedron_multipliers_enter_the_aggregate() {
        // min y on y ≥ 0 with x = 0: the bound carries the whole gradient.
        let w = wm(vec![Plane::new(0.0, v(&[1.0]), PlaneTag::Exactness)], 1, Matrix::zeros(1, 1));
        let c = Polyhedron::boxed(v(&[0.0]), v(&[5.0])).unwrap();
        let s = solve_tangent_program(&w, &c, 1.0).unwrap();
        assert_eq!(s.y, v(&[0.0]));
        assert!((s.mu.clone() - v(&[0.0, 1.0])).amax() < 1e-12);
        let agg = aggregate_from_solution(&w, &s, &c).unwrap();
        assert!(agg.g[0].abs() < 1e-12);
    }

    #[test]
    fn non_optimal_point_has_large_residual() {
        let w = wm(vec![m0()], 2, Matrix::zeros(2, 2));
        let c = Polyhedron::unconstrained(2);
        let bogus = TangentSolution {
            y: v(&[0.0, 0.0]),
            t: 0.0,
            objective: 0.0,
            lambda: v(&[0.0]),
            mu: Vector::zeros(0),
            box_mult: v(&[0.0, 0.0]),
            status: TangentStatus::Optimal,
        };
        assert!(kkt_residual(&w, &c, 1.0, &bogus) >= 1.0);
    }
}
