//! Cutting planes, working models and the bundle update policy.
//!
//! A plane is stored in anchor-relative form `(a, g)` and represents the affine
//! function `a + g·(y − x)` for the serious iterate `x` it was built at. Re-anchoring
//! happens only through [`crate::oracles::recycle_cut`].

use crate::error::{Result, SolverError};
use crate::linalg::{is_symmetric, symmetric_eigenvalues, Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlaneTag {
    Exactness,
    Cut,
    Aggregate,
    Recycled,
}

/// Trial point a downshifted tangent was generated from. Needed for recycling.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentOrigin {
    pub z: Vector,
    pub fz: f64,
    /// Downshift constant the plane was built with.
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    /// Value at the anchor.
    pub a: f64,
    pub g: Vector,
    pub tag: PlaneTag,
    /// Iteration counter at which the plane entered the bundle.
    pub birth: usize,
    /// Set for planes built from a tangent at a trial point (downshift oracles).
    pub origin: Option<TangentOrigin>,
}

impl Plane {
    pub fn new(a: f64, g: Vector, tag: PlaneTag) -> Self {
        Plane {
            a,
            g,
            tag,
            birth: 0,
            origin: None,
        }
    }

    pub fn with_birth(mut self, birth: usize) -> Self {
        self.birth = birth;
        self
    }

    pub fn with_tag(mut self, tag: PlaneTag) -> Self {
        self.tag = tag;
        self
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }
}

/// Value of `p` at `y` when `p` is anchored at `x`.
pub fn plane_value(p: &Plane, y: &Vector, x: &Vector) -> Result<f64> {
    if y.len() != p.dim() {
        return Err(SolverError::DimensionMismatch {
            expected: p.dim(),
            got: y.len(),
        });
    }
    if x.len() != p.dim() {
        return Err(SolverError::DimensionMismatch {
            expected: p.dim(),
            got: x.len(),
        });
    }
    Ok(p.a + p.g.dot(&(y - x)))
}

/// Feasible set `{y : A y ≤ b, lower ≤ y ≤ upper}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyhedron {
    pub a: Matrix,
    pub b: Vector,
    pub lower: Option<Vector>,
    pub upper: Option<Vector>,
}

impl Polyhedron {
    /// The whole space ℝⁿ.
    pub fn unconstrained(n: usize) -> Self {
        Polyhedron {
            a: Matrix::zeros(0, n),
            b: Vector::zeros(0),
            lower: None,
            upper: None,
        }
    }

    pub fn new(a: Matrix, b: Vector) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(SolverError::DimensionMismatch {
                expected: a.nrows(),
                got: b.len(),
            });
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(SolverError::NonFinite {
                context: "polyhedron rows".into(),
            });
        }
        Ok(Polyhedron {
            a,
            b,
            lower: None,
            upper: None,
        })
    }

    pub fn boxed(lower: Vector, upper: Vector) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(SolverError::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        let mut c = Polyhedron::unconstrained(lower.len());
        c.lower = Some(lower);
        c.upper = Some(upper);
        Ok(c)
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn is_unconstrained(&self) -> bool {
        self.a.nrows() == 0 && self.lower.is_none() && self.upper.is_none()
    }

    /// All constraints as rows `G y ≤ h`, bounds included.
    pub fn as_rows(&self) -> (Matrix, Vector) {
        let n = self.dim();
        let mut rows: Vec<(Vector, f64)> = (0..self.a.nrows())
            .map(|i| (self.a.row(i).transpose(), self.b[i]))
            .collect();
        if let Some(u) = &self.upper {
            for i in 0..n {
                if u[i].is_finite() {
                    let mut e = Vector::zeros(n);
                    e[i] = 1.0;
                    rows.push((e, u[i]));
                }
            }
        }
        if let Some(l) = &self.lower {
            for i in 0..n {
                if l[i].is_finite() {
                    let mut e = Vector::zeros(n);
                    e[i] = -1.0;
                    rows.push((e, -l[i]));
                }
            }
        }
        let mut g = Matrix::zeros(rows.len(), n);
        let mut h = Vector::zeros(rows.len());
        for (i, (r, rhs)) in rows.into_iter().enumerate() {
            g.set_row(i, &r.transpose());
            h[i] = rhs;
        }
        (g, h)
    }

    /// Largest constraint violation at `x` (zero when feasible).
    pub fn max_violation(&self, x: &Vector) -> f64 {
        let (g, h) = self.as_rows();
        (0..g.nrows())
            .map(|i| g.row(i).transpose().dot(x) - h[i])
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        x.len() == self.dim() && self.max_violation(x) <= tol
    }
}

/// How many planes the working model may hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BundlePolicy {
    pub max_planes: usize,
    /// Newest cutting planes protected from tapering before older aggregates.
    pub keep_newest: usize,
}

impl BundlePolicy {
    pub fn new(max_planes: usize, keep_newest: usize) -> Result<Self> {
        let p = BundlePolicy {
            max_planes,
            keep_newest,
        };
        p.validate()?;
        Ok(p)
    }

    /// Default sizing `max(n + 2, 10)`.
    pub fn for_dimension(n: usize) -> Self {
        BundlePolicy {
            max_planes: (n + 2).max(10),
            keep_newest: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_planes < 3 {
            return Err(SolverError::BundleTooSmall(format!(
                "max_planes ≥ 3 required, got {}",
                self.max_planes
            )));
        }
        if self.keep_newest < 1 || self.keep_newest + 2 > self.max_planes {
            return Err(SolverError::BundleTooSmall(format!(
                "1 ≤ keep_newest ≤ max_planes − 2 required, got keep_newest={} max_planes={}",
                self.keep_newest, self.max_planes
            )));
        }
        Ok(())
    }
}

/// Finite-max working model `φ(y) = max_i a_i + g_iᵀ(y − x)` plus a curvature term `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkingModel {
    anchor: Vector,
    fx: f64,
    planes: Vec<Plane>,
    q: Matrix,
    q_bound: f64,
}

impl WorkingModel {
    /// Builds and validates a working model.
    ///
    /// Requires an exactness plane with `a = fx`, all planes with `a ≤ fx`, and
    /// `Q` symmetric positive semidefinite with spectral norm at most `q_bound`.
    pub fn new(anchor: Vector, fx: f64, planes: Vec<Plane>, q: Matrix, q_bound: f64) -> Result<Self> {
        let n = anchor.len();
        if planes.is_empty() {
            return Err(SolverError::EmptyModel);
        }
        if !fx.is_finite() {
            return Err(SolverError::NonFinite {
                context: "model anchor value".into(),
            });
        }
        for p in &planes {
            if p.dim() != n {
                return Err(SolverError::DimensionMismatch {
                    expected: n,
                    got: p.dim(),
                });
            }
            if !p.a.is_finite() || p.g.iter().any(|v| !v.is_finite()) {
                return Err(SolverError::NonFinite {
                    context: "plane".into(),
                });
            }
            if p.a > fx {
                return Err(SolverError::InvalidModel(format!(
                    "plane value {} at the anchor exceeds f(x) = {}",
                    p.a, fx
                )));
            }
        }
        if !planes
            .iter()
            .any(|p| p.tag == PlaneTag::Exactness && p.a == fx)
        {
            return Err(SolverError::InvalidModel(
                "no exactness plane with a = f(x)".into(),
            ));
        }
        if q.nrows() != n || q.ncols() != n {
            return Err(SolverError::DimensionMismatch {
                expected: n,
                got: q.nrows(),
            });
        }
        check_curvature(&q, q_bound)?;
        Ok(WorkingModel {
            anchor,
            fx,
            planes,
            q,
            q_bound,
        })
    }

    pub fn anchor(&self) -> &Vector {
        &self.anchor
    }

    pub fn fx(&self) -> f64 {
        self.fx
    }

    pub fn planes(&self) -> &[Plane] {
        &self.planes
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn q_bound(&self) -> f64 {
        self.q_bound
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    /// The exactness plane kept for the current inner loop.
    pub fn exactness_plane(&self) -> &Plane {
        self.planes
            .iter()
            .find(|p| p.tag == PlaneTag::Exactness && p.a == self.fx)
            .expect("validated at construction")
    }
}

/// Checks `Q ⪰ 0` and `‖Q‖ ≤ q_bound`.
pub fn check_curvature(q: &Matrix, q_bound: f64) -> Result<()> {
    if !(q_bound > 0.0) {
        return Err(SolverError::InvalidModel("q_bound must be positive".into()));
    }
    if q.iter().any(|v| !v.is_finite()) || !is_symmetric(q, 1e-12) {
        return Err(SolverError::InvalidModel("Q must be finite and symmetric".into()));
    }
    if q.nrows() == 0 {
        return Ok(());
    }
    let ev = symmetric_eigenvalues(q);
    let scale = 1.0 + q.amax();
    if ev[0] < -1e-12 * scale {
        return Err(SolverError::InvalidModel(format!(
            "Q is not positive semidefinite (smallest eigenvalue {:e})",
            ev[0]
        )));
    }
    let norm = ev.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
    if norm > q_bound * (1.0 + 1e-12) {
        return Err(SolverError::InvalidModel(format!(
            "‖Q‖ = {norm} exceeds the bound {q_bound}"
        )));
    }
    Ok(())
}

/// First-order model value `max_i a_i + g_iᵀ(y − x)`.
pub fn model_value(wm: &WorkingModel, y: &Vector) -> Result<f64> {
    if wm.planes.is_empty() {
        return Err(SolverError::EmptyModel);
    }
    let mut best = f64::NEG_INFINITY;
    for p in &wm.planes {
        best = best.max(plane_value(p, y, &wm.anchor)?);
    }
    Ok(best)
}

/// Second-order model value `φ(y) + ½ (y − x)ᵀ Q (y − x)`.
pub fn second_order_value(wm: &WorkingModel, y: &Vector) -> Result<f64> {
    let phi = model_value(wm, y)?;
    let d = y - &wm.anchor;
    Ok(phi + 0.5 * d.dot(&(&wm.q * &d)))
}

/// Builds the next working model after a null step.
///
/// The result holds the exactness plane, the aggregate plane and every new cut;
/// remaining capacity is filled with planes of `wm`, newest first, where the
/// `keep_newest` most recent cutting planes (counting the new ones) take priority.
pub fn update_working_model(
    wm: &WorkingModel,
    new_cuts: Vec<Plane>,
    aggregate: Plane,
    policy: &BundlePolicy,
) -> Result<WorkingModel> {
    policy.validate()?;
    let mandatory = 2 + new_cuts.len();
    if mandatory > policy.max_planes {
        return Err(SolverError::BundleTooSmall(format!(
            "{} mandatory planes but max_planes = {}",
            mandatory, policy.max_planes
        )));
    }
    let exact_idx = wm
        .planes
        .iter()
        .position(|p| p.tag == PlaneTag::Exactness && p.a == wm.fx)
        .ok_or_else(|| SolverError::InvalidModel("no exactness plane".into()))?;

    // Indices of old planes, newest first (ties: later position first).
    let mut others: Vec<usize> = (0..wm.planes.len()).filter(|&i| i != exact_idx).collect();
    others.sort_by(|&i, &j| {
        wm.planes[j]
            .birth
            .cmp(&wm.planes[i].birth)
            .then(j.cmp(&i))
    });

    let mut capacity = policy.max_planes - mandatory;
    let mut keep = vec![false; wm.planes.len()];
    let mut protected_left = policy.keep_newest.saturating_sub(new_cuts.len());
    for &i in &others {
        if capacity == 0 || protected_left == 0 {
            break;
        }
        if matches!(wm.planes[i].tag, PlaneTag::Cut | PlaneTag::Recycled) {
            keep[i] = true;
            capacity -= 1;
            protected_left -= 1;
        }
    }
    for &i in &others {
        if capacity == 0 {
            break;
        }
        if !keep[i] {
            keep[i] = true;
            capacity -= 1;
        }
    }

    let mut planes = Vec::with_capacity(policy.max_planes);
    planes.push(wm.planes[exact_idx].clone());
    planes.extend(
        (0..wm.planes.len())
            .filter(|&i| keep[i])
            .map(|i| wm.planes[i].clone()),
    );
    planes.push(aggregate);
    planes.extend(new_cuts);
    WorkingModel::new(wm.anchor.clone(), wm.fx, planes, wm.q.clone(), wm.q_bound)
}
