//! Test problems with independently known minima.
//!
//! Problems are addressed by strings of the form `name:key=value,key=value`.
//! Vector values separate entries with `/`; point lists separate points with `/`
//! and coordinates with `_` (e.g. `points=0_0/1_2`).

mod distance;
mod grid;
mod l1;
mod max_quad;
pub mod zigzag;

use std::collections::BTreeMap;
use std::fmt;

pub use distance::{negative_distance_squared, DistanceSquared};
pub use grid::grid_minimize;
pub use l1::{soft_threshold, L1Quadratic};
pub use max_quad::{dual_value, fast_evaluator, max_quad_pieces, max_quad_reference, reference_box};
pub use zigzag::Zigzag;

use crate::driver::QPolicy;
use crate::error::{Result, SolverError};
use crate::linalg::{Matrix, Vector};
use crate::model::Polyhedron;
use crate::objective::{MaxOfQuadratics, Objective, Quadratic};
use crate::oracles::OracleKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceMethod {
    ClosedForm,
    /// [`grid_minimize`] on a documented box.
    Grid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub point: Option<Vector>,
    pub value: f64,
    pub method: ReferenceMethod,
}

pub struct NamedProblem {
    /// Canonical name, without parameters.
    pub name: String,
    pub objective: Box<dyn Objective>,
    pub feasible: Polyhedron,
    pub start: Vector,
    pub reference: Option<Reference>,
    pub oracle: OracleKind,
    /// Suggested second-order term.
    pub q_hint: Option<QPolicy>,
}

impl fmt::Debug for NamedProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NamedProblem")
            .field("name", &self.name)
            .field("dim", &self.objective.dim())
            .field("start", &self.start)
            .field("reference", &self.reference)
            .field("oracle", &self.oracle)
            .finish()
    }
}

/// `½x₁² − x₁ + ¼x₂²` on ℝ², minimized at (1, 0) with value −½.
pub fn counterexample_quadratic() -> NamedProblem {
    let q = Quadratic::new(
        Matrix::from_diagonal(&Vector::from_column_slice(&[1.0, 0.5])),
        Vector::from_column_slice(&[-1.0, 0.0]),
        0.0,
    );
    NamedProblem {
        name: "counterexample_quadratic".into(),
        objective: Box::new(MaxOfQuadratics::new(vec![q])),
        feasible: Polyhedron::unconstrained(2),
        start: Vector::zeros(2),
        reference: Some(Reference {
            point: Some(Vector::from_column_slice(&[1.0, 0.0])),
            value: -0.5,
            method: ReferenceMethod::ClosedForm,
        }),
        oracle: OracleKind::Downshift,
        q_hint: None,
    }
}

/// The zig-zag function on [−1, 1]; minimum 0 at the origin.
pub fn zigzag() -> NamedProblem {
    NamedProblem {
        name: "zigzag".into(),
        objective: Box::new(Zigzag),
        feasible: Polyhedron::boxed(Vector::from_element(1, -1.0), Vector::from_element(1, 1.0))
            .expect("valid box"),
        start: Vector::from_element(1, zigzag::breakpoints()[1]),
        reference: Some(Reference {
            point: Some(Vector::zeros(1)),
            value: 0.0,
            method: ReferenceMethod::ClosedForm,
        }),
        oracle: OracleKind::Downshift,
        q_hint: None,
    }
}

/// Seeded max of three convex quadratics on ℝ², with a grid reference.
pub fn max_quad(seed: u64) -> NamedProblem {
    let f = MaxOfQuadratics::new(max_quad_pieces(seed));
    let (x, v) = max_quad_reference(&f);
    NamedProblem {
        name: "max_quad".into(),
        objective: Box::new(f),
        feasible: Polyhedron::unconstrained(2),
        start: Vector::zeros(2),
        reference: Some(Reference {
            point: Some(x),
            value: v,
            method: ReferenceMethod::Grid,
        }),
        oracle: OracleKind::Downshift,
        q_hint: None,
    }
}

/// `‖y‖₁ + ½‖y − b‖²`; `r` is the proximal parameter suggested through `Q = I/r`.
pub fn l1_quadratic(b: Vector, r: f64) -> Result<NamedProblem> {
    if b.is_empty() {
        return Err(SolverError::ProblemParams("b must be nonempty".into()));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(SolverError::ProblemParams(format!("r > 0 required, got {r}")));
    }
    let f = L1Quadratic { b };
    let x = f.minimizer();
    let v = f.value(&x);
    let n = f.dim();
    Ok(NamedProblem {
        name: "l1_quadratic".into(),
        objective: Box::new(f),
        feasible: Polyhedron::unconstrained(n),
        start: Vector::zeros(n),
        reference: Some(Reference {
            point: Some(x),
            value: v,
            method: ReferenceMethod::ClosedForm,
        }),
        oracle: OracleKind::AllTangents,
        q_hint: Some(QPolicy::ScaledIdentity(1.0 / r)),
    })
}

/// Box of half-width 3 around the points used for the negative sign.
pub const DISTANCE_MARGIN: f64 = 3.0;

/// `±½ d_S(x)²`. The positive sign is minimized on ℝⁿ (value 0 on `S`); the
/// negative sign on the box `[−3, 3]ⁿ`, with a grid reference for `n ≤ 2`.
pub fn distance_squared_dc(points: Vec<Vector>, positive: bool) -> Result<NamedProblem> {
    if points.is_empty() {
        return Err(SolverError::ProblemParams("the point set must be nonempty".into()));
    }
    let n = points[0].len();
    if n == 0 || points.iter().any(|p| p.len() != n) {
        return Err(SolverError::ProblemParams("points must share a positive dimension".into()));
    }
    let centroid = points.iter().fold(Vector::zeros(n), |acc, p| acc + p) / points.len() as f64;
    if positive {
        let reference = Reference {
            point: Some(points[0].clone()),
            value: 0.0,
            method: ReferenceMethod::ClosedForm,
        };
        return Ok(NamedProblem {
            name: "distance_squared".into(),
            objective: Box::new(DistanceSquared::new(points)),
            feasible: Polyhedron::unconstrained(n),
            start: centroid.add_scalar(0.3),
            reference: Some(reference),
            oracle: OracleKind::Standard,
            q_hint: None,
        });
    }
    let f = negative_distance_squared(&points);
    let lo = Vector::from_element(n, -DISTANCE_MARGIN);
    let hi = Vector::from_element(n, DISTANCE_MARGIN);
    let reference = (n <= 2).then(|| {
        let (x, v) = grid_minimize(&fast_evaluator(&f), &lo, &hi, if n == 1 { 100_001 } else { 1000 });
        Reference {
            point: Some(x),
            value: v,
            method: ReferenceMethod::Grid,
        }
    });
    // Start outside the hull of S: inside it the midpoints between points are local minima.
    let upper = points.iter().skip(1).fold(points[0].clone(), |m, p| m.sup(p));
    let start = upper.add_scalar(0.5).map(|v| v.clamp(-DISTANCE_MARGIN, DISTANCE_MARGIN));
    Ok(NamedProblem {
        name: "distance_squared".into(),
        objective: Box::new(f),
        feasible: Polyhedron::boxed(lo, hi)?,
        start,
        reference,
        oracle: OracleKind::Downshift,
        q_hint: None,
    })
}

/// Registered problem names, sorted.
pub const PROBLEM_NAMES: [&str; 5] = [
    "counterexample_quadratic",
    "distance_squared",
    "l1_quadratic",
    "max_quad",
    "zigzag",
];

struct Params {
    name: String,
    entries: BTreeMap<String, String>,
}

impl Params {
    fn parse(spec: &str) -> Result<Self> {
        let (name, rest) = match spec.split_once(':') {
            Some((n, r)) => (n.trim(), r.trim()),
            None => (spec.trim(), ""),
        };
        let mut entries = BTreeMap::new();
        for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| SolverError::ProblemParams(format!("expected key=value, got `{item}`")))?;
            if entries.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(SolverError::ProblemParams(format!("duplicate key `{}`", k.trim())));
            }
        }
        Ok(Params {
            name: name.to_string(),
            entries,
        })
    }

    fn number(s: &str, key: &str) -> Result<f64> {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| SolverError::ProblemParams(format!("`{key}`: `{s}` is not a finite number")))
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        self.entries.remove(key).map(|s| Self::number(&s, key)).transpose()
    }

    fn vector(&mut self, key: &str) -> Result<Option<Vector>> {
        self.entries
            .remove(key)
            .map(|s| {
                let xs = s.split('/').map(|t| Self::number(t.trim(), key)).collect::<Result<Vec<_>>>()?;
                Ok(Vector::from_vec(xs))
            })
            .transpose()
    }

    fn points(&mut self, key: &str) -> Result<Option<Vec<Vector>>> {
        self.entries
            .remove(key)
            .map(|s| {
                s.split('/')
                    .map(|p| {
                        let xs = p.split('_').map(|t| Self::number(t.trim(), key)).collect::<Result<Vec<_>>>()?;
                        Ok(Vector::from_vec(xs))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()
    }

    fn u64(&mut self, key: &str) -> Result<Option<u64>> {
        self.entries
            .remove(key)
            .map(|s| {
                s.parse::<u64>()
                    .map_err(|_| SolverError::ProblemParams(format!("`{key}`: `{s}` is not an unsigned integer")))
            })
            .transpose()
    }

    fn string(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    fn finish(self) -> Result<()> {
        match self.entries.keys().next() {
            Some(k) => Err(SolverError::ProblemParams(format!(
                "unknown parameter `{k}` for problem `{}`",
                self.name
            ))),
            None => Ok(()),
        }
    }
}

/// Builds a problem from `name:key=value,...`. `default_seed` is used when a
/// randomized problem has no `seed` parameter. Every problem accepts `x0`.
pub fn parse_problem(spec: &str, default_seed: u64) -> Result<NamedProblem> {
    let mut p = Params::parse(spec)?;
    let x0 = p.vector("x0")?;
    let mut prob = match p.name.as_str() {
        "counterexample_quadratic" => counterexample_quadratic(),
        "zigzag" => zigzag(),
        "max_quad" => {
            let seed = p.u64("seed")?.unwrap_or(default_seed);
            max_quad(seed)
        }
        "l1_quadratic" => {
            let b = p.vector("b")?.unwrap_or_else(|| Vector::from_element(1, 2.0));
            let r = p.f64("r")?.unwrap_or(1.0);
            l1_quadratic(b, r)?
        }
        "distance_squared" => {
            let points = p
                .points("points")?
                .unwrap_or_else(|| vec![Vector::from_element(1, -1.0), Vector::from_element(1, 1.0)]);
            let positive = match p.string("sign").as_deref() {
                None | Some("+") | Some("plus") => true,
                Some("-") | Some("minus") => false,
                Some(other) => {
                    return Err(SolverError::ProblemParams(format!("sign must be + or -, got `{other}`")))
                }
            };
            distance_squared_dc(points, positive)?
        }
        other => return Err(SolverError::UnknownProblem(other.to_string())),
    };
    p.finish()?;
    if let Some(x0) = x0 {
        if x0.len() != prob.objective.dim() {
            return Err(SolverError::ProblemParams(format!(
                "x0 has {} entries, the problem has dimension {}",
                x0.len(),
                prob.objective.dim()
            )));
        }
        prob.start = x0;
    }
    Ok(prob)
}
