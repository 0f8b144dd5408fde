//! Cutting-plane oracles.
//!
//! Every plane is returned anchored at the serious iterate `x`. Downshifted planes
//! are computed as `min(t(x), f(x) − c‖z − x‖²)`, which equals `t(x) − s` for the
//! downshift `s = [t(x) − f(x) + c‖z − x‖²]₊` and keeps `a ≤ f(x)` exact in floating point.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SolverError};
use crate::linalg::{all_finite, Vector};
use crate::model::{Plane, PlaneTag, TangentOrigin};
use crate::objective::{Objective, ACTIVE_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OracleKind {
    /// Downshifted tangents with an arbitrary subgradient at `z`.
    Downshift,
    /// Downshifted tangents with the subgradient attaining `−f°(z, z − x)`.
    DoubleDownshift,
    /// Support planes of `f(x) + f°(x, · − x)`.
    Standard,
    /// Linearizations of the smooth pieces of a max function.
    Natural,
    /// Working model equals the full model `g + linearized h`; proximal mode.
    AllTangents,
}

impl OracleKind {
    pub const ALL: [OracleKind; 5] = [
        OracleKind::Downshift,
        OracleKind::DoubleDownshift,
        OracleKind::Standard,
        OracleKind::Natural,
        OracleKind::AllTangents,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OracleKind::Downshift => "downshift",
            OracleKind::DoubleDownshift => "double_downshift",
            OracleKind::Standard => "standard",
            OracleKind::Natural => "natural",
            OracleKind::AllTangents => "all_tangents",
        }
    }

    /// Whether the oracle produces planes from tangents at trial points.
    pub fn is_downshift(self) -> bool {
        matches!(self, OracleKind::Downshift | OracleKind::DoubleDownshift)
    }

    /// Whether `prob` carries the structure this oracle needs.
    pub fn supports(self, prob: &dyn Objective) -> bool {
        let x = Vector::zeros(prob.dim());
        match self {
            OracleKind::Downshift => true,
            OracleKind::DoubleDownshift | OracleKind::Standard => {
                prob.directional_subgradient(&x, &x).is_some()
            }
            OracleKind::Natural => prob.smooth_pieces(&x).is_some(),
            OracleKind::AllTangents => prob.split().is_some(),
        }
    }
}

impl fmt::Display for OracleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OracleKind {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self> {
        OracleKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| SolverError::InvalidConfig(format!("unknown oracle `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DownshiftParams {
    pub c: f64,
}

impl DownshiftParams {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(SolverError::InvalidConfig(format!("c > 0 required, got {c}")));
        }
        Ok(DownshiftParams { c })
    }
}

impl Default for DownshiftParams {
    fn default() -> Self {
        DownshiftParams { c: 0.1 }
    }
}

fn check_finite(v: f64, g: &Vector, context: &str) -> Result<()> {
    if v.is_finite() && all_finite(g) {
        Ok(())
    } else {
        Err(SolverError::NonFinite {
            context: context.to_string(),
        })
    }
}

fn check_dims(prob: &dyn Objective, pts: &[&Vector]) -> Result<()> {
    for p in pts {
        if p.len() != prob.dim() {
            return Err(SolverError::DimensionMismatch {
                expected: prob.dim(),
                got: p.len(),
            });
        }
    }
    Ok(())
}

/// Downshift of the tangent `fz + gᵀ(· − z)` with respect to the anchor `(x, fx)`.
pub fn downshift_amount(z: &Vector, fz: f64, g: &Vector, x: &Vector, fx: f64, c: f64) -> f64 {
    let t_x = fz + g.dot(&(x - z));
    (t_x - fx + c * (z - x).norm_squared()).max(0.0)
}

/// Downshifted tangent built from known values, anchored at `x`.
pub fn downshift_plane(z: &Vector, fz: f64, g: Vector, x: &Vector, fx: f64, c: f64) -> Plane {
    let t_x = fz + g.dot(&(x - z));
    let a = t_x.min(fx - c * (z - x).norm_squared());
    Plane {
        a,
        g,
        tag: PlaneTag::Cut,
        birth: 0,
        origin: Some(TangentOrigin {
            z: z.clone(),
            fz,
            c,
        }),
    }
}

pub fn downshift_cut(prob: &dyn Objective, z: &Vector, x: &Vector, params: DownshiftParams) -> Result<Plane> {
    check_dims(prob, &[z, x])?;
    let fz = prob.value(z);
    let g = prob.subgradient(z);
    check_finite(fz, &g, "downshift trial point")?;
    let fx = prob.value(x);
    Ok(downshift_plane(z, fz, g, x, fx, params.c))
}

pub fn double_downshift_cut(
    prob: &dyn Objective,
    z: &Vector,
    x: &Vector,
    params: DownshiftParams,
) -> Result<Plane> {
    check_dims(prob, &[z, x])?;
    let fz = prob.value(z);
    // argmax over ∂f(z) of gᵀ(z − x) is the argmin of gᵀ(x − z).
    let g = prob
        .directional_subgradient(z, &(z - x))
        .ok_or_else(|| SolverError::Unsupported("double downshift needs directional subgradients".into()))?;
    check_finite(fz, &g, "double downshift trial point")?;
    let fx = prob.value(x);
    Ok(downshift_plane(z, fz, g, x, fx, params.c))
}

pub fn standard_cut(prob: &dyn Objective, z: &Vector, x: &Vector) -> Result<Plane> {
    check_dims(prob, &[z, x])?;
    let fx = prob.value(x);
    let g = prob
        .directional_subgradient(x, &(z - x))
        .ok_or_else(|| SolverError::Unsupported("standard oracle needs directional subgradients".into()))?;
    check_finite(fx, &g, "standard oracle anchor")?;
    Ok(Plane::new(fx, g, PlaneTag::Cut))
}

/// Linearization at `x` of the piece whose linearization is largest at `z`.
pub fn natural_cut(prob: &dyn Objective, z: &Vector, x: &Vector) -> Result<Plane> {
    Ok(natural_cuts(prob, z, x, false)?.remove(0))
}

/// Natural-oracle planes; with `all_active` the linearizations of every piece active
/// at `z` are added to the maximizing one.
pub fn natural_cuts(prob: &dyn Objective, z: &Vector, x: &Vector, all_active: bool) -> Result<Vec<Plane>> {
    check_dims(prob, &[z, x])?;
    let at_x = prob
        .smooth_pieces(x)
        .ok_or_else(|| SolverError::Unsupported("natural oracle needs smooth pieces".into()))?;
    if at_x.is_empty() {
        return Err(SolverError::Unsupported("objective has no smooth pieces".into()));
    }
    let fx = at_x.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let d = z - x;
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, (fi, gi)) in at_x.iter().enumerate() {
        check_finite(*fi, gi, "natural oracle piece")?;
        let val = fi + gi.dot(&d);
        if val > best_val {
            best_val = val;
            best = i;
        }
    }
    let mut chosen = vec![best];
    if all_active {
        let at_z = prob.smooth_pieces(z).expect("checked above");
        let fz = at_z.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        let tol = ACTIVE_TOL * (1.0 + fz.abs());
        chosen.extend((0..at_z.len()).filter(|&i| i != best && at_z[i].0 >= fz - tol));
        chosen.sort_unstable();
    }
    Ok(chosen
        .into_iter()
        .map(|i| Plane::new(at_x[i].0.min(fx), at_x[i].1.clone(), PlaneTag::Cut))
        .collect())
}

/// The plane `(f(x), g)` with `g ∈ ∂f(x)`.
pub fn exactness_cut(prob: &dyn Objective, x: &Vector, fx: f64) -> Result<Plane> {
    check_dims(prob, &[x])?;
    let g = prob.subgradient(x);
    check_finite(fx, &g, "exactness plane")?;
    Ok(Plane::new(fx, g, PlaneTag::Exactness))
}

/// Re-anchors a downshifted tangent at a new serious iterate.
pub fn recycle_cut(p: &Plane, x_new: &Vector, fx_new: f64) -> Result<Plane> {
    let origin = p
        .origin
        .as_ref()
        .ok_or_else(|| SolverError::Unsupported("only downshifted tangents can be recycled".into()))?;
    if x_new.len() != p.dim() {
        return Err(SolverError::DimensionMismatch {
            expected: p.dim(),
            got: x_new.len(),
        });
    }
    let mut out = downshift_plane(&origin.z, origin.fz, p.g.clone(), x_new, fx_new, origin.c);
    out.tag = PlaneTag::Recycled;
    out.birth = p.birth;
    Ok(out)
}

/// Oracle configuration used by the driver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutOracle {
    pub kind: OracleKind,
    pub params: DownshiftParams,
    /// Emit linearizations of all active pieces (natural oracle only).
    pub multi_cut: bool,
}

impl CutOracle {
    pub fn new(kind: OracleKind, params: DownshiftParams) -> Self {
        CutOracle {
            kind,
            params,
            multi_cut: false,
        }
    }

    /// Cutting planes at trial point `z` for anchor `x`, reusing known function values.
    pub fn cuts(&self, prob: &dyn Objective, z: &Vector, fz: f64, x: &Vector, fx: f64) -> Result<Vec<Plane>> {
        match self.kind {
            OracleKind::Downshift => {
                let g = prob.subgradient(z);
                check_finite(fz, &g, "trial point")?;
                Ok(vec![downshift_plane(z, fz, g, x, fx, self.params.c)])
            }
            OracleKind::DoubleDownshift => {
                let g = prob.directional_subgradient(z, &(z - x)).ok_or_else(|| {
                    SolverError::Unsupported("double downshift needs directional subgradients".into())
                })?;
                check_finite(fz, &g, "trial point")?;
                Ok(vec![downshift_plane(z, fz, g, x, fx, self.params.c)])
            }
            OracleKind::Standard => {
                let g = prob.directional_subgradient(x, &(z - x)).ok_or_else(|| {
                    SolverError::Unsupported("standard oracle needs directional subgradients".into())
                })?;
                check_finite(fx, &g, "serious iterate")?;
                Ok(vec![Plane::new(fx, g, PlaneTag::Cut)])
            }
            OracleKind::Natural => natural_cuts(prob, z, x, self.multi_cut),
            OracleKind::AllTangents => Err(SolverError::Unsupported(
                "the all-tangents oracle has no finite plane representation".into(),
            )),
        }
    }
}

/// Numerical evidence for the oracle axioms at one anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub kind: OracleKind,
    /// `max (a − f(x'))` over sampled pairs; must be ≤ 0.
    pub exactness_excess: f64,
    pub samples: usize,
    /// `[f(z_j) − m(z_j)]₊ / ‖z_j − x‖` along the supplied sequence.
    pub approx_ratios: Vec<f64>,
    /// Same ratio with moving anchors `x_j`.
    pub strict_ratios: Vec<f64>,
}

impl OracleReport {
    /// Default decay threshold: last ratio below a tenth of the first.
    pub const DECAY_FACTOR: f64 = 0.1;

    /// Ratios below this are rounding noise: `f(z) − m(z)` is accurate to about
    /// 1e−16 and `‖z − x‖` shrinks to 1e−6 or so along the test sequences.
    pub const NOISE_FLOOR: f64 = 1e-8;

    /// Whether a ratio sequence decays: the last ratio is below `factor` times the
    /// first, or the whole sequence is below [`Self::NOISE_FLOOR`].
    pub fn decays(ratios: &[f64], factor: f64) -> bool {
        match (ratios.first(), ratios.last()) {
            (Some(&first), Some(&last)) => {
                ratios.iter().all(|r| *r <= Self::NOISE_FLOOR) || last < factor * first
            }
            _ => false,
        }
    }
}

/// `z_j = x + 2^{-j} d` for `j = 1..=count`.
pub fn geometric_sequence(x: &Vector, d: &Vector, count: usize) -> Vec<Vector> {
    (1..=count)
        .map(|j| x + d * 0.5_f64.powi(j as i32))
        .collect()
}

fn best_plane_ratio(oracle: &CutOracle, prob: &dyn Objective, z: &Vector, x: &Vector) -> Result<f64> {
    let fz = prob.value(z);
    let fx = prob.value(x);
    let planes = oracle.cuts(prob, z, fz, x, fx)?;
    let m = planes
        .iter()
        .map(|p| p.a + p.g.dot(&(z - x)))
        .fold(f64::NEG_INFINITY, f64::max);
    let dist = (z - x).norm();
    Ok(if dist > 0.0 { (fz - m).max(0.0) / dist } else { 0.0 })
}

/// Checks the oracle axioms numerically around `x`.
///
/// * exactness/minorization at the anchor: `sample_count` random pairs `(z, x')`
///   drawn from the box of half-width `radius` around `x` (seeded);
/// * approximation ratios along `sequence` (points tending to `x`);
/// * strictness ratios along `moving`, pairs `(x_j, z_j)` both tending to `x`.
#[allow(clippy::too_many_arguments)]
pub fn check_oracle_axioms(
    oracle: &CutOracle,
    prob: &dyn Objective,
    x: &Vector,
    sample_count: usize,
    radius: f64,
    seed: u64,
    sequence: &[Vector],
    moving: &[(Vector, Vector)],
) -> Result<OracleReport> {
    check_dims(prob, &[x])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = prob.dim();
    let mut excess = f64::NEG_INFINITY;
    for _ in 0..sample_count {
        let anchor = Vector::from_fn(n, |i, _| x[i] + rng.gen_range(-radius..=radius));
        let z = Vector::from_fn(n, |i, _| x[i] + rng.gen_range(-radius..=radius));
        let fa = prob.value(&anchor);
        let fz = prob.value(&z);
        for p in oracle.cuts(prob, &z, fz, &anchor, fa)? {
            excess = excess.max(p.a - fa);
        }
        // The exactness plane at z = x'.
        let e = exactness_cut(prob, &anchor, fa)?;
        excess = excess.max(e.a - fa);
    }
    let approx_ratios = sequence
        .iter()
        .map(|z| best_plane_ratio(oracle, prob, z, x))
        .collect::<Result<Vec<_>>>()?;
    let strict_ratios = moving
        .iter()
        .map(|(xj, zj)| best_plane_ratio(oracle, prob, zj, xj))
        .collect::<Result<Vec<_>>>()?;
    Ok(OracleReport {
        kind: oracle.kind,
        exactness_excess: if sample_count == 0 { 0.0 } else { excess },
        samples: sample_count,
        approx_ratios,
        strict_ratios,
    })
}
