//! The bundle trust-region iteration: inner loop of null steps around a serious
//! iterate, outer loop of serious steps.

mod config;
mod prox;
mod trace;
mod trial;

use std::fmt;

pub use config::{memory_radius_update, QPolicy, SolverConfig, TrialMode};
pub use prox::prox_tangent_solve;
pub use trace::{IterationRecord, SolveTrace, StepKind};
pub use trial::{acceptance_test, secondary_test_and_radius, trial_step};

use crate::error::{Result, SolverError};
use crate::linalg::{norm_inf, symmetric_eigenvalues, Matrix, Vector};
use crate::model::{
    check_curvature, model_value, second_order_value, update_working_model, BundlePolicy, Plane,
    Polyhedron, WorkingModel,
};
use crate::objective::{Objective, ProxSplit};
use crate::oracles::{exactness_cut, recycle_cut, CutOracle, DownshiftParams, OracleKind};
use crate::tangent::{aggregate_from_solution, kkt_residual, lemma_slack, solve_tangent_program};
use prox::ProxModel;
use trial::trial_point;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Predicted decrease fell below the stopping tolerance.
    Critical,
    OuterCap,
    InnerCap,
}

impl SolveStatus {
    pub fn name(self) -> &'static str {
        match self {
            SolveStatus::Critical => "critical",
            SolveStatus::OuterCap => "outer_cap",
            SolveStatus::InnerCap => "inner_cap",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x: Vector,
    pub f: f64,
    pub status: SolveStatus,
    pub trace: SolveTrace,
    pub serious_steps: usize,
    /// Tested trial points, fall-back re-tests included.
    pub trials: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InnerOutcome {
    SeriousStep {
        x_next: Vector,
        f_next: f64,
        /// Radius the accepted trial point was found with.
        r_at_acceptance: f64,
        rho: f64,
        /// Working model at acceptance.
        planes: Vec<Plane>,
    },
    Converged,
    InnerIterationCap,
}

struct Run<'a> {
    prob: &'a dyn Objective,
    c: &'a Polyhedron,
    config: &'a SolverConfig,
    oracle: CutOracle,
    policy: BundlePolicy,
    q: Matrix,
    q_positive: bool,
    split: Option<(&'a dyn ProxSplit, f64)>,
    trace: SolveTrace,
    clock: usize,
    evaluations: usize,
}

fn at(outer: usize, inner: usize) -> impl Fn(SolverError) -> SolverError {
    move |e| match e {
        SolverError::AtIteration { .. } => e,
        other => SolverError::AtIteration {
            outer,
            inner,
            source: Box::new(other),
        },
    }
}

impl<'a> Run<'a> {
    fn new(prob: &'a dyn Objective, c: &'a Polyhedron, config: &'a SolverConfig) -> Result<Self> {
        config.validate()?;
        let n = prob.dim();
        if c.dim() != n {
            return Err(SolverError::DimensionMismatch {
                expected: n,
                got: c.dim(),
            });
        }
        let q = config.q_policy.matrix(n)?;
        check_curvature(&q, config.q_bound).map_err(|e| SolverError::InvalidConfig(e.to_string()))?;
        let q_positive = n > 0 && symmetric_eigenvalues(&q)[0] > 0.0;
        let policy = config.bundle_policy(n);
        policy.validate()?;
        let params = DownshiftParams::new(config.c_downshift)?;
        let oracle = CutOracle {
            kind: config.oracle,
            params,
            multi_cut: config.multi_cut,
        };
        let split = if config.oracle == OracleKind::AllTangents {
            let split = prob
                .split()
                .ok_or_else(|| SolverError::Unsupported("all-tangents mode needs a split objective".into()))?;
            let delta = config.q_policy.scaled_identity().ok_or_else(|| {
                SolverError::InvalidConfig("all-tangents mode needs Q = δI with δ > 0".into())
            })?;
            if !c.is_unconstrained() {
                return Err(SolverError::Unsupported(
                    "all-tangents mode is only available without constraints".into(),
                ));
            }
            Some((split, 1.0 / delta))
        } else {
            if !config.oracle.supports(prob) {
                return Err(SolverError::Unsupported(format!(
                    "the {} oracle needs structure this objective does not provide",
                    config.oracle
                )));
            }
            None
        };
        Ok(Run {
            prob,
            c,
            config,
            oracle,
            policy,
            q,
            q_positive,
            split,
            trace: Vec::new(),
            clock: 0,
            evaluations: 0,
        })
    }

    fn eval(&mut self, z: &Vector) -> Result<f64> {
        self.evaluations += 1;
        let v = self.prob.value(z);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(SolverError::NonFinite {
                context: format!("f at {:?}", z.as_slice()),
            })
        }
    }

    fn cuts(&self, z: &Vector, fz: f64, x: &Vector, fx: f64) -> Result<Vec<Plane>> {
        Ok(self
            .oracle
            .cuts(self.prob, z, fz, x, fx)?
            .into_iter()
            .map(|p| p.with_birth(self.clock))
            .collect())
    }

    fn initial_model(&mut self, x: &Vector, fx: f64, recycled: Vec<Plane>) -> Result<WorkingModel> {
        self.clock += 1;
        let mut planes = vec![exactness_cut(self.prob, x, fx)?.with_birth(self.clock)];
        let room = self.policy.max_planes - 1;
        let skip = recycled.len().saturating_sub(room);
        planes.extend(recycled.into_iter().skip(skip));
        WorkingModel::new(x.clone(), fx, planes, self.q.clone(), self.config.q_bound)
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &self,
        j: usize,
        k: usize,
        r: f64,
        r_sharp: f64,
        fx: f64,
        t: f64,
        obj: f64,
        y: &Vector,
        x: &Vector,
        gstar_norm: f64,
        planes: usize,
        lemma: f64,
        kkt: f64,
    ) -> IterationRecord {
        IterationRecord {
            j,
            k,
            r,
            r_next: r,
            r_sharp,
            fx,
            t,
            obj,
            pred: fx - obj,
            y: y.clone(),
            z: y.clone(),
            fz: f64::NAN,
            phi_z: obj,
            phi_next_z: None,
            rho: f64::NAN,
            rho_tilde: None,
            gstar_norm,
            step_norm: norm_inf(&(y - x)),
            kind: StepKind::Serious,
            planes,
            lemma_slack: lemma,
            kkt,
        }
    }

    fn inner(&mut self, j: usize, wm: WorkingModel, r_start: f64, r_sharp: f64) -> Result<InnerOutcome> {
        if let Some((split, r_prox)) = self.split {
            return self.inner_prox(j, split, r_prox, wm.anchor().clone(), wm.fx(), r_start, r_sharp);
        }
        let cfg = self.config;
        let x = wm.anchor().clone();
        let fx = wm.fx();
        let mut wm = wm;
        let mut r = r_start;
        for k in 1..=cfg.max_inner {
            let ctx = at(j, k);
            let sol = solve_tangent_program(&wm, self.c, r).map_err(&ctx)?;
            let pred = fx - sol.objective;
            if pred <= cfg.eps_stop * (1.0 + fx.abs()) {
                return Ok(InnerOutcome::Converged);
            }
            let z = trial_step(&sol, &wm, self.c, cfg, k).map_err(&ctx)?;
            self.clock += 1;
            let fz = self.eval(&z).map_err(&ctx)?;
            let phi_z = second_order_value(&wm, &z)?;
            let (rho, accepted) = acceptance_test(fx, fz, phi_z, cfg.gamma).map_err(&ctx)?;
            let agg = aggregate_from_solution(&wm, &sol, self.c)?.with_birth(self.clock);
            let mut rec = self.record(
                j,
                k,
                r,
                r_sharp,
                fx,
                sol.t,
                sol.objective,
                &sol.y,
                &x,
                agg.g.norm(),
                wm.planes().len(),
                lemma_slack(&wm, &sol),
                kkt_residual(&wm, self.c, r, &sol),
            );
            rec.z = z.clone();
            rec.fz = fz;
            rec.phi_z = phi_z;
            rec.rho = rho;
            if accepted {
                self.trace.push(rec);
                return Ok(InnerOutcome::SeriousStep {
                    x_next: z,
                    f_next: fz,
                    r_at_acceptance: r,
                    rho,
                    planes: wm.planes().to_vec(),
                });
            }

            let cuts_z = self.cuts(&z, fz, &x, fx).map_err(&ctx)?;
            let next = update_working_model(&wm, cuts_z.clone(), agg.clone(), &self.policy).map_err(&ctx)?;
            let phi_next_z = model_value(&next, &z)?;
            let (rho_t, r_next) = secondary_test_and_radius(fx, phi_next_z, phi_z, r, cfg.gamma_tilde)?;
            rec.phi_next_z = Some(phi_next_z);
            rec.rho_tilde = Some(rho_t);
            rec.r_next = r_next;
            rec.kind = if r_next < r {
                StepKind::NullHalved
            } else {
                StepKind::NullFrozen
            };
            self.trace.push(rec.clone());
            let (mut next, mut r_next) = (next, r_next);

            if cfg.fallback && self.q_positive && z != sol.y && rho_t < cfg.gamma_tilde {
                self.clock += 1;
                let y = sol.y.clone();
                let fy = self.eval(&y).map_err(&ctx)?;
                let (rho_y, acc_y) = acceptance_test(fx, fy, sol.objective, cfg.gamma).map_err(&ctx)?;
                let mut fb = rec;
                fb.z = y.clone();
                fb.fz = fy;
                fb.phi_z = sol.objective;
                fb.rho = rho_y;
                fb.phi_next_z = None;
                fb.rho_tilde = None;
                fb.r_next = r;
                if acc_y {
                    fb.kind = StepKind::Serious;
                    self.trace.push(fb);
                    return Ok(InnerOutcome::SeriousStep {
                        x_next: y,
                        f_next: fy,
                        r_at_acceptance: r,
                        rho: rho_y,
                        planes: wm.planes().to_vec(),
                    });
                }
                let cuts_y = self.cuts(&y, fy, &x, fx).map_err(&ctx)?;
                let mut all = if 2 + cuts_z.len() + cuts_y.len() <= self.policy.max_planes {
                    cuts_z
                } else {
                    Vec::new()
                };
                all.extend(cuts_y);
                next = update_working_model(&wm, all, agg, &self.policy).map_err(&ctx)?;
                let phi_next_y = model_value(&next, &y)?;
                let (rt, rn) = secondary_test_and_radius(fx, phi_next_y, sol.objective, r, cfg.gamma_tilde)?;
                r_next = rn;
                fb.phi_next_z = Some(phi_next_y);
                fb.rho_tilde = Some(rt);
                fb.r_next = rn;
                fb.kind = StepKind::Fallback;
                self.trace.push(fb);
            }
            wm = next;
            r = r_next;
        }
        Ok(InnerOutcome::InnerIterationCap)
    }

    #[allow(clippy::too_many_arguments)]
    fn inner_prox(
        &mut self,
        j: usize,
        split: &dyn ProxSplit,
        r_prox: f64,
        x: Vector,
        fx: f64,
        r_start: f64,
        r_sharp: f64,
    ) -> Result<InnerOutcome> {
        let cfg = self.config;
        let model = ProxModel::new(split, &x, r_prox);
        let mut r = r_start;
        for k in 1..=cfg.max_inner {
            let ctx = at(j, k);
            let sol = model.solve(r).map_err(&ctx)?;
            let pred = fx - sol.objective;
            if pred <= cfg.eps_stop * (1.0 + fx.abs()) {
                return Ok(InnerOutcome::Converged);
            }
            let phi = |z: &Vector| Ok(model.big_phi(z));
            let z = trial_point(&x, fx, &sol.y, sol.objective, &phi, self.c, cfg, k).map_err(&ctx)?;
            self.clock += 1;
            let fz = self.eval(&z).map_err(&ctx)?;
            let phi_z = model.big_phi(&z);
            let (rho, accepted) = acceptance_test(fx, fz, phi_z, cfg.gamma).map_err(&ctx)?;
            let d = &sol.y - &x;
            let lemma = (fx - sol.t) - norm_inf(&sol.box_mult) * norm_inf(&d);
            let kkt = prox_box_residual(&d, &sol.box_mult, r);
            let mut rec = self.record(
                j,
                k,
                r,
                r_sharp,
                fx,
                sol.t,
                sol.objective,
                &sol.y,
                &x,
                sol.gstar.norm(),
                0,
                lemma,
                kkt,
            );
            rec.z = z.clone();
            rec.fz = fz;
            rec.phi_z = phi_z;
            rec.rho = rho;
            if accepted {
                self.trace.push(rec);
                return Ok(InnerOutcome::SeriousStep {
                    x_next: z,
                    f_next: fz,
                    r_at_acceptance: r,
                    rho,
                    planes: Vec::new(),
                });
            }
            // The model is already exact in the nonsmooth part: φ_{k+1} = φ_k.
            let phi_next_z = model.phi(&z);
            let (rho_t, r_next) = secondary_test_and_radius(fx, phi_next_z, phi_z, r, cfg.gamma_tilde)?;
            rec.phi_next_z = Some(phi_next_z);
            rec.rho_tilde = Some(rho_t);
            rec.r_next = r_next;
            rec.kind = if r_next < r {
                StepKind::NullHalved
            } else {
                StepKind::NullFrozen
            };
            self.trace.push(rec);
            r = r_next;
        }
        Ok(InnerOutcome::InnerIterationCap)
    }
}

/// Sign and complementarity violation of the trust-region normal `v` at `d = y − x`.
fn prox_box_residual(d: &Vector, v: &Vector, radius: f64) -> f64 {
    let tol = 1e-12 * (1.0 + radius);
    d.iter()
        .zip(v.iter())
        .map(|(&di, &vi)| {
            if di >= radius - tol {
                (-vi).max(0.0)
            } else if di <= -radius + tol {
                vi.max(0.0)
            } else {
                vi.abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Runs one inner loop from the working model `wm_init` with radius `r_start`.
pub fn inner_loop(
    prob: &dyn Objective,
    c: &Polyhedron,
    wm_init: WorkingModel,
    r_start: f64,
    config: &SolverConfig,
) -> Result<(InnerOutcome, SolveTrace)> {
    let mut run = Run::new(prob, c, config)?;
    let outcome = run.inner(1, wm_init, r_start, r_start)?;
    Ok((outcome, run.trace))
}

/// Minimizes `prob` over `c` from the feasible start `x0`.
pub fn solve(prob: &dyn Objective, c: &Polyhedron, x0: &Vector, config: &SolverConfig) -> Result<SolveResult> {
    let mut run = Run::new(prob, c, config)?;
    if x0.len() != prob.dim() {
        return Err(SolverError::DimensionMismatch {
            expected: prob.dim(),
            got: x0.len(),
        });
    }
    let viol = c.max_violation(x0);
    if viol > 1e-9 * (1.0 + norm_inf(x0)) {
        return Err(SolverError::Infeasible { violation: viol });
    }
    let mut x = x0.clone();
    let mut fx = run.eval(&x).map_err(at(1, 0))?;
    let mut r_sharp = config.r_initial;
    let mut recycled: Vec<Plane> = Vec::new();
    let mut status = SolveStatus::OuterCap;
    let mut serious = 0;
    for j in 1..=config.max_outer {
        let wm = run
            .initial_model(&x, fx, std::mem::take(&mut recycled))
            .map_err(at(j, 0))?;
        match run.inner(j, wm, r_sharp, r_sharp)? {
            InnerOutcome::Converged => {
                status = SolveStatus::Critical;
                break;
            }
            InnerOutcome::InnerIterationCap => {
                status = SolveStatus::InnerCap;
                break;
            }
            InnerOutcome::SeriousStep {
                x_next,
                f_next,
                r_at_acceptance,
                rho,
                planes,
            } => {
                serious += 1;
                r_sharp = memory_radius_update(rho, r_at_acceptance, config.big_gamma);
                if config.recycle {
                    recycled = planes
                        .iter()
                        .filter(|p| p.origin.is_some())
                        .map(|p| recycle_cut(p, &x_next, f_next))
                        .collect::<Result<_>>()
                        .map_err(at(j, 0))?;
                }
                x = x_next;
                fx = f_next;
            }
        }
    }
    Ok(SolveResult {
        x,
        f: fx,
        status,
        serious_steps: serious,
        trials: run.trace.len(),
        trace: run.trace,
        evaluations: run.evaluations,
    })
}
