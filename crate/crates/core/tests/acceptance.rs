//! Acceptance run: one line per criterion, nonzero exit if any fails.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;

use nstr::oracles::{check_oracle_axioms, geometric_sequence, CutOracle, DownshiftParams, OracleReport};
use nstr::problems::{counterexample_quadratic, l1_quadratic, parse_problem, zigzag::breakpoints};
use nstr::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = std::result::Result<String, String>;

fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn criterion_1() -> Outcome {
    let p = counterexample_quadratic();
    let cfg = SolverConfig {
        gamma: 0.5,
        gamma_tilde: 0.75,
        q_policy: QPolicy::Zero,
        bundle: Some(BundlePolicy::new(3, 1).map_err(|e| e.to_string())?),
        trial_mode: TrialMode::Direct,
        oracle: OracleKind::Downshift,
        r_initial: 1.0,
        max_inner: 20,
        ..SolverConfig::default()
    };
    let res = solve(p.objective.as_ref(), &p.feasible, &p.start, &cfg).map_err(|e| e.to_string())?;
    let tr = &res.trace;
    ensure!(tr.len() >= 10, "only {} inner iterations", tr.len());
    let first = &tr[0];
    ensure!(first.y[0] == 1.0 && first.t == -1.0, "y¹ = {}, t = {}", first.y, first.t);
    ensure!(first.rho == 0.25, "ρ₁ = {}", first.rho);
    ensure!(first.rho_tilde == Some(0.25), "ρ̃₁ = {:?}", first.rho_tilde);
    for (i, r) in tr.iter().enumerate() {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        ensure!(r.t == -1.0, "k = {}: t = {}", i + 1, r.t);
        ensure!(r.z[1] == sign, "k = {}: z = {}", i + 1, r.z);
        ensure!(r.kind == StepKind::NullFrozen && r.r_next == 1.0, "k = {}: radius changed", i + 1);
    }
    ensure!(res.serious_steps == 0, "{} serious steps", res.serious_steps);
    ensure!(res.status == SolveStatus::InnerCap, "status {}", res.status.name());
    Ok(format!("{} null steps alternating (1, ±1), ρ₁ = ρ̃₁ = 0.25", tr.len()))
}

fn run_2() -> nstr::Result<SolveResult> {
    let p = counterexample_quadratic();
    let cfg = SolverConfig {
        q_policy: QPolicy::ScaledIdentity(0.5),
        eps_stop: 1e-13,
        ..SolverConfig::default()
    };
    solve(p.objective.as_ref(), &p.feasible, &p.start, &cfg)
}

fn criterion_2() -> Outcome {
    let res = run_2().map_err(|e| e.to_string())?;
    let err = (&res.x - v(&[1.0, 0.0])).amax();
    ensure!(res.status == SolveStatus::Critical, "status {}", res.status.name());
    ensure!(err <= 1e-6, "x = ({}, {})", res.x[0], res.x[1]);
    ensure!(res.serious_steps <= 200, "{} serious steps", res.serious_steps);
    Ok(format!("‖x − (1,0)‖∞ = {err:.1e} after {} serious steps", res.serious_steps))
}

fn prox_config(p: &problems::NamedProblem) -> SolverConfig {
    SolverConfig {
        oracle: OracleKind::AllTangents,
        q_policy: p.q_hint.clone().expect("prox problems carry a curvature hint"),
        ..SolverConfig::default()
    }
}

fn run_3() -> nstr::Result<Vec<SolveResult>> {
    let mut out = Vec::new();
    for (b, r) in [(v(&[2.0]), 1.0), (v(&[2.0, -3.0, 0.5]), 4.0)] {
        let p = l1_quadratic(b, r)?;
        out.push(solve(p.objective.as_ref(), &p.feasible, &p.start, &prox_config(&p))?);
    }
    Ok(out)
}

fn criterion_3() -> Outcome {
    let runs = run_3().map_err(|e| e.to_string())?;
    let first = runs[0]
        .trace
        .iter()
        .find(|r| r.kind == StepKind::Serious)
        .ok_or("no serious step")?;
    ensure!((first.z[0] - 1.0).abs() <= 1e-8, "first serious iterate {}", first.z[0]);
    let mut nulls = 0;
    for res in &runs {
        ensure!(res.status == SolveStatus::Critical, "status {}", res.status.name());
        for r in res.trace.iter().filter(|r| r.kind.is_null()) {
            nulls += 1;
            let rt = r.rho_tilde.ok_or("null step without ρ̃")?;
            ensure!(rt >= 1.0, "ρ̃ = {rt} at j = {}, k = {}", r.j, r.k);
            ensure!(r.r_next == 0.5 * r.r, "R {} → {} at j = {}, k = {}", r.r, r.r_next, r.j, r.k);
        }
    }
    ensure!(nulls > 0, "no null steps exercised");
    Ok(format!("first iterate {:.10}; {nulls} null steps, all with ρ̃ ≥ 1 and R halved", first.z[0]))
}

fn run_4() -> nstr::Result<(SolveResult, f64)> {
    let p = parse_problem("max_quad:seed=1", 0)?;
    let cfg = SolverConfig {
        oracle: OracleKind::Downshift,
        eps_stop: 1e-12,
        ..SolverConfig::default()
    };
    let res = solve(p.objective.as_ref(), &p.feasible, &p.start, &cfg)?;
    Ok((res, p.reference.expect("max_quad has a reference").value))
}

fn criterion_4() -> Outcome {
    let (res, reference) = run_4().map_err(|e| e.to_string())?;
    let gap = (res.f - reference).abs();
    ensure!(gap <= 1e-5, "f = {}, reference {}", res.f, reference);
    Ok(format!("f = {:.9}, reference {:.9}, gap {gap:.1e}", res.f, reference))
}

const ORACLE_PROBLEMS: [&str; 6] = [
    "counterexample_quadratic",
    "zigzag",
    "max_quad:seed=1",
    "l1_quadratic:b=2/-3/0.5",
    "distance_squared:points=0_0/1_2/-1_1",
    "distance_squared:sign=-",
];

fn criterion_5() -> Outcome {
    let mut pairs = 0;
    for spec in ORACLE_PROBLEMS {
        let p = parse_problem(spec, 0).map_err(|e| e.to_string())?;
        let f = p.objective.as_ref();
        let (x, radius) = if spec == "zigzag" { (v(&[0.0]), 1.0) } else { (p.start.clone(), 2.0) };
        for kind in OracleKind::ALL {
            if kind == OracleKind::AllTangents || !kind.supports(f) {
                continue;
            }
            let oracle = CutOracle::new(kind, DownshiftParams::default());
            let r = check_oracle_axioms(&oracle, f, &x, 1000, radius, 3, &[], &[]).map_err(|e| e.to_string())?;
            ensure!(r.exactness_excess <= 0.0, "{spec} / {kind}: a − f(x) = {}", r.exactness_excess);
            pairs += r.samples;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let oracle = CutOracle::new(OracleKind::Downshift, DownshiftParams::default());
    let mut sequences = 0;
    for seed in 0..5 {
        let p = parse_problem(&format!("max_quad:seed={seed}"), 0).map_err(|e| e.to_string())?;
        let x = p.reference.and_then(|r| r.point).ok_or("no reference point")?;
        for _ in 0..4 {
            let d = Vector::from_fn(2, |_, _| rng.gen_range(-1.0..=1.0));
            let seq = geometric_sequence(&x, &d, 20);
            let r = check_oracle_axioms(&oracle, p.objective.as_ref(), &x, 0, 0.0, 0, &seq, &[])
                .map_err(|e| e.to_string())?;
            ensure!(
                OracleReport::decays(&r.approx_ratios, OracleReport::DECAY_FACTOR),
                "max_quad seed {seed}: ratios {:?}",
                r.approx_ratios
            );
            sequences += 1;
        }
    }

    let z = parse_problem("zigzag", 0).map_err(|e| e.to_string())?;
    let t = breakpoints();
    let seq: Vec<Vector> = (5..=40)
        .map(|k| {
            let peak = t[2 * k - 1];
            v(&[peak + peak * peak / 2.0])
        })
        .collect();
    let r = check_oracle_axioms(&oracle, z.objective.as_ref(), &v(&[0.0]), 0, 0.0, 0, &seq, &[])
        .map_err(|e| e.to_string())?;
    let min_ratio = r.approx_ratios.iter().copied().fold(f64::INFINITY, f64::min);
    ensure!(min_ratio >= 0.5, "zigzag ratio {min_ratio}");
    Ok(format!(
        "{pairs} exactness pairs without violation; {sequences} decaying sequences; zigzag ratios ≥ {min_ratio:.3}"
    ))
}

/// A tangent program written out as `min t + ½dᵀQd` subject to rows `G (t, d) ≤ h`.
struct DenseProgram {
    q: Matrix,
    g: Matrix,
    h: Vector,
}

fn dense_program(wm: &WorkingModel, c: &Polyhedron, r: f64) -> DenseProgram {
    let n = wm.dim();
    let x = wm.anchor();
    let mut rows: Vec<(Vector, f64)> = Vec::new();
    for p in wm.planes() {
        let mut row = Vector::zeros(n + 1);
        row[0] = -1.0;
        row.rows_mut(1, n).copy_from(&p.g);
        rows.push((row, -p.a));
    }
    for i in 0..c.a.nrows() {
        let mut row = Vector::zeros(n + 1);
        for j in 0..n {
            row[j + 1] = c.a[(i, j)];
        }
        let ax: f64 = (0..n).map(|j| c.a[(i, j)] * x[j]).sum();
        rows.push((row, c.b[i] - ax));
    }
    for j in 0..n {
        let mut up = Vector::zeros(n + 1);
        up[j + 1] = 1.0;
        let mut cap = r;
        if let Some(u) = &c.upper {
            cap = cap.min(u[j] - x[j]);
        }
        rows.push((up.clone(), cap));
        let mut floor = r;
        if let Some(l) = &c.lower {
            floor = floor.min(x[j] - l[j]);
        }
        rows.push((-up, floor));
    }
    DenseProgram {
        q: wm.q().clone(),
        g: Matrix::from_fn(rows.len(), n + 1, |i, j| rows[i].0[j]),
        h: Vector::from_iterator(rows.len(), rows.iter().map(|r| r.1)),
    }
}

fn subsets(m: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for i in 0..m {
        let grown: Vec<Vec<usize>> = out
            .iter()
            .filter(|s| s.len() < max)
            .map(|s| {
                let mut t = s.clone();
                t.push(i);
                t
            })
            .collect();
        out.extend(grown);
    }
    out
}

/// Minimum over all KKT points found by solving the equality-constrained problem of
/// every row subset of size at most `n + 1`.
fn enumerate_optimum(p: &DenseProgram) -> Option<f64> {
    let dim = p.g.ncols();
    let mut best: Option<f64> = None;
    for s in subsets(p.g.nrows(), dim) {
        let k = s.len();
        let mut kkt = Matrix::zeros(dim + k, dim + k);
        kkt.view_mut((1, 1), (dim - 1, dim - 1)).copy_from(&p.q);
        let mut rhs = Vector::zeros(dim + k);
        rhs[0] = -1.0;
        for (a, &i) in s.iter().enumerate() {
            for j in 0..dim {
                kkt[(dim + a, j)] = p.g[(i, j)];
                kkt[(j, dim + a)] = p.g[(i, j)];
            }
            rhs[dim + a] = p.h[i];
        }
        let Some(sol) = kkt.clone().lu().solve(&rhs) else { continue };
        if (&kkt * &sol - &rhs).amax() > 1e-9 || sol.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let u = sol.rows(0, dim).into_owned();
        let lambda = sol.rows(dim, k);
        if lambda.iter().any(|l| *l < -1e-9) {
            continue;
        }
        if (&p.g * &u - &p.h).iter().any(|v| *v > 1e-9) {
            continue;
        }
        let d = u.rows(1, dim - 1).into_owned();
        let obj = u[0] + 0.5 * d.dot(&(&p.q * &d));
        best = Some(best.map_or(obj, |b: f64| b.min(obj)));
    }
    best
}

fn random_instance(rng: &mut ChaCha8Rng) -> (WorkingModel, Polyhedron, f64) {
    let n = rng.gen_range(1..=3);
    let x = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..=1.0));
    let fx = rng.gen_range(-1.0..=1.0);
    let cuts = rng.gen_range(1..=4);
    let mut planes = vec![Plane::new(fx, Vector::from_fn(n, |_, _| rng.gen_range(-2.0..=2.0)), PlaneTag::Exactness)];
    for _ in 1..cuts {
        planes.push(Plane::new(
            fx - rng.gen_range(0.0..=1.0),
            Vector::from_fn(n, |_, _| rng.gen_range(-2.0..=2.0)),
            PlaneTag::Cut,
        ));
    }
    let q = if rng.gen_bool(0.5) {
        Matrix::zeros(n, n)
    } else {
        let l = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..=1.0));
        &l * l.transpose() + Matrix::identity(n, n) * 0.1
    };
    let wm = WorkingModel::new(x.clone(), fx, planes, q, 1e3).expect("valid model");
    let room = 6 - cuts;
    let c = if room >= 2 * n && rng.gen_bool(0.3) {
        let lo = Vector::from_fn(n, |i, _| x[i] - rng.gen_range(0.0..=1.0));
        let hi = Vector::from_fn(n, |i, _| x[i] + rng.gen_range(0.0..=1.0));
        Polyhedron::boxed(lo, hi).expect("valid box")
    } else {
        let m = rng.gen_range(0..=room);
        let a = Matrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..=1.0));
        let b = &a * &x + Vector::from_fn(m, |_, _| rng.gen_range(0.0..=0.5));
        Polyhedron::new(a, b).expect("valid rows")
    };
    (wm, c, rng.gen_range(0.1..=2.0))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_obj, mut worst_kkt, mut worst_sum) = (0.0_f64, 0.0_f64, 0.0_f64);
    for i in 0..200 {
        let (wm, c, r) = random_instance(&mut rng);
        let sol = solve_tangent_program(&wm, &c, r).map_err(|e| format!("instance {i}: {e}"))?;
        let brute = enumerate_optimum(&dense_program(&wm, &c, r)).ok_or(format!("instance {i}: no KKT point"))?;
        worst_obj = worst_obj.max((sol.objective - brute).abs());
        worst_kkt = worst_kkt.max(kkt_residual(&wm, &c, r, &sol));
        worst_sum = worst_sum.max((sol.lambda.sum() - 1.0).abs());
        ensure!(worst_obj <= 1e-8, "instance {i}: objective {} vs {brute}", sol.objective);
        ensure!(worst_kkt <= 1e-8, "instance {i}: KKT residual {worst_kkt:e}");
        ensure!(worst_sum <= 1e-10, "instance {i}: Σλ − 1 = {worst_sum:e}");
    }
    Ok(format!(
        "200 instances: |Δobj| ≤ {worst_obj:.1e}, KKT ≤ {worst_kkt:.1e}, |Σλ − 1| ≤ {worst_sum:.1e}"
    ))
}

struct Run {
    name: &'static str,
    gamma_theta: f64,
    trace: SolveTrace,
}

fn runs_2_to_4() -> std::result::Result<Vec<Run>, String> {
    let gt = SolverConfig::default().gamma * SolverConfig::default().theta;
    let mut out = vec![Run {
        name: "counterexample",
        gamma_theta: gt,
        trace: run_2().map_err(|e| e.to_string())?.trace,
    }];
    for res in run_3().map_err(|e| e.to_string())? {
        out.push(Run {
            name: "l1",
            gamma_theta: gt,
            trace: res.trace,
        });
    }
    out.push(Run {
        name: "max_quad",
        gamma_theta: gt,
        trace: run_4().map_err(|e| e.to_string())?.0.trace,
    });
    Ok(out)
}

fn criterion_7() -> Outcome {
    let mut rows = 0;
    let mut worst = f64::INFINITY;
    for run in runs_2_to_4()? {
        for r in &run.trace {
            ensure!(r.lemma_slack >= -1e-8, "{} j = {}, k = {}: slack {}", run.name, r.j, r.k, r.lemma_slack);
            worst = worst.min(r.lemma_slack);
            rows += 1;
        }
    }
    Ok(format!("{rows} iterations, smallest slack {worst:.2e}"))
}

fn criterion_8() -> Outcome {
    let mut serious = 0;
    for run in runs_2_to_4()? {
        let mut prev: Option<&IterationRecord> = None;
        for r in &run.trace {
            if r.kind == StepKind::Serious {
                let bound = r.fx - run.gamma_theta * r.pred + 1e-10;
                ensure!(r.fz <= bound, "{} j = {}: f = {} > {}", run.name, r.j, r.fz, bound);
                serious += 1;
            }
            ensure!(r.r_next <= r.r, "{} j = {}, k = {}: R grew", run.name, r.j, r.k);
            if let Some(q) = prev.filter(|q| q.j == r.j) {
                ensure!(r.r <= q.r_next && q.r_next <= q.r, "{} j = {}, k = {}: R grew", run.name, r.j, r.k);
            }
            prev = Some(r);
        }
    }
    Ok(format!("{serious} serious steps satisfy the descent chain; R nonincreasing in every inner loop"))
}

fn main() -> ExitCode {
    let criteria: [(usize, &str, fn() -> Outcome); 8] = [
        (1, "oscillation with Q = 0", criterion_1),
        (2, "counterexample repaired by Q = ½I", criterion_2),
        (3, "prox equivalence in all-tangents mode", criterion_3),
        (4, "max_quad reaches its reference", criterion_4),
        (5, "oracle axioms", criterion_5),
        (6, "tangent program against enumeration", criterion_6),
        (7, "max-norm estimate at every iteration", criterion_7),
        (8, "descent chain and radius monotonicity", criterion_8),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, name, check) in criteria {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| Err(e.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
        match outcome {
            Ok(detail) => println!("criterion {n}: PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n}: FAIL  {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
