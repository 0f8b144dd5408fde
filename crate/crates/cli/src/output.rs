use std::io::Write;

use anyhow::Result;
use nstr::{IterationRecord, SolveResult};
use serde::Serialize;

pub const TRACE_HEADER: [&str; 13] = [
    "j", "k", "R", "Rsharp", "f", "t", "obj", "rho", "rhotilde", "gstar_norm", "step_norm", "kind", "planes",
];

#[derive(Serialize)]
struct TraceRow<'a> {
    j: usize,
    k: usize,
    r: f64,
    r_sharp: f64,
    f: f64,
    t: f64,
    obj: f64,
    rho: f64,
    rho_tilde: Option<f64>,
    gstar_norm: f64,
    step_norm: f64,
    kind: &'a str,
    planes: usize,
}

impl<'a> From<&'a IterationRecord> for TraceRow<'a> {
    fn from(r: &'a IterationRecord) -> Self {
        TraceRow {
            j: r.j,
            k: r.k,
            r: r.r,
            r_sharp: r.r_sharp,
            f: r.fx,
            t: r.t,
            obj: r.obj,
            rho: r.rho,
            rho_tilde: r.rho_tilde,
            gstar_norm: r.gstar_norm,
            step_norm: r.step_norm,
            kind: r.kind.name(),
            planes: r.planes,
        }
    }
}

pub fn write_trace<W: Write>(out: W, trace: &[IterationRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in trace {
        w.serialize(TraceRow::from(r))?;
    }
    w.flush()?;
    Ok(())
}

/// Trial points of the trace, one row per record: `j,k,kind,z1,…,zn`.
pub fn write_points<W: Write>(out: W, trace: &[IterationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = trace.first().map_or(0, |r| r.z.len());
    let mut header = vec!["j".to_string(), "k".into(), "kind".into()];
    header.extend((1..=n).map(|i| format!("z{i}")));
    w.write_record(&header)?;
    for r in trace {
        let mut row = vec![r.j.to_string(), r.k.to_string(), r.kind.name().to_string()];
        row.extend(r.z.iter().map(|v| format!("{v:?}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub problem: String,
    pub point: Vec<f64>,
    pub value: f64,
    pub status: &'static str,
    pub serious_steps: usize,
    pub trials: usize,
    pub evaluations: usize,
    pub wall_time_s: f64,
}

impl Summary {
    pub fn new(problem: &str, res: &SolveResult, wall_time_s: f64) -> Self {
        Summary {
            problem: problem.to_string(),
            point: res.x.iter().copied().collect(),
            value: res.f,
            status: res.status.name(),
            serious_steps: res.serious_steps,
            trials: res.trials,
            evaluations: res.evaluations,
            wall_time_s,
        }
    }
}
