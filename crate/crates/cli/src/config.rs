//! Run configuration files: flat TOML, one key per solver parameter.
//!
//! ```toml
//! problem = "max_quad:seed=3"
//! gamma = 0.1
//! gamma_tilde = 0.5
//! Q = 0.25            # "zero", a scale δ for δI, or a matrix [[..], ..]
//! bundle_max = 12
//! oracle = "downshift"
//! ```

use std::path::Path;

use anyhow::{Context, Result};
use nstr::problems::NamedProblem;
use nstr::{BundlePolicy, Matrix, OracleKind, QPolicy, SolverConfig, TrialMode};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum QEntry {
    Keyword(String),
    Scale(f64),
    Rows(Vec<Vec<f64>>),
}

#[derive(Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Option<String>,
    pub seed: Option<u64>,
    pub trace: Option<String>,
    pub summary: Option<String>,

    pub gamma: Option<f64>,
    pub gamma_tilde: Option<f64>,
    #[serde(rename = "Gamma")]
    pub big_gamma: Option<f64>,
    pub theta: Option<f64>,
    #[serde(rename = "Theta")]
    pub big_theta: Option<f64>,
    pub q_bound: Option<f64>,
    pub c_downshift: Option<f64>,
    #[serde(rename = "R_initial")]
    pub r_initial: Option<f64>,
    pub eps_stop: Option<f64>,
    pub max_outer: Option<usize>,
    pub max_inner: Option<usize>,
    pub oracle: Option<String>,
    pub multi_cut: Option<bool>,
    pub trial_mode: Option<String>,
    pub backtrack_alpha: Option<f64>,
    pub nu_initial: Option<f64>,
    pub nu_decay: Option<f64>,
    pub fallback: Option<bool>,
    #[serde(rename = "Q")]
    pub q: Option<QEntry>,
    pub bundle_max: Option<usize>,
    pub bundle_keep_newest: Option<usize>,
    pub recycle: Option<bool>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Solver settings: defaults, then the problem's hints, then this file.
    pub fn solver_config(&self, problem: Option<&NamedProblem>) -> Result<SolverConfig> {
        let mut c = SolverConfig::default();
        if let Some(p) = problem {
            c.oracle = p.oracle;
            if let Some(q) = &p.q_hint {
                c.q_policy = q.clone();
            }
        }
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { c.$field = v; })*
            };
        }
        set!(gamma, gamma_tilde, big_gamma, theta, big_theta, q_bound, c_downshift, r_initial, eps_stop);
        set!(max_outer, max_inner, multi_cut, backtrack_alpha, nu_decay, fallback, recycle);
        if self.nu_initial.is_some() {
            c.nu_initial = self.nu_initial;
        }
        if let Some(o) = &self.oracle {
            c.oracle = o.parse::<OracleKind>()?;
        }
        if let Some(t) = &self.trial_mode {
            c.trial_mode = t.parse::<TrialMode>()?;
        }
        if let Some(q) = &self.q {
            c.q_policy = q_policy(q)?;
        }
        match (self.bundle_max, self.bundle_keep_newest) {
            (None, None) => {}
            (max, keep) => {
                let n = problem.map_or(1, |p| p.objective.dim());
                let base = c.bundle_policy(n);
                c.bundle = Some(BundlePolicy::new(
                    max.unwrap_or(base.max_planes),
                    keep.unwrap_or(base.keep_newest),
                )?);
            }
        }
        c.validate()?;
        Ok(c)
    }
}

fn q_policy(q: &QEntry) -> Result<QPolicy> {
    Ok(match q {
        QEntry::Keyword(k) if k == "zero" => QPolicy::Zero,
        QEntry::Keyword(k) => anyhow::bail!("Q must be \"zero\", a number or a matrix, got \"{k}\""),
        QEntry::Scale(d) => QPolicy::ScaledIdentity(*d),
        QEntry::Rows(rows) => {
            let n = rows.len();
            anyhow::ensure!(n > 0 && rows.iter().all(|r| r.len() == n), "Q must be a square matrix");
            QPolicy::Fixed(Matrix::from_fn(n, n, |i, j| rows[i][j]))
        }
    })
}
