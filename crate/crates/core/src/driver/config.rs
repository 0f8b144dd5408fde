use std::fmt;
use std::str::FromStr;

use crate::error::{Result, SolverError};
use crate::linalg::{symmetric_norm, Matrix};
use crate::model::BundlePolicy;
use crate::oracles::OracleKind;

/// How trial points are derived from the tangent-program solution `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialMode {
    /// `z = y`.
    Direct,
    /// `z = x + α(y − x)` with the configured `α`.
    Backtrack,
    /// Backtracking restricted to `‖z − y‖ ≤ ν_k` with `ν_k → 0`.
    StrongNu,
}

impl TrialMode {
    pub fn name(self) -> &'static str {
        match self {
            TrialMode::Direct => "direct",
            TrialMode::Backtrack => "backtrack",
            TrialMode::StrongNu => "strong_nu",
        }
    }
}

impl fmt::Display for TrialMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TrialMode {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(TrialMode::Direct),
            "backtrack" => Ok(TrialMode::Backtrack),
            "strong_nu" => Ok(TrialMode::StrongNu),
            _ => Err(SolverError::InvalidConfig(format!("unknown trial mode `{s}`"))),
        }
    }
}

/// Second-order term of the working model. It stays fixed during a solve.
#[derive(Debug, Clone, PartialEq)]
pub enum QPolicy {
    Zero,
    /// `Q = δI`.
    ScaledIdentity(f64),
    Fixed(Matrix),
}

impl QPolicy {
    pub fn matrix(&self, n: usize) -> Result<Matrix> {
        match self {
            QPolicy::Zero => Ok(Matrix::zeros(n, n)),
            QPolicy::ScaledIdentity(d) => Ok(Matrix::identity(n, n) * *d),
            QPolicy::Fixed(m) if m.nrows() == n && m.ncols() == n => Ok(m.clone()),
            QPolicy::Fixed(m) => Err(SolverError::DimensionMismatch {
                expected: n,
                got: m.nrows(),
            }),
        }
    }

    /// `δ` when `Q = δI` with `δ > 0`.
    pub fn scaled_identity(&self) -> Option<f64> {
        match self {
            QPolicy::ScaledIdentity(d) if *d > 0.0 => Some(*d),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Acceptance threshold `γ`.
    pub gamma: f64,
    /// Radius-reduction threshold `γ̃` of the secondary test.
    pub gamma_tilde: f64,
    /// Memory-radius doubling threshold `Γ`.
    pub big_gamma: f64,
    pub theta: f64,
    pub big_theta: f64,
    pub q_bound: f64,
    pub c_downshift: f64,
    pub r_initial: f64,
    pub eps_stop: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub oracle: OracleKind,
    /// Emit all active-piece linearizations (natural oracle).
    pub multi_cut: bool,
    pub trial_mode: TrialMode,
    /// Step fraction for [`TrialMode::Backtrack`] and the floor for [`TrialMode::StrongNu`].
    pub backtrack_alpha: f64,
    /// `ν₀`; defaults to the initial radius.
    pub nu_initial: Option<f64>,
    /// `β` in `ν_k = ν₀ β^k`.
    pub nu_decay: f64,
    pub fallback: bool,
    pub q_policy: QPolicy,
    /// `None` sizes the bundle from the dimension.
    pub bundle: Option<BundlePolicy>,
    pub recycle: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            gamma: 0.1,
            gamma_tilde: 0.5,
            big_gamma: 0.6,
            theta: 0.1,
            big_theta: 2.0,
            q_bound: 1e3,
            c_downshift: 0.1,
            r_initial: 1.0,
            eps_stop: 1e-8,
            max_outer: 10_000,
            max_inner: 500,
            oracle: OracleKind::Downshift,
            multi_cut: false,
            trial_mode: TrialMode::Direct,
            backtrack_alpha: 0.5,
            nu_initial: None,
            nu_decay: 0.5,
            fallback: true,
            q_policy: QPolicy::ScaledIdentity(0.1),
            bundle: None,
            recycle: true,
        }
    }
}

fn require(ok: bool, rule: &str, detail: String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(SolverError::InvalidConfig(format!("{rule} violated ({detail})")))
    }
}

impl SolverConfig {
    /// Checks every parameter ordering; the error names the violated inequality.
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("gamma", self.gamma),
            ("gamma_tilde", self.gamma_tilde),
            ("Gamma", self.big_gamma),
            ("theta", self.theta),
            ("Theta", self.big_theta),
            ("q_bound", self.q_bound),
            ("c_downshift", self.c_downshift),
            ("R_initial", self.r_initial),
            ("eps_stop", self.eps_stop),
            ("backtrack_alpha", self.backtrack_alpha),
            ("nu_decay", self.nu_decay),
        ];
        for (name, v) in finite {
            require(v.is_finite(), &format!("{name} finite"), format!("{name} = {v}"))?;
        }
        let (g, gt, gg) = (self.gamma, self.gamma_tilde, self.big_gamma);
        require(0.0 < g, "0 < gamma", format!("gamma = {g}"))?;
        require(g < gt, "gamma < gamma_tilde", format!("gamma = {g}, gamma_tilde = {gt}"))?;
        require(gt < 1.0, "gamma_tilde < 1", format!("gamma_tilde = {gt}"))?;
        require(g < gg, "gamma < Gamma", format!("gamma = {g}, Gamma = {gg}"))?;
        require(gg <= 1.0, "Gamma ≤ 1", format!("Gamma = {gg}"))?;
        require(
            0.0 < self.theta && self.theta < 1.0,
            "0 < theta < 1",
            format!("theta = {}", self.theta),
        )?;
        require(self.big_theta >= 1.0, "Theta ≥ 1", format!("Theta = {}", self.big_theta))?;
        require(self.q_bound > 0.0, "q_bound > 0", format!("q_bound = {}", self.q_bound))?;
        require(
            self.c_downshift > 0.0,
            "c_downshift > 0",
            format!("c_downshift = {}", self.c_downshift),
        )?;
        require(self.r_initial > 0.0, "R_initial > 0", format!("R_initial = {}", self.r_initial))?;
        require(self.eps_stop > 0.0, "eps_stop > 0", format!("eps_stop = {}", self.eps_stop))?;
        require(self.max_outer >= 1, "max_outer ≥ 1", format!("max_outer = {}", self.max_outer))?;
        require(self.max_inner >= 1, "max_inner ≥ 1", format!("max_inner = {}", self.max_inner))?;
        require(
            0.0 < self.backtrack_alpha && self.backtrack_alpha <= 1.0,
            "0 < backtrack_alpha ≤ 1",
            format!("backtrack_alpha = {}", self.backtrack_alpha),
        )?;
        require(
            0.0 < self.nu_decay && self.nu_decay < 1.0,
            "0 < nu_decay < 1",
            format!("nu_decay = {}", self.nu_decay),
        )?;
        if let Some(nu) = self.nu_initial {
            require(nu.is_finite() && nu >= 0.0, "nu_initial ≥ 0", format!("nu_initial = {nu}"))?;
        }
        match &self.q_policy {
            QPolicy::Zero => {}
            QPolicy::ScaledIdentity(d) => {
                require(d.is_finite() && *d >= 0.0, "q_delta ≥ 0", format!("q_delta = {d}"))?;
                require(*d <= self.q_bound, "q_delta ≤ q_bound", format!("q_delta = {d}, q_bound = {}", self.q_bound))?;
            }
            QPolicy::Fixed(m) => {
                let norm = symmetric_norm(m);
                require(norm <= self.q_bound, "‖Q‖ ≤ q_bound", format!("‖Q‖ = {norm}, q_bound = {}", self.q_bound))?;
            }
        }
        if let Some(b) = &self.bundle {
            b.validate()
                .map_err(|e| SolverError::InvalidConfig(e.to_string()))?;
        }
        Ok(())
    }

    pub fn bundle_policy(&self, n: usize) -> BundlePolicy {
        self.bundle.unwrap_or_else(|| BundlePolicy::for_dimension(n))
    }

    /// `ν_k` for the strong trial rule.
    pub fn nu(&self, k: usize) -> f64 {
        self.nu_initial.unwrap_or(self.r_initial) * self.nu_decay.powi(k as i32)
    }
}

/// Memory radius for the next outer iteration.
pub fn memory_radius_update(rho: f64, r_k: f64, big_gamma: f64) -> f64 {
    if rho >= big_gamma {
        2.0 * r_k
    } else {
        r_k
    }
}
