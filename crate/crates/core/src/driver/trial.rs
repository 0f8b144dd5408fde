use crate::driver::config::{SolverConfig, TrialMode};
use crate::error::{Result, SolverError};
use crate::linalg::{norm_inf, Vector};
use crate::model::{second_order_value, Polyhedron, WorkingModel};
use crate::tangent::TangentSolution;

/// `ρ = (f(x) − f(z)) / (f(x) − Φ(z))` and whether it passes `ρ ≥ γ`.
pub fn acceptance_test(fx: f64, fz: f64, phi_obj: f64, gamma: f64) -> Result<(f64, bool)> {
    let den = fx - phi_obj;
    if !(den > 0.0) {
        return Err(SolverError::NumericalFailure(format!(
            "nonpositive predicted decrease {den:e} in the acceptance test"
        )));
    }
    let rho = (fx - fz) / den;
    Ok((rho, rho >= gamma))
}

/// `ρ̃` and the radius for the next inner iteration.
pub fn secondary_test_and_radius(
    fx: f64,
    phi_next_at_z: f64,
    phi_obj: f64,
    r_k: f64,
    gamma_tilde: f64,
) -> Result<(f64, f64)> {
    let den = fx - phi_obj;
    if !(den > 0.0) {
        return Err(SolverError::NumericalFailure(format!(
            "nonpositive predicted decrease {den:e} in the secondary test"
        )));
    }
    let rho_tilde = (fx - phi_next_at_z) / den;
    let r_next = if rho_tilde >= gamma_tilde { 0.5 * r_k } else { r_k };
    Ok((rho_tilde, r_next))
}

/// Trial point for the tangent solution `y`.
///
/// `phi` evaluates the second-order model; `k` is the inner iteration (from 1).
#[allow(clippy::too_many_arguments)]
pub(crate) fn trial_point(
    x: &Vector,
    fx: f64,
    y: &Vector,
    phi_y: f64,
    phi: &dyn Fn(&Vector) -> Result<f64>,
    c: &Polyhedron,
    config: &SolverConfig,
    k: usize,
) -> Result<Vector> {
    let d = y - x;
    let dn = norm_inf(&d);
    let alpha = match config.trial_mode {
        TrialMode::Direct => 1.0,
        TrialMode::Backtrack => config.backtrack_alpha,
        TrialMode::StrongNu => {
            let nu = config.nu(k);
            if dn > 0.0 {
                config.backtrack_alpha.max(1.0 - nu / dn)
            } else {
                1.0
            }
        }
    }
    .clamp(config.theta, 1.0);
    let z = if alpha == 1.0 { y.clone() } else { x + d * alpha };

    let tol = 1e-12 * (1.0 + fx.abs());
    let pred = fx - phi_y;
    let pred_z = fx - phi(&z)?;
    if pred_z < config.theta * pred - tol {
        return Err(SolverError::TrialRule(format!(
            "f(x) − Φ(z) = {pred_z:e} is below θ(f(x) − Φ(y)) = {:e}",
            config.theta * pred
        )));
    }
    if norm_inf(&(&z - x)) > config.big_theta * dn * (1.0 + 1e-12) {
        return Err(SolverError::TrialRule("‖z − x‖ exceeds Θ‖y − x‖".into()));
    }
    if c.max_violation(&z) > 1e-9 * (1.0 + norm_inf(&z)) {
        return Err(SolverError::TrialRule("z leaves the feasible set".into()));
    }
    Ok(z)
}

/// Trial point for a tangent solution of the working model `wm`.
pub fn trial_step(
    sol: &TangentSolution,
    wm: &WorkingModel,
    c: &Polyhedron,
    config: &SolverConfig,
    k: usize,
) -> Result<Vector> {
    let phi = |z: &Vector| second_order_value(wm, z);
    trial_point(wm.anchor(), wm.fx(), &sol.y, sol.objective, &phi, c, config, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn acceptance_examples() {
        assert_eq!(acceptance_test(0.0, -0.25, -1.0, 0.5).unwrap(), (0.25, false));
        assert_eq!(acceptance_test(1.0, 0.5, 0.5, 0.1).unwrap(), (1.0, true));
        assert_eq!(acceptance_test(1.0, 1.0, 0.5, 0.1).unwrap(), (0.0, false));
        assert!(acceptance_test(1.0, 1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn secondary_examples() {
        // Frozen as in the oscillating run.
        assert_eq!(secondary_test_and_radius(0.0, -0.25, -1.0, 1.0, 0.75).unwrap(), (0.25, 1.0));
        // New cut exact at z and model reproduces f: ratio 1, radius halves.
        assert_eq!(secondary_test_and_radius(0.0, -1.0, -1.0, 1.0, 0.5).unwrap(), (1.0, 0.5));
    }
}
