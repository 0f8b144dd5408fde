//! Even piecewise-linear function zig-zagging between the axis and the parabola `t²`.
//!
//! Breakpoints start at `t₁ = 1` and follow
//! `t_{2k} = (√(1 + 4t_{2k−1}) − 1)/2`, `t_{2k+1} = t_{2k} − t_{2k}²`,
//! with `f(t_{2k+1}) = 0`, `f(t_{2k}) = t_{2k}²` and slopes ±1 in between.
//! The breakpoints accumulate at 0 like `1/(2k)`, so the table stops at
//! [`CUTOFF`] and `f(t) = t²` below the last (even) breakpoint.

use std::sync::OnceLock;

use crate::error::{Result, SolverError};
use crate::linalg::Vector;
use crate::objective::Objective;

pub const CUTOFF: f64 = 1e-6;

static TABLE: OnceLock<Vec<f64>> = OnceLock::new();

/// Descending breakpoints `t₁ = 1, t₂, …`, ending with an even-numbered one below [`CUTOFF`].
pub fn breakpoints() -> &'static [f64] {
    TABLE.get_or_init(|| {
        let mut t = vec![1.0];
        let mut odd = 1.0_f64;
        loop {
            // Root of s² + s = odd, written without cancellation.
            let even = 2.0 * odd / ((1.0 + 4.0 * odd).sqrt() + 1.0);
            t.push(even);
            if even < CUTOFF {
                break;
            }
            odd = even - even * even;
            t.push(odd);
        }
        t
    })
}

/// Index `i` of the table interval `[t[i], t[i−1]]` containing `a`, or `None` in the
/// quadratic tail. `a` must lie in `(0, 1]`.
fn interval(a: f64) -> Option<usize> {
    let t = breakpoints();
    if a <= *t.last().unwrap() {
        return None;
    }
    let idx = t.partition_point(|&b| b > a);
    Some(idx.max(1))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Zigzag;

impl Zigzag {
    pub fn try_value(&self, s: f64) -> Result<f64> {
        if !(s.abs() <= 1.0) {
            return Err(SolverError::Domain(format!("zigzag is defined on [−1, 1], got {s}")));
        }
        let a = s.abs();
        if a == 0.0 {
            return Ok(0.0);
        }
        let t = breakpoints();
        Ok(match interval(a) {
            None => a * a,
            // Even table index: t[i] is odd-numbered (value 0), slope +1 above it.
            Some(i) if i % 2 == 0 => a - t[i],
            // Odd table index: the zero is the upper endpoint, slope −1.
            Some(i) => t[i - 1] - a,
        })
    }

    /// Right derivative of `|s| ↦ f` mapped back to `s`.
    pub fn slope(&self, s: f64) -> f64 {
        let a = s.abs();
        if a == 0.0 {
            return 0.0;
        }
        let d = match interval(a) {
            None => 2.0 * a,
            Some(i) if i % 2 == 0 => 1.0,
            Some(_) => -1.0,
        };
        d * s.signum()
    }

    fn is_kink(&self, s: f64) -> bool {
        let a = s.abs();
        a > *breakpoints().last().unwrap() && breakpoints().binary_search_by(|b| a.partial_cmp(b).unwrap()).is_ok()
    }
}

impl Objective for Zigzag {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, z: &Vector) -> f64 {
        self.try_value(z[0]).unwrap_or(f64::NAN)
    }

    fn subgradient(&self, z: &Vector) -> Vector {
        Vector::from_element(1, self.slope(z[0]))
    }

    fn directional_subgradient(&self, z: &Vector, d: &Vector) -> Option<Vector> {
        let s = z[0];
        if self.is_kink(s) && s.abs() < 1.0 {
            // ∂f is [−1, 1] at interior breakpoints.
            return Some(Vector::from_element(1, if d[0] >= 0.0 { 1.0 } else { -1.0 }));
        }
        Some(self.subgradient(z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_breakpoints() {
        let t = breakpoints();
        assert_eq!(t[0], 1.0);
        assert!((t[1] - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
        let f = Zigzag;
        assert_eq!(f.try_value(1.0).unwrap(), 0.0);
        assert!((f.try_value(t[1]).unwrap() - t[1] * t[1]).abs() < 1e-15);
        assert_eq!(f.try_value(0.0).unwrap(), 0.0);
        assert!(t.len() % 2 == 0 && *t.last().unwrap() < CUTOFF);
    }

    #[test]
    fn outside_domain() {
        assert!(matches!(Zigzag.try_value(1.5), Err(SolverError::Domain(_))));
        assert!(Zigzag.value(&Vector::from_element(1, -1.01)).is_nan());
    }

    #[test]
    fn even_and_between_axis_and_parabola() {
        let f = Zigzag;
        for i in 0..=2000 {
            let s = -1.0 + 2.0 * i as f64 / 2000.0;
            let v = f.try_value(s).unwrap();
            assert_eq!(v, f.try_value(-s).unwrap());
            assert!(v >= 0.0);
            // On a rising piece [t_{2k+1}, t_{2k}], s² − f = (t_{2k} − s)(1 − t_{2k} − s),
            // so the parabola bound holds from t₃ down.
            if s.abs() <= breakpoints()[2] {
                assert!(v <= s * s + 1e-15, "s = {s}, f = {v}");
            }
        }
    }
}
