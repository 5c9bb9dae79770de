//! Scaling of paths and the discretized-transform scaling identity.
//!
//! The scaling operator is `(S_a^b f)(t) = f(at)/b` (time factor as
//! subscript, value divisor as superscript; see
//! [`SteppedPath::rescale`]). For the span-σ scheme the identity
//!
//! ```text
//! S_a^b c^σ(f, g) = c^{σ/a}(S_b^{b/a} f, S_a^{b/a} g)
//! ```
//!
//! holds step by step: both sides run the same recursion up to a uniform
//! change of units. [`scale_commutes`] verifies it on concrete inputs.

use crate::paths::SteppedPath;

use super::{solve_euler, IvpError};

/// Verify the scaling identity on a stepped pair to the given absolute
/// tolerance on the shared grid over `[0, horizon]` (unscaled time).
/// Returns the maximal absolute gap.
pub fn scale_commutes(
    f: &SteppedPath,
    g: &SteppedPath,
    sigma: f64,
    a: f64,
    b: f64,
    horizon: f64,
) -> Result<f64, IvpError> {
    if !(a > 0.0 && b > 0.0) {
        return Err(IvpError::BadParameter("need a, b > 0".into()));
    }
    let lhs = solve_euler(&mut f.clone(), &mut g.clone(), sigma, horizon)?;
    let f_scaled = f.rescale(b, b / a);
    let g_scaled = g.rescale(a, b / a);
    let rhs = solve_euler(
        &mut f_scaled.clone(),
        &mut g_scaled.clone(),
        sigma / a,
        horizon / a,
    )?;

    // Grid j of the right-hand side sits at t = jσ/a, which is grid j of
    // the left-hand side after the time change t ↦ at.
    let n = lhs.grid_len().min(rhs.grid_len());
    let mut worst = 0.0f64;
    for j in 0..n {
        let gap = (lhs.values()[j] / b - rhs.values()[j]).abs();
        if gap > worst {
            worst = gap;
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_scaling_is_exact() {
        let f = SteppedPath::constant(1.0, 4.0);
        let g = SteppedPath::constant(0.0, 4.0);
        assert_eq!(scale_commutes(&f, &g, 0.5, 1.0, 1.0, 4.0).unwrap(), 0.0);
    }

    #[test]
    fn constant_pair_scales() {
        let f = SteppedPath::constant(1.0, 8.0);
        let g = SteppedPath::constant(0.0, 8.0);
        let gap = scale_commutes(&f, &g, 0.5, 2.0, 4.0, 4.0).unwrap();
        assert!(gap <= 1e-12, "gap={gap}");
    }

    #[test]
    fn stepped_pair_scales() {
        let f = SteppedPath::new(
            vec![0.0, 0.7, 1.9],
            vec![0.4, 0.9, 1.2],
            vec![0.2, -0.1, 0.0],
            4.0,
        )
        .unwrap();
        let g = SteppedPath::new(vec![0.0, 1.1], vec![0.1, 0.4], vec![0.05, 0.02], 4.0).unwrap();
        let gap = scale_commutes(&f, &g, 0.25, 1.7, 0.6, 4.0).unwrap();
        assert!(gap <= 1e-12, "gap={gap}");
    }
}
