//! Deterministic explosion test for parametric reproduction functions.
//!
//! For an admissible pair, explosion of `IVP(f, g)` is governed by the tail
//! integral `∫^∞ dx / f⁺(x)`:
//!
//! * if the integral diverges, no solution explodes;
//! * if it converges, `f(x) → ∞`, and `sup g` exceeds `max(-f)`, every
//!   solution explodes.
//!
//! Neither condition firing leaves the question open (for example `f(x) =
//! x²` with `g = 0` and `f(0) = 0`: the zero solution never explodes while
//! others do), so the answer is three-valued.

use crate::paths::SteppedPath;

use super::IvpError;

/// Reproduction families with an evaluable tail integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailReproduction {
    /// `f(x) = coeff·x^exponent`, `coeff > 0`, `exponent ≥ 0`.
    Power { coeff: f64, exponent: f64 },
    /// `f(x) = intercept + slope·x`.
    Affine { intercept: f64, slope: f64 },
    /// `f(x) = coeff·e^{rate·x}`, `coeff, rate > 0`.
    Exponential { coeff: f64, rate: f64 },
}

impl TailReproduction {
    pub fn validate(&self) -> Result<(), IvpError> {
        let ok = match *self {
            TailReproduction::Power { coeff, exponent } => coeff > 0.0 && exponent >= 0.0,
            TailReproduction::Affine { intercept, slope } => {
                intercept.is_finite() && slope.is_finite()
            }
            TailReproduction::Exponential { coeff, rate } => coeff > 0.0 && rate > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(IvpError::BadParameter("invalid tail family".into()))
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            TailReproduction::Power { coeff, exponent } => coeff * x.powf(exponent),
            TailReproduction::Affine { intercept, slope } => intercept + slope * x,
            TailReproduction::Exponential { coeff, rate } => coeff * (rate * x).exp(),
        }
    }

    /// Is `∫^∞ dx / f⁺(x)` finite?
    fn tail_integral_finite(&self) -> bool {
        match *self {
            TailReproduction::Power { exponent, .. } => exponent > 1.0,
            // 1/(p + qx) integrates to a logarithm when q > 0 and the
            // positive part vanishes (making the integrand infinite) when
            // q <= 0; the tail integral diverges either way.
            TailReproduction::Affine { .. } => false,
            TailReproduction::Exponential { .. } => true,
        }
    }

    fn diverges_to_infinity(&self) -> bool {
        match *self {
            TailReproduction::Power { exponent, .. } => exponent > 0.0,
            TailReproduction::Affine { slope, .. } => slope > 0.0,
            TailReproduction::Exponential { .. } => true,
        }
    }

    /// `sup_x (-f(x)) = -inf f` over `x ≥ 0`.
    fn sup_negative_part(&self) -> f64 {
        match *self {
            TailReproduction::Power { coeff, exponent } => {
                if exponent > 0.0 {
                    0.0
                } else {
                    -coeff
                }
            }
            TailReproduction::Affine { intercept, slope } => {
                if slope < 0.0 {
                    f64::INFINITY
                } else {
                    -intercept
                }
            }
            TailReproduction::Exponential { coeff, .. } => -coeff,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExplosionOutcome {
    NoExplosion,
    Explosion,
    /// Neither sufficient condition applies.
    Indeterminate,
}

/// Three-valued explosion test given the supremum of the immigration
/// function (use `+∞` for unbounded `g`).
pub fn detect_explosion(f: &TailReproduction, g_sup: f64) -> ExplosionOutcome {
    if !f.tail_integral_finite() {
        return ExplosionOutcome::NoExplosion;
    }
    if f.diverges_to_infinity() && g_sup > f.sup_negative_part() {
        return ExplosionOutcome::Explosion;
    }
    ExplosionOutcome::Indeterminate
}

/// Convenience wrapper reading `sup g` off a stepped immigration path.
pub fn detect_explosion_path(f: &TailReproduction, g: &SteppedPath) -> ExplosionOutcome {
    detect_explosion(f, g.sup_value())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_with_immigration_explodes() {
        let f = TailReproduction::Power {
            coeff: 1.0,
            exponent: 2.0,
        };
        assert_eq!(detect_explosion(&f, 10.0), ExplosionOutcome::Explosion);
    }

    #[test]
    fn linear_never_explodes() {
        let f = TailReproduction::Affine {
            intercept: 0.0,
            slope: 1.0,
        };
        assert_eq!(
            detect_explosion(&f, f64::INFINITY),
            ExplosionOutcome::NoExplosion
        );
    }

    #[test]
    fn quadratic_without_immigration_is_open() {
        let f = TailReproduction::Power {
            coeff: 1.0,
            exponent: 2.0,
        };
        assert_eq!(detect_explosion(&f, 0.0), ExplosionOutcome::Indeterminate);
    }

    #[test]
    fn exponential_reproduction_explodes_alone() {
        // f(0) = 1 > 0, so even g = 0 explodes: c(t) = -ln(1 - t).
        let f = TailReproduction::Exponential {
            coeff: 1.0,
            rate: 1.0,
        };
        assert_eq!(detect_explosion(&f, 0.0), ExplosionOutcome::Explosion);
    }

    #[test]
    fn path_supremum_feeds_the_test() {
        let f = TailReproduction::Power {
            coeff: 1.0,
            exponent: 2.0,
        };
        let flat = SteppedPath::constant(0.0, 1.0);
        assert_eq!(
            detect_explosion_path(&f, &flat),
            ExplosionOutcome::Indeterminate
        );
        let rising = SteppedPath::affine(0.0, 0.5, 1.0);
        assert_eq!(
            detect_explosion_path(&f, &rising),
            ExplosionOutcome::Explosion
        );
    }
}
