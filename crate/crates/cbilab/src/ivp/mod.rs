//! Deterministic solvers for the initial value problem
//!
//! ```text
//! IVP(f, g):  c'₊ = f∘c + g,   c(0) = 0
//! ```
//!
//! for an admissible breadth-first pair: `f` càdlàg without negative jumps
//! (the reproduction function), `g` càdlàg non-decreasing (the immigration
//! function), `f(0) + g(0) ≥ 0`. The cumulative population `c` is
//! non-decreasing and continuous up to its explosion time; its right-hand
//! derivative `h = c'₊` is the population profile.
//!
//! Two solvers are provided: an event-driven exact solver over stepped
//! pairs ([`solve_exact`]) that represents `c` by closed-form segments, and
//! the span-σ Euler scheme ([`solve_euler`]) that discretizes the same
//! problem and also accepts lazily sampled random drivers. When several
//! solutions exist (`g` piecewise constant), the exact solver returns the
//! one without spontaneous generation: a profile that has reached zero
//! stays at zero for as long as the immigration function stays flat.

mod euler;
mod exact;
mod explosion;
mod lamperti;
mod scaling;

use thiserror::Error;

use crate::paths::{PathError, SteppedPath};

pub use euler::{
    solve_euler, solve_euler_with, sup_distance, Driver, EulerConfig, EulerSolution, FnDriver,
};
pub use exact::solve_exact;
pub use explosion::{detect_explosion, detect_explosion_path, ExplosionOutcome, TailReproduction};
pub use lamperti::lamperti_time_change;
pub use scaling::scale_commutes;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IvpError {
    #[error("inadmissible breadth-first pair: {0}")]
    Inadmissible(String),
    #[error("driver evaluation failed: {0}")]
    Driver(String),
    #[error("invalid solver parameter: {0}")]
    BadParameter(String),
}

impl From<PathError> for IvpError {
    fn from(e: PathError) -> Self {
        IvpError::Driver(e.to_string())
    }
}

/// Check the admissible breadth-first pair conditions for stepped inputs.
pub fn check_admissible(f: &SteppedPath, g: &SteppedPath) -> Result<(), IvpError> {
    if !f.has_no_negative_jumps() {
        return Err(IvpError::Inadmissible(
            "reproduction path has a negative jump".into(),
        ));
    }
    if !g.is_non_decreasing() {
        return Err(IvpError::Inadmissible(
            "immigration path is not non-decreasing".into(),
        ));
    }
    let start = f.eval(0.0) + g.eval(0.0);
    if !(start >= 0.0) {
        return Err(IvpError::Inadmissible(format!("f(0) + g(0) = {start} < 0")));
    }
    Ok(())
}

/// One closed-form segment of a cumulative population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PieceForm {
    /// `c(t0 + s) = c0 + c1·s + c2·s²`.
    Poly { c0: f64, c1: f64, c2: f64 },
    /// `c(t0 + s) = k·e^{q·s} + a0 + a1·s`.
    ExpAffine { k: f64, q: f64, a0: f64, a1: f64 },
}

impl PieceForm {
    fn value(&self, s: f64) -> f64 {
        match *self {
            PieceForm::Poly { c0, c1, c2 } => c0 + s * (c1 + s * c2),
            PieceForm::ExpAffine { k, q, a0, a1 } => k * (q * s).exp() + a0 + a1 * s,
        }
    }

    fn derivative(&self, s: f64) -> f64 {
        match *self {
            PieceForm::Poly { c1, c2, .. } => c1 + 2.0 * c2 * s,
            PieceForm::ExpAffine { k, q, a1, .. } => k * q * (q * s).exp() + a1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Piece {
    pub t0: f64,
    pub form: PieceForm,
}

/// A non-decreasing continuous cumulative population `c` with `c(0) = 0`,
/// represented by closed-form segments, possibly exploding to `+∞` at a
/// finite time. The profile `h = c'₊` is attached as the per-segment
/// derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativePopulation {
    pieces: Vec<Piece>,
    explosion_time: f64,
}

impl CumulativePopulation {
    pub(crate) fn new(pieces: Vec<Piece>, explosion_time: f64) -> Self {
        debug_assert!(!pieces.is_empty() || explosion_time == 0.0);
        Self {
            pieces,
            explosion_time,
        }
    }

    /// Time at which `c` reaches `+∞`; `+∞` when it never does.
    pub fn explosion_time(&self) -> f64 {
        self.explosion_time
    }

    fn piece_at(&self, t: f64) -> &Piece {
        let i = self.pieces.partition_point(|p| p.t0 <= t).saturating_sub(1);
        &self.pieces[i]
    }

    /// `c(t)`, `+∞` from the explosion time on.
    pub fn eval(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        if t >= self.explosion_time {
            return f64::INFINITY;
        }
        let p = self.piece_at(t);
        p.form.value(t - p.t0)
    }

    /// The population profile `h(t) = c'₊(t)`, clamped at zero against
    /// rounding dust (the exact forms are non-negative).
    pub fn profile(&self, t: f64) -> f64 {
        if t >= self.explosion_time {
            return f64::INFINITY;
        }
        let p = self.piece_at(t);
        p.form.derivative(t - p.t0).max(0.0)
    }

    /// Times at which the closed form changes.
    pub fn piece_starts(&self) -> Vec<f64> {
        self.pieces.iter().map(|p| p.t0).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admissibility_gate() {
        let ok_f = SteppedPath::constant(1.0, 1.0);
        let ok_g = SteppedPath::constant(0.0, 1.0);
        assert!(check_admissible(&ok_f, &ok_g).is_ok());

        let neg_jump =
            SteppedPath::new(vec![0.0, 0.5], vec![1.0, 0.2], vec![0.0, 0.0], 1.0).unwrap();
        assert!(check_admissible(&neg_jump, &ok_g).is_err());

        let decreasing_g = SteppedPath::affine(1.0, -0.5, 1.0);
        assert!(check_admissible(&ok_f, &decreasing_g).is_err());

        let bad_start = SteppedPath::constant(-1.0, 1.0);
        assert!(check_admissible(&bad_start, &ok_g).is_err());
    }

    #[test]
    fn piece_eval_and_profile() {
        let c = CumulativePopulation::new(
            vec![
                Piece {
                    t0: 0.0,
                    form: PieceForm::Poly {
                        c0: 0.0,
                        c1: 1.0,
                        c2: -0.25,
                    },
                },
                Piece {
                    t0: 2.0,
                    form: PieceForm::Poly {
                        c0: 1.0,
                        c1: 0.0,
                        c2: 0.0,
                    },
                },
            ],
            f64::INFINITY,
        );
        assert_eq!(c.eval(0.0), 0.0);
        assert_eq!(c.eval(1.0), 0.75);
        assert_eq!(c.eval(2.5), 1.0);
        assert_eq!(c.profile(1.0), 0.5);
        assert_eq!(c.profile(2.5), 0.0);
    }
}
