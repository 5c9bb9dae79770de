//! The classical Lamperti time change, as an independent route to
//! `IVP(f + x, 0)`.
//!
//! For a driver `F = f + x` with no negative jumps and `F(0) ≥ 0`, the
//! space-to-time map `i(y) = ∫₀^y dξ/F(ξ)` is computed segment by segment
//! in closed form, and the cumulative population is its right-continuous
//! inverse. Zero is absorbing: once `F` reaches zero (at a point or
//! asymptotically), the population freezes. The result must agree with
//! [`super::solve_exact`] run on `(f + x, 0)`; the test suites use that
//! agreement as a two-route check.

use crate::paths::SteppedPath;

use super::{CumulativePopulation, IvpError, Piece, PieceForm};

/// Lamperti transform of the driver `f + x` (with zero immigration).
pub fn lamperti_time_change(f: &SteppedPath, x: f64) -> Result<CumulativePopulation, IvpError> {
    if !(x >= 0.0) {
        return Err(IvpError::BadParameter("x must be non-negative".into()));
    }
    if !f.has_no_negative_jumps() {
        return Err(IvpError::Inadmissible(
            "reproduction path has a negative jump".into(),
        ));
    }
    let driver = f.translate(x);
    if !(driver.eval(0.0) >= 0.0) {
        return Err(IvpError::Inadmissible(format!(
            "f(0) + x = {} < 0",
            driver.eval(0.0)
        )));
    }

    let absorb = driver.absorbed_at().unwrap_or(f64::INFINITY);
    let mut pieces: Vec<Piece> = Vec::new();
    let mut t = 0.0f64; // i(y) so far
    let mut y = 0.0f64; // current space position
    if absorb <= 0.0 {
        return Ok(CumulativePopulation::new(pieces, 0.0));
    }

    loop {
        let (p, q) = driver.value_and_slope(y);
        if p == 0.0 {
            // F hits zero at a point: absorbed, no spontaneous generation.
            pieces.push(Piece {
                t0: t,
                form: PieceForm::Poly {
                    c0: y,
                    c1: 0.0,
                    c2: 0.0,
                },
            });
            return Ok(CumulativePopulation::new(pieces, f64::INFINITY));
        }
        if p < 0.0 {
            return Err(IvpError::Inadmissible(format!(
                "driver became negative ({p}) at {y} without passing zero"
            )));
        }
        let target = driver
            .next_breakpoint_after(y)
            .unwrap_or(f64::INFINITY)
            .min(absorb);

        if q == 0.0 {
            // i gains Δξ/p per segment; c is affine with slope p.
            let form = PieceForm::Poly {
                c0: y,
                c1: p,
                c2: 0.0,
            };
            pieces.push(Piece { t0: t, form });
            if target.is_infinite() {
                return Ok(CumulativePopulation::new(pieces, f64::INFINITY));
            }
            t += (target - y) / p;
            y = target;
        } else {
            // c(t + s) = y + (p/q)(e^{qs} - 1): exponential-affine.
            let k = p / q;
            let form = PieceForm::ExpAffine {
                k,
                q,
                a0: y - k,
                a1: 0.0,
            };
            pieces.push(Piece { t0: t, form });
            let end_value = p + q * (target - y);
            if target.is_infinite() || end_value <= 0.0 {
                // Root inside the (possibly unbounded) segment, or growth
                // forever: either way this piece is terminal.
                return Ok(CumulativePopulation::new(pieces, f64::INFINITY));
            }
            // i-gain over the segment: ln(F(end)/F(start))/q.
            t += (end_value / p).ln() / q;
            y = target;
        }
        if y >= absorb {
            return Ok(CumulativePopulation::new(pieces, t));
        }
    }
}
