//! Event-driven exact solver for stepped pairs.
//!
//! Between events the pair `(f, g)` is affine, so `c' = f(c) + g(t)` has a
//! closed form on each event interval: a polynomial of degree ≤ 2 when `f`
//! is locally flat, an exponential-affine curve otherwise. The solver walks
//! events — `c` crossing an `f`-breakpoint in space, time reaching a
//! `g`-breakpoint, the rate stalling at zero — and concatenates the closed
//! forms. Event times inside a segment are themselves closed-form except in
//! the exp-affine-with-sloped-`g` case, which falls back to a bisection
//! solve at machine precision.
//!
//! Solution selection: no spontaneous generation. When the rate hits exact
//! zero (after the positive part) while `g` is locally flat, `c` is held
//! constant until the next `g` event. Ties between an `f`-crossing and a
//! `g`-event are resolved in favour of the `g`-event.

use crate::paths::SteppedPath;

use super::{check_admissible, CumulativePopulation, IvpError, Piece, PieceForm};

/// Time for the closed form to carry `c` from `x` to `target`, or `+∞` when
/// it never does. `rr` is the current rate, `q` the local `f` slope, `w`
/// the local `g` slope.
fn crossing_time(x: f64, rr: f64, q: f64, w: f64, target: f64) -> f64 {
    debug_assert!(target > x);
    let dx = target - x;
    if q == 0.0 {
        // c(s) = x + rr·s + w·s²/2.
        if w == 0.0 {
            if rr > 0.0 {
                dx / rr
            } else {
                f64::INFINITY
            }
        } else {
            2.0 * dx / (rr + (rr * rr + 2.0 * w * dx).sqrt())
        }
    } else if w == 0.0 {
        // c(s) = a0 + K·e^{qs}, qK = rr.
        let k = rr / q;
        if k == 0.0 {
            return f64::INFINITY;
        }
        let a0 = x - k;
        let arg = (target - a0) / k;
        if arg > 0.0 {
            let s = arg.ln() / q;
            if s > 0.0 {
                s
            } else {
                f64::INFINITY
            }
        } else {
            f64::INFINITY
        }
    } else {
        // c(s) = K·e^{qs} + a1·s + a0 with a1 = -w/q; monotone, so a sign
        // change brackets the unique crossing.
        let a1 = -w / q;
        let k = (rr - a1) / q;
        let a0 = x - k;
        let c = |s: f64| k * (q * s).exp() + a1 * s + a0;
        let mut hi = 1.0f64;
        let mut lo = 0.0f64;
        while c(hi) < target {
            lo = hi;
            hi *= 2.0;
            if hi > 1e300 {
                return f64::INFINITY;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if c(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

fn piece_form(x: f64, rr: f64, q: f64, w: f64) -> PieceForm {
    if q == 0.0 {
        PieceForm::Poly {
            c0: x,
            c1: rr,
            c2: 0.5 * w,
        }
    } else {
        let a1 = -w / q;
        let k = (rr - a1) / q;
        PieceForm::ExpAffine {
            k,
            q,
            a0: x - k,
            a1,
        }
    }
}

/// Solve `IVP(f, g)` exactly for a stepped admissible pair, returning the
/// solution without spontaneous generation.
pub fn solve_exact(f: &SteppedPath, g: &SteppedPath) -> Result<CumulativePopulation, IvpError> {
    check_admissible(f, g)?;

    let f_absorb = f.absorbed_at().unwrap_or(f64::INFINITY);
    let g_absorb = g.absorbed_at().unwrap_or(f64::INFINITY);

    let mut t = 0.0f64;
    let mut x = 0.0f64;
    let mut pieces: Vec<Piece> = Vec::new();

    if f_absorb <= 0.0 || g_absorb <= 0.0 {
        return Ok(CumulativePopulation::new(pieces, 0.0));
    }

    loop {
        let (fv, q) = f.value_and_slope(x);
        let (gv, w) = g.value_and_slope(t);
        // The exact solution keeps the rate non-negative; the positive part
        // only strips rounding dust at segment joins.
        let rr = (fv + gv).max(0.0);

        // Stall: rate at exact zero with locally flat immigration. Hold c
        // until the next g event (no spontaneous generation).
        if rr == 0.0 && w == 0.0 {
            let next_g = g.next_breakpoint_after(t).unwrap_or(f64::INFINITY);
            let until = next_g.min(g_absorb);
            pieces.push(Piece {
                t0: t,
                form: PieceForm::Poly {
                    c0: x,
                    c1: 0.0,
                    c2: 0.0,
                },
            });
            if until.is_infinite() {
                return Ok(CumulativePopulation::new(pieces, f64::INFINITY));
            }
            if until >= g_absorb {
                return Ok(CumulativePopulation::new(pieces, g_absorb));
            }
            t = until;
            continue;
        }

        // Next f-target in space: breakpoint or absorption frontier.
        let f_target = {
            let bp = f.next_breakpoint_after(x).unwrap_or(f64::INFINITY);
            bp.min(f_absorb)
        };
        let s_f = if f_target.is_finite() {
            crossing_time(x, rr, q, w, f_target)
        } else {
            f64::INFINITY
        };
        // Next g event in time: breakpoint or absorption.
        let s_g = {
            let bp = g.next_breakpoint_after(t).unwrap_or(f64::INFINITY);
            bp.min(g_absorb) - t
        };

        let form = piece_form(x, rr, q, w);
        pieces.push(Piece { t0: t, form });

        if s_f.is_infinite() && s_g.is_infinite() {
            // Terminal piece: either an asymptotic stall inside a segment or
            // unbounded (at most exponential) growth. No finite stepped pair
            // explodes here.
            return Ok(CumulativePopulation::new(pieces, f64::INFINITY));
        }

        // Tie-break: g-events first.
        if s_g <= s_f {
            let t_next = t + s_g;
            if t_next >= g_absorb {
                return Ok(CumulativePopulation::new(pieces, g_absorb));
            }
            x = form.value(s_g);
            t = t_next;
            if x >= f_absorb {
                return Ok(CumulativePopulation::new(pieces, t));
            }
        } else {
            t += s_f;
            x = f_target;
            if x >= f_absorb {
                return Ok(CumulativePopulation::new(pieces, t));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_pair_is_constant_zero() {
        let f = SteppedPath::constant(0.0, 1.0);
        let g = SteppedPath::constant(0.0, 1.0);
        let c = solve_exact(&f, &g).unwrap();
        for t in [0.0, 0.3, 5.0] {
            assert_eq!(c.eval(t), 0.0);
            assert_eq!(c.profile(t), 0.0);
        }
        assert!(c.explosion_time().is_infinite());
    }

    #[test]
    fn step_reproduction_changes_slope_at_crossing() {
        // f ≡ 1 stepping to 2 at x = 1, g = 0: c(t) = t then 1 + 2(t-1).
        let f = SteppedPath::new(vec![0.0, 1.0], vec![1.0, 2.0], vec![0.0, 0.0], 2.0).unwrap();
        let g = SteppedPath::constant(0.0, 2.0);
        let c = solve_exact(&f, &g).unwrap();
        assert!((c.eval(0.5) - 0.5).abs() < 1e-15);
        assert!((c.eval(1.0) - 1.0).abs() < 1e-15);
        assert!((c.eval(1.5) - 2.0).abs() < 1e-14);
        assert_eq!(c.profile(0.5), 1.0);
        assert_eq!(c.profile(1.5), 2.0);
    }

    #[test]
    fn sqrt_kink_absorbs_without_regeneration() {
        // f(x) = √|1 - x| interpolated at density 1e-4: the selected
        // solution is c(t) = t - t²/4 with profile (2-t)⁺/2, absorbed near
        // c = 1, never restarting even though f grows past the kink.
        let f = SteppedPath::sample_function(|x| (1.0 - x).abs().sqrt(), 1.2, 1e-4).unwrap();
        let g = SteppedPath::constant(0.0, 3.0);
        let c = solve_exact(&f, &g).unwrap();
        assert!((c.eval(1.0) - 0.75).abs() < 1e-6);
        for t in [0.0, 0.5, 1.0, 1.5, 1.75] {
            assert!(
                (c.profile(t) - (2.0 - t) / 2.0).abs() < 1e-6,
                "t={t}: {} vs {}",
                c.profile(t),
                (2.0 - t) / 2.0
            );
        }
        // Absorbed tail: profile at zero, c pinned at 1, no restart.
        for t in [2.3, 2.5, 3.0] {
            assert!(c.profile(t) < 1e-6, "t={t}: {}", c.profile(t));
        }
        assert!((c.eval(3.0) - 1.0).abs() < 1e-4);
        assert!(c.profile(3.0) <= c.profile(2.3));
    }

    #[test]
    fn immigration_jump_restarts_population() {
        // f(x) = -x (starts at 0), g jumps from 0 to 1 at t = 1: c stays 0,
        // then grows with rate 1 - c.
        let f = SteppedPath::affine(0.0, -1.0, 1.0);
        let g = SteppedPath::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0, 0.0], 2.0).unwrap();
        let c = solve_exact(&f, &g).unwrap();
        assert_eq!(c.eval(1.0), 0.0);
        // After t = 1: c' = 1 - c, c(1) = 0 so c(1+s) = 1 - e^{-s}.
        let s = 0.7;
        assert!((c.eval(1.0 + s) - (1.0 - (-s).exp())).abs() < 1e-12);
    }

    #[test]
    fn sloped_immigration_gives_quadratic_growth() {
        // f ≡ 0, g(t) = t: c(t) = t²/2.
        let f = SteppedPath::constant(0.0, 2.0);
        let g = SteppedPath::affine(0.0, 1.0, 2.0);
        let c = solve_exact(&f, &g).unwrap();
        for t in [0.3, 1.0, 1.9] {
            assert!((c.eval(t) - 0.5 * t * t).abs() < 1e-15);
        }
    }

    #[test]
    fn absorbed_reproduction_explodes_when_reached() {
        // f = 1 absorbed at +∞ from space point 2: c hits it at t = 2.
        let f = SteppedPath::constant(1.0, 3.0).with_absorption(2.0);
        let g = SteppedPath::constant(0.0, 3.0);
        let c = solve_exact(&f, &g).unwrap();
        assert_eq!(c.explosion_time(), 2.0);
        assert!((c.eval(1.5) - 1.5).abs() < 1e-15);
        assert!(c.eval(2.0).is_infinite());
    }

    #[test]
    fn g_event_coinciding_with_f_crossing() {
        // c reaches the f-breakpoint at x = 1 exactly when g jumps at
        // t = 1; afterwards the rate must combine both new segments.
        let f = SteppedPath::new(vec![0.0, 1.0], vec![1.0, 2.0], vec![0.0, 0.0], 4.0).unwrap();
        let g = SteppedPath::new(vec![0.0, 1.0], vec![0.0, 0.5], vec![0.0, 0.0], 4.0).unwrap();
        let c = solve_exact(&f, &g).unwrap();
        assert!((c.eval(1.0) - 1.0).abs() < 1e-12);
        assert_eq!(c.profile(1.0), 2.5);
        assert!((c.eval(2.0) - 3.5).abs() < 1e-12);
    }

    #[test]
    fn cumulative_equals_integral_of_profile() {
        // c(t) = ∫₀ᵗ h by composite Simpson refined within each closed-form
        // piece, to 1e-9 relative.
        let f = SteppedPath::new(
            vec![0.0, 0.6, 1.4],
            vec![0.8, 1.3, 1.2],
            vec![0.5, -0.25, 0.1],
            4.0,
        )
        .unwrap();
        let g = SteppedPath::new(vec![0.0, 0.9], vec![0.1, 0.4], vec![0.05, 0.02], 4.0).unwrap();
        let c = solve_exact(&f, &g).unwrap();
        let mut cuts = c.piece_starts();
        cuts.push(3.0);
        let mut integral = 0.0;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1].min(3.0));
            if b <= a {
                continue;
            }
            let m = 200;
            for j in 0..m {
                let lo = a + (b - a) * j as f64 / m as f64;
                let hi = a + (b - a) * (j + 1) as f64 / m as f64;
                let mid = 0.5 * (lo + hi);
                // h is right-continuous and jumps at piece boundaries; read
                // the upper node just inside the piece.
                integral += (hi - lo) / 6.0
                    * (c.profile(lo) + 4.0 * c.profile(mid) + c.profile(hi - 1e-12));
            }
            let at = c.eval(b);
            assert!(
                (integral - at).abs() <= 1e-9 * at.max(1.0),
                "t={b}: quadrature {integral} vs c {at}"
            );
        }
    }

    #[test]
    fn refinement_changes_nothing() {
        let f = SteppedPath::new(vec![0.0, 0.8], vec![0.5, 1.5], vec![0.25, -0.125], 4.0).unwrap();
        let g = SteppedPath::affine(0.1, 0.05, 4.0);
        let base = solve_exact(&f, &g).unwrap();
        let refined = solve_exact(&f.refine(0.37), &g.refine(1.23)).unwrap();
        for i in 0..=400 {
            let t = i as f64 * 0.01;
            assert!((base.eval(t) - refined.eval(t)).abs() < 1e-12, "t={t}");
        }
    }
}
