//! Property tests for the structural invariants: non-negative profiles,
//! comparison under larger immigration, refinement invariance, the
//! time-change/event-solver agreement, scaling, path serialization, and
//! exponent shape.

mod common;

use proptest::prelude::*;

use cbilab::ivp::{lamperti_time_change, scale_commutes, solve_exact};
use cbilab::mechanisms::{
    midpoint_concave_on_grid, midpoint_convex_on_grid, BranchingJumps, BranchingMechanism,
    ImmigrationMechanism, JumpLaw,
};
use cbilab::paths::SteppedPath;
use cbilab::rng::stream;

use common::{random_immigration, random_reproduction};

/// Raw data for a stepped path: interior knots, start value, slopes, jumps.
fn arb_reproduction() -> impl Strategy<Value = SteppedPath> {
    (
        proptest::collection::vec(0.05f64..1.9, 0..3),
        0.0f64..1.0,
        proptest::collection::vec(-0.5f64..0.5, 4),
        proptest::collection::vec(0.0f64..0.4, 4),
    )
        .prop_map(|(mut knots, v0, slopes, jumps)| {
            knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
            knots.dedup();
            let mut starts = vec![0.0];
            starts.extend(knots);
            let mut values = Vec::with_capacity(starts.len());
            let mut v = v0;
            for i in 0..starts.len() {
                values.push(v);
                if i + 1 < starts.len() {
                    v += slopes[i] * (starts[i + 1] - starts[i]) + jumps[i];
                }
            }
            let slopes = slopes[..values.len()].to_vec();
            SteppedPath::new(starts, values, slopes, 2.0).unwrap()
        })
}

fn arb_immigration() -> impl Strategy<Value = SteppedPath> {
    (
        proptest::collection::vec(0.05f64..1.9, 0..3),
        0.0f64..0.5,
        proptest::collection::vec(0.0f64..0.5, 4),
        proptest::collection::vec(0.0f64..0.3, 4),
    )
        .prop_map(|(mut knots, v0, slopes, jumps)| {
            knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
            knots.dedup();
            let mut starts = vec![0.0];
            starts.extend(knots);
            let mut values = Vec::with_capacity(starts.len());
            let mut v = v0;
            for i in 0..starts.len() {
                values.push(v);
                if i + 1 < starts.len() {
                    v += slopes[i] * (starts[i + 1] - starts[i]) + jumps[i];
                }
            }
            let slopes = slopes[..values.len()].to_vec();
            SteppedPath::new(starts, values, slopes, 2.0).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn profile_is_non_negative(f in arb_reproduction(), g in arb_immigration()) {
        let c = solve_exact(&f, &g).unwrap();
        for i in 0..=200 {
            let t = i as f64 * 0.02;
            prop_assert!(c.profile(t) >= 0.0);
            prop_assert!(c.eval(t) >= 0.0);
        }
        // c is non-decreasing.
        let mut prev = 0.0;
        for i in 0..=200 {
            let t = i as f64 * 0.02;
            let v = c.eval(t);
            prop_assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn larger_immigration_dominates(
        f in arb_reproduction(),
        g in arb_immigration(),
        delta in 0.01f64..0.5,
    ) {
        // g̃ = g + δ is strictly above g everywhere (left limits included),
        // so the comparison lemma hypotheses hold.
        let g_hi = g.translate(delta);
        let c_lo = solve_exact(&f, &g).unwrap();
        let c_hi = solve_exact(&f, &g_hi).unwrap();
        for i in 0..=200 {
            let t = i as f64 * 0.02;
            prop_assert!(
                c_hi.eval(t) >= c_lo.eval(t) - 1e-12,
                "t={t}: {} < {}", c_hi.eval(t), c_lo.eval(t)
            );
        }
    }

    #[test]
    fn refinement_is_invisible(
        f in arb_reproduction(),
        g in arb_immigration(),
        at_f in 0.01f64..1.99,
        at_g in 0.01f64..1.99,
    ) {
        let base = solve_exact(&f, &g).unwrap();
        let refined = solve_exact(&f.refine(at_f), &g.refine(at_g)).unwrap();
        for i in 0..=100 {
            let t = i as f64 * 0.03;
            prop_assert!((base.eval(t) - refined.eval(t)).abs() <= 1e-10);
        }
    }

    #[test]
    fn csv_round_trip(f in arb_reproduction()) {
        let back = SteppedPath::from_csv(&f.to_csv()).unwrap();
        for i in 0..=100 {
            let t = i as f64 * 0.02;
            let (a, b) = (f.eval(t), back.eval(t));
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn scaling_commutes_on_random_pairs(
        f in arb_reproduction(),
        g in arb_immigration(),
        a in 0.5f64..2.0,
        b in 0.5f64..2.0,
        sigma in 0.05f64..0.2,
    ) {
        let gap = scale_commutes(&f, &g, sigma, a, b, 2.0).unwrap();
        prop_assert!(gap <= 1e-12, "gap {gap}");
    }

    #[test]
    fn psi_convex_phi_concave(
        kappa in 0.0f64..0.5,
        drift in -1.0f64..1.0,
        sigma2 in 0.0f64..2.0,
        rate in 0.1f64..2.0,
        jump_rate in 0.5f64..3.0,
        d in 0.0f64..2.0,
        shape in 0.2f64..2.0,
    ) {
        let psi = BranchingMechanism::new(
            kappa,
            drift,
            sigma2,
            BranchingJumps::CompoundPoisson {
                rate,
                law: JumpLaw::Exponential { rate: jump_rate },
            },
        )
        .unwrap();
        let phi = ImmigrationMechanism::new(
            kappa,
            d,
            cbilab::mechanisms::ImmigrationJumps::Gamma { shape, rate: jump_rate },
        )
        .unwrap();
        let grid: Vec<f64> = (0..120).map(|i| 1e-3 * 1.12f64.powi(i)).collect();
        prop_assert!(midpoint_convex_on_grid(|l| psi.eval(l), &grid, 1e-9));
        prop_assert!(midpoint_concave_on_grid(|l| phi.eval(l), &grid, 1e-9));
        prop_assert!(grid.iter().all(|&l| phi.eval(l) >= 0.0));
    }
}

#[test]
fn time_change_agrees_with_event_solver_on_random_paths() {
    // Two independent routes to IVP(f + x, 0): sup distance below 1e-9
    // over 100 random stepped reproduction paths.
    let mut rng = stream(0x7A3E, 0);
    let zero_g = SteppedPath::constant(0.0, 2.0);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let f = random_reproduction(&mut rng, 2.0);
        let x = 0.3;
        let via_inverse = lamperti_time_change(&f, x).unwrap();
        let via_events = solve_exact(&f.translate(x), &zero_g).unwrap();
        for i in 0..=400 {
            let t = i as f64 * 0.005;
            let gap = (via_inverse.eval(t) - via_events.eval(t)).abs();
            worst = worst.max(gap);
        }
    }
    assert!(worst < 1e-9, "sup distance {worst:.3e}");

    // Also exercise paths with jumps and steeper slopes than the gentle
    // generator produces.
    let mut rng = stream(0x7A3E, 1);
    for _ in 0..100 {
        let mut starts = vec![0.0];
        let mut values = vec![rng.random_range(0.1..1.0)];
        let mut slopes = vec![rng.random_range(-1.0..1.0)];
        let mut t = 0.0;
        for _ in 0..3 {
            t += rng.random_range(0.1..0.6);
            let arrival =
                values.last().unwrap() + slopes.last().unwrap() * (t - starts.last().unwrap());
            starts.push(t);
            values.push(arrival + rng.random_range(0.0..0.8));
            slopes.push(rng.random_range(-1.0..1.0));
        }
        let f = SteppedPath::new(starts, values, slopes, 3.0).unwrap();
        let via_inverse = lamperti_time_change(&f, 0.0).unwrap();
        let via_events = solve_exact(&f, &zero_g).unwrap();
        for i in 0..=300 {
            let tt = i as f64 * 0.01;
            assert!(
                (via_inverse.eval(tt) - via_events.eval(tt)).abs() < 1e-9,
                "t={tt}"
            );
        }
    }
}

#[test]
fn exact_solver_cross_validated_by_fine_euler_on_rough_pairs() {
    // Rough pairs: big jumps, steep slopes, sloped immigration. The event
    // solver's closed-form segments must agree with the plain recursion at
    // a fine span to first order in the span.
    use cbilab::ivp::{solve_euler, sup_distance};
    let mut rng = stream(0xE0E0, 0);
    for case in 0..40 {
        let mut f_starts = vec![0.0];
        let mut f_values = vec![rng.random_range(0.0..1.0)];
        let mut f_slopes = vec![rng.random_range(-1.0..1.0)];
        let mut xp = 0.0;
        for _ in 0..3 {
            xp += rng.random_range(0.2..1.0);
            let arrival = f_values.last().unwrap()
                + f_slopes.last().unwrap() * (xp - f_starts.last().unwrap());
            f_starts.push(xp);
            f_values.push(arrival + rng.random_range(0.0..0.8));
            f_slopes.push(rng.random_range(-1.0..1.0));
        }
        let f = SteppedPath::new(f_starts, f_values, f_slopes, 8.0).unwrap();

        let mut g_starts = vec![0.0];
        let mut g_values = vec![rng.random_range(0.0..0.5)];
        let mut g_slopes = vec![rng.random_range(0.0..0.6)];
        let mut tp = 0.0;
        for _ in 0..2 {
            tp += rng.random_range(0.3..1.0);
            let arrival = g_values.last().unwrap()
                + g_slopes.last().unwrap() * (tp - g_starts.last().unwrap());
            g_starts.push(tp);
            g_values.push(arrival + rng.random_range(0.0..0.5));
            g_slopes.push(rng.random_range(0.0..0.6));
        }
        let g = SteppedPath::new(g_starts, g_values, g_slopes, 3.0).unwrap();

        let exact = solve_exact(&f, &g).unwrap();
        let euler = solve_euler(&mut f.clone(), &mut g.clone(), 2e-4, 2.0).unwrap();
        let gap = sup_distance(&euler, &exact, 2.0);
        assert!(gap < 0.02, "case {case}: sup gap {gap}");
    }
}

#[test]
fn immigration_comparison_with_gentle_generator() {
    // The gentle random pairs used by the stability suite also satisfy the
    // comparison property.
    use rand::Rng as _;
    let mut rng = stream(0xD00D, 0);
    for _ in 0..50 {
        let f = random_reproduction(&mut rng, 2.0);
        let g = random_immigration(&mut rng, 1.0);
        let delta = rng.random_range(0.05..0.3);
        let c_lo = solve_exact(&f, &g).unwrap();
        let c_hi = solve_exact(&f, &g.translate(delta)).unwrap();
        for i in 0..=100 {
            let t = i as f64 * 0.01;
            assert!(c_hi.eval(t) >= c_lo.eval(t) - 1e-12);
        }
    }
}
