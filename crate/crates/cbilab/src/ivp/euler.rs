//! The span-σ Euler scheme.
//!
//! On the grid `t_i = iσ` the scheme is the recursion
//!
//! ```text
//! c(0) = 0,
//! c(t) = c(t_{i-1}) + (t - t_{i-1}) · [f(c(t_{i-1})) + g(t_{i-1})]⁺
//! ```
//!
//! for `t ∈ [t_{i-1}, t_i)`. The reproduction driver is only ever evaluated
//! at the non-decreasing arguments `c(t_i)` and the immigration driver at
//! the grid times, so both can be lazily sampled random paths as well as
//! closed functions. The positive part keeps the profile non-negative; a
//! rate of exact zero freezes the state until the immigration term moves.

use crate::paths::{LazyLevySampler, SteppedPath};

use super::{CumulativePopulation, IvpError};

/// Anything the Euler scheme can read at non-decreasing arguments.
pub trait Driver {
    fn eval_at(&mut self, u: f64) -> Result<f64, IvpError>;
}

impl Driver for SteppedPath {
    fn eval_at(&mut self, u: f64) -> Result<f64, IvpError> {
        Ok(self.eval(u))
    }
}

impl Driver for &SteppedPath {
    fn eval_at(&mut self, u: f64) -> Result<f64, IvpError> {
        Ok(self.eval(u))
    }
}

impl Driver for LazyLevySampler {
    fn eval_at(&mut self, u: f64) -> Result<f64, IvpError> {
        self.query(u).map_err(IvpError::from)
    }
}

/// Plain functions as drivers.
pub struct FnDriver<F: FnMut(f64) -> f64>(pub F);

impl<F: FnMut(f64) -> f64> Driver for FnDriver<F> {
    fn eval_at(&mut self, u: f64) -> Result<f64, IvpError> {
        Ok((self.0)(u))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EulerConfig {
    pub span: f64,
    pub horizon: f64,
    /// A grid value crossing this ceiling marks the path as exploded and
    /// freezes it at `+∞` (the recursion cannot represent `∞` otherwise).
    pub ceiling: f64,
}

impl EulerConfig {
    pub fn new(span: f64, horizon: f64) -> Self {
        Self {
            span,
            horizon,
            ceiling: 1e12,
        }
    }
}

/// Output of the scheme: grid values of the cumulative population, the
/// per-step rates (which are the profile on each step), and the explosion
/// flag.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerSolution {
    span: f64,
    values: Vec<f64>,
    rates: Vec<f64>,
    explosion_step: Option<usize>,
}

impl EulerSolution {
    pub fn span(&self) -> f64 {
        self.span
    }

    /// `c^σ(iσ)` for `i = 0..=n`; `+∞` past the explosion step.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `rates[i] = [f(c(t_i)) + g(t_i)]⁺`, the profile on `[t_i, t_{i+1})`.
    /// One rate per grid point, including the final one.
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn grid_len(&self) -> usize {
        self.values.len()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.span
    }

    /// First grid index at which the ceiling was crossed, if any.
    pub fn explosion_step(&self) -> Option<usize> {
        self.explosion_step
    }

    /// Piecewise-linear evaluation between grid points.
    pub fn eval(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        let i = ((t / self.span).floor() as usize).min(self.values.len() - 1);
        if self.explosion_step.is_some_and(|e| i >= e) {
            return f64::INFINITY;
        }
        let ti = i as f64 * self.span;
        self.values[i] + (t - ti) * self.rates[i]
    }

    /// The profile `h^σ(t)` (right-continuous step function on the grid).
    pub fn profile(&self, t: f64) -> f64 {
        let i = ((t / self.span).floor() as usize).min(self.rates.len() - 1);
        self.rates[i]
    }
}

/// Run the scheme with default ceiling.
pub fn solve_euler<F: Driver, G: Driver>(
    f: &mut F,
    g: &mut G,
    span: f64,
    horizon: f64,
) -> Result<EulerSolution, IvpError> {
    solve_euler_with(f, g, EulerConfig::new(span, horizon))
}

/// Run the scheme: `n = ceil(horizon/span)` steps on the grid `t_i = iσ`.
pub fn solve_euler_with<F: Driver, G: Driver>(
    f: &mut F,
    g: &mut G,
    cfg: EulerConfig,
) -> Result<EulerSolution, IvpError> {
    if !(cfg.span > 0.0 && cfg.span.is_finite()) {
        return Err(IvpError::BadParameter("span must be positive".into()));
    }
    if !(cfg.horizon > 0.0 && cfg.horizon.is_finite()) {
        return Err(IvpError::BadParameter("horizon must be positive".into()));
    }
    let n = (cfg.horizon / cfg.span).ceil() as usize;
    let mut values = Vec::with_capacity(n + 1);
    let mut rates = Vec::with_capacity(n + 1);
    let mut explosion_step = None;
    values.push(0.0);
    for i in 0..=n {
        let c_i = values[i];
        if !(c_i < cfg.ceiling) {
            explosion_step = Some(i);
            values.truncate(i);
            rates.truncate(i);
            for _ in i..=n {
                values.push(f64::INFINITY);
                rates.push(f64::INFINITY);
            }
            break;
        }
        let fv = f.eval_at(c_i)?;
        let gv = g.eval_at(i as f64 * cfg.span)?;
        let rate = (fv + gv).max(0.0);
        rates.push(rate);
        if i < n {
            values.push(c_i + cfg.span * rate);
        }
    }
    Ok(EulerSolution {
        span: cfg.span,
        values,
        rates,
        explosion_step,
    })
}

/// Sup distance between an Euler solution and an exact cumulative
/// population over `[0, t_max]`, sampled on the union of the Euler grid and
/// the exact solution's piece starts.
pub fn sup_distance(euler: &EulerSolution, exact: &CumulativePopulation, t_max: f64) -> f64 {
    let mut d = 0.0f64;
    let mut check = |t: f64| {
        let a = euler.eval(t);
        let b = exact.eval(t);
        let gap = if a.is_infinite() && b.is_infinite() {
            0.0
        } else {
            (a - b).abs()
        };
        if gap > d {
            d = gap;
        }
    };
    let n = (t_max / euler.span()).floor() as usize;
    for i in 0..=n.min(euler.grid_len() - 1) {
        check(euler.time(i));
    }
    for t in exact.piece_starts() {
        if t <= t_max {
            check(t);
        }
    }
    check(t_max);
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ivp::solve_exact;

    #[test]
    fn constant_rate_is_exact() {
        let mut f = SteppedPath::constant(1.0, 10.0);
        let mut g = SteppedPath::constant(0.0, 10.0);
        for span in [0.5, 0.1, 0.037] {
            let sol = solve_euler(&mut f, &mut g, span, 3.0).unwrap();
            for i in 0..sol.grid_len() {
                assert!((sol.values()[i] - sol.time(i)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sqrt_kink_two_steps_by_hand() {
        // f(x) = √|1-x|, σ = 0.5: c(0.5) = 0.5, c(1) = 0.5 + 0.5·√0.5.
        let mut f = FnDriver(|x: f64| (1.0 - x).abs().sqrt());
        let mut g = SteppedPath::constant(0.0, 1.0);
        let sol = solve_euler(&mut f, &mut g, 0.5, 1.0).unwrap();
        assert_eq!(sol.values()[1], 0.5);
        let expect = 0.5 + 0.5 * 0.5f64.sqrt();
        assert!((sol.values()[2] - expect).abs() < 1e-15);
        // Recursion exactness: c_{i+1} = c_i + σ·r_i bit for bit.
        for i in 0..sol.grid_len() - 1 {
            assert_eq!(
                sol.values()[i + 1],
                sol.values()[i] + sol.span() * sol.rates()[i]
            );
        }
    }

    #[test]
    fn order_one_convergence_against_exact() {
        let f = SteppedPath::sample_function(|x| (1.0 - x).abs().sqrt(), 1.2, 1e-4).unwrap();
        let g = SteppedPath::constant(0.0, 3.0);
        let exact = solve_exact(&f, &g).unwrap();
        let err = |span: f64| {
            let sol = solve_euler(&mut f.clone(), &mut g.clone(), span, 3.0).unwrap();
            sup_distance(&sol, &exact, 3.0)
        };
        let e1 = err(1e-2);
        let e2 = err(5e-3);
        let ratio = e1 / e2;
        assert!(
            (1.6..=2.4).contains(&ratio),
            "expected halving (±20%), got e1={e1} e2={e2} ratio={ratio}"
        );
    }

    #[test]
    fn ceiling_sets_explosion_flag() {
        // f(x) = x + 1 grows exponentially; a low ceiling trips the flag.
        let mut f = FnDriver(|x: f64| x + 1.0);
        let mut g = SteppedPath::constant(0.0, 40.0);
        let mut cfg = EulerConfig::new(0.1, 40.0);
        cfg.ceiling = 1e6;
        let sol = solve_euler_with(&mut f, &mut g, cfg).unwrap();
        let step = sol.explosion_step().expect("should explode");
        assert!(sol.values()[step].is_infinite());
        assert!(sol.eval(40.0).is_infinite());
        assert!(sol.values()[step - 1] < 1e6);
    }

    #[test]
    fn stalled_rate_freezes_state() {
        // f(0) = 0, g = 0: the positive part pins the rate at exact zero.
        let mut f = FnDriver(|x: f64| -x - 0.0);
        let mut g = SteppedPath::constant(0.0, 1.0);
        let sol = solve_euler(&mut f, &mut g, 0.25, 1.0).unwrap();
        assert!(sol.values().iter().all(|&v| v == 0.0));
        assert!(sol.rates().iter().all(|&r| r == 0.0));
    }
}
