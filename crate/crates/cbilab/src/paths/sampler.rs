//! Exact-in-law samplers for the mechanism families.
//!
//! [`LazyLevySampler`] is the workhorse: a stateful generator that returns
//! the driver's value at any non-decreasing sequence of query times, drawing
//! each increment from the exact increment law of the mechanism (Gaussian
//! for the diffusion part, Chambers–Mallows–Stuck for stable parts, Gamma
//! for gamma subordination, compound Poisson for finite activity; the parts
//! are independent and summed). Nothing is discretized: the scheme in
//! [`crate::montecarlo`] reads the reproduction driver only at the points it
//! needs, so the only approximation error left is the Euler span.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, Normal, Poisson};

use crate::mechanisms::{
    BranchingJumps, BranchingMechanism, ImmigrationJumps, ImmigrationMechanism, JumpLaw,
};
use crate::rng::stream;

use super::stable::{standard_one_sided_stable, standard_spectrally_positive_stable};
use super::{PathError, SteppedPath};

impl JumpLaw {
    /// Draw one jump.
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            JumpLaw::Dirac { size } => size,
            JumpLaw::Exponential { rate } => Exp::new(rate).unwrap().sample(rng),
            JumpLaw::Gamma { shape, rate } => Gamma::new(shape, 1.0 / rate).unwrap().sample(rng),
        }
    }
}

/// Decomposed increment law of a driver over a duration `dt`.
#[derive(Debug, Clone, Copy)]
struct IncrementParts {
    /// Deterministic drift of the sample path per unit time.
    path_drift: f64,
    /// Gaussian variance per unit time.
    gauss_var: f64,
    /// `Some((alpha, scale, spectrally_positive))` stable part: the
    /// increment over `dt` is `(scale·dt)^{1/α}` times a standard variate.
    stable: Option<(f64, f64, bool)>,
    /// Gamma subordinator `(shape_per_time, rate)`.
    gamma: Option<(f64, f64)>,
    /// Compound Poisson `(rate, law)`.
    cp: Option<(f64, JumpLaw)>,
    /// Killing rate.
    killing: f64,
}

impl IncrementParts {
    fn from_branching(m: &BranchingMechanism) -> Self {
        let (stable, cp) = match *m.jumps() {
            BranchingJumps::None => (None, None),
            BranchingJumps::Stable { alpha, scale } => (Some((alpha, scale, true)), None),
            BranchingJumps::ShiftedStable { alpha, scale } => (Some((alpha, scale, false)), None),
            BranchingJumps::CompoundPoisson { rate, law } => (None, Some((rate, law))),
        };
        Self {
            // Ψ(λ) = … + aλ ⇒ the path drifts at -a.
            path_drift: -m.drift(),
            gauss_var: m.diffusion(),
            stable,
            gamma: None,
            cp,
            killing: m.killing_rate(),
        }
    }

    fn from_immigration(m: &ImmigrationMechanism) -> Self {
        let (stable, gamma, cp) = match *m.jumps() {
            ImmigrationJumps::None => (None, None, None),
            ImmigrationJumps::Stable { alpha, scale } => (Some((alpha, scale, false)), None, None),
            ImmigrationJumps::Gamma { shape, rate } => (None, Some((shape, rate)), None),
            ImmigrationJumps::CompoundPoisson { rate, law } => (None, None, Some((rate, law))),
        };
        Self {
            path_drift: m.drift(),
            gauss_var: 0.0,
            stable,
            gamma,
            cp,
            killing: m.killing_rate(),
        }
    }

    fn sample_increment(&self, dt: f64, rng: &mut impl Rng) -> f64 {
        debug_assert!(dt > 0.0);
        let mut inc = self.path_drift * dt;
        if self.gauss_var > 0.0 {
            inc += Normal::new(0.0, (self.gauss_var * dt).sqrt())
                .unwrap()
                .sample(rng);
        }
        if let Some((alpha, scale, spectrally_positive)) = self.stable {
            let unit = if alpha == 2.0 {
                // Ψ-part c·λ² is a Gaussian with variance 2c·dt.
                return inc
                    + Normal::new(0.0, (2.0 * scale * dt).sqrt())
                        .unwrap()
                        .sample(rng);
            } else if spectrally_positive {
                standard_spectrally_positive_stable(alpha, rng)
            } else {
                standard_one_sided_stable(alpha, rng)
            };
            inc += (scale * dt).powf(1.0 / alpha) * unit;
        }
        if let Some((shape, rate)) = self.gamma {
            inc += Gamma::new(shape * dt, 1.0 / rate).unwrap().sample(rng);
        }
        if let Some((rate, law)) = self.cp {
            if rate > 0.0 {
                let n = Poisson::new(rate * dt).unwrap().sample(rng) as u64;
                for _ in 0..n {
                    inc += law.sample(rng);
                }
            }
        }
        inc
    }
}

/// Stateful on-demand sampler of a Lévy driver at non-decreasing times.
///
/// Reproducibility contract: an identical `(mechanism, rng state, query
/// sequence)` produces a bit-identical value sequence. Repeated queries at
/// the same time consume no randomness.
#[derive(Debug, Clone)]
pub struct LazyLevySampler {
    parts: IncrementParts,
    rng: ChaCha8Rng,
    last_time: f64,
    last_value: f64,
    kill_time: f64,
}

impl LazyLevySampler {
    pub fn branching(mech: &BranchingMechanism, rng: ChaCha8Rng) -> Self {
        Self::from_parts(IncrementParts::from_branching(mech), rng)
    }

    pub fn immigration(mech: &ImmigrationMechanism, rng: ChaCha8Rng) -> Self {
        Self::from_parts(IncrementParts::from_immigration(mech), rng)
    }

    pub fn branching_with_seed(
        mech: &BranchingMechanism,
        master_seed: u64,
        stream_id: u64,
    ) -> Self {
        Self::branching(mech, stream(master_seed, stream_id))
    }

    pub fn immigration_with_seed(
        mech: &ImmigrationMechanism,
        master_seed: u64,
        stream_id: u64,
    ) -> Self {
        Self::immigration(mech, stream(master_seed, stream_id))
    }

    fn from_parts(parts: IncrementParts, mut rng: ChaCha8Rng) -> Self {
        // One Exp(κ) absorption time per path, drawn up front.
        let kill_time = if parts.killing > 0.0 {
            Exp::new(parts.killing).unwrap().sample(&mut rng)
        } else {
            f64::INFINITY
        };
        Self {
            parts,
            rng,
            last_time: 0.0,
            last_value: 0.0,
            kill_time,
        }
    }

    pub fn last_query_time(&self) -> f64 {
        self.last_time
    }

    pub fn last_value(&self) -> f64 {
        self.last_value
    }

    /// Value of the driver at `t ≥ last_query_time`; `+∞` once the
    /// absorption clock has run out.
    pub fn query(&mut self, t: f64) -> Result<f64, PathError> {
        if !(t >= self.last_time) {
            return Err(PathError::NonMonotoneQuery {
                last: self.last_time,
                requested: t,
            });
        }
        if t >= self.kill_time {
            self.last_time = t;
            self.last_value = f64::INFINITY;
            return Ok(f64::INFINITY);
        }
        if t > self.last_time && self.last_value.is_finite() {
            let inc = self
                .parts
                .sample_increment(t - self.last_time, &mut self.rng);
            self.last_value += inc;
        }
        self.last_time = t;
        Ok(self.last_value)
    }

    /// Consume the sampler, returning a right-continuous step path through
    /// the exact values at the grid points. Interiors are interpolation, not
    /// law: only the grid values carry the exact joint law.
    pub fn step_path_on_grid(mut self, grid: &[f64]) -> Result<SteppedPath, PathError> {
        if grid.first() != Some(&0.0) {
            return Err(PathError::Invalid("grid must start at 0".into()));
        }
        let mut values = Vec::with_capacity(grid.len());
        let mut absorbed_at = None;
        for &t in grid {
            let v = self.query(t)?;
            if v.is_infinite() {
                absorbed_at = Some(self.kill_time);
                break;
            }
            values.push(v);
        }
        let path = if let Some(tau) = absorbed_at {
            let times: Vec<f64> = grid[..values.len()].to_vec();
            SteppedPath::step_function(times, values)?.with_absorption(tau)
        } else {
            SteppedPath::step_function(grid.to_vec(), values)?
        };
        Ok(path)
    }
}

/// Exact stepped sample of a compound-Poisson-with-drift (plus optional
/// killing) spectrally positive Lévy path: drift `-a·t`, `Poisson(ρ·horizon)`
/// upward jumps at uniform times, absorption at an independent `Exp(κ)` time.
///
/// Mechanisms with a diffusion or stable part have no finite stepped
/// representation and are rejected.
pub fn sample_stepped_splp(
    mech: &BranchingMechanism,
    horizon: f64,
    rng: &mut ChaCha8Rng,
) -> Result<SteppedPath, PathError> {
    if horizon <= 0.0 || !horizon.is_finite() {
        return Err(PathError::Invalid("horizon must be positive".into()));
    }
    if mech.diffusion() != 0.0 {
        return Err(PathError::UnsupportedFamily);
    }
    let (rate, law) = match *mech.jumps() {
        BranchingJumps::None => (0.0, JumpLaw::Dirac { size: 1.0 }),
        BranchingJumps::CompoundPoisson { rate, law } => (rate, law),
        _ => return Err(PathError::UnsupportedFamily),
    };

    let kill_time = if mech.killing_rate() > 0.0 {
        Exp::new(mech.killing_rate()).unwrap().sample(rng)
    } else {
        f64::INFINITY
    };

    let slope = -mech.drift();
    let n_jumps = if rate > 0.0 {
        Poisson::new(rate * horizon).unwrap().sample(rng) as usize
    } else {
        0
    };
    let mut jump_times: Vec<f64> = (0..n_jumps)
        .map(|_| rng.random::<f64>() * horizon)
        .collect();
    jump_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    jump_times.dedup();

    let mut starts = Vec::with_capacity(jump_times.len() + 1);
    let mut values = Vec::with_capacity(jump_times.len() + 1);
    let mut slopes = Vec::with_capacity(jump_times.len() + 1);
    starts.push(0.0);
    values.push(0.0);
    slopes.push(slope);
    for &t in &jump_times {
        if t <= 0.0 || t >= horizon {
            continue;
        }
        let pre = values.last().unwrap() + slope * (t - starts.last().unwrap());
        starts.push(t);
        values.push(pre + law.sample(rng));
        slopes.push(slope);
    }
    let path = SteppedPath::new(starts, values, slopes, horizon)?;
    Ok(if kill_time < horizon {
        path.with_absorption(kill_time)
    } else {
        path
    })
}

/// Sample a subordinator at the given grid times (exact joint law at the
/// grid) and return the right-continuous step path through the values.
pub fn sample_subordinator_grid(
    mech: &ImmigrationMechanism,
    grid: &[f64],
    rng: ChaCha8Rng,
) -> Result<SteppedPath, PathError> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(PathError::Invalid(
            "grid must be strictly increasing".into(),
        ));
    }
    LazyLevySampler::immigration(mech, rng).step_path_on_grid(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::BranchingJumps;
    use crate::rng::stream;

    fn cp_mech(rate: f64, drift: f64, killing: f64) -> BranchingMechanism {
        BranchingMechanism::new(
            killing,
            drift,
            0.0,
            BranchingJumps::CompoundPoisson {
                rate,
                law: JumpLaw::Dirac { size: 1.0 },
            },
        )
        .unwrap()
    }

    #[test]
    fn stepped_splp_pure_drift() {
        let mech = BranchingMechanism::new(0.0, -1.0, 0.0, BranchingJumps::None).unwrap();
        let p = sample_stepped_splp(&mech, 2.0, &mut stream(1, 0)).unwrap();
        for t in [0.0, 0.5, 1.7, 2.0] {
            assert_eq!(p.eval(t), t);
        }
        assert_eq!(p.breakpoints().len(), 1);
    }

    #[test]
    fn stepped_splp_rejects_diffusion() {
        let mech = BranchingMechanism::brownian(1.0);
        assert!(matches!(
            sample_stepped_splp(&mech, 1.0, &mut stream(1, 0)),
            Err(PathError::UnsupportedFamily)
        ));
    }

    #[test]
    fn stepped_splp_jump_count_law() {
        // Mean jump count over 10^4 draws within 3·stderr of ρ·horizon.
        let (rate, horizon, n) = (2.0, 1.5, 10_000);
        let mech = cp_mech(rate, 0.0, 0.0);
        let mut rng = stream(42, 0);
        let mut counts = Vec::with_capacity(n);
        for _ in 0..n {
            let p = sample_stepped_splp(&mech, horizon, &mut rng).unwrap();
            counts.push((p.breakpoints().len() - 1) as f64);
            assert!(p.has_no_negative_jumps());
        }
        let mean = counts.iter().sum::<f64>() / n as f64;
        let var = counts.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        assert!(
            (mean - rate * horizon).abs() <= 3.0 * se,
            "mean={mean}, expect {}",
            rate * horizon
        );
    }

    #[test]
    fn stepped_splp_killing_absorbs() {
        // κ = 10³ over unit horizon: absorption frequency ≈ 1 - e^{-1000}.
        let mech = cp_mech(1.0, 0.0, 1000.0);
        let mut rng = stream(7, 0);
        let n = 10_000;
        let absorbed = (0..n)
            .filter(|_| {
                sample_stepped_splp(&mech, 1.0, &mut rng)
                    .unwrap()
                    .absorbed_at()
                    .is_some()
            })
            .count();
        assert!(absorbed as f64 / n as f64 >= 0.999);
    }

    #[test]
    fn lazy_query_zero_duration_and_drift() {
        let phi = ImmigrationMechanism::pure_drift(3.0).unwrap();
        let mut s = LazyLevySampler::immigration(&phi, stream(1, 0));
        assert_eq!(s.query(0.0).unwrap(), 0.0);
        let v = s.query(0.5).unwrap();
        assert_eq!(v, 1.5);
        // Zero-duration query repeats the value exactly.
        assert_eq!(s.query(0.5).unwrap(), v);
        assert!(s.query(0.4).is_err());
    }

    #[test]
    fn lazy_query_diffusion_variance() {
        // σ² = 4: sample variance of unit-time increments ≈ 4.
        let psi = BranchingMechanism::brownian(4.0);
        let mut s = LazyLevySampler::branching(&psi, stream(5, 0));
        let n = 100_000;
        let mut prev = 0.0;
        let mut incs = Vec::with_capacity(n);
        for i in 1..=n {
            let v = s.query(i as f64).unwrap();
            incs.push(v - prev);
            prev = v;
        }
        let mean = incs.iter().sum::<f64>() / n as f64;
        let var = incs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
        // stderr of the sample variance of a Gaussian is σ²√(2/n).
        let se = 4.0 * (2.0 / n as f64).sqrt();
        assert!((var - 4.0).abs() <= 3.0 * se, "var={var}");
    }

    #[test]
    fn lazy_query_is_reproducible() {
        let psi = BranchingMechanism::stable_normalized(1.5).unwrap();
        let times = [0.0, 0.3, 0.3, 1.0, 2.5];
        let run = || {
            let mut s = LazyLevySampler::branching(&psi, stream(9, 4));
            times
                .iter()
                .map(|&t| s.query(t).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn subordinator_grid_zero_and_drift() {
        let zero = ImmigrationMechanism::zero();
        let p = sample_subordinator_grid(&zero, &[0.0, 1.0, 2.0], stream(1, 0)).unwrap();
        assert_eq!(p.eval(1.7), 0.0);

        let drift = ImmigrationMechanism::pure_drift(2.0).unwrap();
        let p = sample_subordinator_grid(&drift, &[0.0, 1.0, 2.0], stream(1, 0)).unwrap();
        assert_eq!(p.eval(0.0), 0.0);
        assert_eq!(p.eval(1.0), 2.0);
        assert_eq!(p.eval(2.0), 4.0);
        // Step interpolation between grid points.
        assert_eq!(p.eval(1.5), 2.0);
    }

    #[test]
    fn subordinator_mean_matches_exponent_derivative() {
        // E[Y_1] = Φ'(0+), estimated over 10^4 draws of a gamma subordinator.
        let phi = ImmigrationMechanism::gamma(1.0, 1.0).unwrap();
        let n = 10_000;
        let mut rng = stream(11, 0);
        let mut vals = Vec::with_capacity(n);
        for _ in 0..n {
            let mut s = LazyLevySampler::immigration(&phi, {
                use rand::SeedableRng;
                ChaCha8Rng::from_rng(&mut rng)
            });
            vals.push(s.query(1.0).unwrap());
        }
        let mean = vals.iter().sum::<f64>() / n as f64;
        let var = vals.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        let fd = phi.mean_rate_fd();
        assert!((mean - fd).abs() <= 3.0 * se, "mean={mean}, fd={fd}");
    }

    #[test]
    fn increments_are_exchangeable_ks() {
        // KS between the first and second halves of an increment sequence at
        // significance 1e-3.
        let psi = BranchingMechanism::new(
            0.0,
            -0.5,
            1.0,
            BranchingJumps::CompoundPoisson {
                rate: 1.0,
                law: JumpLaw::Exponential { rate: 2.0 },
            },
        )
        .unwrap();
        let mut s = LazyLevySampler::branching(&psi, stream(13, 0));
        let n = 4000;
        let mut incs = Vec::with_capacity(n);
        let mut prev = 0.0;
        for i in 1..=n {
            let v = s.query(0.25 * i as f64).unwrap();
            incs.push(v - prev);
            prev = v;
        }
        let (a, b) = incs.split_at(n / 2);
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let d = ks_statistic(&a, &b);
        // c(1e-3) · sqrt((m+n)/(m·n))
        let c = (-0.5 * (0.5e-3f64).ln()).sqrt();
        let crit = c * ((a.len() + b.len()) as f64 / (a.len() * b.len()) as f64).sqrt();
        assert!(d < crit, "KS {d} >= {crit}");
    }

    fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
        let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
        while i < a.len() && j < b.len() {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            let fa = i as f64 / a.len() as f64;
            let fb = j as f64 / b.len() as f64;
            d = d.max((fa - fb).abs());
        }
        d
    }
}
