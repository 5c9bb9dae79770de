//! Seeded, reproducible Monte-Carlo experiments.
//!
//! The path sampler runs the span-σ scheme of [`crate::ivp`] on lazily
//! sampled drivers: the reproduction driver `X` is queried exactly at the
//! non-decreasing arguments `c^σ(t_i)` the recursion produces, and the
//! immigration driver at the grid times, so no path discretization enters —
//! the Euler span is the only approximation. Experiments parallelize over
//! replications; each replication owns streams derived from
//! `(master_seed, rep, role)` and results are reduced in replication order,
//! so a report is a bit-exact function of `(config, master_seed)` whatever
//! the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discrete::{conditioned_gw, DiscreteError, DiscreteLaw};
use crate::ivp::{solve_euler_with, Driver, EulerConfig, IvpError};
use crate::mechanisms::{BranchingMechanism, ImmigrationMechanism};
use crate::paths::LazyLevySampler;
use crate::rng::{replication_stream, StreamRole};
use crate::semigroup::{cbi_laplace, solve_v, SemigroupError, LAMBDA_BIG};

#[derive(Debug, Error)]
pub enum McError {
    #[error(transparent)]
    Ivp(#[from] IvpError),
    #[error(transparent)]
    Semigroup(#[from] SemigroupError),
    #[error(transparent)]
    Discrete(#[from] DiscreteError),
    #[error("invalid experiment parameter: {0}")]
    BadParameter(String),
}

/// One simulated CBI path on the Euler grid.
#[derive(Debug, Clone)]
pub struct CbiPath {
    /// Grid times `iσ`.
    pub times: Vec<f64>,
    /// Profile values `Z_{t_i}`; `+∞` from the explosion flag on.
    pub values: Vec<f64>,
    /// Time at which the ceiling was crossed, if any.
    pub exploded_at: Option<f64>,
}

impl CbiPath {
    /// Value at a grid-aligned time.
    pub fn at(&self, t: f64) -> f64 {
        let span = self.times.get(1).copied().unwrap_or(1.0);
        let i = ((t / span).round() as usize).min(self.values.len() - 1);
        self.values[i]
    }
}

struct ShiftedSampler {
    inner: LazyLevySampler,
    shift: f64,
}

impl Driver for ShiftedSampler {
    fn eval_at(&mut self, u: f64) -> Result<f64, IvpError> {
        Ok(self.inner.query(u).map_err(IvpError::from)? + self.shift)
    }
}

/// Simulate one CBI(Ψ, Φ) path from `x` on the grid `iσ` up to `horizon`.
pub fn simulate_cbi_path(
    psi: &BranchingMechanism,
    phi: &ImmigrationMechanism,
    x: f64,
    horizon: f64,
    sigma: f64,
    seed: u64,
) -> Result<CbiPath, McError> {
    simulate_cbi_path_rep(psi, phi, x, horizon, sigma, seed, 0)
}

/// Replication `rep` of the same experiment (disjoint streams
/// `(master_seed, rep, X/Y)`).
pub fn simulate_cbi_path_rep(
    psi: &BranchingMechanism,
    phi: &ImmigrationMechanism,
    x: f64,
    horizon: f64,
    sigma: f64,
    master_seed: u64,
    rep: u64,
) -> Result<CbiPath, McError> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(McError::BadParameter("x must be >= 0".into()));
    }
    let mut f = LazyLevySampler::branching(
        psi,
        replication_stream(master_seed, rep, StreamRole::Reproduction),
    );
    let mut g = ShiftedSampler {
        inner: LazyLevySampler::immigration(
            phi,
            replication_stream(master_seed, rep, StreamRole::Immigration),
        ),
        shift: x,
    };
    let sol = solve_euler_with(&mut f, &mut g, EulerConfig::new(sigma, horizon))?;
    let times = (0..sol.grid_len()).map(|i| sol.time(i)).collect();
    Ok(CbiPath {
        times,
        values: sol.rates().to_vec(),
        exploded_at: sol.explosion_step().map(|i| i as f64 * sigma),
    })
}

/// `e^{-λz}` with exploded paths contributing the `λ → 0+` limit value 0,
/// matching the mass-deficit convention of the transform oracle.
fn laplace_term(z: f64, lambda: f64) -> f64 {
    if z.is_finite() {
        (-lambda * z).exp()
    } else {
        0.0
    }
}

/// Monte-Carlo estimate with tolerance bookkeeping. Serializes to the
/// stable report schema consumed by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub experiment: String,
    pub estimate: f64,
    pub stderr: f64,
    pub oracle: f64,
    pub difference: f64,
    /// `3·stderr`.
    pub stat_tolerance: f64,
    /// `K·σ` (linear-in-span discretization allowance).
    pub disc_tolerance: f64,
    pub pass: bool,
    pub n_replications: usize,
    pub master_seed: u64,
    pub metadata: McMetadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McMetadata {
    pub psi: serde_json::Value,
    pub phi: serde_json::Value,
    pub x: f64,
    pub t: f64,
    pub lambda: f64,
    pub sigma: f64,
}

/// Discretization-allowance coefficient `K` in `ε_disc = K·σ`.
pub const DEFAULT_DISC_COEFF: f64 = 1.0;

fn mc_mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Compare the Monte-Carlo mean of `e^{-λZ_t}` over `n` paths against the
/// semigroup oracle; pass iff `|difference| ≤ 3·stderr + K·σ`.
#[allow(clippy::too_many_arguments)]
pub fn verify_laplace(
    psi: &BranchingMechanism,
    phi: &ImmigrationMechanism,
    x: f64,
    t: f64,
    lambda: f64,
    n: usize,
    sigma: f64,
    master_seed: u64,
) -> Result<McReport, McError> {
    if n < 100 {
        return Err(McError::BadParameter(
            "need at least 100 replications".into(),
        ));
    }
    let oracle = cbi_laplace(psi, phi, x, t, lambda)?.value;
    let per_rep: Vec<f64> = (0..n as u64)
        .into_par_iter()
        .map(|rep| {
            let path = simulate_cbi_path_rep(psi, phi, x, t, sigma, master_seed, rep)?;
            Ok(laplace_term(path.at(t), lambda))
        })
        .collect::<Result<Vec<f64>, McError>>()?;
    let (estimate, stderr) = mc_mean_stderr(&per_rep);
    let difference = estimate - oracle;
    let stat_tolerance = 3.0 * stderr;
    let disc_tolerance = DEFAULT_DISC_COEFF * sigma;
    Ok(McReport {
        experiment: "verify-laplace".into(),
        estimate,
        stderr,
        oracle,
        difference,
        stat_tolerance,
        disc_tolerance,
        pass: difference.abs() <= stat_tolerance + disc_tolerance,
        n_replications: n,
        master_seed,
        metadata: McMetadata {
            psi: psi.to_spec(),
            phi: phi.to_spec(),
            x,
            t,
            lambda,
            sigma,
        },
    })
}

/// Compare the fraction of paths absorbed at zero by time `t` against the
/// `λ → ∞` limit of the transform, `exp(-x·u_t(∞) - v_t(∞))`.
pub fn verify_extinction(
    psi: &BranchingMechanism,
    phi: &ImmigrationMechanism,
    x: f64,
    t: f64,
    n: usize,
    sigma: f64,
    master_seed: u64,
) -> Result<McReport, McError> {
    if n < 100 {
        return Err(McError::BadParameter(
            "need at least 100 replications".into(),
        ));
    }
    let sol = solve_v(psi, phi, LAMBDA_BIG, t, 1e-3)?;
    let oracle = (-x * sol.u_final() - sol.v_final()).exp();
    let per_rep: Vec<f64> = (0..n as u64)
        .into_par_iter()
        .map(|rep| {
            let path = simulate_cbi_path_rep(psi, phi, x, t, sigma, master_seed, rep)?;
            Ok(if path.at(t) == 0.0 { 1.0 } else { 0.0 })
        })
        .collect::<Result<Vec<f64>, McError>>()?;
    let (estimate, stderr) = mc_mean_stderr(&per_rep);
    let difference = estimate - oracle;
    Ok(McReport {
        experiment: "verify-extinction".into(),
        estimate,
        stderr,
        oracle,
        difference,
        stat_tolerance: 3.0 * stderr,
        disc_tolerance: DEFAULT_DISC_COEFF * sigma,
        pass: difference.abs() <= 3.0 * stderr + DEFAULT_DISC_COEFF * sigma,
        n_replications: n,
        master_seed,
        metadata: McMetadata {
            psi: psi.to_spec(),
            phi: phi.to_spec(),
            x,
            t,
            lambda: f64::INFINITY,
            sigma,
        },
    })
}

// ---------------------------------------------------------------------------
// Scaling-limit experiments
// ---------------------------------------------------------------------------

/// One row of a scaling schedule: the derived constants at index `n`
/// (supplied per the limit theorem's hypotheses).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingPoint {
    pub n: u64,
    /// Initial population `k_n`.
    pub k_n: u64,
    /// Time factor `e_n`: the scaled process reads generation `⌊e_n·t⌋`.
    pub e_n: f64,
}

#[derive(Debug, Clone)]
pub struct GwiScalingConfig {
    pub offspring: DiscreteLaw,
    pub immigration: DiscreteLaw,
    pub points: Vec<ScalingPoint>,
    /// Target mechanisms, already including the limit constant (`cΨ`).
    pub target_psi: BranchingMechanism,
    pub target_phi: ImmigrationMechanism,
    pub x: f64,
    pub t: f64,
    pub lambda: f64,
    pub replications: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingGap {
    pub n: u64,
    pub empirical: f64,
    pub stderr: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GwiScalingReport {
    pub experiment: String,
    pub oracle: f64,
    pub gaps: Vec<ScalingGap>,
    /// Gap at the largest `n` sits strictly below the gap at the smallest.
    pub trend_ok: bool,
    pub master_seed: u64,
}

/// Simulate the rescaled Galton-Watson-with-immigration value
/// `x·Z_{⌊e_n t⌋}/k_n` at each schedule point and compare its empirical
/// Laplace value at `λ` to the target transform. Generation sums are drawn
/// with the collapsed exact-in-law samplers, so large `n` stay tractable.
pub fn gwi_scaling_experiment(
    cfg: &GwiScalingConfig,
    master_seed: u64,
) -> Result<GwiScalingReport, McError> {
    if cfg.points.is_empty() {
        return Err(McError::BadParameter("empty scaling schedule".into()));
    }
    let oracle = cbi_laplace(&cfg.target_psi, &cfg.target_phi, cfg.x, cfg.t, cfg.lambda)?.value;
    let mut gaps = Vec::with_capacity(cfg.points.len());
    for (pi, point) in cfg.points.iter().enumerate() {
        let generations = (point.e_n * cfg.t).floor() as u64;
        let per_rep: Vec<f64> = (0..cfg.replications as u64)
            .into_par_iter()
            .map(|rep| {
                let mut rng =
                    replication_stream(master_seed, ((pi as u64) << 32) | rep, StreamRole::Aux);
                let mut z = point.k_n;
                for _ in 0..generations {
                    z = cfg.offspring.sample_sum(z, &mut rng) + cfg.immigration.sample(&mut rng);
                }
                let scaled = cfg.x * z as f64 / point.k_n as f64;
                (-cfg.lambda * scaled).exp()
            })
            .collect();
        let (empirical, stderr) = mc_mean_stderr(&per_rep);
        gaps.push(ScalingGap {
            n: point.n,
            empirical,
            stderr,
            gap: (empirical - oracle).abs(),
        });
    }
    let trend_ok = gaps.last().unwrap().gap < gaps.first().unwrap().gap;
    Ok(GwiScalingReport {
        experiment: "gwi-limit".into(),
        oracle,
        gaps,
        trend_ok,
        master_seed,
    })
}

// ---------------------------------------------------------------------------
// Conditioned trees at criticality
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PitmanPoint {
    pub n: u64,
    /// Fluctuation normalization `a_n` of the centred walk.
    pub a_n: f64,
}

#[derive(Debug, Clone)]
pub struct PitmanConfig {
    /// Critical offspring law (mean 1).
    pub offspring: DiscreteLaw,
    /// Scaled initial level; `k_n = round(l·a_n)`.
    pub l: f64,
    pub points: Vec<PitmanPoint>,
    /// Scaled times at which the profile is recorded.
    pub probe_times: Vec<f64>,
    pub replications: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PitmanSummary {
    pub n: u64,
    pub k_n: u64,
    pub scaled_max_mean: f64,
    pub scaled_max_std: f64,
    /// `(a_n/n)·Σ grid mass` equals 1 exactly on every sample.
    pub total_mass_exact: bool,
    /// `profiles[probe][rep]`: scaled profile samples at each probe time.
    pub profiles: Vec<Vec<f64>>,
}

/// Sample the rescaled conditioned Galton-Watson profile
/// `Ẑ(t) = Z_{⌊(n/a_n)·t⌋}/a_n` (total progeny `n`, start
/// `k_n = round(l·a_n)`) and summarize it across the schedule, for
/// qualitative convergence inspection across `n`. No limit-law oracle is
/// claimed.
pub fn pitman_experiment(
    cfg: &PitmanConfig,
    master_seed: u64,
) -> Result<Vec<PitmanSummary>, McError> {
    let mut out = Vec::with_capacity(cfg.points.len());
    for (pi, point) in cfg.points.iter().enumerate() {
        let k_n = (cfg.l * point.a_n).round().max(1.0) as u64;
        let reps: Vec<(f64, bool, Vec<f64>)> = (0..cfg.replications as u64)
            .into_par_iter()
            .map(|rep| {
                let mut rng =
                    replication_stream(master_seed, ((pi as u64) << 32) | rep, StreamRole::Aux);
                let sample = conditioned_gw(&cfg.offspring, k_n, point.n, &mut rng)?;
                let z = &sample.generation_sizes;
                let total: u64 = z.iter().sum();
                let scaled_max = z.iter().copied().max().unwrap_or(0) as f64 / point.a_n;
                let time_scale = point.n as f64 / point.a_n;
                let profile: Vec<f64> = cfg
                    .probe_times
                    .iter()
                    .map(|&t| {
                        let m = (time_scale * t).floor() as usize;
                        z.get(m).copied().unwrap_or(0) as f64 / point.a_n
                    })
                    .collect();
                Ok((scaled_max, total == point.n, profile))
            })
            .collect::<Result<_, McError>>()?;
        let maxes: Vec<f64> = reps.iter().map(|r| r.0).collect();
        let (mean, se) = mc_mean_stderr(&maxes);
        let std = se * (maxes.len() as f64).sqrt();
        let mut profiles = vec![Vec::with_capacity(reps.len()); cfg.probe_times.len()];
        for r in &reps {
            for (j, &v) in r.2.iter().enumerate() {
                profiles[j].push(v);
            }
        }
        out.push(PitmanSummary {
            n: point.n,
            k_n,
            scaled_max_mean: mean,
            scaled_max_std: std,
            total_mass_exact: reps.iter().all(|r| r.1),
            profiles,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ivp::solve_euler;
    use crate::paths::SteppedPath;
    use crate::rng::stream;

    #[test]
    fn degenerate_paths() {
        // Ψ = 0, Φ = 0: Z ≡ x.
        let path = simulate_cbi_path(
            &BranchingMechanism::zero(),
            &ImmigrationMechanism::zero(),
            2.0,
            1.0,
            0.01,
            7,
        )
        .unwrap();
        assert!(path.values.iter().all(|&z| z == 2.0));

        // Ψ = 0, Φ = dλ, x = 0: Z_t = d·t exactly at grid times.
        let path = simulate_cbi_path(
            &BranchingMechanism::zero(),
            &ImmigrationMechanism::pure_drift(3.0).unwrap(),
            0.0,
            1.0,
            0.25,
            7,
        )
        .unwrap();
        for (i, &z) in path.values.iter().enumerate() {
            assert!((z - 3.0 * path.times[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn besq_mean_matches_first_moment() {
        // BESQ(2) from x = 1: E[Z_1] = x + d·t = 3.
        let psi = BranchingMechanism::besq();
        let phi = ImmigrationMechanism::besq();
        let n = 10_000u64;
        let vals: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|rep| {
                simulate_cbi_path_rep(&psi, &phi, 1.0, 1.0, 1e-2, 42, rep)
                    .unwrap()
                    .at(1.0)
            })
            .collect();
        let (mean, se) = mc_mean_stderr(&vals);
        assert!(
            (mean - 3.0).abs() <= 3.0 * se + 0.05,
            "mean={mean}, se={se}"
        );
    }

    #[test]
    fn laplace_at_zero_lambda_is_exact() {
        let rep = verify_laplace(
            &BranchingMechanism::besq(),
            &ImmigrationMechanism::besq(),
            1.0,
            0.5,
            0.0,
            200,
            1e-2,
            3,
        )
        .unwrap();
        assert_eq!(rep.estimate, 1.0);
        assert!((rep.oracle - 1.0).abs() < 1e-12);
        assert!(rep.pass);
    }

    #[test]
    fn report_is_bit_reproducible_across_pools() {
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                verify_laplace(
                    &BranchingMechanism::besq(),
                    &ImmigrationMechanism::besq(),
                    1.0,
                    0.5,
                    1.0,
                    400,
                    1e-2,
                    11,
                )
                .unwrap()
            })
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn monotone_in_x_on_pinned_drivers() {
        // Test fixture: X pinned to a fixed fine value grid so both runs
        // share the same reproduction landscape. The cumulative population
        // is then monotone in x pointwise (the comparison-lemma coupling;
        // seeded sanity check). The profile has no such pathwise ordering
        // under this coupling — the run that is ahead can sit in a dip of
        // the shared landscape — so Z-ordering is asserted separately below
        // under per-step-shared driver reads.
        let psi = BranchingMechanism::besq();
        let grid: Vec<f64> = (0..=20_000).map(|i| i as f64 * 5e-3).collect();
        for seed in [1u64, 2, 3, 4, 5] {
            let pinned_x = LazyLevySampler::branching(&psi, stream(seed, 0))
                .step_path_on_grid(&grid)
                .unwrap();
            let g_lo = SteppedPath::constant(0.5, 1.0);
            let g_hi = SteppedPath::constant(1.0, 1.0);
            let lo = solve_euler(&mut &pinned_x, &mut &g_lo, 1e-2, 1.0).unwrap();
            let hi = solve_euler(&mut &pinned_x, &mut &g_hi, 1e-2, 1.0).unwrap();
            for i in 0..lo.grid_len() {
                assert!(
                    hi.values()[i] >= lo.values()[i],
                    "seed {seed}: cumulative ordering broken at step {i}"
                );
            }
        }
    }

    /// Driver that replays a fixed value table by query index, so two runs
    /// read identical values at identical step times.
    struct StepPinned<'a> {
        values: &'a [f64],
        next: usize,
    }

    impl Driver for StepPinned<'_> {
        fn eval_at(&mut self, _u: f64) -> Result<f64, IvpError> {
            let v = self.values[self.next.min(self.values.len() - 1)];
            self.next += 1;
            Ok(v)
        }
    }

    #[test]
    fn profile_monotone_in_x_for_step_shared_reads() {
        // When the f-queries of both runs return the same value sequence
        // (shared stream, identical query times), each step's rate
        // [ξ_i + x + Y_i]⁺ is monotone in x, hence so is every Z_t.
        let psi = BranchingMechanism::besq();
        let mut src = LazyLevySampler::branching(&psi, stream(17, 0));
        let table: Vec<f64> = (0..=100)
            .map(|i| src.query(i as f64 * 0.01).unwrap())
            .collect();
        let g_lo = SteppedPath::constant(0.3, 1.0);
        let g_hi = SteppedPath::constant(0.9, 1.0);
        let lo = solve_euler(
            &mut StepPinned {
                values: &table,
                next: 0,
            },
            &mut &g_lo,
            1e-2,
            1.0,
        )
        .unwrap();
        let hi = solve_euler(
            &mut StepPinned {
                values: &table,
                next: 0,
            },
            &mut &g_hi,
            1e-2,
            1.0,
        )
        .unwrap();
        for i in 0..lo.grid_len() {
            assert!(hi.rates()[i] >= lo.rates()[i], "step {i}");
            assert!(hi.values()[i] >= lo.values()[i]);
        }
    }

    #[test]
    fn degenerate_scaling_point_is_exact() {
        // μ = δ_1, ν = δ_0: the scaled process is constant x, so the
        // empirical Laplace value is e^{-λx} exactly.
        let cfg = GwiScalingConfig {
            offspring: DiscreteLaw::dirac(1),
            immigration: DiscreteLaw::dirac(0),
            points: vec![ScalingPoint {
                n: 100,
                k_n: 100,
                e_n: 50.0,
            }],
            target_psi: BranchingMechanism::zero(),
            target_phi: ImmigrationMechanism::zero(),
            x: 1.0,
            t: 1.0,
            lambda: 1.0,
            replications: 120,
        };
        let rep = gwi_scaling_experiment(&cfg, 5).unwrap();
        assert!((rep.gaps[0].empirical - (-1.0f64).exp()).abs() < 1e-15);
        assert!((rep.oracle - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn pitman_total_mass_identity() {
        let cfg = PitmanConfig {
            offspring: DiscreteLaw::poisson(1.0).unwrap(),
            l: 1.0,
            points: vec![
                PitmanPoint { n: 64, a_n: 8.0 },
                PitmanPoint { n: 256, a_n: 16.0 },
            ],
            probe_times: vec![0.25, 0.5],
            replications: 50,
        };
        let summaries = pitman_experiment(&cfg, 9).unwrap();
        for s in &summaries {
            assert!(s.total_mass_exact);
            assert!(s.scaled_max_mean > 0.0);
            assert_eq!(s.profiles.len(), 2);
            assert_eq!(s.profiles[0].len(), 50);
        }
    }
}
