//! Branching and immigration mechanisms.
//!
//! A branching mechanism is the Laplace exponent of a spectrally positive
//! Lévy process `X`,
//!
//! ```text
//! E[exp(-λ X_t)] = exp(t Ψ(λ)),
//! Ψ(λ) = -κ + aλ + σ²λ²/2 + (jump part)
//! ```
//!
//! and an immigration mechanism is the Laplace exponent of a subordinator
//! `Y`,
//!
//! ```text
//! E[exp(-λ Y_t)] = exp(-t Φ(λ)),
//! Φ(λ) = κ + dλ + (jump part).
//! ```
//!
//! Jump parts are restricted to families with a closed-form exponent
//! contribution, so evaluation is exact and the matching samplers in
//! [`crate::paths`] are exact in law. Compound-Poisson exponents are kept
//! uncompensated: the drift parameter is the true path drift (negated for
//! `Ψ`, as the sign convention above dictates).

use serde::de::Error as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default left endpoint of the sign-test neighbourhood used by
/// [`classify_explosion`].
pub const DEFAULT_EXPLOSION_EPS: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MechanismError {
    #[error("parameter `{0}` must be finite")]
    NonFinite(&'static str),
    #[error("parameter `{0}` must be non-negative")]
    Negative(&'static str),
    #[error("parameter `{0}` must be positive")]
    NonPositive(&'static str),
    #[error("stable index alpha={alpha} outside {range}")]
    BadAlpha { alpha: f64, range: &'static str },
    #[error("sign `{got}` is invalid for stable index alpha={alpha}")]
    BadSign { alpha: f64, got: &'static str },
    #[error("malformed mechanism spec: {0}")]
    Spec(String),
}

fn finite(x: f64, name: &'static str) -> Result<f64, MechanismError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(MechanismError::NonFinite(name))
    }
}

fn non_negative(x: f64, name: &'static str) -> Result<f64, MechanismError> {
    if finite(x, name)? >= 0.0 {
        Ok(x)
    } else {
        Err(MechanismError::Negative(name))
    }
}

fn positive(x: f64, name: &'static str) -> Result<f64, MechanismError> {
    if finite(x, name)? > 0.0 {
        Ok(x)
    } else {
        Err(MechanismError::NonPositive(name))
    }
}

/// Law of a single compound-Poisson jump, restricted to laws on `(0, ∞)`
/// with a closed-form Laplace transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpLaw {
    /// Point mass at `size`.
    Dirac { size: f64 },
    /// Exponential with the given rate (mean `1/rate`).
    Exponential { rate: f64 },
    /// Gamma in shape-rate form.
    Gamma { shape: f64, rate: f64 },
}

impl JumpLaw {
    fn validate(&self) -> Result<(), MechanismError> {
        match *self {
            JumpLaw::Dirac { size } => positive(size, "jump.size").map(|_| ()),
            JumpLaw::Exponential { rate } => positive(rate, "jump.rate").map(|_| ()),
            JumpLaw::Gamma { shape, rate } => {
                positive(shape, "jump.shape")?;
                positive(rate, "jump.rate").map(|_| ())
            }
        }
    }

    /// `E[exp(-λ J)] - 1`, computed in a cancellation-free form.
    pub fn laplace_minus_one(&self, lambda: f64) -> f64 {
        match *self {
            JumpLaw::Dirac { size } => (-lambda * size).exp_m1(),
            JumpLaw::Exponential { rate } => -lambda / (rate + lambda),
            JumpLaw::Gamma { shape, rate } => (-shape * (lambda / rate).ln_1p()).exp_m1(),
        }
    }

    /// Mean jump size.
    pub fn mean(&self) -> f64 {
        match *self {
            JumpLaw::Dirac { size } => size,
            JumpLaw::Exponential { rate } => 1.0 / rate,
            JumpLaw::Gamma { shape, rate } => shape / rate,
        }
    }
}

/// Jump part of a branching mechanism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BranchingJumps {
    None,
    /// Spectrally positive stable jumps, index in `(1, 2]`; contributes
    /// `+scale·λ^α` to `Ψ`.
    Stable {
        alpha: f64,
        scale: f64,
    },
    /// Stable-subordinator jumps, index in `(0, 1)`; contributes
    /// `-scale·λ^α` to `Ψ` (the linear compensation is folded into the
    /// drift).
    ShiftedStable {
        alpha: f64,
        scale: f64,
    },
    /// Finite-activity jumps at the given rate, uncompensated.
    CompoundPoisson {
        rate: f64,
        law: JumpLaw,
    },
}

/// Branching mechanism `Ψ` of a (possibly killed) spectrally positive Lévy
/// process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchingMechanism {
    killing: f64,
    drift: f64,
    diffusion: f64,
    jumps: BranchingJumps,
}

impl BranchingMechanism {
    pub fn new(
        killing: f64,
        drift: f64,
        diffusion: f64,
        jumps: BranchingJumps,
    ) -> Result<Self, MechanismError> {
        non_negative(killing, "killing")?;
        finite(drift, "drift")?;
        non_negative(diffusion, "sigma2")?;
        match jumps {
            BranchingJumps::None => {}
            BranchingJumps::Stable { alpha, scale } => {
                if !(alpha > 1.0 && alpha <= 2.0) {
                    return Err(MechanismError::BadAlpha {
                        alpha,
                        range: "(1, 2]",
                    });
                }
                positive(scale, "scale")?;
            }
            BranchingJumps::ShiftedStable { alpha, scale } => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(MechanismError::BadAlpha {
                        alpha,
                        range: "(0, 1)",
                    });
                }
                positive(scale, "scale")?;
            }
            BranchingJumps::CompoundPoisson { rate, law } => {
                non_negative(rate, "rate")?;
                law.validate()?;
            }
        }
        Ok(Self {
            killing,
            drift,
            diffusion,
            jumps,
        })
    }

    /// `Ψ(λ) = 2λ²`: the branching side of a squared Bessel process.
    pub fn besq() -> Self {
        Self::brownian(4.0)
    }

    /// Pure diffusion, `Ψ(λ) = σ²λ²/2`.
    pub fn brownian(sigma2: f64) -> Self {
        Self::new(0.0, 0.0, sigma2, BranchingJumps::None).expect("valid")
    }

    /// `Ψ(λ) = λ^α` for `α ∈ (1, 2]`.
    pub fn stable_normalized(alpha: f64) -> Result<Self, MechanismError> {
        Self::new(0.0, 0.0, 0.0, BranchingJumps::Stable { alpha, scale: 1.0 })
    }

    /// `Ψ(λ) = -scale·λ^α` for `α ∈ (0, 1)`: `X` is a stable subordinator.
    pub fn stable_subordinator(alpha: f64, scale: f64) -> Result<Self, MechanismError> {
        Self::new(
            0.0,
            0.0,
            0.0,
            BranchingJumps::ShiftedStable { alpha, scale },
        )
    }

    /// `Ψ ≡ 0`: the constant process.
    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0, BranchingJumps::None).expect("valid")
    }

    pub fn killing_rate(&self) -> f64 {
        self.killing
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    pub fn jumps(&self) -> &BranchingJumps {
        &self.jumps
    }

    /// Evaluate `Ψ(λ)`, `λ ≥ 0`. `Ψ(0) = -κ`.
    pub fn eval(&self, lambda: f64) -> f64 {
        assert!(lambda >= 0.0 && lambda.is_finite(), "lambda must be >= 0");
        let mut psi = -self.killing + self.drift * lambda + 0.5 * self.diffusion * lambda * lambda;
        psi += match self.jumps {
            BranchingJumps::None => 0.0,
            BranchingJumps::Stable { alpha, scale } => scale * lambda.powf(alpha),
            BranchingJumps::ShiftedStable { alpha, scale } => -scale * lambda.powf(alpha),
            BranchingJumps::CompoundPoisson { rate, law } => rate * law.laplace_minus_one(lambda),
        };
        psi
    }

    /// The mechanism of `c·X`-time, i.e. `Ψ ↦ cΨ` for `c > 0`.
    pub fn scale_by(&self, c: f64) -> Result<Self, MechanismError> {
        positive(c, "c")?;
        let jumps = match self.jumps {
            BranchingJumps::None => BranchingJumps::None,
            BranchingJumps::Stable { alpha, scale } => BranchingJumps::Stable {
                alpha,
                scale: c * scale,
            },
            BranchingJumps::ShiftedStable { alpha, scale } => BranchingJumps::ShiftedStable {
                alpha,
                scale: c * scale,
            },
            BranchingJumps::CompoundPoisson { rate, law } => BranchingJumps::CompoundPoisson {
                rate: c * rate,
                law,
            },
        };
        Self::new(c * self.killing, c * self.drift, c * self.diffusion, jumps)
    }
}

/// Jump part of an immigration mechanism (subordinator-compatible).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImmigrationJumps {
    None,
    /// Stable subordinator jumps, index in `(0, 1)`; contributes
    /// `+scale·λ^α` to `Φ`.
    Stable {
        alpha: f64,
        scale: f64,
    },
    /// Gamma subordinator; contributes `shape·ln(1 + λ/rate)`.
    Gamma {
        shape: f64,
        rate: f64,
    },
    /// Finite-activity jumps.
    CompoundPoisson {
        rate: f64,
        law: JumpLaw,
    },
}

/// Immigration mechanism `Φ` of a (possibly killed) subordinator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImmigrationMechanism {
    killing: f64,
    drift: f64,
    jumps: ImmigrationJumps,
}

impl ImmigrationMechanism {
    pub fn new(killing: f64, drift: f64, jumps: ImmigrationJumps) -> Result<Self, MechanismError> {
        non_negative(killing, "killing")?;
        non_negative(drift, "d")?;
        match jumps {
            ImmigrationJumps::None => {}
            ImmigrationJumps::Stable { alpha, scale } => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(MechanismError::BadAlpha {
                        alpha,
                        range: "(0, 1)",
                    });
                }
                positive(scale, "scale")?;
            }
            ImmigrationJumps::Gamma { shape, rate } => {
                positive(shape, "shape")?;
                positive(rate, "rate")?;
            }
            ImmigrationJumps::CompoundPoisson { rate, law } => {
                non_negative(rate, "rate")?;
                law.validate()?;
            }
        }
        Ok(Self {
            killing,
            drift,
            jumps,
        })
    }

    /// `Φ(λ) = d·λ`.
    pub fn pure_drift(d: f64) -> Result<Self, MechanismError> {
        Self::new(0.0, d, ImmigrationJumps::None)
    }

    /// `Φ ≡ 0`: no immigration.
    pub fn zero() -> Self {
        Self::new(0.0, 0.0, ImmigrationJumps::None).expect("valid")
    }

    /// `Φ(λ) = 2λ`: the immigration side of a dimension-2 squared Bessel
    /// process.
    pub fn besq() -> Self {
        Self::pure_drift(2.0).expect("valid")
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self, MechanismError> {
        Self::new(0.0, 0.0, ImmigrationJumps::Gamma { shape, rate })
    }

    pub fn stable(alpha: f64, scale: f64) -> Result<Self, MechanismError> {
        Self::new(0.0, 0.0, ImmigrationJumps::Stable { alpha, scale })
    }

    pub fn killing_rate(&self) -> f64 {
        self.killing
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn jumps(&self) -> &ImmigrationJumps {
        &self.jumps
    }

    /// True when `Φ ≡ 0`.
    pub fn is_zero(&self) -> bool {
        self.killing == 0.0
            && self.drift == 0.0
            && match self.jumps {
                ImmigrationJumps::None => true,
                ImmigrationJumps::CompoundPoisson { rate, .. } => rate == 0.0,
                _ => false,
            }
    }

    /// Evaluate `Φ(λ) ≥ 0`, `λ ≥ 0`. `Φ(0) = κ`.
    pub fn eval(&self, lambda: f64) -> f64 {
        assert!(lambda >= 0.0 && lambda.is_finite(), "lambda must be >= 0");
        let mut phi = self.killing + self.drift * lambda;
        phi += match self.jumps {
            ImmigrationJumps::None => 0.0,
            ImmigrationJumps::Stable { alpha, scale } => scale * lambda.powf(alpha),
            ImmigrationJumps::Gamma { shape, rate } => shape * (lambda / rate).ln_1p(),
            ImmigrationJumps::CompoundPoisson { rate, law } => {
                -rate * law.laplace_minus_one(lambda)
            }
        };
        phi
    }

    /// `Φ'(0+)` by a one-sided finite difference; equals the mean of `Y_1`
    /// when finite.
    pub fn mean_rate_fd(&self) -> f64 {
        let h = 1e-7;
        (self.eval(h) - self.eval(0.0)) / h
    }
}

// ---------------------------------------------------------------------------
// Grid shape checks
// ---------------------------------------------------------------------------

/// Midpoint-convexity of `f` on the grid: for consecutive triples with
/// equally spaced abscissae, `f(mid) <= (f(lo)+f(hi))/2` within `rel_tol`.
pub fn midpoint_convex_on_grid(f: impl Fn(f64) -> f64, grid: &[f64], rel_tol: f64) -> bool {
    grid.windows(3).all(|w| {
        let mid = 0.5 * (w[0] + w[2]);
        let lhs = f(mid);
        let rhs = 0.5 * (f(w[0]) + f(w[2]));
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        lhs <= rhs + rel_tol * scale
    })
}

/// Midpoint-concavity on the grid (convexity of `-f`).
pub fn midpoint_concave_on_grid(f: impl Fn(f64) -> f64, grid: &[f64], rel_tol: f64) -> bool {
    midpoint_convex_on_grid(|x| -f(x), grid, rel_tol)
}

// ---------------------------------------------------------------------------
// Explosion classification
// ---------------------------------------------------------------------------

/// How a CBI path can reach the absorbing state `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplosionVerdict {
    /// The path jumps to `+∞` with positive probability, which happens
    /// exactly when `Ψ(0)` or `Φ(0)` is non-zero (a killed driver).
    pub jumps_to_infinity_possible: bool,
    /// The path reaches `+∞` continuously with positive probability.
    pub continuous_explosion_possible: bool,
    /// Continuous explosion has probability one.
    pub continuous_explosion_certain: bool,
}

#[derive(Debug, Error, Clone)]
pub enum ExplosionClassificationError {
    /// `Ψ` changes sign more than once on the test grid, so the standard
    /// near-zero sign reading does not apply. The offending `(λ, Ψ(λ))`
    /// samples are attached.
    #[error("sign of Ψ near 0 is ambiguous on the test grid")]
    AmbiguousSign { samples: Vec<(f64, f64)> },
    /// The dyadic quadrature of `∫ dλ/(-Ψ)` neither settled nor showed a
    /// clear divergence pattern within the panel budget.
    #[error("explosion quadrature indeterminate after {panels} panels")]
    Indeterminate {
        panels: usize,
        partial_sums: Vec<f64>,
    },
}

/// Result of the near-zero integral test on a branching mechanism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntegralTest {
    /// `Ψ ≥ 0` near zero, or `∫_{0+} dλ/(-Ψ)` diverges: not explosive.
    NotExplosive,
    /// `Ψ < 0` near zero and the integral converges; the value of
    /// `∫_0^{λ0} dλ/(-Ψ(λ))` is attached.
    Explosive { integral: f64 },
}

const SIGN_GRID_LEVELS: u32 = 50;
const MAX_PANELS: usize = 400;
const CONVERGENCE_REL: f64 = 1e-6;
const CONVERGENCE_RUN: usize = 3;
const DIVERGENCE_RATIO: f64 = 0.98;
const DIVERGENCE_RUN: usize = 5;
const DIVERGENCE_WARMUP: usize = 8;

/// Nodes and weights of 16-point Gauss–Legendre quadrature on `[-1, 1]`
/// (positive half; the rule is symmetric).
#[allow(clippy::excessive_precision)]
const GL16_X: [f64; 8] = [
    0.09501250983763744,
    0.2816035507792589,
    0.45801677765722739,
    0.61787624440264375,
    0.755404408355003,
    0.86563120238783174,
    0.94457502307323258,
    0.98940093499164993,
];
#[allow(clippy::excessive_precision)]
const GL16_W: [f64; 8] = [
    0.189450610455068496,
    0.182603415044923589,
    0.169156519395002532,
    0.149595988816576732,
    0.124628971255533872,
    0.095158511682492785,
    0.062253523938647893,
    0.027152459411754095,
];

fn gauss_legendre_16(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = 0.0;
    for i in 0..8 {
        acc += GL16_W[i] * (f(c + h * GL16_X[i]) + f(c - h * GL16_X[i]));
    }
    acc * h
}

/// Decide whether `Ψ` is an explosive branching mechanism by the integral
/// criterion `∫_{0+} dλ/Ψ(λ) > -∞`, read operationally as: `Ψ < 0` on some
/// `(0, ε)` and `∫_δ^ε dλ/(-Ψ)` converges as `δ ↓ 0`.
///
/// Convergence is detected on the dyadic sequence `δ_k = λ0·2^{-k}` (three
/// consecutive relative changes below `1e-6`); divergence, by panel
/// contributions that stop decaying. Mechanisms whose sign pattern near 0 is
/// not a clean suffix of negatives are reported as ambiguous instead of
/// guessed at.
pub fn explosive_branching_mechanism(
    psi: &BranchingMechanism,
    eps: f64,
) -> Result<IntegralTest, ExplosionClassificationError> {
    assert!(eps > 0.0 && eps.is_finite());
    let samples: Vec<(f64, f64)> = (0..=SIGN_GRID_LEVELS)
        .map(|j| {
            let lambda = eps * (-(j as f64)).exp2();
            (lambda, psi.eval(lambda))
        })
        .collect();

    let first_neg = samples.iter().position(|&(_, v)| v < 0.0);
    let Some(first_neg) = first_neg else {
        return Ok(IntegralTest::NotExplosive);
    };
    // A valid pattern is non-negative values followed by negatives all the
    // way down; anything else means the (0, ε) sign reading is ambiguous.
    if samples[first_neg..].iter().any(|&(_, v)| v >= 0.0) {
        return Err(ExplosionClassificationError::AmbiguousSign { samples });
    }
    let lambda0 = samples[first_neg].0;

    // I(k) = ∫_{λ0 2^{-k-1}}^{λ0} dλ/(-Ψ); panels are the dyadic slices.
    let integrand = |lambda: f64| 1.0 / (-psi.eval(lambda));
    let mut partial_sums = Vec::with_capacity(MAX_PANELS);
    let mut total = 0.0;
    let mut prev_panel = f64::INFINITY;
    let mut converged_run = 0;
    let mut diverged_run = 0;
    for k in 0..MAX_PANELS {
        let hi = lambda0 * (-(k as f64)).exp2();
        let lo = 0.5 * hi;
        let panel = gauss_legendre_16(integrand, lo, hi);
        if !panel.is_finite() || panel < 0.0 {
            return Err(ExplosionClassificationError::AmbiguousSign { samples });
        }
        total += panel;
        partial_sums.push(total);

        if panel <= CONVERGENCE_REL * total {
            converged_run += 1;
            if converged_run >= CONVERGENCE_RUN {
                // The tail below the last panel is bounded by a geometric
                // extrapolation of the panel decay; at this point it is
                // negligible relative to `total`.
                return Ok(IntegralTest::Explosive { integral: total });
            }
        } else {
            converged_run = 0;
        }

        if k >= DIVERGENCE_WARMUP && panel >= DIVERGENCE_RATIO * prev_panel {
            diverged_run += 1;
            if diverged_run >= DIVERGENCE_RUN {
                return Ok(IntegralTest::NotExplosive);
            }
        } else {
            diverged_run = 0;
        }
        prev_panel = panel;
    }
    Err(ExplosionClassificationError::Indeterminate {
        panels: MAX_PANELS,
        partial_sums,
    })
}

/// Classify how a `CBI(Ψ, Φ)` can reach `+∞`, with the default sign-test
/// neighbourhood.
pub fn classify_explosion(
    psi: &BranchingMechanism,
    phi: &ImmigrationMechanism,
) -> Result<ExplosionVerdict, ExplosionClassificationError> {
    classify_explosion_with(psi, phi, DEFAULT_EXPLOSION_EPS)
}

/// Classify explosion with an explicit sign-test neighbourhood `(0, eps)`.
pub fn classify_explosion_with(
    psi: &BranchingMechanism,
    phi: &ImmigrationMechanism,
    eps: f64,
) -> Result<ExplosionVerdict, ExplosionClassificationError> {
    let jumps = psi.killing_rate() > 0.0 || phi.killing_rate() > 0.0;
    let explosive = if psi.killing_rate() > 0.0 {
        // Continuous explosion requires Ψ(0) = 0.
        false
    } else {
        matches!(
            explosive_branching_mechanism(psi, eps)?,
            IntegralTest::Explosive { .. }
        )
    };
    let possible = psi.killing_rate() == 0.0 && explosive;
    let certain = possible && phi.killing_rate() == 0.0 && !phi.is_zero();
    Ok(ExplosionVerdict {
        jumps_to_infinity_possible: jumps,
        continuous_explosion_possible: possible,
        continuous_explosion_certain: certain,
    })
}

// ---------------------------------------------------------------------------
// JSON specs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StableSign {
    Positive,
    Negative,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPsiBrownian {
    #[serde(default)]
    sigma2: f64,
    #[serde(default)]
    drift: f64,
    #[serde(default)]
    killing: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPsiStable {
    alpha: f64,
    #[serde(default = "one")]
    scale: f64,
    sign: Option<StableSign>,
    #[serde(default)]
    sigma2: f64,
    #[serde(default)]
    drift: f64,
    #[serde(default)]
    killing: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPsiCp {
    rate: f64,
    jump: JumpLaw,
    #[serde(default)]
    sigma2: f64,
    #[serde(default)]
    drift: f64,
    #[serde(default)]
    killing: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKindOnly {}

fn one() -> f64 {
    1.0
}

fn spec_kind(value: &serde_json::Value) -> Result<String, MechanismError> {
    match value {
        serde_json::Value::String(s) => Ok(s.clone()),
        serde_json::Value::Object(map) => map
            .get("kind")
            .and_then(|k| k.as_str())
            .map(str::to_owned)
            .ok_or_else(|| MechanismError::Spec("missing `kind`".into())),
        _ => Err(MechanismError::Spec(
            "expected a JSON object or a bare kind string".into(),
        )),
    }
}

fn from_value<T: serde::de::DeserializeOwned>(
    value: serde_json::Value,
) -> Result<T, MechanismError> {
    serde_json::from_value(value).map_err(|e| MechanismError::Spec(e.to_string()))
}

impl BranchingMechanism {
    /// Parse from the JSON spec form, e.g.
    /// `{"kind":"stable","alpha":1.5,"scale":1.0}`. Bare-word aliases
    /// `"besq"` and `"zero"` are accepted.
    pub fn from_spec(value: serde_json::Value) -> Result<Self, MechanismError> {
        let kind = spec_kind(&value)?;
        let mut value = if value.is_string() {
            serde_json::json!({})
        } else {
            value
        };
        if let serde_json::Value::Object(ref mut map) = value {
            map.remove("kind");
        }
        match kind.as_str() {
            "besq" => {
                from_value::<RawKindOnly>(value)?;
                Ok(Self::besq())
            }
            "zero" => {
                from_value::<RawKindOnly>(value)?;
                Ok(Self::zero())
            }
            "brownian" | "none" => {
                let raw: RawPsiBrownian = from_value(value)?;
                Self::new(raw.killing, raw.drift, raw.sigma2, BranchingJumps::None)
            }
            "stable" => {
                let raw: RawPsiStable = from_value(value)?;
                let jumps = match raw.sign {
                    Some(StableSign::Negative) => {
                        if raw.alpha >= 1.0 {
                            return Err(MechanismError::BadSign {
                                alpha: raw.alpha,
                                got: "negative",
                            });
                        }
                        BranchingJumps::ShiftedStable {
                            alpha: raw.alpha,
                            scale: raw.scale,
                        }
                    }
                    Some(StableSign::Positive) => {
                        if raw.alpha <= 1.0 {
                            return Err(MechanismError::BadSign {
                                alpha: raw.alpha,
                                got: "positive",
                            });
                        }
                        BranchingJumps::Stable {
                            alpha: raw.alpha,
                            scale: raw.scale,
                        }
                    }
                    // Default: the only sign compatible with convexity of Ψ.
                    None if raw.alpha > 1.0 => BranchingJumps::Stable {
                        alpha: raw.alpha,
                        scale: raw.scale,
                    },
                    None => BranchingJumps::ShiftedStable {
                        alpha: raw.alpha,
                        scale: raw.scale,
                    },
                };
                Self::new(raw.killing, raw.drift, raw.sigma2, jumps)
            }
            "cpoisson" => {
                let raw: RawPsiCp = from_value(value)?;
                Self::new(
                    raw.killing,
                    raw.drift,
                    raw.sigma2,
                    BranchingJumps::CompoundPoisson {
                        rate: raw.rate,
                        law: raw.jump,
                    },
                )
            }
            other => Err(MechanismError::Spec(format!(
                "unknown branching mechanism kind `{other}`"
            ))),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, MechanismError> {
        let value = if let Ok(v) = serde_json::from_str(text) {
            v
        } else {
            // Bare word like `besq`; quote it and retry.
            serde_json::Value::String(text.trim().to_owned())
        };
        Self::from_spec(value)
    }

    /// Canonical JSON spec; `from_json(to_json())` is the identity.
    pub fn to_spec(&self) -> serde_json::Value {
        match self.jumps {
            BranchingJumps::None => serde_json::json!({
                "kind": "brownian",
                "sigma2": self.diffusion,
                "drift": self.drift,
                "killing": self.killing,
            }),
            BranchingJumps::Stable { alpha, scale } => serde_json::json!({
                "kind": "stable",
                "alpha": alpha,
                "scale": scale,
                "sign": "positive",
                "sigma2": self.diffusion,
                "drift": self.drift,
                "killing": self.killing,
            }),
            BranchingJumps::ShiftedStable { alpha, scale } => serde_json::json!({
                "kind": "stable",
                "alpha": alpha,
                "scale": scale,
                "sign": "negative",
                "sigma2": self.diffusion,
                "drift": self.drift,
                "killing": self.killing,
            }),
            BranchingJumps::CompoundPoisson { rate, law } => serde_json::json!({
                "kind": "cpoisson",
                "rate": rate,
                "jump": law,
                "sigma2": self.diffusion,
                "drift": self.drift,
                "killing": self.killing,
            }),
        }
    }

    pub fn to_json(&self) -> String {
        self.to_spec().to_string()
    }
}

impl Serialize for BranchingMechanism {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_spec().serialize(s)
    }
}

impl<'de> Deserialize<'de> for BranchingMechanism {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(d)?;
        Self::from_spec(value).map_err(D::Error::custom)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhiDrift {
    #[serde(default)]
    d: f64,
    #[serde(default)]
    killing: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhiStable {
    alpha: f64,
    #[serde(default = "one")]
    scale: f64,
    #[serde(default)]
    d: f64,
    #[serde(default)]
    killing: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhiGamma {
    shape: f64,
    rate: f64,
    #[serde(default)]
    d: f64,
    #[serde(default)]
    killing: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhiCp {
    rate: f64,
    jump: JumpLaw,
    #[serde(default)]
    d: f64,
    #[serde(default)]
    killing: f64,
}

impl ImmigrationMechanism {
    /// Parse from the JSON spec form, e.g. `{"kind":"drift","d":2.0}`.
    /// Bare-word aliases `"besq"` and `"zero"` are accepted.
    pub fn from_spec(value: serde_json::Value) -> Result<Self, MechanismError> {
        let kind = spec_kind(&value)?;
        let mut value = if value.is_string() {
            serde_json::json!({})
        } else {
            value
        };
        if let serde_json::Value::Object(ref mut map) = value {
            map.remove("kind");
        }
        match kind.as_str() {
            "besq" => {
                from_value::<RawKindOnly>(value)?;
                Ok(Self::besq())
            }
            "zero" => {
                from_value::<RawKindOnly>(value)?;
                Ok(Self::zero())
            }
            "drift" | "none" => {
                let raw: RawPhiDrift = from_value(value)?;
                Self::new(raw.killing, raw.d, ImmigrationJumps::None)
            }
            "stable" => {
                let raw: RawPhiStable = from_value(value)?;
                Self::new(
                    raw.killing,
                    raw.d,
                    ImmigrationJumps::Stable {
                        alpha: raw.alpha,
                        scale: raw.scale,
                    },
                )
            }
            "gamma" => {
                let raw: RawPhiGamma = from_value(value)?;
                Self::new(
                    raw.killing,
                    raw.d,
                    ImmigrationJumps::Gamma {
                        shape: raw.shape,
                        rate: raw.rate,
                    },
                )
            }
            "cpoisson" => {
                let raw: RawPhiCp = from_value(value)?;
                Self::new(
                    raw.killing,
                    raw.d,
                    ImmigrationJumps::CompoundPoisson {
                        rate: raw.rate,
                        law: raw.jump,
                    },
                )
            }
            other => Err(MechanismError::Spec(format!(
                "unknown immigration mechanism kind `{other}`"
            ))),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, MechanismError> {
        let value = if let Ok(v) = serde_json::from_str(text) {
            v
        } else {
            serde_json::Value::String(text.trim().to_owned())
        };
        Self::from_spec(value)
    }

    /// Canonical JSON spec; `from_json(to_json())` is the identity.
    pub fn to_spec(&self) -> serde_json::Value {
        match self.jumps {
            ImmigrationJumps::None => serde_json::json!({
                "kind": "drift",
                "d": self.drift,
                "killing": self.killing,
            }),
            ImmigrationJumps::Stable { alpha, scale } => serde_json::json!({
                "kind": "stable",
                "alpha": alpha,
                "scale": scale,
                "d": self.drift,
                "killing": self.killing,
            }),
            ImmigrationJumps::Gamma { shape, rate } => serde_json::json!({
                "kind": "gamma",
                "shape": shape,
                "rate": rate,
                "d": self.drift,
                "killing": self.killing,
            }),
            ImmigrationJumps::CompoundPoisson { rate, law } => serde_json::json!({
                "kind": "cpoisson",
                "rate": rate,
                "jump": law,
                "d": self.drift,
                "killing": self.killing,
            }),
        }
    }

    pub fn to_json(&self) -> String {
        self.to_spec().to_string()
    }
}

impl Serialize for ImmigrationMechanism {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_spec().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ImmigrationMechanism {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(d)?;
        Self::from_spec(value).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
            .collect()
    }

    #[test]
    fn psi_pure_diffusion() {
        let psi = BranchingMechanism::brownian(4.0);
        assert_eq!(psi.eval(1.0), 2.0);
    }

    #[test]
    fn psi_normalized_stable() {
        let psi = BranchingMechanism::stable_normalized(1.5).unwrap();
        assert!((psi.eval(4.0) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn psi_pure_killing() {
        let psi = BranchingMechanism::new(0.3, 0.0, 0.0, BranchingJumps::None).unwrap();
        assert_eq!(psi.eval(1.0), -0.3);
    }

    #[test]
    fn psi_vanishes_at_zero_up_to_killing() {
        let psi = BranchingMechanism::new(
            0.25,
            -1.0,
            3.0,
            BranchingJumps::CompoundPoisson {
                rate: 2.0,
                law: JumpLaw::Exponential { rate: 3.0 },
            },
        )
        .unwrap();
        assert!((psi.eval(1e-8) - (-0.25)).abs() < 1e-6);
    }

    #[test]
    fn phi_pure_drift() {
        let phi = ImmigrationMechanism::pure_drift(2.0).unwrap();
        assert_eq!(phi.eval(3.0), 6.0);
    }

    #[test]
    fn phi_gamma_log_form() {
        let phi = ImmigrationMechanism::gamma(1.0, 1.0).unwrap();
        assert!((phi.eval(std::f64::consts::E - 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phi_compound_poisson_bounded() {
        let phi = ImmigrationMechanism::new(
            0.0,
            0.0,
            ImmigrationJumps::CompoundPoisson {
                rate: 1.0,
                law: JumpLaw::Dirac { size: 1.0 },
            },
        )
        .unwrap();
        assert!((phi.eval(1.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
        assert!((phi.eval(1e6) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn psi_convex_phi_concave_on_grids() {
        let grid = log_grid(1e-4, 1e3, 200);
        let psis = [
            BranchingMechanism::besq(),
            BranchingMechanism::stable_normalized(1.5).unwrap(),
            BranchingMechanism::stable_subordinator(0.5, 1.0).unwrap(),
            BranchingMechanism::new(
                0.1,
                -0.5,
                1.0,
                BranchingJumps::CompoundPoisson {
                    rate: 1.5,
                    law: JumpLaw::Gamma {
                        shape: 2.0,
                        rate: 1.0,
                    },
                },
            )
            .unwrap(),
        ];
        for psi in &psis {
            assert!(midpoint_convex_on_grid(|l| psi.eval(l), &grid, 1e-9));
        }
        let phis = [
            ImmigrationMechanism::besq(),
            ImmigrationMechanism::gamma(1.2, 0.8).unwrap(),
            ImmigrationMechanism::stable(0.5, 1.0).unwrap(),
            ImmigrationMechanism::new(
                0.2,
                1.0,
                ImmigrationJumps::CompoundPoisson {
                    rate: 1.0,
                    law: JumpLaw::Exponential { rate: 2.0 },
                },
            )
            .unwrap(),
        ];
        for phi in &phis {
            assert!(phi.eval(0.5) >= 0.0);
            assert!(midpoint_concave_on_grid(|l| phi.eval(l), &grid, 1e-9));
        }
    }

    #[test]
    fn explosion_verdict_table() {
        // Ψ(λ)=2λ², Φ(λ)=dλ: ∫ dλ/(2λ²) = +∞ near 0, non-explosive.
        let v = classify_explosion(
            &BranchingMechanism::besq(),
            &ImmigrationMechanism::pure_drift(1.0).unwrap(),
        )
        .unwrap();
        assert_eq!(
            v,
            ExplosionVerdict {
                jumps_to_infinity_possible: false,
                continuous_explosion_possible: false,
                continuous_explosion_certain: false
            }
        );

        // Ψ(λ)=-λ^{1/2}: ∫_0^ε λ^{-1/2} = 2√ε finite, explosive; Φ ≠ 0 with
        // no killing makes it certain.
        let v = classify_explosion(
            &BranchingMechanism::stable_subordinator(0.5, 1.0).unwrap(),
            &ImmigrationMechanism::pure_drift(1.0).unwrap(),
        )
        .unwrap();
        assert_eq!(
            v,
            ExplosionVerdict {
                jumps_to_infinity_possible: false,
                continuous_explosion_possible: true,
                continuous_explosion_certain: true
            }
        );

        // Killing on either side allows a jump to ∞.
        let killed = BranchingMechanism::new(0.3, 0.0, 1.0, BranchingJumps::None).unwrap();
        let v = classify_explosion(&killed, &ImmigrationMechanism::zero()).unwrap();
        assert!(v.jumps_to_infinity_possible);
        assert!(!v.continuous_explosion_possible);
    }

    #[test]
    fn explosion_integral_matches_closed_form() {
        // ∫_0^{λ0} λ^{-1/2} dλ = 2√λ0 with λ0 = ε = 1e-3.
        let psi = BranchingMechanism::stable_subordinator(0.5, 1.0).unwrap();
        match explosive_branching_mechanism(&psi, 1e-3).unwrap() {
            IntegralTest::Explosive { integral } => {
                assert!((integral - 2.0 * (1e-3f64).sqrt()).abs() < 1e-6);
            }
            other => panic!("expected explosive, got {other:?}"),
        }
    }

    #[test]
    fn explosion_quadrature_vs_analytic_verdicts() {
        // Families with closed-form antiderivatives of 1/Ψ near 0.
        for alpha in [0.3, 0.5, 0.7, 0.9] {
            let psi = BranchingMechanism::stable_subordinator(alpha, 2.0).unwrap();
            assert!(matches!(
                explosive_branching_mechanism(&psi, 1e-3).unwrap(),
                IntegralTest::Explosive { .. }
            ));
        }
        // Ψ(λ) = aλ with a < 0: logarithmic divergence, not explosive.
        let supercritical_drift =
            BranchingMechanism::new(0.0, -2.0, 0.0, BranchingJumps::None).unwrap();
        assert_eq!(
            explosive_branching_mechanism(&supercritical_drift, 1e-3).unwrap(),
            IntegralTest::NotExplosive
        );
        // Ψ(λ) = aλ + σ²λ²/2 with a < 0: same near-zero behaviour.
        let supercritical_diffusion =
            BranchingMechanism::new(0.0, -1.0, 2.0, BranchingJumps::None).unwrap();
        assert_eq!(
            explosive_branching_mechanism(&supercritical_diffusion, 1e-3).unwrap(),
            IntegralTest::NotExplosive
        );
        // Dominant -λ^α near zero survives an added linear term.
        let mixed = BranchingMechanism::new(
            0.0,
            1.0,
            0.0,
            BranchingJumps::ShiftedStable {
                alpha: 0.5,
                scale: 1.0,
            },
        )
        .unwrap();
        assert!(matches!(
            explosive_branching_mechanism(&mixed, 1e-3).unwrap(),
            IntegralTest::Explosive { .. }
        ));
    }

    #[test]
    fn classification_invariant_under_psi_scaling() {
        let cases = [
            BranchingMechanism::besq(),
            BranchingMechanism::stable_subordinator(0.5, 1.0).unwrap(),
            BranchingMechanism::stable_normalized(1.5).unwrap(),
            BranchingMechanism::new(0.0, -2.0, 0.0, BranchingJumps::None).unwrap(),
        ];
        let phi = ImmigrationMechanism::pure_drift(1.0).unwrap();
        for psi in &cases {
            let base = classify_explosion(psi, &phi).unwrap();
            for c in [0.1, 3.0, 40.0] {
                let scaled = psi.scale_by(c).unwrap();
                assert_eq!(classify_explosion(&scaled, &phi).unwrap(), base);
            }
        }
    }

    #[test]
    fn spec_round_trip() {
        let psis = [
            BranchingMechanism::besq(),
            BranchingMechanism::stable_normalized(1.5).unwrap(),
            BranchingMechanism::stable_subordinator(0.5, 2.0).unwrap(),
            BranchingMechanism::new(
                0.1,
                -1.0,
                0.5,
                BranchingJumps::CompoundPoisson {
                    rate: 2.0,
                    law: JumpLaw::Dirac { size: 1.5 },
                },
            )
            .unwrap(),
        ];
        for psi in &psis {
            let back = BranchingMechanism::from_json(&psi.to_json()).unwrap();
            assert_eq!(&back, psi);
        }
        let phis = [
            ImmigrationMechanism::besq(),
            ImmigrationMechanism::gamma(1.0, 1.0).unwrap(),
            ImmigrationMechanism::stable(0.5, 1.0).unwrap(),
        ];
        for phi in &phis {
            let back = ImmigrationMechanism::from_json(&phi.to_json()).unwrap();
            assert_eq!(&back, phi);
        }
    }

    #[test]
    fn spec_parsing_examples() {
        let psi =
            BranchingMechanism::from_json(r#"{"kind":"stable","alpha":0.5,"sign":"negative"}"#)
                .unwrap();
        assert!((psi.eval(0.25) - (-0.5)).abs() < 1e-12);
        let psi = BranchingMechanism::from_json("besq").unwrap();
        assert_eq!(psi, BranchingMechanism::besq());
        let phi = ImmigrationMechanism::from_json(r#"{"kind":"drift","d":1}"#).unwrap();
        assert_eq!(phi.eval(2.0), 2.0);
        // Unknown keys are rejected.
        assert!(BranchingMechanism::from_json(r#"{"kind":"besq","extra":1}"#).is_err());
        assert!(ImmigrationMechanism::from_json(r#"{"kind":"drift","d":1,"bogus":2}"#).is_err());
        // Invalid sign/alpha combinations are rejected.
        assert!(BranchingMechanism::from_json(
            r#"{"kind":"stable","alpha":1.5,"sign":"negative"}"#
        )
        .is_err());
        assert!(BranchingMechanism::from_json(
            r#"{"kind":"stable","alpha":0.5,"sign":"positive"}"#
        )
        .is_err());
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(BranchingMechanism::new(-1.0, 0.0, 0.0, BranchingJumps::None).is_err());
        assert!(BranchingMechanism::new(0.0, f64::NAN, 0.0, BranchingJumps::None).is_err());
        assert!(BranchingMechanism::stable_normalized(2.5).is_err());
        assert!(ImmigrationMechanism::pure_drift(-1.0).is_err());
        assert!(ImmigrationMechanism::gamma(0.0, 1.0).is_err());
    }
}
