//! Stable random variates in the normalizations used by the mechanism
//! families, via the Chambers–Mallows–Stuck construction.
//!
//! Both generators below draw the totally skewed (`β = 1`) case and rescale
//! so that the Laplace transform matches the mechanism normalization
//! exactly:
//!
//! * [`standard_spectrally_positive_stable`]: `E[exp(-λS)] = exp(+λ^α)` for
//!   `α ∈ (1, 2]`, matching `Ψ(λ) = λ^α`.
//! * [`standard_one_sided_stable`]: `E[exp(-λS)] = exp(-λ^α)` for
//!   `α ∈ (0, 1)`, matching `Φ(λ) = λ^α` (and `Ψ(λ) = -λ^α`).
//!
//! The CMS sampler for `S_α(1, β=1, 0)` carries a leading factor
//! `D = |sec(πα/2)|^{1/α}`; dropping `D` is exactly the rescaling by
//! `|cos(πα/2)|^{1/α}` that turns the Laplace exponent
//! `∓λ^α/|cos(πα/2)|` into `∓λ^α`, so the bare trigonometric kernel below
//! is already the normalized variate. Unit tests pin the normalization by
//! Monte-Carlo Laplace checks at desk values.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;

fn clamp_open01(u: f64) -> f64 {
    u.clamp(1e-12, 1.0 - 1e-12)
}

/// The CMS variate `S_α(1, β=1, 0)` without the `D` prefactor, i.e. the
/// Laplace-normalized totally skewed stable.
fn cms_totally_skewed(alpha: f64, rng: &mut impl Rng) -> f64 {
    let u = PI * (clamp_open01(rng.random::<f64>()) - 0.5);
    let w = -clamp_open01(rng.random::<f64>()).ln();
    // B_{α,1} = arctan(tan(πα/2))/α; the arctan unwraps to πα/2 below 1 and
    // πα/2 - π above.
    let b = if alpha < 1.0 {
        FRAC_PI_2
    } else {
        FRAC_PI_2 - PI / alpha
    };
    let s = alpha * (u + b);
    s.sin() / u.cos().powf(1.0 / alpha) * ((u - s).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Spectrally positive stable variate, `α ∈ (1, 2]`, normalized so that
/// `E[exp(-λS)] = exp(λ^α)`. At `α = 2` this is `N(0, 2)`.
pub fn standard_spectrally_positive_stable(alpha: f64, rng: &mut impl Rng) -> f64 {
    debug_assert!(alpha > 1.0 && alpha <= 2.0);
    cms_totally_skewed(alpha, rng)
}

/// One-sided (subordinator) stable variate, `α ∈ (0, 1)`, normalized so
/// that `E[exp(-λS)] = exp(-λ^α)`.
pub fn standard_one_sided_stable(alpha: f64, rng: &mut impl Rng) -> f64 {
    debug_assert!(alpha > 0.0 && alpha < 1.0);
    cms_totally_skewed(alpha, rng)
}
