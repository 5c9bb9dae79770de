//! Simulation and verification toolkit for continuous-state branching
//! processes with immigration (CBI).
//!
//! A CBI process `Z` with branching mechanism `Ψ` and immigration
//! mechanism `Φ`, started at `x ≥ 0`, is constructed pathwise from a
//! spectrally positive Lévy process `X` and an independent subordinator
//! `Y` as the solution of the random equation
//!
//! ```text
//! Z_t = x + X(∫₀ᵗ Z_s ds) + Y_t.
//! ```
//!
//! The crate covers both sides of that picture and the machinery to check
//! one against the other:
//!
//! * [`mechanisms`] — parametric Laplace exponents `Ψ`, `Φ`, explosion
//!   classification;
//! * [`paths`] — stepped càdlàg paths and exact-in-law Lévy samplers;
//! * [`ivp`] — the deterministic initial value problem `c'₊ = f∘c + g`:
//!   an exact event-driven solver, the span-σ Euler scheme, scaling,
//!   explosion tests;
//! * [`semigroup`] — the exponent ODEs `∂ₜu = -Ψ(u)`, `∂ₜv = Φ(u)` as an
//!   independent analytic oracle for simulated laws;
//! * [`discrete`] — Galton-Watson processes with immigration, the discrete
//!   transform `z_{n+1} = k + x_{c_n} + y_{n+1}`, and first-passage-bridge
//!   conditioning;
//! * [`montecarlo`] — seeded, reproducible experiments tying the pieces
//!   together.

// `!(x >= 0.0)`-style guards are deliberate: they reject NaN along with
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod discrete;
pub mod ivp;
pub mod mechanisms;
pub mod montecarlo;
pub mod paths;
pub mod rng;
pub mod semigroup;

pub mod guide;
