#![allow(dead_code)] // each test binary uses a different subset

//! Shared helpers for the integration suites: random admissible pairs,
//! two-sample KS, and an exact-rational enumeration oracle for two
//! generations of branching with immigration. The oracle is independent of
//! the library's transform code: it computes generation sizes directly
//! from the branching recursion.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;

use cbilab::paths::SteppedPath;

pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Random admissible stepped pair with gentle slopes and small jumps, so
/// Euler error constants stay within the stability criterion's budget.
/// `g` is strictly increasing (positive slopes everywhere).
pub fn random_admissible_pair(rng: &mut impl Rng, horizon: f64) -> (SteppedPath, SteppedPath) {
    let f = random_reproduction(rng, 2.0);
    let g = random_immigration(rng, horizon);
    (f, g)
}

pub fn random_reproduction(rng: &mut impl Rng, x_max: f64) -> SteppedPath {
    let n_knots = rng.random_range(2..=4usize);
    let mut starts = vec![0.0];
    for _ in 1..n_knots {
        starts.push(rng.random_range(0.05..x_max));
    }
    starts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    starts.dedup();
    let mut values = Vec::with_capacity(starts.len());
    let mut slopes = Vec::with_capacity(starts.len());
    let mut v = rng.random_range(0.2..0.6);
    for i in 0..starts.len() {
        values.push(v);
        let slope = rng.random_range(-0.04..0.04);
        slopes.push(slope);
        if i + 1 < starts.len() {
            v += slope * (starts[i + 1] - starts[i]);
            v += rng.random_range(0.0..0.01); // non-negative jump
        }
    }
    SteppedPath::new(starts, values, slopes, x_max).unwrap()
}

pub fn random_immigration(rng: &mut impl Rng, horizon: f64) -> SteppedPath {
    let n_knots = rng.random_range(1..=3usize);
    let mut starts = vec![0.0];
    for _ in 1..n_knots {
        starts.push(rng.random_range(0.1..horizon));
    }
    starts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    starts.dedup();
    let mut values = Vec::with_capacity(starts.len());
    let mut slopes = Vec::with_capacity(starts.len());
    let mut v = rng.random_range(0.0..0.2);
    for i in 0..starts.len() {
        values.push(v);
        let slope = rng.random_range(0.01..0.04);
        slopes.push(slope);
        if i + 1 < starts.len() {
            v += slope * (starts[i + 1] - starts[i]);
            v += rng.random_range(0.0..0.01);
        }
    }
    SteppedPath::new(starts, values, slopes, horizon).unwrap()
}

/// Two-sample Kolmogorov–Smirnov statistic (inputs need not be sorted).
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
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

/// Exact law of `(z_1, z_2)` for two generations of branching with
/// immigration from `z_0 = k`, by direct enumeration of every child and
/// immigrant configuration with rational arithmetic. `mu`/`nu` are laws on
/// `{0, 1, 2, ...}` given as rational mass vectors.
pub fn enumerate_two_generations(
    mu: &[BigRational],
    nu: &[BigRational],
    k: usize,
) -> BTreeMap<(u64, u64), BigRational> {
    let mut law = BTreeMap::new();
    // All child-count tuples of given length with their probabilities.
    fn tuples(law: &[BigRational], len: usize) -> Vec<(Vec<usize>, BigRational)> {
        let mut acc: Vec<(Vec<usize>, BigRational)> = vec![(
            Vec::new(),
            BigRational::new(BigInt::from(1), BigInt::from(1)),
        )];
        for _ in 0..len {
            let mut next = Vec::new();
            for (tuple, p) in &acc {
                for (s, ps) in law.iter().enumerate() {
                    if ps.is_zero() {
                        continue;
                    }
                    let mut t = tuple.clone();
                    t.push(s);
                    next.push((t, p * ps));
                }
            }
            acc = next;
        }
        acc
    }

    for (gen0, p0) in tuples(mu, k) {
        for (i1, pi1) in nu.iter().enumerate().filter(|(_, p)| !p.is_zero()) {
            let z1: usize = gen0.iter().sum::<usize>() + i1;
            let p_z1 = &p0 * pi1;
            for (gen1, p1) in tuples(mu, z1) {
                for (i2, pi2) in nu.iter().enumerate().filter(|(_, p)| !p.is_zero()) {
                    let z2: usize = gen1.iter().sum::<usize>() + i2;
                    let p = &p_z1 * &p1 * pi2;
                    law.entry((z1 as u64, z2 as u64))
                        .and_modify(|q: &mut BigRational| *q += p.clone())
                        .or_insert(p);
                }
            }
        }
    }
    law
}

/// Total variation distance between two rational laws, exact.
pub fn total_variation(
    a: &BTreeMap<(u64, u64), BigRational>,
    b: &BTreeMap<(u64, u64), BigRational>,
) -> BigRational {
    let mut tv = BigRational::zero();
    let keys: std::collections::BTreeSet<_> = a.keys().chain(b.keys()).collect();
    for key in keys {
        let pa = a.get(key).cloned().unwrap_or_else(BigRational::zero);
        let pb = b.get(key).cloned().unwrap_or_else(BigRational::zero);
        let diff = if pa >= pb { pa - pb } else { pb - pa };
        tv += diff;
    }
    tv / BigRational::new(BigInt::from(2), BigInt::from(1))
}
