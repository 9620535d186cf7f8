#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rattoep::linalg::{self, c64, CMat, C64};
use rattoep::ratsym::Realization;

pub fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMat {
    DMatrix::from_fn(r, c, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// `V diag(mu) V^-1` with well-separated eigenvalues of modulus in `[lo, hi]`,
/// a fraction of them exactly on the unit circle when `circle` is set.
pub fn with_spectrum(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64, circle: bool) -> CMat {
    let mut mu: Vec<C64> = Vec::new();
    while mu.len() < n {
        let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let r = if circle && rng.random_bool(0.5) { 1.0 } else { rng.random_range(lo..hi) };
        let z = c64(r * th.cos(), r * th.sin());
        if mu.iter().all(|w| (w - z).norm() > 0.2) {
            mu.push(z);
        }
    }
    loop {
        let v = gaussian(rng, n, n) + CMat::identity(n, n) * c64(1.5, 0.0);
        if linalg::cond(&v) < 50.0 {
            let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(mu.clone()));
            return &v * d * linalg::inverse(&v).unwrap();
        }
    }
}

pub fn random_realization(seed: u64) -> Realization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(1..=2);
    let np = rng.random_range(0..=3);
    let nm = rng.random_range(0..=3);
    let a = with_spectrum(&mut rng, np, 0.1, 0.8, false);
    let alpha = with_spectrum(&mut rng, nm, 0.1, 0.9, true);
    Realization::new(
        gaussian(&mut rng, m, m),
        a,
        gaussian(&mut rng, np, m),
        gaussian(&mut rng, m, np),
        alpha,
        gaussian(&mut rng, nm, m),
        gaussian(&mut rng, m, nm),
    )
    .unwrap()
}

pub fn sample_point(rng: &mut ChaCha8Rng, avoid: &[C64]) -> C64 {
    loop {
        let r = rng.random_range(0.3..2.0);
        let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let z = c64(r * th.cos(), r * th.sin());
        if avoid.iter().all(|p| (z - p).norm() > 0.1) {
            return z;
        }
    }
}

fn real_gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMat {
    DMatrix::from_fn(r, c, |_, _| c64(rng.random_range(-1.0..1.0), 0.0))
}

/// Real matrix similar to a block diagonal of rotations and scalars, with
/// moduli in `[lo, hi]` or exactly 1 when `circle` picks it.
pub fn real_with_spectrum(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64, circle: bool) -> CMat {
    let mut d = CMat::zeros(n, n);
    let mut k = 0;
    while k < n {
        let r = if circle && rng.random_bool(0.5) { 1.0 } else { rng.random_range(lo..hi) };
        if k + 1 < n && rng.random_bool(0.5) {
            let th: f64 = rng.random_range(0.3..2.8);
            let (s, c) = th.sin_cos();
            d[(k, k)] = c64(r * c, 0.0);
            d[(k, k + 1)] = c64(-r * s, 0.0);
            d[(k + 1, k)] = c64(r * s, 0.0);
            d[(k + 1, k + 1)] = c64(r * c, 0.0);
            k += 2;
        } else {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            d[(k, k)] = c64(sign * r, 0.0);
            k += 1;
        }
    }
    loop {
        let v = real_gaussian(rng, n, n) + CMat::identity(n, n) * c64(1.5, 0.0);
        if linalg::cond(&v) < 50.0 {
            return &v * d * linalg::inverse(&v).unwrap();
        }
    }
}

/// Random realization with real coefficients.
pub fn random_real_realization(seed: u64, n_plus_max: usize) -> Realization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(1..=2);
    let np = rng.random_range(0..=n_plus_max);
    let nm = rng.random_range(0..=3);
    let a = real_with_spectrum(&mut rng, np, 0.1, 0.8, false);
    let alpha = real_with_spectrum(&mut rng, nm, 0.1, 0.9, true);
    Realization::new(
        real_gaussian(&mut rng, m, m),
        a,
        real_gaussian(&mut rng, np, m),
        real_gaussian(&mut rng, m, np),
        alpha,
        real_gaussian(&mut rng, nm, m),
        real_gaussian(&mut rng, m, nm),
    )
    .unwrap()
}

/// A point on the unit circle at least `gap` away from every entry of `avoid`.
pub fn circle_point(rng: &mut ChaCha8Rng, avoid: &[C64], gap: f64) -> C64 {
    loop {
        let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let z = c64(th.cos(), th.sin());
        if avoid.iter().all(|p| (z - p).norm() > gap) {
            return z;
        }
    }
}

/// Poles of `Omega` for the given realization: eigenvalues of `alpha` and
/// reciprocals of the nonzero eigenvalues of `A`.
pub fn poles(real: &Realization) -> Vec<C64> {
    let mut v = linalg::eigenvalues(real.alpha()).unwrap();
    v.extend(
        linalg::eigenvalues(real.a())
            .unwrap()
            .into_iter()
            .filter(|a| a.norm() > 1e-12)
            .map(|a| c64(1.0, 0.0) / a),
    );
    v
}
