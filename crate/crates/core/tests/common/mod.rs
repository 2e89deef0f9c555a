#![allow(dead_code)]

use std::f64::consts::TAU;

use belldist::bell::{mbk_operator, violation, MeasurementSettings};
use belldist::states::{make_ghz, random_density};
use belldist::{BellOperator, DensityMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_planar(rng: &mut ChaCha8Rng, n: usize) -> MeasurementSettings {
    let angles: Vec<(f64, f64)> = (0..n).map(|_| (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU))).collect();
    MeasurementSettings::planar(&angles).unwrap()
}

pub fn random_unit(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let z: f64 = rng.random_range(-1.0..1.0);
    let phi = rng.random_range(0.0..TAU);
    let s = (1.0 - z * z).sqrt();
    [s * phi.cos(), s * phi.sin(), z]
}

/// Optimal planar settings with every angle jittered by up to `spread`.
pub fn jittered_optimal(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> MeasurementSettings {
    let base = MeasurementSettings::optimal(n, 0.0);
    let angles: Vec<(f64, f64)> = base
        .angles()
        .unwrap()
        .iter()
        .map(|&(a, b)| (a + rng.random_range(-spread..spread), b + rng.random_range(-spread..spread)))
        .collect();
    MeasurementSettings::planar(&angles).unwrap()
}

/// GHZ mixed with a random state, measured with jittered optimal MBK settings.
pub fn noisy_instance(seed: u64, n: usize) -> (DensityMatrix, BellOperator, f64) {
    let mut r = rng(seed);
    let v = r.random_range(0.5..1.0);
    let rank = r.random_range(1..=1usize << n);
    let noise = random_density(seed ^ 0xA5A5, n, rank).unwrap();
    let rho = make_ghz(n).unwrap().mix(v, &noise).unwrap();
    let b = mbk_operator(&jittered_optimal(&mut r, n, 0.4)).unwrap();
    let beta = violation(&rho, &b).unwrap().beta;
    (rho, b, beta)
}

/// First `count` violating noisy instances, scanning seeds from `start`.
pub fn violating_instances(start: u64, n: usize, count: usize) -> Vec<(u64, DensityMatrix, BellOperator, f64)> {
    let mut out = Vec::with_capacity(count);
    let mut seed = start;
    while out.len() < count {
        let (rho, b, beta) = noisy_instance(seed, n);
        if beta > 1.0 {
            out.push((seed, rho, b, beta));
        }
        seed += 1;
    }
    out
}
