//! Seeded random instances shared by `certify` and the acceptance suite.

use std::f64::consts::TAU;

use belldist::bell::{mbk_operator, violation};
use belldist::states::{make_ghz, random_density};
use belldist::{BellOperator, DensityMatrix, MeasurementSettings};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CliError;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_planar(rng: &mut ChaCha8Rng, n: usize) -> Result<MeasurementSettings, CliError> {
    let angles: Vec<(f64, f64)> = (0..n).map(|_| (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU))).collect();
    Ok(MeasurementSettings::planar(&angles)?)
}

/// GHZ-optimal planar settings with each angle moved by up to `spread`.
pub fn jittered_optimal(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> Result<MeasurementSettings, CliError> {
    let base = MeasurementSettings::optimal(n, 0.0);
    let angles: Vec<(f64, f64)> = base
        .angles()
        .expect("optimal settings are planar")
        .iter()
        .map(|&(a, b)| (a + rng.random_range(-spread..spread), b + rng.random_range(-spread..spread)))
        .collect();
    Ok(MeasurementSettings::planar(&angles)?)
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub seed: u64,
    pub rho: DensityMatrix,
    pub operator: BellOperator,
    pub beta: f64,
}

/// `v |GHZ><GHZ| + (1 - v) rho_random` against jittered optimal MBK settings.
pub fn noisy_instance(seed: u64, n: usize) -> Result<Instance, CliError> {
    let mut r = rng(seed);
    let v = r.random_range(0.5..1.0);
    let rank = r.random_range(1..=1usize << n);
    let noise = random_density(seed ^ 0xA5A5, n, rank)?;
    let rho = make_ghz(n)?.mix(v, &noise)?;
    let operator = mbk_operator(&jittered_optimal(&mut r, n, 0.4)?)?;
    let beta = violation(&rho, &operator)?.beta;
    Ok(Instance { seed, rho, operator, beta })
}

/// The first `count` instances with `beta > 1`, scanning seeds upward from `start`.
pub fn violating_instances(start: u64, n: usize, count: usize) -> Result<Vec<Instance>, CliError> {
    let mut out = Vec::with_capacity(count);
    let mut seed = start;
    while out.len() < count {
        let inst = noisy_instance(seed, n)?;
        if inst.beta > 1.0 {
            out.push(inst);
        }
        seed += 1;
    }
    Ok(out)
}
