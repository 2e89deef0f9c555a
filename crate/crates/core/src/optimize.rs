//! Multi-start coordinate ascent over measurement settings and local unitaries.
//!
//! Every coordinate is an angle with period `2 pi`. One pass over a coordinate scans
//! an evenly spaced grid over the full period, then refines the best grid cell by
//! golden-section search.

use std::f64::consts::{SQRT_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bell::{mbk_expectations, svetlichny_gamma, wrap_angle, Family, MeasurementSettings};
use crate::error::{Error, Result};
use crate::qlinalg::{c, kron_vec, ComplexMatrix, DensityMatrix, C64};

/// Seed offset between restarts.
const RESTART_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOptions {
    pub restarts: usize,
    pub grid_points: usize,
    /// Golden-section tolerance on each angle (rad).
    pub tol: f64,
    pub seed: u64,
    /// Restrict Bloch vectors to the xy-plane.
    pub planar_only: bool,
    pub max_sweeps: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self { restarts: 16, grid_points: 24, tol: 1e-6, seed: 0, planar_only: false, max_sweeps: 100 }
    }
}

impl OptimizeOptions {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("restarts must be at least 1".into()));
        }
        if self.grid_points < 3 {
            return Err(Error::InvalidArgument("grid needs at least 3 points".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance {} must be positive", self.tol)));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidArgument("max_sweeps must be at least 1".into()));
        }
        Ok(())
    }

    fn restart_seed(&self, i: usize) -> u64 {
        self.seed.wrapping_add((i as u64).wrapping_mul(RESTART_STRIDE))
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

fn golden_max(f: &mut impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Maximizes `f` from `x` by cyclic coordinate updates.
pub fn coordinate_ascent(f: &impl Fn(&[f64]) -> f64, mut x: Vec<f64>, opts: &OptimizeOptions) -> (Vec<f64>, f64) {
    let h = TAU / opts.grid_points as f64;
    let mut fx = f(&x);
    for _ in 0..opts.max_sweeps {
        let start = fx;
        for i in 0..x.len() {
            let x0 = x[i];
            let mut best = (x0, fx);
            for j in 1..opts.grid_points {
                x[i] = x0 + j as f64 * h;
                let v = f(&x);
                if v > best.1 {
                    best = (x[i], v);
                }
            }
            let mut line = |t: f64| {
                x[i] = t;
                f(&x)
            };
            let (t, v) = golden_max(&mut line, best.0 - h, best.0 + h, opts.tol);
            if v > best.1 {
                best = (t, v);
            }
            x[i] = wrap_angle(best.0);
            fx = best.1;
        }
        if fx - start <= 1e-13 * fx.abs().max(1.0) {
            break;
        }
    }
    (x, fx)
}

/// Runs `coordinate_ascent` from `restarts` seeded random points and keeps the best.
///
/// Ties go to the lowest restart index, so adding restarts never lowers the result.
fn multi_start(f: &(impl Fn(&[f64]) -> f64 + Sync), dim: usize, opts: &OptimizeOptions) -> Result<Run> {
    opts.validate()?;
    let runs: Vec<(Vec<f64>, f64)> = (0..opts.restarts)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.restart_seed(i));
            let x0: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..TAU)).collect();
            coordinate_ascent(f, x0, opts)
        })
        .collect();
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.1 > runs[best].1 {
            best = i;
        }
    }
    let per_restart = runs.iter().map(|r| r.1).collect();
    let (x, value) = runs.into_iter().nth(best).expect("at least one restart");
    Ok(Run { x, value, restart: best, per_restart })
}

struct Run {
    x: Vec<f64>,
    value: f64,
    restart: usize,
    per_restart: Vec<f64>,
}

fn spherical(theta: f64, phi: f64) -> [f64; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [st * cp, st * sp, ct]
}

fn settings_from(x: &[f64], n: usize, planar: bool) -> MeasurementSettings {
    if planar {
        let pairs: Vec<(f64, f64)> = (0..n).map(|i| (x[2 * i], x[2 * i + 1])).collect();
        MeasurementSettings::planar(&pairs).expect("finite angles")
    } else {
        let (a, b): (Vec<_>, Vec<_>) = (0..n).map(|i| (spherical(x[4 * i], x[4 * i + 1]), spherical(x[4 * i + 2], x[4 * i + 3]))).unzip();
        MeasurementSettings::general(a, b).expect("unit vectors")
    }
}

/// Best settings found and the normalized violation they reach.
#[derive(Debug, Clone)]
pub struct SettingsOptimum {
    pub settings: MeasurementSettings,
    /// Mixing angle of the Uffink-family member that attains `beta`.
    pub gamma: Option<f64>,
    pub beta: f64,
    pub restart: usize,
    pub per_restart: Vec<f64>,
}

/// Maximizes the normalized violation of `family` over measurement settings.
///
/// `Uffink` maximizes the quadratic form `sqrt(<M>^2 + <M'>^2) / sqrt 2`; its `gamma`
/// is ignored and the attaining angle is returned.
pub fn optimize_settings(rho: &DensityMatrix, family: Family, opts: &OptimizeOptions) -> Result<SettingsOptimum> {
    let n = rho.n_qubits();
    if matches!(family, Family::WwzbSpectral) {
        return Err(Error::InvalidArgument("spectral-form operators have no settings to optimize".into()));
    }
    if matches!(family, Family::Chsh) && n != 2 {
        return Err(Error::InvalidArgument(format!("CHSH needs 2 qubits, got {n}")));
    }
    let planar = opts.planar_only;
    let dim = if planar { 2 * n } else { 4 * n };
    let m = rho.matrix();
    let sv = svetlichny_gamma(n);
    let value = |pair: (f64, f64)| -> f64 {
        let (a, b) = pair;
        match family {
            Family::Mbk | Family::Chsh => a,
            Family::MbkPrime => b,
            Family::Uffink(_) => a.hypot(b) / SQRT_2,
            Family::Svetlichny => (sv.cos() * a + sv.sin() * b) / SQRT_2,
            Family::WwzbSpectral => unreachable!(),
        }
    };
    let f = |x: &[f64]| value(mbk_expectations(m, &settings_from(x, n, planar)).expect("dimensions checked"));
    let run = multi_start(&f, dim, opts)?;
    let settings = settings_from(&run.x, n, planar);
    let gamma = match family {
        Family::Uffink(_) => {
            let (a, b) = mbk_expectations(m, &settings)?;
            Some(wrap_angle(b.atan2(a)))
        }
        Family::Svetlichny => Some(sv),
        _ => None,
    };
    Ok(SettingsOptimum { settings, gamma, beta: run.value, restart: run.restart, per_restart: run.per_restart })
}

/// `Rz(a) Ry(b) Rz(c)`.
pub fn euler_unitary(a: f64, b: f64, cc: f64) -> ComplexMatrix {
    let rz = |t: f64| ComplexMatrix::from_diagonal(&[C64::from_polar(1.0, -t / 2.0), C64::from_polar(1.0, t / 2.0)]);
    let (s, co) = (b / 2.0).sin_cos();
    let ry = ComplexMatrix::from_row_major(2, vec![c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)]).expect("2x2");
    &(&rz(a) * &ry) * &rz(cc)
}

/// `(x)u^dagger |GHZ_N>`, whose overlap with `rho` is the rotated GHZ fidelity.
fn rotated_ghz(us: &[ComplexMatrix]) -> Vec<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut zero = vec![c(1.0, 0.0)];
    let mut one = vec![c(1.0, 0.0)];
    for u in us {
        // u^dagger |0> and u^dagger |1> are the conjugated rows of u
        zero = kron_vec(&zero, &[u[(0, 0)].conj(), u[(0, 1)].conj()]);
        one = kron_vec(&one, &[u[(1, 0)].conj(), u[(1, 1)].conj()]);
    }
    zero.iter().zip(&one).map(|(a, b)| (a + b) * s).collect()
}

#[derive(Debug, Clone)]
pub struct OverlapOptimum {
    /// `u_i` such that `<GHZ| (x)u rho (x)u^dagger |GHZ> = r_max`.
    pub unitaries: Vec<ComplexMatrix>,
    pub euler_angles: Vec<[f64; 3]>,
    pub r_max: f64,
    pub restart: usize,
    pub per_restart: Vec<f64>,
}

/// Z-Y-Z angles of `u` up to a global phase.
pub fn euler_angles(u: &ComplexMatrix) -> [f64; 3] {
    let b = 2.0 * u[(1, 0)].norm().atan2(u[(0, 0)].norm());
    let sum = if u[(0, 0)].norm() > 1e-12 { u[(1, 1)].arg() - u[(0, 0)].arg() } else { 0.0 };
    let diff = if u[(1, 0)].norm() > 1e-12 { u[(1, 0)].arg() - (-u[(0, 1)]).arg() } else { 0.0 };
    [wrap_angle(0.5 * (sum + diff)), b, wrap_angle(0.5 * (sum - diff))]
}

fn axis_rotation(axis: usize, t: f64) -> ComplexMatrix {
    let (s, co) = (t / 2.0).sin_cos();
    let v = match axis {
        0 => [c(co, 0.0), c(0.0, -s), c(0.0, -s), c(co, 0.0)],
        1 => [c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)],
        _ => [c(co, -s), c(0.0, 0.0), c(0.0, 0.0), c(co, s)],
    };
    ComplexMatrix::from_row_major(2, v.to_vec()).expect("2x2")
}

/// Maximizes the GHZ overlap over local unitaries.
///
/// Each sweep moves every qubit along the three rotation generators around the current
/// unitaries, then folds the moves into them.
pub fn optimize_ghz_overlap(rho: &DensityMatrix, opts: &OptimizeOptions) -> Result<OverlapOptimum> {
    opts.validate()?;
    let n = rho.n_qubits();
    let m = rho.matrix();
    let apply = |base: &[ComplexMatrix], x: &[f64]| -> Vec<ComplexMatrix> {
        (0..n)
            .map(|i| {
                let r = &(&axis_rotation(0, x[3 * i]) * &axis_rotation(1, x[3 * i + 1])) * &axis_rotation(2, x[3 * i + 2]);
                &r * &base[i]
            })
            .collect()
    };
    let overlap = |us: &[ComplexMatrix]| {
        let phi = rotated_ghz(us);
        m.sandwich(&phi, &phi).re
    };
    let one_sweep = OptimizeOptions { max_sweeps: 1, ..opts.clone() };
    let runs: Vec<(Vec<ComplexMatrix>, f64)> = (0..opts.restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.restart_seed(k));
            let mut base: Vec<ComplexMatrix> =
                (0..n).map(|_| euler_unitary(rng.random_range(0.0..TAU), rng.random_range(0.0..TAU), rng.random_range(0.0..TAU))).collect();
            let mut fx = overlap(&base);
            for _ in 0..opts.max_sweeps {
                let f = |x: &[f64]| overlap(&apply(&base, x));
                let (x, v) = coordinate_ascent(&f, vec![0.0; 3 * n], &one_sweep);
                let gain = v - fx;
                if gain > 0.0 {
                    base = apply(&base, &x);
                    fx = v;
                }
                if gain <= 1e-13 * fx.abs().max(1.0) {
                    break;
                }
            }
            (base, fx)
        })
        .collect();
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.1 > runs[best].1 {
            best = i;
        }
    }
    let per_restart = runs.iter().map(|r| r.1).collect();
    let base = &runs[best].0;
    let euler: Vec<[f64; 3]> = base.iter().map(euler_angles).collect();
    let unitaries: Vec<ComplexMatrix> = euler.iter().map(|e| euler_unitary(e[0], e[1], e[2])).collect();
    Ok(OverlapOptimum { r_max: overlap(&unitaries), unitaries, euler_angles: euler, restart: best, per_restart })
}
