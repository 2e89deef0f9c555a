//! Largest violation compatible with a given GHZ overlap, and threshold scans.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use rayon::prelude::*;

use crate::bell::{u_from_deltas, Family};
use crate::error::{Error, Result};
use crate::optimize::{optimize_settings, OptimizeOptions};
use crate::states::{make_rho_r, make_w_mixture};

/// `beta(r)` with the Lagrange-optimal spectrum behind it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapBound {
    pub n_qubits: usize,
    pub r: f64,
    pub beta_max: f64,
    /// `lambda_k = (1 - r)/(2^{N-1} - 1)` for `k >= 1`.
    pub lambda_rest: f64,
    /// `tan(eta) = ((1 - r)/sqrt(2^{N-1} - 1)) / r`.
    pub eta: f64,
    pub b0: f64,
    pub b_rest: f64,
}

pub fn beta_of_r(n_qubits: usize, r: f64) -> Result<OverlapBound> {
    if n_qubits < 2 {
        return Err(Error::InvalidArgument("overlap bound needs N >= 2".into()));
    }
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::InvalidArgument(format!("overlap r = {r} outside [0, 1]")));
    }
    let half = 2f64.powi(n_qubits as i32 - 1);
    let m = half - 1.0;
    let scale = half.sqrt();
    let beta_max = scale * (r * r + (1.0 - r).powi(2) / m).sqrt();
    let eta = ((1.0 - r) / m.sqrt()).atan2(r);
    let b0 = scale * eta.cos();
    let b_rest = ((half - b0 * b0).max(0.0) / m).sqrt();
    Ok(OverlapBound { n_qubits, r, beta_max, lambda_rest: (1.0 - r) / m, eta, b0, b_rest })
}

/// Smallest overlap with `beta(r) > 2^{(N-p)/2}`; `None` when every overlap qualifies.
pub fn overlap_requirement(n_qubits: usize, p: usize) -> Result<Option<f64>> {
    if n_qubits < 2 || p < 2 || p > n_qubits {
        return Err(Error::InvalidArgument(format!("need 2 <= p <= N, got p = {p}, N = {n_qubits}")));
    }
    let m = 2f64.powi(n_qubits as i32 - 1) - 1.0;
    let t = 2f64.powi(1 - p as i32);
    // (m + 1) r^2 - 2 r + 1 - m t = 0
    let disc = 1.0 - (m + 1.0) * (1.0 - m * t);
    if disc < 0.0 {
        return Ok(None);
    }
    let r = (1.0 + disc.sqrt()) / (m + 1.0);
    Ok((0.0..=1.0).contains(&r).then_some(r))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOptions {
    pub points: usize,
    pub refine_tol: f64,
    /// Search `delta_i` over `[-pi, pi)` instead of `[0, pi/2]`.
    pub widen: bool,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self { points: 64, refine_tol: 1e-6, widen: false }
    }
}

/// Maximizer of the three-qubit Uffink bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaGamma {
    pub value: f64,
    pub deltas: [f64; 3],
    pub gamma: f64,
}

/// `u_0 r + ubar (1 - r)` with `u_0 = max u_k` and `ubar` the rms of the other three.
fn uffink_bound_value(d: [f64; 3], gamma: f64, r: f64) -> f64 {
    let u = u_from_deltas(d, gamma);
    let mut top = 0;
    for k in 1..4 {
        if u[k] > u[top] {
            top = k;
        }
    }
    let rest: f64 = (0..4).filter(|&k| k != top).map(|k| u[k] * u[k]).sum();
    u[top] * r + (rest / 3.0).sqrt() * (1.0 - r)
}

/// Largest three-qubit Uffink value (unnormalized) over states with GHZ overlap `r`.
pub fn beta_gamma_of_r(r: f64, opts: &GridOptions) -> Result<BetaGamma> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::InvalidArgument(format!("overlap r = {r} outside [0, 1]")));
    }
    if opts.points < 2 || !(opts.refine_tol > 0.0) {
        return Err(Error::InvalidArgument("grid needs >= 2 points and a positive tolerance".into()));
    }
    // u_k depend on delta only through cos and k-signed sin: delta_i -> -delta_i relabels k,
    // delta_i -> pi - delta_i equals gamma -> pi - gamma, and permuting the delta_i relabels k.
    // Hence delta_1 <= delta_2 <= delta_3 in [0, pi/2] and gamma in [0, pi) cover everything.
    let (lo, hi) = if opts.widen { (-PI, PI) } else { (0.0, FRAC_PI_2) };
    let np = opts.points;
    let axis: Vec<f64> = (0..np).map(|i| lo + (hi - lo) * i as f64 / (np - 1) as f64).collect();
    let gammas: Vec<f64> = (0..np).map(|i| PI * i as f64 / np as f64).collect();
    let ordered = !opts.widen;
    let best = (0..np)
        .into_par_iter()
        .map(|i| {
            let mut best = (f64::NEG_INFINITY, [0.0; 3], 0.0);
            for j in if ordered { i..np } else { 0..np } {
                for k in if ordered { j..np } else { 0..np } {
                    let d = [axis[i], axis[j], axis[k]];
                    for &g in &gammas {
                        let v = uffink_bound_value(d, g, r);
                        if v > best.0 {
                            best = (v, d, g);
                        }
                    }
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::NEG_INFINITY, [0.0; 3], 0.0), |acc, x| if x.0 > acc.0 { x } else { acc });

    // compass search from the best grid point
    let mut x = [best.1[0], best.1[1], best.1[2], best.2];
    let mut fx = best.0;
    let mut step = (hi - lo) / (np - 1) as f64;
    let eval = |x: &[f64; 4]| uffink_bound_value([x[0], x[1], x[2]], x[3], r);
    while step >= opts.refine_tol {
        let mut moved = false;
        for i in 0..4 {
            for s in [step, -step] {
                let mut y = x;
                y[i] += s;
                let v = eval(&y);
                if v > fx {
                    x = y;
                    fx = v;
                    moved = true;
                }
            }
        }
        if !moved {
            step /= 2.0;
        }
    }
    Ok(BetaGamma { value: fx, deltas: [x[0], x[1], x[2]], gamma: x[3].rem_euclid(PI) })
}

/// Bisection result with the tolerance it was run to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub value: f64,
    pub tol: f64,
}

/// Bisects a monotone predicate that is false at `lo` and true at `hi`.
pub fn threshold_scan(mut predicate: impl FnMut(f64) -> Result<bool>, mut lo: f64, mut hi: f64, tol: f64) -> Result<Threshold> {
    if !(tol > 0.0) || !(lo < hi) {
        return Err(Error::InvalidArgument(format!("bad bracket [{lo}, {hi}] or tolerance {tol}")));
    }
    if predicate(lo)? {
        return Err(Error::NonBracketing(format!("predicate already holds at {lo}")));
    }
    if !predicate(hi)? {
        return Err(Error::NonBracketing(format!("predicate fails at {hi}")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if predicate(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Threshold { value: 0.5 * (lo + hi), tol })
}

/// Margin above a threshold value that counts as a strict excess.
pub const STRICT_MARGIN: f64 = 1e-9;

/// Overlap above which `beta(3, r)` exceeds `sqrt 2`.
pub fn r3_threshold(tol: f64) -> Result<Threshold> {
    threshold_scan(|r| Ok(beta_of_r(3, r)?.beta_max > SQRT_2), 0.5, 1.0, tol)
}

/// Overlap above which the three-qubit Uffink bound exceeds `sqrt 2`.
pub fn uffink_threshold(grid: &GridOptions, tol: f64) -> Result<Threshold> {
    threshold_scan(|r| Ok(beta_gamma_of_r(r, grid)?.value > SQRT_2 + STRICT_MARGIN), 0.5, 0.9, tol)
}

/// Overlap above which the optimized Mermin value of `rho_3(r)` exceeds `sqrt 2`.
pub fn mermin_threshold(opts: &OptimizeOptions, tol: f64) -> Result<Threshold> {
    threshold_scan(|r| Ok(optimize_settings(&make_rho_r(3, r)?, Family::Mbk, opts)?.beta > SQRT_2 + STRICT_MARGIN), 0.6, 0.8, tol)
}

/// Angle above which the W-family state violates the Uffink inequality.
pub fn w_uffink_threshold(opts: &OptimizeOptions, tol: f64) -> Result<Threshold> {
    threshold_scan(|a| Ok(optimize_settings(&make_w_mixture(a)?, Family::Uffink(0.0), opts)?.beta > 1.0 + STRICT_MARGIN), 0.2, 0.6, tol)
}

/// Angle above which the W-family state reaches MBK value `sqrt 2`, the same level as the Uffink test.
pub fn w_mbk_threshold(opts: &OptimizeOptions, tol: f64) -> Result<Threshold> {
    threshold_scan(|a| Ok(optimize_settings(&make_w_mixture(a)?, Family::Mbk, opts)?.beta > SQRT_2 + STRICT_MARGIN), 0.2, 0.8, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_of_r_examples() {
        assert!((beta_of_r(2, 0.5).unwrap().beta_max - 1.0).abs() < 1e-15);
        let r = (1.0 + 3f64.sqrt()) / 4.0;
        assert!((beta_of_r(3, r).unwrap().beta_max - SQRT_2).abs() < 1e-14);
        for n in 2..=8 {
            let b = beta_of_r(n, 1.0).unwrap();
            assert!((b.beta_max - 2f64.powf((n as f64 - 1.0) / 2.0)).abs() < 1e-12);
        }
        assert!(beta_of_r(3, 1.2).is_err());
    }

    #[test]
    fn diagnostics_reproduce_beta() {
        for n in 2..=6 {
            for r in [0.1, 0.5, 0.8] {
                let b = beta_of_r(n, r).unwrap();
                let m = 2f64.powi(n as i32 - 1) - 1.0;
                let again = b.b0 * r + m * b.b_rest * b.lambda_rest;
                assert!((again - b.beta_max).abs() < 1e-12);
                assert!((b.b0 * b.b0 + m * b.b_rest * b.b_rest - (m + 1.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn requirement_examples() {
        let r = overlap_requirement(3, 2).unwrap().unwrap();
        assert!((r - (1.0 + 3f64.sqrt()) / 4.0).abs() < 1e-15);
        assert!((overlap_requirement(2, 2).unwrap().unwrap() - 0.5).abs() < 1e-15);
        let big = overlap_requirement(40, 2).unwrap().unwrap();
        assert!((big - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
        assert!(overlap_requirement(3, 4).is_err());
    }

    #[test]
    fn uffink_bound_endpoints() {
        let coarse = GridOptions { points: 16, ..Default::default() };
        let one = beta_gamma_of_r(1.0, &coarse).unwrap();
        assert!((one.value - 2.0).abs() < 1e-9);
        let half = beta_gamma_of_r(0.5, &coarse).unwrap();
        assert!(half.value <= SQRT_2 + STRICT_MARGIN);
    }

    #[test]
    fn bisection_contract() {
        let t = threshold_scan(|x| Ok(x > 0.3), 0.0, 1.0, 1e-10).unwrap();
        assert!((t.value - 0.3).abs() < 1e-10);
        assert!(matches!(threshold_scan(|_| Ok(true), 0.0, 1.0, 1e-3), Err(Error::NonBracketing(_))));
        assert!(matches!(threshold_scan(|_| Ok(false), 0.0, 1.0, 1e-3), Err(Error::NonBracketing(_))));
    }

    #[test]
    fn r3_closed_form() {
        let t = r3_threshold(1e-12).unwrap();
        assert!((t.value - (1.0 + 3f64.sqrt()) / 4.0).abs() < 1e-9);
    }
}
