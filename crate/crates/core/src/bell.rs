//! Bell operators of the two-setting correlation family.
//!
//! Tensor order follows the crate convention: qubit `N` is the last Kronecker
//! factor, so the recursion appends `sigma(n_N)` on the right.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2, TAU};
use std::fmt;

use crate::error::{Error, Result};
use crate::qlinalg::{c, cis, conjugate_local, contract_qubit, eigenvalues_hermitian, kron, sigma_dot, ComplexMatrix, DensityMatrix, C64};
use crate::states::{kbar, n_pairs};

const UNIT_TOL: f64 = 1e-12;

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn scale3(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub(crate) fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y >= TAU {
        0.0
    } else {
        y
    }
}

/// Unit vector in the xy-plane at angle `alpha`.
pub fn planar_vector(alpha: f64) -> [f64; 3] {
    [alpha.cos(), alpha.sin(), 0.0]
}

/// Two unit Bloch vectors per qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSettings {
    n: Vec<[f64; 3]>,
    n_prime: Vec<[f64; 3]>,
    angles: Option<Vec<(f64, f64)>>,
}

impl MeasurementSettings {
    /// Planar settings from `(alpha_i, alpha'_i)` pairs.
    pub fn planar(angles: &[(f64, f64)]) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::InvalidArgument("settings need at least one qubit".into()));
        }
        if angles.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidArgument("non-finite angle".into()));
        }
        Ok(Self {
            n: angles.iter().map(|&(a, _)| planar_vector(a)).collect(),
            n_prime: angles.iter().map(|&(_, b)| planar_vector(b)).collect(),
            angles: Some(angles.to_vec()),
        })
    }

    pub fn general(n: Vec<[f64; 3]>, n_prime: Vec<[f64; 3]>) -> Result<Self> {
        if n.is_empty() || n.len() != n_prime.len() {
            return Err(Error::InvalidArgument(format!("need matching nonempty vector lists, got {} and {}", n.len(), n_prime.len())));
        }
        for v in n.iter().chain(&n_prime) {
            let norm = norm3(*v);
            if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidArgument(format!("Bloch vector {v:?} has norm {norm}")));
            }
        }
        Ok(Self { n, n_prime, angles: None })
    }

    /// Planar settings reaching `tr(GHZ U_gamma) = 2^{(N-1)/2}`.
    pub fn optimal(n_qubits: usize, gamma: f64) -> Self {
        let mut angles = vec![(0.0, FRAC_PI_2); n_qubits];
        let a1 = -(n_qubits as f64 - 1.0) * FRAC_PI_4 - gamma;
        angles[0] = (a1, a1 + FRAC_PI_2);
        Self::planar(&angles).expect("finite angles")
    }

    pub fn n_qubits(&self) -> usize {
        self.n.len()
    }

    /// Unprimed vector of 0-based qubit `i`.
    pub fn n(&self, i: usize) -> [f64; 3] {
        self.n[i]
    }

    pub fn n_prime(&self, i: usize) -> [f64; 3] {
        self.n_prime[i]
    }

    pub fn is_planar(&self) -> bool {
        self.angles.is_some()
    }

    pub fn angles(&self) -> Option<&[(f64, f64)]> {
        self.angles.as_deref()
    }

    /// `delta_i = alpha_i - alpha'_i` for planar settings.
    pub fn deltas(&self) -> Option<Vec<f64>> {
        self.angles.as_ref().map(|a| a.iter().map(|(x, y)| x - y).collect())
    }

    /// Primed and unprimed vectors exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            n: self.n_prime.clone(),
            n_prime: self.n.clone(),
            angles: self.angles.as_ref().map(|a| a.iter().map(|&(x, y)| (y, x)).collect()),
        }
    }

    /// First `m` qubits.
    pub fn truncated(&self, m: usize) -> Self {
        assert!(m >= 1 && m <= self.n_qubits());
        Self { n: self.n[..m].to_vec(), n_prime: self.n_prime[..m].to_vec(), angles: self.angles.as_ref().map(|a| a[..m].to_vec()) }
    }

    /// Qubit `i + 1` of the result carries the settings of qubit `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let n = self.n_qubits();
        let mut seen = vec![false; n + 1];
        if order.len() != n || order.iter().any(|&q| q == 0 || q > n || std::mem::replace(&mut seen[q], true)) {
            return Err(Error::InvalidArgument(format!("{order:?} is not a permutation of 1..={n}")));
        }
        Ok(Self {
            n: order.iter().map(|&q| self.n[q - 1]).collect(),
            n_prime: order.iter().map(|&q| self.n_prime[q - 1]).collect(),
            angles: self.angles.as_ref().map(|a| order.iter().map(|&q| a[q - 1]).collect()),
        })
    }

    /// Per-qubit SU(2) frames `V_i` and planar settings with `V sigma(p) V^dagger = sigma(n)`.
    pub fn planar_frame(&self) -> (Vec<ComplexMatrix>, MeasurementSettings) {
        if let Some(a) = &self.angles {
            return (vec![ComplexMatrix::identity(2); a.len()], self.clone());
        }
        let mut frames = Vec::with_capacity(self.n_qubits());
        let mut angles = Vec::with_capacity(self.n_qubits());
        for (&n, &np) in self.n.iter().zip(&self.n_prime) {
            let normal = plane_normal(n, np);
            let (axis, phi) = rotation_from_z(normal);
            frames.push(su2(axis, phi));
            let p = rotate(n, axis, -phi);
            let pp = rotate(np, axis, -phi);
            angles.push((p[1].atan2(p[0]), pp[1].atan2(pp[0])));
        }
        (frames, MeasurementSettings::planar(&angles).expect("finite angles"))
    }
}

fn plane_normal(n: [f64; 3], np: [f64; 3]) -> [f64; 3] {
    let x = cross(n, np);
    let len = norm3(x);
    if len > 1e-9 {
        return scale3(x, 1.0 / len);
    }
    // parallel vectors: any direction perpendicular to n
    let e = if n[0].abs() <= n[1].abs() && n[0].abs() <= n[2].abs() {
        [1.0, 0.0, 0.0]
    } else if n[1].abs() <= n[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let x = cross(n, e);
    scale3(x, 1.0 / norm3(x))
}

/// Axis and angle of a rotation taking z onto `m`.
fn rotation_from_z(m: [f64; 3]) -> ([f64; 3], f64) {
    let axis = cross([0.0, 0.0, 1.0], m);
    let s = norm3(axis);
    let phi = m[2].clamp(-1.0, 1.0).acos();
    if s < 1e-15 {
        return ([1.0, 0.0, 0.0], if m[2] > 0.0 { 0.0 } else { PI });
    }
    (scale3(axis, 1.0 / s), phi)
}

fn rotate(v: [f64; 3], axis: [f64; 3], phi: f64) -> [f64; 3] {
    let (s, co) = phi.sin_cos();
    let kxv = cross(axis, v);
    let kdv = dot(axis, v);
    [
        v[0] * co + kxv[0] * s + axis[0] * kdv * (1.0 - co),
        v[1] * co + kxv[1] * s + axis[1] * kdv * (1.0 - co),
        v[2] * co + kxv[2] * s + axis[2] * kdv * (1.0 - co),
    ]
}

/// `exp(-i phi/2 axis.sigma)`.
fn su2(axis: [f64; 3], phi: f64) -> ComplexMatrix {
    let (s, co) = (phi / 2.0).sin_cos();
    &ComplexMatrix::identity(2).scale(co) + &sigma_dot(axis).scale_c(c(0.0, -s))
}

/// Which member of the family an operator is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Mbk,
    MbkPrime,
    Uffink(f64),
    Svetlichny,
    Chsh,
    WwzbSpectral,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Mbk => "mbk",
            Family::MbkPrime => "mbk-prime",
            Family::Uffink(_) => "uffink",
            Family::Svetlichny => "svetlichny",
            Family::Chsh => "chsh",
            Family::WwzbSpectral => "wwzb-spectral",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Uffink(g) => write!(f, "uffink(gamma={g})"),
            other => f.write_str(other.name()),
        }
    }
}

/// `B = (x)V [sum_k b_k (Q_k^+ - Q_k^-)] (x)V^dagger`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub b: Vec<f64>,
    pub theta: Vec<f64>,
    pub local_basis: Vec<ComplexMatrix>,
}

impl SpectralData {
    pub fn n_qubits(&self) -> usize {
        self.local_basis.len()
    }

    pub fn sum_b_squared(&self) -> f64 {
        self.b.iter().map(|x| x * x).sum()
    }

    /// `{+b_k, -b_k}` sorted ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.b.iter().flat_map(|&x| [x, -x]).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Operator in the computational basis before the local frame change.
    pub fn frame_matrix(&self) -> ComplexMatrix {
        let n = self.n_qubits();
        let mut m = ComplexMatrix::zeros(1 << n);
        for (k, (&b, &t)) in self.b.iter().zip(&self.theta).enumerate() {
            let z = cis(t) * b;
            m[(k, kbar(k, n))] = z;
            m[(kbar(k, n), k)] = z.conj();
        }
        m
    }

    pub fn assemble(&self) -> Result<ComplexMatrix> {
        conjugate_local(&self.frame_matrix(), &self.local_basis)
    }
}

/// `matrix = C1 (x) sigma(n_N) + C2 (x) sigma(n'_N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub n_last: [f64; 3],
    pub n_last_prime: [f64; 3],
    pub c1: ComplexMatrix,
    pub c2: ComplexMatrix,
}

impl Split {
    pub fn reassemble(&self) -> Result<ComplexMatrix> {
        Ok(&kron(&self.c1, &sigma_dot(self.n_last))? + &kron(&self.c2, &sigma_dot(self.n_last_prime))?)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Origin {
    settings: MeasurementSettings,
    gamma: f64,
}

/// A Hermitian Bell observable normalized by its local-variable bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BellOperator {
    n_qubits: usize,
    matrix: ComplexMatrix,
    lv_bound: f64,
    family: Family,
    spectral: Option<SpectralData>,
    split: Option<Split>,
    origin: Option<Origin>,
}

impl BellOperator {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn lv_bound(&self) -> f64 {
        self.lv_bound
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn spectral(&self) -> Option<&SpectralData> {
        self.spectral.as_ref()
    }

    pub fn split(&self) -> Option<&Split> {
        self.split.as_ref()
    }

    pub fn settings(&self) -> Option<&MeasurementSettings> {
        self.origin.as_ref().map(|o| &o.settings)
    }

    /// Mixing angle in `cos(gamma) M + sin(gamma) M'`, when built from settings.
    pub fn gamma(&self) -> Option<f64> {
        self.origin.as_ref().map(|o| o.gamma)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        eigenvalues_hermitian(&self.matrix)
    }

    /// `-B`, realized as the same family member at `gamma + pi`.
    pub fn negated(&self) -> BellOperator {
        BellOperator {
            n_qubits: self.n_qubits,
            matrix: self.matrix.scale(-1.0),
            lv_bound: self.lv_bound,
            family: match self.family {
                Family::Uffink(g) => Family::Uffink(wrap_angle(g + PI)),
                f => f,
            },
            spectral: self.spectral.as_ref().map(|s| SpectralData {
                b: s.b.clone(),
                theta: s.theta.iter().map(|t| wrap_angle(t + PI)).collect(),
                local_basis: s.local_basis.clone(),
            }),
            split: self.split.as_ref().map(|s| Split {
                n_last: s.n_last,
                n_last_prime: s.n_last_prime,
                c1: s.c1.scale(-1.0),
                c2: s.c2.scale(-1.0),
            }),
            origin: self.origin.as_ref().map(|o| Origin { settings: o.settings.clone(), gamma: wrap_angle(o.gamma + PI) }),
        }
    }

    /// The reductions `(B+, B-)` on the first `N - 1` qubits with `B+ = C1 + C2`, `B- = C1 - C2`.
    pub fn reductions(&self) -> Result<(BellOperator, BellOperator)> {
        let origin = self.origin.as_ref().ok_or(Error::MissingSplit)?;
        if self.n_qubits < 2 {
            return Err(Error::Precondition("reduction needs at least two qubits".into()));
        }
        let s = origin.settings.truncated(self.n_qubits - 1);
        let plus = recursion_operator(&s, origin.gamma, self.lv_bound, reduced_family(self.lv_bound, origin.gamma))?;
        let g2 = wrap_angle(origin.gamma + FRAC_PI_2);
        let minus = recursion_operator(&s, g2, self.lv_bound, reduced_family(self.lv_bound, g2))?;
        Ok((plus, minus))
    }

    /// Same family on permuted parties: qubit `i + 1` takes the role of `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<BellOperator> {
        let origin = self.origin.as_ref().ok_or(Error::MissingSplit)?;
        recursion_operator(&origin.settings.permuted(order)?, origin.gamma, self.lv_bound, self.family)
    }
}

fn near_multiple(x: f64, target: f64) -> bool {
    let d = wrap_angle(x - target);
    d < 1e-12 || TAU - d < 1e-12
}

fn reduced_family(lv_bound: f64, gamma: f64) -> Family {
    if lv_bound == 1.0 {
        if near_multiple(gamma, FRAC_PI_2) || near_multiple(gamma, 3.0 * FRAC_PI_2) {
            Family::MbkPrime
        } else {
            Family::Mbk
        }
    } else {
        Family::Uffink(wrap_angle(gamma))
    }
}

/// `(M_N, M'_N)` by the recursion.
fn mbk_pair(s: &MeasurementSettings) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let mut m = sigma_dot(s.n[0]);
    let mut mp = sigma_dot(s.n_prime[0]);
    for i in 1..s.n_qubits() {
        let a = sigma_dot(s.n[i]);
        let b = sigma_dot(s.n_prime[i]);
        let sum = &a + &b;
        let diff = &a - &b;
        let next_m = (&kron(&m, &sum)? + &kron(&mp, &diff)?).scale(0.5);
        let next_mp = (&kron(&mp, &sum)? - &kron(&m, &diff)?).scale(0.5);
        m = next_m;
        mp = next_mp;
    }
    Ok((m, mp))
}

/// Anti-diagonal `B[k, kbar]` of `cos(gamma) M + sin(gamma) M'` for planar settings.
fn planar_anti_diagonal(s: &MeasurementSettings, gamma: f64) -> Vec<C64> {
    let angles = s.angles().expect("planar settings");
    // sigma(alpha) has <0|s|1> = e^{-i alpha}, <1|s|0> = e^{i alpha}
    let leaf = |a: f64| vec![cis(-a), cis(a)];
    let mut m = leaf(angles[0].0);
    let mut mp = leaf(angles[0].1);
    for &(a, b) in &angles[1..] {
        let (va, vb) = (leaf(a), leaf(b));
        let sum: Vec<C64> = va.iter().zip(&vb).map(|(x, y)| x + y).collect();
        let diff: Vec<C64> = va.iter().zip(&vb).map(|(x, y)| x - y).collect();
        let kv = |x: &[C64], y: &[C64]| crate::qlinalg::kron_vec(x, y);
        let next_m: Vec<C64> = kv(&m, &sum).iter().zip(kv(&mp, &diff)).map(|(x, y)| (x + y) * 0.5).collect();
        let next_mp: Vec<C64> = kv(&mp, &sum).iter().zip(kv(&m, &diff)).map(|(x, y)| (x - y) * 0.5).collect();
        m = next_m;
        mp = next_mp;
    }
    m.iter().zip(&mp).map(|(x, y)| x * gamma.cos() + y * gamma.sin()).collect()
}

fn spectral_from_settings(s: &MeasurementSettings, gamma: f64) -> SpectralData {
    let (frames, planar) = s.planar_frame();
    let anti = planar_anti_diagonal(&planar, gamma);
    let half = n_pairs(s.n_qubits());
    let b = anti[..half].iter().map(|z| z.norm()).collect();
    let theta = anti[..half].iter().map(|z| if z.norm() > 0.0 { wrap_angle(z.arg()) } else { 0.0 }).collect();
    SpectralData { b, theta, local_basis: frames }
}

/// `cos(gamma) M_N + sin(gamma) M'_N` with its split and spectral data.
fn recursion_operator(s: &MeasurementSettings, gamma: f64, lv_bound: f64, family: Family) -> Result<BellOperator> {
    let n = s.n_qubits();
    let (cg, sg) = (gamma.cos(), gamma.sin());
    let (matrix, split) = if n == 1 {
        (&sigma_dot(s.n[0]).scale(cg) + &sigma_dot(s.n_prime[0]).scale(sg), None)
    } else {
        let (m, mp) = mbk_pair(&s.truncated(n - 1))?;
        let sum = &m + &mp;
        let diff = &m - &mp;
        let c1 = &sum.scale(0.5 * cg) - &diff.scale(0.5 * sg);
        let c2 = &diff.scale(0.5 * cg) + &sum.scale(0.5 * sg);
        let split = Split { n_last: s.n[n - 1], n_last_prime: s.n_prime[n - 1], c1, c2 };
        (split.reassemble()?, Some(split))
    };
    Ok(BellOperator {
        n_qubits: n,
        matrix,
        lv_bound,
        family,
        spectral: Some(spectral_from_settings(s, gamma)),
        split,
        origin: Some(Origin { settings: s.clone(), gamma }),
    })
}

pub fn mbk_operator(settings: &MeasurementSettings) -> Result<BellOperator> {
    recursion_operator(settings, 0.0, 1.0, Family::Mbk)
}

pub fn mbk_prime(settings: &MeasurementSettings) -> Result<BellOperator> {
    recursion_operator(&settings.swapped(), 0.0, 1.0, Family::MbkPrime)
}

/// Two-qubit MBK operator, i.e. CHSH divided by 2.
pub fn chsh_operator(settings: &MeasurementSettings) -> Result<BellOperator> {
    if settings.n_qubits() != 2 {
        return Err(Error::InvalidArgument(format!("CHSH needs 2 qubits, got {}", settings.n_qubits())));
    }
    recursion_operator(settings, 0.0, 1.0, Family::Chsh)
}

pub fn uffink_operator(settings: &MeasurementSettings, gamma: f64) -> Result<BellOperator> {
    if !gamma.is_finite() {
        return Err(Error::InvalidArgument("non-finite gamma".into()));
    }
    let g = wrap_angle(gamma);
    recursion_operator(settings, g, SQRT_2, Family::Uffink(g))
}

/// Mixing angle of the Svetlichny member of the Uffink family.
pub fn svetlichny_gamma(n_qubits: usize) -> f64 {
    if n_qubits % 2 == 0 {
        0.0
    } else {
        FRAC_PI_4
    }
}

pub fn svetlichny_operator(settings: &MeasurementSettings) -> Result<BellOperator> {
    recursion_operator(settings, svetlichny_gamma(settings.n_qubits()), SQRT_2, Family::Svetlichny)
}

/// Assembles an operator from theta-basis spectral data and a local frame.
pub fn wwzb_from_spectrum(n_qubits: usize, b: &[f64], theta: &[f64], local_basis: &[ComplexMatrix]) -> Result<BellOperator> {
    if n_qubits == 0 {
        return Err(Error::InvalidArgument("need at least one qubit".into()));
    }
    let m = n_pairs(n_qubits);
    if b.len() != m || theta.len() != m {
        return Err(Error::InvalidArgument(format!("expected {m} coefficients, got {} and {}", b.len(), theta.len())));
    }
    if local_basis.len() != n_qubits {
        return Err(Error::DimensionMismatch(local_basis.len(), n_qubits));
    }
    if let Some(x) = b.iter().chain(theta).find(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite coefficient {x}")));
    }
    if let Some(x) = b.iter().find(|&&x| x < 0.0) {
        return Err(Error::InvalidArgument(format!("negative b_k = {x}")));
    }
    for u in local_basis {
        let dev = if u.dim() == 2 { u.unitary_deviation() } else { f64::INFINITY };
        if dev > 1e-10 {
            return Err(Error::NotUnitary(dev));
        }
    }
    let sum: f64 = b.iter().map(|x| x * x).sum();
    let limit = m as f64;
    if sum > limit + 1e-8 {
        return Err(Error::ConstraintViolated { sum, limit });
    }
    let spectral = SpectralData { b: b.to_vec(), theta: theta.iter().map(|&t| wrap_angle(t)).collect(), local_basis: local_basis.to_vec() };
    Ok(BellOperator {
        n_qubits,
        matrix: spectral.assemble()?,
        lv_bound: 1.0,
        family: Family::WwzbSpectral,
        spectral: Some(spectral),
        split: None,
        origin: None,
    })
}

/// Normalized expectation value; violation means `beta > 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellValue {
    pub beta: f64,
    /// `tr(rho B)`.
    pub raw: f64,
    pub lv_bound: f64,
}

pub fn violation(rho: &DensityMatrix, b: &BellOperator) -> Result<BellValue> {
    if rho.n_qubits() != b.n_qubits {
        return Err(Error::DimensionMismatch(rho.dim(), b.matrix.dim()));
    }
    let t = rho.expectation(&b.matrix);
    Ok(BellValue { beta: t.re / b.lv_bound, raw: t.re, lv_bound: b.lv_bound })
}

/// `(tr rho M, tr rho M')` by contracting one qubit at a time.
pub fn mbk_expectations(rho: &ComplexMatrix, settings: &MeasurementSettings) -> Result<(f64, f64)> {
    let n = settings.n_qubits();
    if rho.dim() != 1 << n {
        return Err(Error::DimensionMismatch(rho.dim(), 1 << n));
    }
    let (m, mp) = contract_pair(rho, settings, n);
    Ok((m.re, mp.re))
}

fn contract_pair(x: &ComplexMatrix, s: &MeasurementSettings, nq: usize) -> (C64, C64) {
    let a = sigma_dot(s.n[nq - 1]);
    let b = sigma_dot(s.n_prime[nq - 1]);
    if nq == 1 {
        return (x.trace_product(&a), x.trace_product(&b));
    }
    let r1 = contract_qubit(x, nq, nq, &a);
    let r2 = contract_qubit(x, nq, nq, &b);
    let (m1, m1p) = contract_pair(&r1, s, nq - 1);
    let (m2, m2p) = contract_pair(&r2, s, nq - 1);
    ((m1 + m2 + m1p - m2p) * 0.5, (m1p + m2p + m2 - m1) * 0.5)
}

/// `sqrt(tr(rho M)^2 + tr(rho M')^2)`, unnormalized.
pub fn uffink_value(rho: &DensityMatrix, settings: &MeasurementSettings) -> Result<f64> {
    let (m, mp) = mbk_expectations(rho.matrix(), settings)?;
    Ok(m.hypot(mp))
}

fn check_three_planar(settings: &MeasurementSettings) -> Result<[f64; 3]> {
    if settings.n_qubits() != 3 {
        return Err(Error::InvalidArgument(format!("closed forms need 3 qubits, got {}", settings.n_qubits())));
    }
    let d = settings.deltas().ok_or(Error::NonPlanar)?;
    Ok([d[0], d[1], d[2]])
}

/// Sign vector `k_i = 1 - 2 bit_i` of pair index `k` (qubit 1 first).
fn k_signs(k: usize) -> [f64; 3] {
    [1.0, 1.0 - 2.0 * ((k >> 1) & 1) as f64, 1.0 - 2.0 * (k & 1) as f64]
}

/// Three-qubit MBK spectrum `b_k` as a function of `delta_i = alpha_i - alpha'_i`.
pub fn b_from_deltas(d: [f64; 3]) -> [f64; 4] {
    let cos_prod = d.iter().map(|x| x.cos()).product::<f64>();
    std::array::from_fn(|k| {
        let s = k_signs(k);
        let sin_prod: f64 = (0..3).map(|i| s[i] * d[i].sin()).product();
        let sin_sum: f64 = (0..3).map(|i| s[i] * d[i].sin()).sum();
        (cos_prod * cos_prod + (sin_prod + sin_sum).powi(2)).powf(0.25)
    })
}

/// Three-qubit Uffink spectrum `u_k = sqrt(b_k^2 + sin(2 gamma) prod cos(delta_i))`.
pub fn u_from_deltas(d: [f64; 3], gamma: f64) -> [f64; 4] {
    let b = b_from_deltas(d);
    let shift = (2.0 * gamma).sin() * d.iter().map(|x| x.cos()).product::<f64>();
    b.map(|x| (x * x + shift).max(0.0).sqrt())
}

/// Closed-form `(b_k, theta_k)` of the three-qubit MBK operator at planar settings.
pub fn m3_closed_form(settings: &MeasurementSettings) -> Result<SpectralData> {
    let d = check_three_planar(settings)?;
    let a = settings.angles().expect("checked planar");
    let b = b_from_deltas(d);
    let theta = (0..4)
        .map(|k| {
            let s = k_signs(k);
            let (beta, beta_p): (Vec<f64>, Vec<f64>) = (0..3).map(|j| (s[j] * a[j].0, s[j] * a[j].1)).unzip();
            let f = cis(a[0].1 + beta[1] + beta[2]) + cis(a[0].0 + beta_p[1] + beta[2]) + cis(a[0].0 + beta[1] + beta_p[2])
                - cis(a[0].1 + beta_p[1] + beta_p[2]);
            // f_k / 2 is <kbar|M|k>, the conjugate of the theta-basis coefficient
            if f.norm() > 0.0 {
                wrap_angle(-f.arg())
            } else {
                0.0
            }
        })
        .collect();
    Ok(SpectralData { b: b.to_vec(), theta, local_basis: vec![ComplexMatrix::identity(2); 3] })
}

pub fn u3_eigenvalues(settings: &MeasurementSettings, gamma: f64) -> Result<Vec<f64>> {
    Ok(u_from_deltas(check_three_planar(settings)?, gamma).to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{make_ghz, make_theta_ghz, Sigma};

    fn chsh_settings() -> MeasurementSettings {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        MeasurementSettings::general(vec![[1.0, 0.0, 0.0], [s, s, 0.0]], vec![[0.0, 1.0, 0.0], [s, -s, 0.0]]).unwrap()
    }

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(f64::total_cmp);
        v
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn chsh_top_eigenvalue() {
        let op = mbk_operator(&chsh_settings()).unwrap();
        let ev = op.eigenvalues().unwrap();
        assert!((ev[3] - SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn recursion_base_is_sigma() {
        let s = MeasurementSettings::general(vec![[0.0, 0.0, 1.0]], vec![[1.0, 0.0, 0.0]]).unwrap();
        let op = mbk_operator(&s).unwrap();
        assert_eq!(op.matrix(), &crate::qlinalg::pauli_z());
        assert!(op.split().is_none());
    }

    #[test]
    fn optimal_settings_on_ghz() {
        for n in 2..=6 {
            let rho = make_ghz(n).unwrap();
            let op = mbk_operator(&MeasurementSettings::optimal(n, 0.0)).unwrap();
            let v = violation(&rho, &op).unwrap();
            assert!((v.beta - 2f64.powf((n as f64 - 1.0) / 2.0)).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn maximally_mixed_gives_zero() {
        let op = mbk_operator(&MeasurementSettings::optimal(3, 0.0)).unwrap();
        let v = violation(&DensityMatrix::maximally_mixed(3), &op).unwrap();
        assert!(v.beta.abs() < 1e-15);
    }

    #[test]
    fn prime_is_swap() {
        let s = MeasurementSettings::planar(&[(0.1, 0.1), (0.7, 0.7), (2.0, 2.0)]).unwrap();
        assert!(mbk_prime(&s).unwrap().matrix().max_abs_diff(mbk_operator(&s).unwrap().matrix()) < 1e-15);

        let s = MeasurementSettings::planar(&[(0.1, 1.3), (0.7, -0.4), (2.0, 0.9)]).unwrap();
        let m = mbk_operator(&s).unwrap();
        let mp = mbk_prime(&s).unwrap();
        assert!(max_diff(&m.eigenvalues().unwrap(), &mp.eigenvalues().unwrap()) < 1e-10);
        assert_eq!(s.swapped().swapped(), s);
        let u = uffink_operator(&s, FRAC_PI_2).unwrap();
        assert!(u.matrix().max_abs_diff(mp.matrix()) < 1e-12);
    }

    #[test]
    fn uffink_members() {
        let s = MeasurementSettings::planar(&[(0.3, 1.1), (-0.2, 0.5), (1.4, 2.2)]).unwrap();
        let u0 = uffink_operator(&s, 0.0).unwrap();
        assert!(u0.matrix().max_abs_diff(mbk_operator(&s).unwrap().matrix()) < 1e-15);
        assert_eq!(u0.lv_bound(), SQRT_2);
        let s3 = svetlichny_operator(&s).unwrap();
        assert!(s3.matrix().max_abs_diff(uffink_operator(&s, FRAC_PI_4).unwrap().matrix()) < 1e-15);

        let s4 = MeasurementSettings::optimal(4, 0.0);
        let sv4 = svetlichny_operator(&s4).unwrap();
        assert!(sv4.matrix().max_abs_diff(mbk_operator(&s4).unwrap().matrix()) < 1e-15);
        assert_eq!(sv4.lv_bound(), SQRT_2);
    }

    #[test]
    fn svetlichny_on_ghz3() {
        let s = MeasurementSettings::optimal(3, FRAC_PI_4);
        let v = violation(&make_ghz(3).unwrap(), &svetlichny_operator(&s).unwrap()).unwrap();
        assert!((v.raw - 2.0).abs() < 1e-12);
        assert!((v.beta - SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn uffink_value_on_ghz() {
        let s = MeasurementSettings::optimal(3, 0.0);
        assert!((uffink_value(&make_ghz(3).unwrap(), &s).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn contraction_matches_full_matrix() {
        let rho = crate::states::random_density(5, 4, 3).unwrap();
        let s = MeasurementSettings::general(
            vec![[0.0, 0.6, 0.8], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.6, 0.0, -0.8]],
            vec![[0.8, 0.6, 0.0], [0.0, 1.0, 0.0], [0.0, 0.8, 0.6], [0.0, -1.0, 0.0]],
        )
        .unwrap();
        let (m, mp) = mbk_expectations(rho.matrix(), &s).unwrap();
        let full_m = rho.expectation(mbk_operator(&s).unwrap().matrix()).re;
        let full_mp = rho.expectation(uffink_operator(&s, FRAC_PI_2).unwrap().matrix()).re;
        assert!((m - full_m).abs() < 1e-12);
        assert!((mp - full_mp).abs() < 1e-12);
    }

    #[test]
    fn spectral_data_matches_eigenvalues() {
        let settings = [
            MeasurementSettings::planar(&[(0.3, 1.1), (-0.2, 0.5), (1.4, 2.2), (0.9, -1.0)]).unwrap(),
            MeasurementSettings::general(
                vec![[0.0, 0.6, 0.8], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
                vec![[0.8, 0.6, 0.0], [0.0, 1.0, 0.0], [0.0, 0.8, 0.6]],
            )
            .unwrap(),
            MeasurementSettings::general(vec![[0.0, 0.0, 1.0]; 2], vec![[0.0, 0.0, 1.0]; 2]).unwrap(),
        ];
        for s in &settings {
            for gamma in [0.0, 0.4, 2.5] {
                let op = uffink_operator(s, gamma).unwrap();
                let sd = op.spectral().unwrap();
                assert!(max_diff(&sd.eigenvalues(), &op.eigenvalues().unwrap()) < 1e-10);
                assert!(sd.assemble().unwrap().max_abs_diff(op.matrix()) < 1e-12);
            }
            let m = mbk_operator(s).unwrap();
            let expected = n_pairs(s.n_qubits()) as f64;
            assert!((m.spectral().unwrap().sum_b_squared() - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn split_reassembles_and_reduces() {
        let s = MeasurementSettings::planar(&[(0.3, 1.1), (-0.2, 0.5), (1.4, 2.2)]).unwrap();
        for op in [mbk_operator(&s).unwrap(), uffink_operator(&s, 0.77).unwrap()] {
            let sp = op.split().unwrap();
            assert!(sp.reassemble().unwrap().max_abs_diff(op.matrix()) < 1e-14);
            let (bp, bm) = op.reductions().unwrap();
            assert!(bp.matrix().max_abs_diff(&(&sp.c1 + &sp.c2)) < 1e-14);
            assert!(bm.matrix().max_abs_diff(&(&sp.c1 - &sp.c2)) < 1e-14);
            assert_eq!(bp.lv_bound(), op.lv_bound());
        }
        let m = mbk_operator(&s).unwrap();
        let (_, bm) = m.reductions().unwrap();
        assert_eq!(bm.family(), Family::MbkPrime);
        let neg = m.negated();
        assert!(neg.split().unwrap().reassemble().unwrap().max_abs_diff(neg.matrix()) < 1e-14);
        assert!(neg.spectral().unwrap().assemble().unwrap().max_abs_diff(neg.matrix()) < 1e-14);
    }

    #[test]
    fn wwzb_examples() {
        let id = vec![ComplexMatrix::identity(2); 3];
        let op = wwzb_from_spectrum(3, &[2.0, 0.0, 0.0, 0.0], &[0.0; 4], &id).unwrap();
        let eig = crate::qlinalg::hermitian_eig(op.matrix()).unwrap();
        assert!((eig.values[7] - 2.0).abs() < 1e-12 && eig.values[6].abs() < 1e-12);
        let top = eig.vector(7);
        let ghz = make_theta_ghz(3, 0, 0.0, Sigma::Plus).unwrap();
        let ov: C64 = top.iter().zip(&ghz).map(|(a, b)| a.conj() * b).sum();
        assert!((ov.norm() - 1.0).abs() < 1e-10);

        let ones = wwzb_from_spectrum(3, &[1.0; 4], &[0.3, 1.0, 2.0, 4.0], &id).unwrap();
        assert!(ones.eigenvalues().unwrap().iter().all(|x| (x.abs() - 1.0).abs() < 1e-12));

        assert!(matches!(wwzb_from_spectrum(3, &[2.0, 1.0, 0.0, 0.0], &[0.0; 4], &id), Err(Error::ConstraintViolated { .. })));
    }

    #[test]
    fn closed_form_matches_operator() {
        let s = MeasurementSettings::planar(&[(0.3, 1.1), (-0.2, 0.5), (1.4, 2.2)]).unwrap();
        let cf = m3_closed_form(&s).unwrap();
        let numeric = mbk_operator(&s).unwrap();
        let sd = numeric.spectral().unwrap();
        assert!(max_diff(&cf.b, &sd.b) < 1e-12);
        let built = wwzb_from_spectrum(3, &cf.b, &cf.theta, &cf.local_basis).unwrap();
        assert!(built.matrix().max_abs_diff(numeric.matrix()) < 1e-12);
        assert!(m3_closed_form(&MeasurementSettings::optimal(4, 0.0)).is_err());
        let general = MeasurementSettings::general(vec![[0.0, 0.0, 1.0]; 3], vec![[1.0, 0.0, 0.0]; 3]).unwrap();
        assert!(matches!(m3_closed_form(&general), Err(Error::NonPlanar)));
    }

    #[test]
    fn closed_form_special_points() {
        let b = b_from_deltas([FRAC_PI_2; 3]);
        assert!((b[0] - 2.0).abs() < 1e-12);
        assert!(b_from_deltas([0.0; 3]).iter().all(|x| (x - 1.0).abs() < 1e-15));
        let u = u_from_deltas([FRAC_PI_2; 3], 0.7);
        assert!(max_diff(&u, &b) < 1e-7);
        let d = [0.4, 1.0, -0.3];
        assert!(max_diff(&u_from_deltas(d, 0.0), &b_from_deltas(d)) < 1e-15);
        let opt = MeasurementSettings::optimal(3, 0.0);
        let ev = sorted(mbk_operator(&opt).unwrap().eigenvalues().unwrap());
        assert!((ev[7] - m3_closed_form(&opt).unwrap().b[0]).abs() < 1e-12);
    }

    #[test]
    fn permuted_settings() {
        let s = MeasurementSettings::planar(&[(0.3, 1.1), (-0.2, 0.5), (1.4, 2.2)]).unwrap();
        let p = s.permuted(&[3, 1, 2]).unwrap();
        assert_eq!(p.angles().unwrap()[0], (1.4, 2.2));
        assert!(s.permuted(&[1, 1, 2]).is_err());
    }

    #[test]
    fn settings_validation() {
        assert!(MeasurementSettings::general(vec![[1.0, 1.0, 0.0]], vec![[1.0, 0.0, 0.0]]).is_err());
        assert!(MeasurementSettings::planar(&[]).is_err());
        let p = MeasurementSettings::planar(&[(0.5, 0.2)]).unwrap();
        assert_eq!(p.n(0)[2], 0.0);
    }
}
