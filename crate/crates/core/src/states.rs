//! State families and GHZ/theta-basis index helpers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::qlinalg::{c, cis, max_qubits, ComplexMatrix, DensityMatrix, C64};

/// Sign of a GHZ/theta basis vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub enum Sigma {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sigma {
    pub const BOTH: [Sigma; 2] = [Sigma::Plus, Sigma::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Sigma::Plus => 1.0,
            Sigma::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sigma::Plus => Sigma::Minus,
            Sigma::Minus => Sigma::Plus,
        }
    }
}

/// Label of a theta-basis vector `(e^{i theta}|k> + sigma |kbar>)/sqrt 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaBasisIndex {
    pub k: usize,
    pub sigma: Sigma,
    pub theta: f64,
}

/// Number of canonical pairs `(k, kbar)` with `k < kbar`.
pub fn n_pairs(n_qubits: usize) -> usize {
    1usize << (n_qubits - 1)
}

pub fn kbar(k: usize, n_qubits: usize) -> usize {
    debug_assert!(k < 1 << n_qubits);
    (1usize << n_qubits) - 1 - k
}

fn check_n(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 {
        return Err(Error::InvalidArgument("need at least one qubit".into()));
    }
    if n_qubits > max_qubits() {
        return Err(Error::DimensionCap { dim: 1usize << n_qubits.min(62), max_qubits: max_qubits() });
    }
    Ok(())
}

pub fn make_theta_ghz(n_qubits: usize, k: usize, theta: f64, sigma: Sigma) -> Result<Vec<C64>> {
    check_n(n_qubits)?;
    if k >= n_pairs(n_qubits) {
        return Err(Error::IndexOutOfRange { index: k, limit: n_pairs(n_qubits) });
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = vec![C64::new(0.0, 0.0); 1 << n_qubits];
    v[k] = cis(theta) * s;
    v[kbar(k, n_qubits)] = c(sigma.sign() * s, 0.0);
    Ok(v)
}

pub fn ghz_vector(n_qubits: usize) -> Result<Vec<C64>> {
    make_theta_ghz(n_qubits, 0, 0.0, Sigma::Plus)
}

pub fn make_ghz(n_qubits: usize) -> Result<DensityMatrix> {
    DensityMatrix::from_pure(&ghz_vector(n_qubits)?)
}

/// Weights `mu_k^sigma` of a GHZ-diagonal state.
#[derive(Debug, Clone, PartialEq)]
pub struct GhzWeights {
    n_qubits: usize,
    plus: Vec<f64>,
    minus: Vec<f64>,
}

impl GhzWeights {
    pub fn new(n_qubits: usize, plus: Vec<f64>, minus: Vec<f64>) -> Result<Self> {
        check_n(n_qubits)?;
        let m = n_pairs(n_qubits);
        if plus.len() != m || minus.len() != m {
            return Err(Error::InvalidWeights(format!("expected {m} weights per sign, got {} and {}", plus.len(), minus.len())));
        }
        if let Some(w) = plus.iter().chain(&minus).find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidWeights(format!("weight {w} is negative or not finite")));
        }
        let total: f64 = plus.iter().chain(&minus).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidWeights(format!("weights sum to {total}")));
        }
        Ok(Self { n_qubits, plus, minus })
    }

    /// Builds weights from clipped and renormalized estimates (e.g. projector traces).
    pub(crate) fn from_estimates(n_qubits: usize, plus: Vec<f64>, minus: Vec<f64>) -> Self {
        let plus: Vec<f64> = plus.into_iter().map(|x| x.max(0.0)).collect();
        let minus: Vec<f64> = minus.into_iter().map(|x| x.max(0.0)).collect();
        let total: f64 = plus.iter().chain(&minus).sum();
        Self { n_qubits, plus: plus.into_iter().map(|x| x / total).collect(), minus: minus.into_iter().map(|x| x / total).collect() }
    }

    /// All weight on `|GHZ_N>`.
    pub fn ghz(n_qubits: usize) -> Result<Self> {
        check_n(n_qubits)?;
        let m = n_pairs(n_qubits);
        let mut plus = vec![0.0; m];
        plus[0] = 1.0;
        Self::new(n_qubits, plus, vec![0.0; m])
    }

    pub fn uniform(n_qubits: usize) -> Result<Self> {
        check_n(n_qubits)?;
        let w = 1.0 / (1u64 << n_qubits) as f64;
        let m = n_pairs(n_qubits);
        Self::new(n_qubits, vec![w; m], vec![w; m])
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn get(&self, k: usize, sigma: Sigma) -> f64 {
        match sigma {
            Sigma::Plus => self.plus[k],
            Sigma::Minus => self.minus[k],
        }
    }

    pub fn plus(&self) -> &[f64] {
        &self.plus
    }

    pub fn minus(&self) -> &[f64] {
        &self.minus
    }
}

pub fn make_ghz_diagonal(weights: &GhzWeights) -> DensityMatrix {
    let n = weights.n_qubits;
    let mut m = ComplexMatrix::zeros(1 << n);
    for k in 0..n_pairs(n) {
        let kb = kbar(k, n);
        let (p, q) = (weights.plus[k], weights.minus[k]);
        let diag = c(0.5 * (p + q), 0.0);
        let coh = c(0.5 * (p - q), 0.0);
        m[(k, k)] = diag;
        m[(kb, kb)] = diag;
        m[(k, kb)] = coh;
        m[(kb, k)] = coh;
    }
    DensityMatrix::new_unchecked(n, m)
}

/// `r P_0^+ + (1 - r)/(2^{N-1} - 1) sum_{k >= 1} P_k^+`.
pub fn make_rho_r(n_qubits: usize, r: f64) -> Result<DensityMatrix> {
    if n_qubits < 2 {
        return Err(Error::InvalidArgument("rho_N(r) needs N >= 2".into()));
    }
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::InvalidArgument(format!("overlap r = {r} outside [0, 1]")));
    }
    let m = n_pairs(n_qubits);
    let rest = (1.0 - r) / (m - 1) as f64;
    let mut plus = vec![rest; m];
    plus[0] = r;
    Ok(make_ghz_diagonal(&GhzWeights::new(n_qubits, plus, vec![0.0; m])?))
}

/// `(|110> + |101> + |011>)/sqrt 3`.
pub fn w_vector() -> Vec<C64> {
    let s = 1.0 / 3f64.sqrt();
    let mut v = vec![c(0.0, 0.0); 8];
    for i in [3, 5, 6] {
        v[i] = c(s, 0.0);
    }
    v
}

/// `cos(alpha)|000> + sin(alpha)|W>`.
pub fn make_w_mixture(alpha: f64) -> Result<DensityMatrix> {
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} outside [0, pi/2]")));
    }
    let mut v: Vec<C64> = w_vector().into_iter().map(|z| z * alpha.sin()).collect();
    v[0] = c(alpha.cos(), 0.0);
    DensityMatrix::from_pure(&v)
}

/// `|GHZ_{N-1}> (x) |0>`.
pub fn make_padded_ghz(n_qubits: usize) -> Result<DensityMatrix> {
    if n_qubits < 3 {
        return Err(Error::InvalidArgument("padded GHZ needs N >= 3".into()));
    }
    check_n(n_qubits)?;
    let g = ghz_vector(n_qubits - 1)?;
    let mut v = vec![c(0.0, 0.0); 1 << n_qubits];
    for (i, z) in g.into_iter().enumerate() {
        v[i << 1] = z;
    }
    DensityMatrix::from_pure(&v)
}

/// `v |GHZ_N><GHZ_N| + (1 - v) I / 2^N`.
pub fn make_noisy_ghz(n_qubits: usize, visibility: f64) -> Result<DensityMatrix> {
    make_ghz(n_qubits)?.mix(visibility, &DensityMatrix::maximally_mixed(n_qubits))
}

/// Product of pure qubit states given by Bloch vectors.
pub fn make_product(blochs: &[[f64; 3]]) -> Result<DensityMatrix> {
    check_n(blochs.len())?;
    let mut psi = vec![c(1.0, 0.0)];
    for n in blochs {
        let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("Bloch vector norm {norm}")));
        }
        let theta = n[2].clamp(-1.0, 1.0).acos();
        let phi = n[1].atan2(n[0]);
        let q = [c((theta / 2.0).cos(), 0.0), cis(phi) * (theta / 2.0).sin()];
        psi = crate::qlinalg::kron_vec(&psi, &q);
    }
    DensityMatrix::from_pure(&psi)
}

/// Random density matrix of the given rank.
///
/// Draws a `2^N x rank` matrix `G` whose entries have independent standard normal
/// real and imaginary parts (ChaCha8 seeded with `seed`, row-major, real part first),
/// and returns `G G^dagger / tr(G G^dagger)`.
pub fn random_density(seed: u64, n_qubits: usize, rank: usize) -> Result<DensityMatrix> {
    check_n(n_qubits)?;
    let d = 1usize << n_qubits;
    if rank == 0 || rank > d {
        return Err(Error::InvalidArgument(format!("rank {rank} outside 1..={d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = vec![c(0.0, 0.0); d * rank];
    for z in g.iter_mut() {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *z = c(re, im);
    }
    let mut m = ComplexMatrix::zeros(d);
    for i in 0..d {
        for j in i..d {
            let z: C64 = (0..rank).map(|t| g[i * rank + t] * g[j * rank + t].conj()).sum();
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    let tr = m.trace().re;
    Ok(DensityMatrix::new_unchecked(n_qubits, m.scale(1.0 / tr)))
}
