//! Distillability analysis driven by Bell violation.
//!
//! Weights are indexed by canonical pair label `k < 2^{N-1}` (qubit 1 bit clear).
//! Bipartition sides never contain qubit 1.

use rayon::prelude::*;

use crate::bell::{violation, BellOperator};
use crate::error::{Error, Result};
use crate::qlinalg::{
    cis, conjugate_local, min_pt_eigenvalue, permute_qubits, project_qubit, qubit_shift, ComplexMatrix, DensityMatrix, QubitSubset,
    NEGATIVITY_TOL,
};
use crate::states::{kbar, make_ghz_diagonal, n_pairs, GhzWeights, Sigma};

/// Block determinants below this are negative.
pub const BLOCK_TOL: f64 = 1e-12;

/// Relative slack on the class edges of the group-size classification.
pub const EDGE_RTOL: f64 = 1e-9;

/// Pair weights in some GHZ-like basis.
pub trait PairWeights {
    fn n_qubits(&self) -> usize;
    fn weight(&self, k: usize, sigma: Sigma) -> f64;
}

impl PairWeights for GhzWeights {
    fn n_qubits(&self) -> usize {
        GhzWeights::n_qubits(self)
    }
    fn weight(&self, k: usize, sigma: Sigma) -> f64 {
        self.get(k, sigma)
    }
}

/// `lambda_k^sigma = tr(rho Q_k^sigma)` in an operator's theta basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaWeights {
    n_qubits: usize,
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
    pub theta: Vec<f64>,
}

impl PairWeights for ThetaWeights {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }
    fn weight(&self, k: usize, sigma: Sigma) -> f64 {
        match sigma {
            Sigma::Plus => self.plus[k],
            Sigma::Minus => self.minus[k],
        }
    }
}

impl ThetaWeights {
    pub fn total(&self) -> f64 {
        self.plus.iter().chain(&self.minus).sum()
    }

    /// `rho_D = sum lambda Q` in the frame where the theta basis is computational.
    pub fn frame_state(&self) -> ComplexMatrix {
        let n = self.n_qubits;
        let mut m = ComplexMatrix::zeros(1 << n);
        for k in 0..n_pairs(n) {
            let kb = kbar(k, n);
            let diag = 0.5 * (self.plus[k] + self.minus[k]);
            let coh = cis(self.theta[k]) * (0.5 * (self.plus[k] - self.minus[k]));
            m[(k, k)] = diag.into();
            m[(kb, kb)] = diag.into();
            m[(k, kb)] = coh;
            m[(kb, k)] = coh.conj();
        }
        m
    }
}

/// Reads pair weights off a matrix in a frame where the pairs are `(k, kbar)`.
fn pair_weights(m: &ComplexMatrix, n: usize, theta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (0..n_pairs(n))
        .map(|k| {
            let kb = kbar(k, n);
            let diag = 0.5 * (m[(k, k)].re + m[(kb, kb)].re);
            let coh = (cis(-theta[k]) * m[(k, kb)]).re;
            (diag + coh, diag - coh)
        })
        .unzip()
}

fn frame_of(rho: &DensityMatrix, b: &BellOperator) -> Result<(ComplexMatrix, Vec<f64>)> {
    let sd = b.spectral().ok_or(Error::MissingSpectralData)?;
    if rho.n_qubits() != b.n_qubits() {
        return Err(Error::DimensionMismatch(rho.dim(), b.matrix().dim()));
    }
    let inverse: Vec<ComplexMatrix> = sd.local_basis.iter().map(|v| v.adjoint()).collect();
    Ok((conjugate_local(rho.matrix(), &inverse)?, sd.theta.clone()))
}

pub fn theta_weights(rho: &DensityMatrix, b: &BellOperator) -> Result<ThetaWeights> {
    let (m, theta) = frame_of(rho, b)?;
    let (plus, minus) = pair_weights(&m, rho.n_qubits(), &theta);
    Ok(ThetaWeights { n_qubits: rho.n_qubits(), plus, minus, theta })
}

/// `rho_D` mapped back to the computational basis.
pub fn theta_diagonal_state(weights: &ThetaWeights, b: &BellOperator) -> Result<DensityMatrix> {
    let sd = b.spectral().ok_or(Error::MissingSpectralData)?;
    let m = conjugate_local(&weights.frame_state(), &sd.local_basis)?;
    Ok(DensityMatrix::new_unchecked(weights.n_qubits, m))
}

/// Weights `mu_k^sigma = tr(rho P_k^sigma)` in the zero-phase GHZ basis.
pub fn ghz_depolarize(rho: &DensityMatrix) -> GhzWeights {
    let n = rho.n_qubits();
    let (plus, minus) = pair_weights(rho.matrix(), n, &vec![0.0; n_pairs(n)]);
    GhzWeights::from_estimates(n, plus, minus)
}

/// One `2x2` block of a partially transposed pair-diagonal state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockVerdict {
    /// Pair whose `(K, Kbar)` block receives the coherence.
    pub k: usize,
    /// Pair whose coherence is moved by the transposition.
    pub k_prime: usize,
    pub partition: QubitSubset,
    pub determinant: f64,
    pub negative: bool,
}

/// All blocks over all canonical bipartitions, in `(A, K)` order.
pub fn block_scan<W: PairWeights + ?Sized>(w: &W) -> Vec<BlockVerdict> {
    let n = w.n_qubits();
    let mut out = Vec::new();
    for a in QubitSubset::canonical_bipartitions(n) {
        for k in 0..n_pairs(n) {
            let kp = k ^ a.mask();
            let diag = 0.5 * (w.weight(k, Sigma::Plus) + w.weight(k, Sigma::Minus));
            let coh = 0.5 * (w.weight(kp, Sigma::Plus) - w.weight(kp, Sigma::Minus));
            let determinant = diag * diag - coh * coh;
            out.push(BlockVerdict { k, k_prime: kp, partition: a, determinant, negative: determinant < -BLOCK_TOL });
        }
    }
    out
}

/// The most negative block, ties broken by `(A, K, K')`.
pub fn select_block(blocks: &[BlockVerdict]) -> Option<BlockVerdict> {
    blocks
        .iter()
        .filter(|b| b.negative)
        .min_by(|x, y| {
            x.determinant
                .total_cmp(&y.determinant)
                .then(x.partition.mask().cmp(&y.partition.mask()))
                .then(x.k.cmp(&y.k))
                .then(x.k_prime.cmp(&y.k_prime))
        })
        .copied()
}

/// Minimum eigenvalue of `rho^{T_A}` for every canonical bipartition.
pub fn npt_partitions(rho: &DensityMatrix) -> Result<Vec<(QubitSubset, f64)>> {
    QubitSubset::canonical_bipartitions(rho.n_qubits()).into_par_iter().map(|a| Ok((a, min_pt_eigenvalue(rho.matrix(), &a)?))).collect()
}

/// Group-size class from a normalized violation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub p: usize,
    pub max_group_size: usize,
    pub fully_distillable: bool,
    pub security_ok: bool,
}

/// Finds `p` with `2^{(N-p)/2} < beta <= 2^{(N-p+1)/2}`, clamped to `p >= 2`.
pub fn theorem2_classify(beta: f64, n_qubits: usize) -> Result<Classification> {
    if n_qubits < 2 {
        return Err(Error::InvalidArgument("classification needs N >= 2".into()));
    }
    if !(beta > 1.0) {
        return Err(Error::Precondition(format!("beta = {beta} does not violate the inequality")));
    }
    let n = n_qubits as f64;
    // 2 log2(beta), lowered by the edge slack so values on an edge stay in the lower class
    let x = 2.0 * beta.log2() - 2.0 * (1.0 + EDGE_RTOL).log2();
    let p = (n + 1.0 - x.ceil()).clamp(2.0, n) as usize;
    let fully = beta > 2f64.powf((n - 2.0) / 2.0) * (1.0 + EDGE_RTOL);
    Ok(Classification { p, max_group_size: p - 1, fully_distillable: fully, security_ok: fully })
}

/// Steps of the constructive bipartite route.
#[derive(Debug, Clone)]
pub struct Theorem1Outcome {
    pub weights: ThetaWeights,
    pub verdict: BlockVerdict,
    /// Per-qubit phase `phi_i` of `diag(1, e^{i phi_i})`.
    pub phases: Vec<f64>,
    pub depolarized: GhzWeights,
    /// Largest deviation between depolarized and theta weights on `K` and `K'`.
    pub weight_mismatch: f64,
    /// Two-qubit state on `span{|K>, |K'>, |Kbar'>, |Kbar>}`.
    pub projected: DensityMatrix,
    pub projected_min_pt: f64,
    pub steps: Vec<String>,
}

/// Classification record of one state against one operator.
#[derive(Debug, Clone)]
pub struct DistillReport {
    pub n_qubits: usize,
    pub beta: f64,
    pub p: Option<usize>,
    pub max_group_size: Option<usize>,
    pub fully_distillable: bool,
    pub bipartite_evidence: Option<BlockVerdict>,
    pub npt_partitions: Vec<(QubitSubset, f64)>,
    pub security_ok: bool,
    pub theorem1: Option<Theorem1Outcome>,
    pub protocol_trace: Vec<String>,
}

impl DistillReport {
    fn unclassified(n_qubits: usize, beta: f64) -> Self {
        Self {
            n_qubits,
            beta,
            p: None,
            max_group_size: None,
            fully_distillable: false,
            bipartite_evidence: None,
            npt_partitions: Vec::new(),
            security_ok: false,
            theorem1: None,
            protocol_trace: Vec::new(),
        }
    }

    fn apply(&mut self, c: Classification) {
        self.p = Some(c.p);
        self.max_group_size = Some(c.max_group_size);
        self.fully_distillable = c.fully_distillable;
        self.security_ok = c.security_ok;
    }
}

fn bit(k: usize, n: usize, qubit: usize) -> usize {
    (k >> qubit_shift(n, qubit)) & 1
}

pub fn theorem1_protocol(rho: &DensityMatrix, b: &BellOperator) -> Result<DistillReport> {
    let n = rho.n_qubits();
    let beta = violation(rho, b)?.beta;
    if !(beta > 1.0) {
        return Err(Error::Precondition(format!("beta = {beta} does not exceed 1")));
    }
    let mut steps = Vec::new();

    // (a) weights and block selection
    let weights = theta_weights(rho, b)?;
    let blocks = block_scan(&weights);
    let verdict = select_block(&blocks).ok_or_else(|| Error::Falsified {
        invariant: "theorem1-negative-block".into(),
        detail: format!("beta = {beta} but no 2x2 block of rho_D^T_A is negative"),
    })?;
    let (k, kp, a) = (verdict.k, verdict.k_prime, verdict.partition);
    steps.push(format!("selected block K={k} K'={kp} partition {a} determinant {:.6e}", verdict.determinant));

    // (b) phase erasure on qubit 1 and the first member of A, then depolarization
    let sd = b.spectral().ok_or(Error::MissingSpectralData)?;
    let (tk, tkp) = (weights.theta[k], weights.theta[kp]);
    let qa = a.members()[0];
    let sign = |q: usize| if bit(k, n, q) == 1 { 1.0 } else { -1.0 };
    let mut phases = vec![0.0; n];
    phases[0] = -0.5 * (tk + tkp) / sign(1);
    phases[qa - 1] = -0.5 * (tk - tkp) / sign(qa);
    let locals: Vec<ComplexMatrix> =
        sd.local_basis.iter().zip(&phases).map(|(v, &phi)| &ComplexMatrix::from_diagonal(&[1.0.into(), cis(phi)]) * &v.adjoint()).collect();
    let rotated = DensityMatrix::new_unchecked(n, conjugate_local(rho.matrix(), &locals)?);
    let depolarized = ghz_depolarize(&rotated);
    let weight_mismatch =
        [k, kp].iter().flat_map(|&j| Sigma::BOTH.map(|s| (depolarized.get(j, s) - weights.weight(j, s)).abs())).fold(0.0, f64::max);
    steps.push(format!(
        "erased phases theta_K={tk:.6} theta_K'={tkp:.6} on qubits 1 and {qa}; depolarized weights match to {weight_mismatch:.2e}"
    ));

    // (c) local projection onto H(K, K') viewed as two qubits (A^c, A)
    let full = make_ghz_diagonal(&depolarized);
    let indices = [k, kp, kbar(kp, n), kbar(k, n)];
    let sub = full.matrix().submatrix(&indices);
    let tr = sub.trace().re;
    if !(tr > 0.0) {
        return Err(Error::Falsified {
            invariant: "theorem1-projection".into(),
            detail: format!("projection onto H({k},{kp}) has zero weight"),
        });
    }
    let projected = DensityMatrix::new_unchecked(2, sub.scale(1.0 / tr));
    let projected_min_pt = min_pt_eigenvalue(projected.matrix(), &QubitSubset::new(2, &[2])?)?;
    steps.push(format!(
        "projected onto span{{|{k}>,|{kp}>,|{}>,|{}>}} with probability {tr:.6e}; min PT eigenvalue {projected_min_pt:.6e}",
        indices[2], indices[3]
    ));

    let mut report = DistillReport::unclassified(n, beta);
    report.apply(theorem2_classify(beta, n)?);
    report.bipartite_evidence = Some(verdict);
    report.protocol_trace = steps.clone();
    report.theorem1 = Some(Theorem1Outcome { weights, verdict, phases, depolarized, weight_mismatch, projected, projected_min_pt, steps });
    Ok(report)
}

/// Full report: violation, class, NPT table, and the bipartite route when `beta > 1`.
pub fn classify(rho: &DensityMatrix, b: &BellOperator) -> Result<DistillReport> {
    let beta = violation(rho, b)?.beta;
    let mut report = if beta > 1.0 {
        match theorem1_protocol(rho, b) {
            Ok(r) => r,
            Err(Error::MissingSpectralData) => {
                let mut r = DistillReport::unclassified(rho.n_qubits(), beta);
                r.apply(theorem2_classify(beta, rho.n_qubits())?);
                r.protocol_trace.push("operator has no theta basis; bipartite route skipped".into());
                r
            }
            Err(e) => return Err(e),
        }
    } else {
        let mut r = DistillReport::unclassified(rho.n_qubits(), beta);
        r.protocol_trace.push(format!("beta = {beta} <= 1: no classification"));
        r
    };
    if rho.n_qubits() >= 2 {
        report.npt_partitions = npt_partitions(rho)?;
    }
    Ok(report)
}

/// Which reduction a projection kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    /// Measured along the bisectrix `(n + n')`, keeping `B+`.
    Bisectrix,
    /// Measured along `(n - n')`, keeping `B-`.
    Difference,
}

#[derive(Debug, Clone)]
pub struct Lemma1Outcome {
    pub state: DensityMatrix,
    pub operator: BellOperator,
    pub beta_in: f64,
    pub beta_out: f64,
    pub reduction: Reduction,
    pub direction: [f64; 3],
    pub outcome: i8,
    pub probability: f64,
    /// The other outcome along the kept direction never occurs.
    pub no_measurement_needed: bool,
}

fn normalized(v: [f64; 3]) -> Option<[f64; 3]> {
    let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    (len > 1e-12).then(|| [v[0] / len, v[1] / len, v[2] / len])
}

/// Measures qubit `N` and keeps the reduced operator with the largest violation.
pub fn lemma1_project(rho: &DensityMatrix, b: &BellOperator) -> Result<Lemma1Outcome> {
    let n = rho.n_qubits();
    let split = b.split().ok_or(Error::MissingSplit)?;
    if n < 2 {
        return Err(Error::Precondition("projection needs N >= 2".into()));
    }
    let beta_in = violation(rho, b)?.beta;
    if !(beta_in > 1.0) {
        return Err(Error::Precondition(format!("beta = {beta_in} does not exceed 1")));
    }
    let (u, v) = (split.n_last, split.n_last_prime);
    let (b_plus, b_minus) = b.reductions()?;
    let candidates = [
        (Reduction::Bisectrix, normalized([u[0] + v[0], u[1] + v[1], u[2] + v[2]]), b_plus),
        (Reduction::Difference, normalized([u[0] - v[0], u[1] - v[1], u[2] - v[2]]), b_minus),
    ];
    let mut best: Option<Lemma1Outcome> = None;
    for (reduction, dir, op) in candidates {
        let Some(dir) = dir else { continue };
        let neg = op.negated();
        let branches = [project_qubit(rho, n, dir, 1)?, project_qubit(rho, n, dir, -1)?];
        for (idx, outcome) in [1i8, -1].into_iter().enumerate() {
            let Some(state) = &branches[idx].state else { continue };
            let reduced = if outcome == 1 { &op } else { &neg };
            let beta_out = violation(state, reduced)?.beta;
            if best.as_ref().map_or(true, |b| beta_out > b.beta_out) {
                best = Some(Lemma1Outcome {
                    state: state.clone(),
                    operator: reduced.clone(),
                    beta_in,
                    beta_out,
                    reduction,
                    direction: dir,
                    outcome,
                    probability: branches[idx].probability,
                    no_measurement_needed: branches[1 - idx].is_empty(),
                });
            }
        }
    }
    best.ok_or_else(|| Error::Precondition("every projection branch is empty".into()))
}

/// Residual two-qubit result for the pair `(1, l)`.
#[derive(Debug, Clone)]
pub struct PairEvidence {
    pub partner: usize,
    pub state: DensityMatrix,
    pub beta_2: f64,
    pub min_pt: f64,
    pub chsh_violated: bool,
    pub npt: bool,
}

impl PairEvidence {
    pub fn ok(&self) -> bool {
        self.chsh_violated || self.npt
    }
}

#[derive(Debug, Clone)]
pub struct Corollary1Outcome {
    pub beta: f64,
    pub pairs: Vec<PairEvidence>,
}

impl Corollary1Outcome {
    pub fn all_ok(&self) -> bool {
        self.pairs.iter().all(PairEvidence::ok)
    }

    pub fn failure(&self) -> Option<Error> {
        self.pairs.iter().find(|p| !p.ok()).map(|p| Error::Falsified {
            invariant: "corollary1-pair".into(),
            detail: format!("pair (1,{}) ends with beta_2 = {} and min PT eigenvalue {}", p.partner, p.beta_2, p.min_pt),
        })
    }
}

/// Projects away everyone except qubits 1 and `l`, for each `l`.
pub fn corollary1_full_distill(rho: &DensityMatrix, b: &BellOperator) -> Result<Corollary1Outcome> {
    let n = rho.n_qubits();
    if b.split().is_none() && n > 2 {
        return Err(Error::MissingSplit);
    }
    let beta = violation(rho, b)?.beta;
    let threshold = 2f64.powf((n as f64 - 2.0) / 2.0);
    if !(beta > threshold * (1.0 + EDGE_RTOL)) {
        return Err(Error::Precondition(format!("beta = {beta} does not exceed 2^((N-2)/2) = {threshold}")));
    }
    let pairs = (2..=n)
        .into_par_iter()
        .map(|l| -> Result<PairEvidence> {
            let mut order = vec![1, l];
            order.extend((2..=n).filter(|&q| q != l));
            let mut state = DensityMatrix::new_unchecked(n, permute_qubits(rho.matrix(), &order)?);
            let mut op = b.permuted(&order)?;
            for _ in 0..n - 2 {
                let step = lemma1_project(&state, &op)?;
                state = step.state;
                op = step.operator;
            }
            let beta_2 = violation(&state, &op)?.beta;
            let min_pt = min_pt_eigenvalue(state.matrix(), &QubitSubset::new(2, &[2])?)?;
            Ok(PairEvidence { partner: l, state, beta_2, min_pt, chsh_violated: beta_2 > 1.0, npt: min_pt < -NEGATIVITY_TOL })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Corollary1Outcome { beta, pairs })
}

/// Result of the three-qubit protocol with one measuring party.
#[derive(Debug, Clone)]
pub struct AppendixBParty {
    pub party: usize,
    pub p_plus: f64,
    pub p_minus: f64,
    pub a: f64,
    pub c: f64,
    pub d: f64,
    /// `det [[1/2 - a, c], [c, 1/2 - a]]`.
    pub det_m: f64,
    /// `p+ + p- - 2 p+ p- > 1/2`.
    pub condition: bool,
    /// Conditional state of the other two qubits for outcome `+1`.
    pub conditional: DensityMatrix,
    /// Largest entrywise gap between the projected state and the `(a, c, d)` form.
    pub form_mismatch: f64,
    pub min_pt_plus: f64,
    pub min_pt_minus: f64,
}

impl AppendixBParty {
    pub fn npt(&self) -> bool {
        self.min_pt_plus < -NEGATIVITY_TOL || self.min_pt_minus < -NEGATIVITY_TOL
    }

    /// The closed-form condition agrees with the determinant and implies brute-force NPT.
    pub fn consistent(&self) -> bool {
        let det_neg = self.det_m < 0.0;
        let agree = self.condition == det_neg || self.det_m.abs() < 1e-12;
        agree && (!self.condition || self.min_pt_plus < 0.0) && self.form_mismatch < 1e-10
    }
}

#[derive(Debug, Clone)]
pub struct AppendixBOutcome {
    /// Depolarized weights after relabeling so that `mu_0^+` is maximal.
    pub weights: GhzWeights,
    pub relabel_pair: usize,
    pub relabel_sign: Sigma,
    pub parties: Vec<AppendixBParty>,
}

impl AppendixBOutcome {
    pub fn all_pairs_distillable(&self) -> bool {
        self.parties.iter().all(|p| p.condition)
    }
}

pub fn appendix_b_check(rho: &DensityMatrix) -> Result<AppendixBOutcome> {
    if rho.n_qubits() != 3 {
        return Err(Error::InvalidArgument(format!("three-qubit protocol got {} qubits", rho.n_qubits())));
    }
    let mu = ghz_depolarize(rho);
    let m = n_pairs(3);
    let (mut ks, mut ss) = (0, Sigma::Plus);
    for k in 0..m {
        for s in Sigma::BOTH {
            if mu.get(k, s) > mu.get(ks, ss) {
                (ks, ss) = (k, s);
            }
        }
    }
    // local bit flips on the pattern of ks and, if needed, one sigma_z move (ks, ss) to (0, +)
    let flip = |s: Sigma| if ss == Sigma::Minus { s.flip() } else { s };
    let mut plus = vec![0.0; m];
    let mut minus = vec![0.0; m];
    for k in 0..m {
        for s in Sigma::BOTH {
            let w = mu.get(k, s);
            match flip(s) {
                Sigma::Plus => plus[k ^ ks] = w,
                Sigma::Minus => minus[k ^ ks] = w,
            }
        }
    }
    let weights = GhzWeights::from_estimates(3, plus, minus);
    let state = make_ghz_diagonal(&weights);
    let x = [1.0, 0.0, 0.0];
    let parties = (1..=3)
        .map(|party| -> Result<AppendixBParty> {
            let others: Vec<usize> = (1..=3).filter(|&q| q != party).collect();
            let same = |k: usize| bit(k, 3, others[0]) == bit(k, 3, others[1]);
            let sum = |s: Sigma, want: bool| (0..m).filter(|&k| same(k) == want).map(|k| weights.get(k, s)).sum::<f64>();
            let (p_plus, p_minus) = (sum(Sigma::Plus, true), sum(Sigma::Minus, true));
            let (q_plus, q_minus) = (sum(Sigma::Plus, false), sum(Sigma::Minus, false));
            let a = 0.5 * (p_plus + p_minus);
            let c = 0.5 * (p_plus - p_minus);
            let d = 0.5 * (q_plus - q_minus);
            let det_m = (0.5 - a).powi(2) - c * c;
            let condition = p_plus + p_minus - 2.0 * p_plus * p_minus > 0.5;

            let branch = |outcome: i8| -> Result<Option<DensityMatrix>> { Ok(project_qubit(&state, party, x, outcome)?.state) };
            let conditional = branch(1)?.ok_or_else(|| Error::Precondition("empty conditional branch".into()))?;
            let mut expected = ComplexMatrix::zeros(4);
            for (i, j, v) in [(0, 0, a), (3, 3, a), (0, 3, c), (3, 0, c), (1, 1, 0.5 - a), (2, 2, 0.5 - a), (1, 2, d), (2, 1, d)] {
                expected[(i, j)] = v.into();
            }
            let form_mismatch = conditional.matrix().max_abs_diff(&expected);
            let side = QubitSubset::new(2, &[1])?;
            let min_pt_plus = min_pt_eigenvalue(conditional.matrix(), &side)?;
            let min_pt_minus = match branch(-1)? {
                Some(s) => min_pt_eigenvalue(s.matrix(), &side)?,
                None => 0.0,
            };
            Ok(AppendixBParty { party, p_plus, p_minus, a, c, d, det_m, condition, conditional, form_mismatch, min_pt_plus, min_pt_minus })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AppendixBOutcome { weights, relabel_pair: ks, relabel_sign: ss, parties })
}
