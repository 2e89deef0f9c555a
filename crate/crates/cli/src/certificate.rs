//! Falsification certificates and the invariant checks that produce them.

use std::f64::consts::SQRT_2;
use std::path::{Path, PathBuf};

use belldist::distill::{corollary1_full_distill, lemma1_project, npt_partitions, theorem1_protocol};
use belldist::qlinalg::{min_pt_eigenvalue, NEGATIVITY_TOL};
use belldist::states::make_ghz_diagonal;
use belldist::{BellOperator, DensityMatrix, Error};
use serde_json::{json, Value};

use crate::canonical;
use crate::error::CliError;
use crate::opspec::SettingsFile;
use crate::statefile::StateFile;

#[derive(Debug, Clone)]
pub struct Certificate {
    pub invariant: String,
    pub detail: String,
    pub seed: Option<u64>,
    pub state: StateFile,
    pub operator: Value,
}

pub fn operator_value(op: &BellOperator) -> Value {
    json!({
        "family": op.family().name(),
        "gamma": op.gamma(),
        "lv_bound": op.lv_bound(),
        "settings": op.settings().map(|s| serde_json::to_value(SettingsFile::from_settings(s)).expect("plain data")),
    })
}

impl Certificate {
    pub fn new(invariant: &str, detail: String, seed: Option<u64>, rho: &DensityMatrix, op: &BellOperator) -> Self {
        Self { invariant: invariant.to_string(), detail, seed, state: StateFile::dense(rho), operator: operator_value(op) }
    }

    pub fn render(&self) -> Result<String, CliError> {
        let mut out = String::new();
        out.push_str(&format!("invariant: {}\n", self.invariant));
        out.push_str(&format!("detail: {}\n", self.detail));
        if let Some(seed) = self.seed {
            out.push_str(&format!("seed: {seed}\n"));
        }
        out.push_str("operator:\n");
        out.push_str(&canonical::value_to_string(&self.operator));
        out.push_str("state:\n");
        out.push_str(&self.state.encode()?);
        Ok(out)
    }

    /// Writes `<invariant>-<digest prefix>.cert` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let text = self.render()?;
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let digest = canonical::digest(&Value::String(text.clone()));
        let path = dir.join(format!("{}-{}.cert", self.invariant, &digest[..12]));
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

/// Outcome of every invariant check on one violating instance.
#[derive(Debug, Clone, Default)]
pub struct CheckSummary {
    pub beta: f64,
    pub beta_out: Option<f64>,
    pub projected_min_pt: Option<f64>,
    pub npt_count: usize,
    pub partitions: usize,
    pub corollary_checked: bool,
    pub failures: Vec<Certificate>,
}

/// Runs the bipartite route, the projection bound, NPT coverage and, above `2^{(N-2)/2}`, the pairwise route.
pub fn check_instance(rho: &DensityMatrix, op: &BellOperator, seed: Option<u64>) -> Result<CheckSummary, CliError> {
    let n = rho.n_qubits();
    let beta = belldist::bell::violation(rho, op)?.beta;
    let mut s = CheckSummary { beta, ..Default::default() };
    if !(beta > 1.0) {
        return Ok(s);
    }
    let mut fail = |inv: &str, detail: String| s.failures.push(Certificate::new(inv, detail, seed, rho, op));

    match theorem1_protocol(rho, op) {
        Ok(report) => {
            let t1 = report.theorem1.expect("protocol trace present");
            let brute = min_pt_eigenvalue(make_ghz_diagonal(&t1.depolarized).matrix(), &t1.verdict.partition)?;
            if !(brute < -NEGATIVITY_TOL) {
                fail(
                    "theorem1-block-vs-brute-force",
                    format!("block {:?} negative but PT minimum is {brute}", (t1.verdict.k, t1.verdict.k_prime)),
                );
            }
            if !(t1.projected_min_pt < -NEGATIVITY_TOL) {
                fail("theorem1-projected-npt", format!("projected two-qubit state has PT minimum {}", t1.projected_min_pt));
            }
            s.projected_min_pt = Some(t1.projected_min_pt);
        }
        Err(Error::Falsified { invariant, detail }) => fail(&invariant, detail),
        Err(e) => return Err(e.into()),
    }

    if op.split().is_some() {
        let out = lemma1_project(rho, op)?;
        if out.beta_out < beta / SQRT_2 - 1e-9 {
            fail("lemma1-bound", format!("beta_out = {} < beta / sqrt 2 = {}", out.beta_out, beta / SQRT_2));
        }
        s.beta_out = Some(out.beta_out);
    }

    let table = npt_partitions(rho)?;
    s.partitions = table.len();
    s.npt_count = table.iter().filter(|(_, m)| *m < -NEGATIVITY_TOL).count();
    if s.npt_count == 0 {
        fail("violation-implies-npt", format!("beta = {beta} yet every bipartition is PPT"));
    }
    let strong = 2f64.powf((n as f64 - 2.0) / 2.0);
    if beta > strong * (1.0 + belldist::distill::EDGE_RTOL) {
        if s.npt_count != s.partitions {
            fail(
                "strong-violation-all-npt",
                format!("beta = {beta} > {strong} but only {}/{} bipartitions are NPT", s.npt_count, s.partitions),
            );
        }
        if op.split().is_some() {
            let c = corollary1_full_distill(rho, op)?;
            if let Some(Error::Falsified { detail, .. }) = c.failure() {
                fail("corollary1-pair", detail);
            }
            s.corollary_checked = true;
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::violating_instances;

    #[test]
    fn clean_instances_produce_no_certificates() {
        for inst in violating_instances(0, 3, 10).unwrap() {
            let s = check_instance(&inst.rho, &inst.operator, Some(inst.seed)).unwrap();
            assert!(s.failures.is_empty(), "{:?}", s.failures.first().map(|c| &c.detail));
        }
    }

    #[test]
    fn certificates_are_written() {
        let inst = &violating_instances(0, 3, 1).unwrap()[0];
        let cert = Certificate::new("demo", "synthetic".into(), Some(inst.seed), &inst.rho, &inst.operator);
        let dir = tempfile::tempdir().unwrap();
        let path = cert.write(dir.path()).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert!(text.starts_with("invariant: demo\n"));
        let state_json = text.split("state:\n").nth(1).unwrap();
        let back = StateFile::decode(state_json, "cert").unwrap().build().unwrap();
        assert_eq!(back.matrix(), inst.rho.matrix());
    }
}
