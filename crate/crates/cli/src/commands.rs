//! Subcommand implementations. Each returns a finished [`Report`].

use std::f64::consts::{FRAC_PI_8, SQRT_2};
use std::path::Path;

use belldist::bell::{b_from_deltas, mbk_operator, uffink_value, violation};
use belldist::bounds::{
    beta_gamma_of_r, beta_of_r, mermin_threshold, overlap_requirement, r3_threshold, uffink_threshold, w_mbk_threshold, w_uffink_threshold,
    GridOptions,
};
use belldist::distill::{classify as classify_state, corollary1_full_distill, theorem2_classify, DistillReport};
use belldist::optimize::{optimize_ghz_overlap, optimize_settings, OptimizeOptions};
use belldist::qlinalg::eigenvalues_hermitian;
use belldist::states::make_ghz;
use belldist::DensityMatrix;
use clap::ValueEnum;
use serde_json::{json, Value};

use crate::certificate::{check_instance, operator_value};
use crate::error::CliError;
use crate::instances::{random_planar, rng, violating_instances};
use crate::opspec::{self, FamilyName, OpSpec, SettingsFile};
use crate::report::{Report, Status};
use crate::statefile::{self, StateFile};

/// Options shared by every subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct Context {
    pub seed: u64,
    pub restarts: usize,
    pub tol: f64,
    pub planar_only: bool,
}

impl Default for Context {
    fn default() -> Self {
        let o = OptimizeOptions::default();
        Self { seed: o.seed, restarts: o.restarts, tol: o.tol, planar_only: o.planar_only }
    }
}

impl Context {
    pub fn options(&self) -> OptimizeOptions {
        OptimizeOptions { restarts: self.restarts, tol: self.tol, seed: self.seed, planar_only: self.planar_only, ..Default::default() }
    }

    fn echo(&self) -> Value {
        json!({ "restarts": self.restarts, "tol": self.tol, "planar_only": self.planar_only })
    }
}

fn settings_value(s: &belldist::MeasurementSettings) -> Value {
    serde_json::to_value(SettingsFile::from_settings(s)).expect("plain data")
}

fn load_state(spec: &str) -> Result<(StateFile, DensityMatrix), CliError> {
    let file = statefile::resolve(spec)?;
    let rho = file.build()?;
    Ok((file, rho))
}

fn state_echo(file: &StateFile) -> Value {
    serde_json::to_value(file).expect("plain data")
}

pub fn eval(ctx: &Context, state: &str, op: &str, gamma: Option<f64>) -> Result<Report, CliError> {
    let (file, rho) = load_state(state)?;
    let spec = OpSpec::parse(op)?;
    let mut report =
        Report::new("eval", json!({ "state": state_echo(&file), "op": op, "gamma": gamma, "optimizer": ctx.echo() }), ctx.seed);
    let r = opspec::resolve(&spec, &rho, gamma, &ctx.options())?;
    let v = violation(&rho, &r.operator)?;
    let quadratic = uffink_value(&rho, &r.settings)? / SQRT_2;
    report.results = json!({
        "beta": v.beta,
        "raw": v.raw,
        "lv_bound": v.lv_bound,
        "violates": v.beta > 1.0,
        "operator": operator_value(&r.operator),
        "uffink_quadratic": quadratic,
        "per_restart": r.optimum.as_ref().map(|o| o.per_restart.clone()),
    });
    report.notes.push("beta = tr(rho B) / lv_bound; a local-variable model gives beta <= 1".into());
    report.summary.push(format!(
        "{} on {}: beta = {:.12} (raw {:.12}, LV bound {:.6})",
        r.operator.family(),
        state,
        v.beta,
        v.raw,
        v.lv_bound
    ));
    Ok(report)
}

fn distill_value(d: &DistillReport) -> Value {
    let npt: Vec<Value> = d
        .npt_partitions
        .iter()
        .map(|(a, m)| json!({ "partition": a.to_string(), "min_pt_eigenvalue": m, "npt": *m < -belldist::qlinalg::NEGATIVITY_TOL }))
        .collect();
    let evidence = d.bipartite_evidence.map(|b| {
        json!({ "k": b.k, "k_prime": b.k_prime, "partition": b.partition.to_string(), "determinant": b.determinant, "negative": b.negative })
    });
    let theorem1 = d.theorem1.as_ref().map(|t| {
        json!({
            "phases": t.phases,
            "weight_mismatch": t.weight_mismatch,
            "projected_min_pt": t.projected_min_pt,
            "steps": t.steps,
        })
    });
    json!({
        "beta": d.beta,
        "classification": d.p.map_or(Value::from("none"), |p| Value::from(format!("p={p}"))),
        "p": d.p,
        "max_group_size": d.max_group_size,
        "fully_distillable": d.fully_distillable,
        "security_ok": d.security_ok,
        "bipartite_evidence": evidence,
        "npt_partitions": npt,
        "theorem1": theorem1,
        "protocol_trace": d.protocol_trace,
    })
}

pub struct ClassifyArgs<'a> {
    pub state: Option<&'a str>,
    pub op: Option<&'a str>,
    pub optimize: bool,
    pub beta: Option<f64>,
    pub qubits: Option<usize>,
}

pub fn classify(ctx: &Context, args: &ClassifyArgs) -> Result<Report, CliError> {
    if let (Some(beta), Some(n)) = (args.beta, args.qubits) {
        let mut report = Report::new("classify", json!({ "beta": beta, "qubits": n }), ctx.seed);
        report.results = match theorem2_classify(beta, n) {
            Ok(c) => json!({
                "beta": beta,
                "classification": format!("p={}", c.p),
                "p": c.p,
                "max_group_size": c.max_group_size,
                "fully_distillable": c.fully_distillable,
                "security_ok": c.security_ok,
            }),
            Err(belldist::Error::Precondition(_)) => json!({ "beta": beta, "classification": "none" }),
            Err(e) => return Err(e.into()),
        };
        report.summary.push(format!("N={n} beta={beta}: {}", report.results["classification"]));
        return Ok(report);
    }
    let state = args.state.ok_or_else(|| CliError::spec("classify", "", "needs --state, or --beta with --qubits"))?;
    let op = match (args.op, args.optimize) {
        (Some(op), false) => op.to_string(),
        (None, true) => "mbk:auto".to_string(),
        _ => return Err(CliError::spec("classify", state, "give exactly one of --op and --optimize")),
    };
    let (file, rho) = load_state(state)?;
    let mut report = Report::new("classify", json!({ "state": state_echo(&file), "op": op, "optimizer": ctx.echo() }), ctx.seed);
    let r = opspec::resolve(&OpSpec::parse(&op)?, &rho, None, &ctx.options())?;
    let d = classify_state(&rho, &r.operator)?;
    let mut results = distill_value(&d);
    results["operator"] = operator_value(&r.operator);
    if d.fully_distillable && r.operator.split().is_some() {
        let c = corollary1_full_distill(&rho, &r.operator)?;
        results["pairwise"] = json!(c
            .pairs
            .iter()
            .map(|p| json!({ "pair": [1, p.partner], "beta_2": p.beta_2, "min_pt_eigenvalue": p.min_pt, "ok": p.ok() }))
            .collect::<Vec<_>>());
        if let Some(err) = c.failure() {
            report.status = Status::Failed;
            report.summary.push(err.to_string());
        }
    }
    report.results = results;
    report.notes.push("p is the integer with 2^((N-p)/2) < beta <= 2^((N-p+1)/2); groups have at most p-1 qubits".into());
    report.summary.push(format!(
        "beta = {:.12}; class {}; fully distillable: {}; NPT partitions {}/{}",
        d.beta,
        d.p.map_or("none".to_string(), |p| format!("p={p}")),
        d.fully_distillable,
        d.npt_partitions.iter().filter(|(_, m)| *m < -belldist::qlinalg::NEGATIVITY_TOL).count(),
        d.npt_partitions.len()
    ));
    Ok(report)
}

pub fn optimize(ctx: &Context, state: &str, family: &str, gamma: Option<f64>, overlap: bool) -> Result<Report, CliError> {
    let (file, rho) = load_state(state)?;
    let inputs = json!({ "state": state_echo(&file), "family": family, "overlap": overlap, "optimizer": ctx.echo() });
    let mut report = Report::new("optimize", inputs, ctx.seed);
    let opts = ctx.options();
    if overlap {
        let o = optimize_ghz_overlap(&rho, &opts)?;
        let bound = beta_of_r(rho.n_qubits(), o.r_max)?;
        report.results = json!({
            "r_max": o.r_max,
            "euler_angles": o.euler_angles,
            "restart": o.restart,
            "per_restart": o.per_restart,
            "beta_bound": bound.beta_max,
        });
        report.summary.push(format!("GHZ overlap r_max = {:.12}; beta(r_max) = {:.12}", o.r_max, bound.beta_max));
        return Ok(report);
    }
    let fam = FamilyName::parse(family)?;
    let o = optimize_settings(&rho, fam.family(gamma.unwrap_or(0.0)), &opts)?;
    report.results = json!({
        "family": fam.name(),
        "beta": o.beta,
        "gamma": o.gamma,
        "settings": settings_value(&o.settings),
        "restart": o.restart,
        "per_restart": o.per_restart,
    });
    report.summary.push(format!("best {} value {:.12} from restart {}", fam.name(), o.beta, o.restart));
    Ok(report)
}

pub fn bounds(ctx: &Context, n: usize, r: Option<f64>, p: Option<usize>, uffink: bool, grid_points: usize) -> Result<Report, CliError> {
    let inputs = json!({ "qubits": n, "r": r, "p": p, "uffink": uffink, "grid_points": grid_points });
    let mut report = Report::new("bounds", inputs, ctx.seed);
    let mut results = serde_json::Map::new();
    if let Some(r) = r {
        let b = beta_of_r(n, r)?;
        results.insert(
            "overlap_bound".into(),
            json!({ "beta_max": b.beta_max, "lambda_rest": b.lambda_rest, "eta": b.eta, "b0": b.b0, "b_rest": b.b_rest }),
        );
        report.summary.push(format!("beta({n}, {r}) = {:.12}", b.beta_max));
        if uffink {
            if n != 3 {
                return Err(CliError::spec("bounds", "--uffink", "the Uffink overlap bound is three-qubit only"));
            }
            let g = beta_gamma_of_r(r, &GridOptions { points: grid_points, ..Default::default() })?;
            results.insert(
                "uffink_bound".into(),
                json!({ "value": g.value, "normalized": g.value / SQRT_2, "deltas": g.deltas, "gamma": g.gamma }),
            );
            report.summary.push(format!("beta_gamma({r}) = {:.12}", g.value));
        }
    }
    if let Some(p) = p {
        let req = overlap_requirement(n, p)?;
        results.insert("overlap_requirement".into(), json!({ "p": p, "r": req, "unconstrained": req.is_none() }));
        report.summary.push(format!("overlap needed for class p={p}: {req:?}"));
    }
    if results.is_empty() {
        return Err(CliError::spec("bounds", "", "give --r and/or --p"));
    }
    report.results = Value::Object(results);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReproTarget {
    R3,
    #[value(name = "rU")]
    RU,
    MerminThreshold,
    MbkMax,
    WUffink,
    ConstraintSum,
}

impl ReproTarget {
    pub fn name(self) -> &'static str {
        match self {
            Self::R3 => "r3",
            Self::RU => "rU",
            Self::MerminThreshold => "mermin-threshold",
            Self::MbkMax => "mbk-max",
            Self::WUffink => "w-uffink",
            Self::ConstraintSum => "constraint-sum",
        }
    }
}

/// Obtained versus expected value of one reproduction.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub obtained: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub extra: Value,
    pub note: String,
}

impl Comparison {
    fn new(obtained: f64, expected: f64, tolerance: f64, note: &str) -> Self {
        Self { obtained, expected, tolerance, pass: (obtained - expected).abs() <= tolerance, extra: Value::Null, note: note.into() }
    }
}

pub fn run_repro(ctx: &Context, target: ReproTarget) -> Result<Comparison, CliError> {
    let opts = ctx.options();
    Ok(match target {
        ReproTarget::R3 => {
            let t = r3_threshold(1e-13)?;
            Comparison::new(t.value, (1.0 + 3f64.sqrt()) / 4.0, 1e-9, "overlap at which beta(3, r) reaches sqrt 2")
        }
        ReproTarget::RU => {
            let grid = GridOptions::default();
            let t = uffink_threshold(&grid, 1e-5)?;
            let mut c = Comparison::new(t.value, 0.628, 0.002, "overlap at which the three-qubit Uffink bound exceeds sqrt 2");
            let at = beta_gamma_of_r(0.628, &grid)?;
            let at_obtained = beta_gamma_of_r((t.value + t.tol).min(1.0), &grid)?;
            c.extra = json!({
                "scan_tol": t.tol,
                "grid_points": grid.points,
                "value_at_expected": at.value,
                "excess_at_expected": at.value - SQRT_2,
                "excess_just_above_obtained": at_obtained.value - SQRT_2,
            });
            c
        }
        ReproTarget::MerminThreshold => {
            let t = mermin_threshold(&opts, 1e-4)?;
            let mut c = Comparison::new(t.value, 0.687, 0.002, "overlap at which the optimized MBK value of rho_3(r) exceeds sqrt 2");
            c.extra = json!({ "scan_tol": t.tol, "restarts": opts.restarts });
            c
        }
        ReproTarget::MbkMax => {
            let mut worst: f64 = 0.0;
            let mut values = Vec::new();
            for n in 2..=6 {
                let o = optimize_settings(&make_ghz(n)?, belldist::Family::Mbk, &opts)?;
                let top = 2f64.powf((n as f64 - 1.0) / 2.0);
                worst = worst.max((o.beta - top).abs());
                values.push(json!({ "n_qubits": n, "beta": o.beta, "expected": top }));
            }
            let mut c = Comparison::new(worst, 0.0, 1e-4, "largest |beta - 2^((N-1)/2)| over GHZ_N, N = 2..6");
            c.extra = json!({ "values": values });
            c
        }
        ReproTarget::WUffink => {
            let u = w_uffink_threshold(&opts, 1e-4)?;
            let m = w_mbk_threshold(&opts, 1e-4)?;
            let mut c = Comparison::new(u.value, FRAC_PI_8, 0.01, "angle at which the W-family state violates the Uffink inequality");
            c.pass = c.pass && m.value > u.value;
            c.extra = json!({ "mbk_threshold": m.value, "mbk_exceeds_uffink": m.value > u.value, "scan_tol": u.tol });
            c
        }
        ReproTarget::ConstraintSum => {
            let mut r = rng(ctx.seed);
            let mut worst: f64 = 0.0;
            for _ in 0..200 {
                let s = random_planar(&mut r, 3)?;
                let d = s.deltas().expect("planar");
                let b = b_from_deltas([d[0], d[1], d[2]]);
                worst = worst.max((b.iter().map(|x| x * x).sum::<f64>() - 4.0).abs());
            }
            for n in 2..=4 {
                for _ in 0..20 {
                    let s = random_planar(&mut r, n)?;
                    let ev = eigenvalues_hermitian(mbk_operator(&s)?.matrix())?;
                    let sum: f64 = ev.iter().filter(|&&x| x > 0.0).map(|x| x * x).sum();
                    worst = worst.max((sum - 2f64.powi(n as i32 - 1)).abs());
                }
            }
            Comparison::new(worst, 0.0, 1e-8, "largest |sum b_k^2 - 2^(N-1)| for MBK operators at random planar settings")
        }
    })
}

pub fn repro(ctx: &Context, target: ReproTarget) -> Result<Report, CliError> {
    let mut report = Report::new("repro", json!({ "target": target.name(), "optimizer": ctx.echo() }), ctx.seed);
    let c = run_repro(ctx, target)?;
    report.results = json!({
        "target": target.name(),
        "obtained": c.obtained,
        "expected": c.expected,
        "tolerance": c.tolerance,
        "pass": c.pass,
        "details": c.extra,
    });
    report.notes.push(c.note.clone());
    report.status = if c.pass { Status::Ok } else { Status::Failed };
    report.summary.push(format!(
        "{}: obtained {:.10} expected {:.10} +- {:.1e}: {}",
        target.name(),
        c.obtained,
        c.expected,
        c.tolerance,
        if c.pass { "PASS" } else { "FAIL" }
    ));
    Ok(report)
}

pub struct CertifyArgs<'a> {
    pub state: Option<&'a str>,
    pub op: Option<&'a str>,
    pub qubits: usize,
    pub count: usize,
    pub out_dir: &'a Path,
}

pub fn certify(ctx: &Context, args: &CertifyArgs) -> Result<Report, CliError> {
    let mut cases = Vec::new();
    let inputs = match (args.state, args.op) {
        (Some(state), Some(op)) => {
            let (file, rho) = load_state(state)?;
            let r = opspec::resolve(&OpSpec::parse(op)?, &rho, None, &ctx.options())?;
            cases.push((None, rho, r.operator));
            json!({ "state": state_echo(&file), "op": op })
        }
        (None, None) => {
            for inst in violating_instances(ctx.seed, args.qubits, args.count)? {
                cases.push((Some(inst.seed), inst.rho, inst.operator));
            }
            json!({ "qubits": args.qubits, "count": args.count })
        }
        _ => return Err(CliError::spec("certify", "", "give both --state and --op, or neither")),
    };
    let mut report = Report::new("certify", inputs, ctx.seed);
    let mut failures = Vec::new();
    let mut checked = 0;
    for (seed, rho, op) in &cases {
        let s = check_instance(rho, op, *seed)?;
        if s.beta > 1.0 {
            checked += 1;
        }
        for cert in s.failures {
            let path = cert.write(args.out_dir)?;
            failures
                .push(json!({ "invariant": cert.invariant, "detail": cert.detail, "seed": cert.seed, "path": path.display().to_string() }));
        }
    }
    report.status = if failures.is_empty() { Status::Ok } else { Status::Failed };
    report.summary.push(format!("checked {checked} violating instance(s); {} certificate(s) written", failures.len()));
    report.results = json!({ "checked": checked, "failures": failures });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> Context {
        Context { restarts: 2, ..Default::default() }
    }

    #[test]
    fn eval_examples() {
        let r = eval(&quick(), "ghz:3", "mbk:optimal", None).unwrap();
        assert!((r.results["beta"].as_f64().unwrap() - 2.0).abs() < 1e-12);
        let r = eval(&quick(), "mixed:3", "mbk:optimal", None).unwrap();
        assert!(r.results["beta"].as_f64().unwrap().abs() < 1e-12);
        assert!(eval(&quick(), "ghz:3", "chsh:optimal", None).is_err());
    }

    #[test]
    fn classify_examples() {
        let args = ClassifyArgs { state: None, op: None, optimize: false, beta: Some(4.0 * SQRT_2), qubits: Some(7) };
        let r = classify(&quick(), &args).unwrap();
        assert_eq!(r.results["max_group_size"], 2);
        let args = ClassifyArgs { state: Some("ghz:3"), op: Some("mbk:optimal"), optimize: false, beta: None, qubits: None };
        let r = classify(&quick(), &args).unwrap();
        assert_eq!(r.results["fully_distillable"], true);
        assert_eq!(r.results["security_ok"], true);
        assert_eq!(r.results["pairwise"].as_array().unwrap().len(), 2);
        let args = ClassifyArgs { state: Some("mixed:3"), op: Some("mbk:optimal"), optimize: false, beta: None, qubits: None };
        assert_eq!(classify(&quick(), &args).unwrap().results["classification"], "none");
    }

    #[test]
    fn cheap_repro_targets_pass() {
        for t in [ReproTarget::R3, ReproTarget::ConstraintSum] {
            let r = repro(&quick(), t).unwrap();
            assert_eq!(r.status, Status::Ok, "{}", r.render());
        }
    }

    #[test]
    fn bounds_report() {
        let r = bounds(&quick(), 3, Some(0.7), Some(2), false, 16).unwrap();
        assert!(r.results["overlap_bound"]["beta_max"].as_f64().unwrap() > SQRT_2);
        assert!((r.results["overlap_requirement"]["r"].as_f64().unwrap() - (1.0 + 3f64.sqrt()) / 4.0).abs() < 1e-12);
        assert!(bounds(&quick(), 3, None, None, false, 16).is_err());
    }

    #[test]
    fn certify_batch_is_clean() {
        let dir = tempfile::tempdir().unwrap();
        let args = CertifyArgs { state: None, op: None, qubits: 3, count: 5, out_dir: dir.path() };
        let r = certify(&quick(), &args).unwrap();
        assert_eq!(r.status, Status::Ok);
        assert_eq!(r.results["checked"], 5);
    }
}
