//! Command implementations. Each returns the rendered report body plus a
//! pass/fail verdict; the caller maps those onto exit codes.

use crate::config::{FunctionLiteral, GridConfig, NormConfig, OutputFormat, RunConfig};
use crate::output::{self, ExtVal};
use serde::Serialize;
use xlab_core::admissible::{default_check_grid, AdmissibilityReport};
use xlab_core::calderon::OperatorInput;
use xlab_core::norms::{
    lexp_norm, llogl_log3_norm, llogl_norm, lorentz_norm, mphi_norm, philog_norm,
    weak_lorentz_norm, LorentzParams,
};
use xlab_core::quadrature::Tolerance;
use xlab_core::rearrangement::{DecreasingStep, StepFunction};
use xlab_core::verify;
use xlab_core::{log_grid, AdmissibleFunction, KernelSpec, PhiDescription, VerificationReport};

pub struct Outcome {
    pub body: String,
    pub passed: bool,
}

type CmdResult = Result<Outcome, String>;

pub fn run(command: &str, suite: Option<&str>, cfg: &RunConfig) -> CmdResult {
    match command {
        "check-phi" => cmd_check_phi(cfg),
        "rearrange" => cmd_rearrange(cfg),
        "norm" => cmd_norm(cfg),
        "apply" => cmd_apply(cfg),
        "verify" => cmd_verify(suite.expect("verify always carries a suite"), cfg),
        other => Err(format!("unknown command {other}")),
    }
}

// ----------------------------------------------------------------------
// Shared pieces.

fn fmt(cfg: &RunConfig) -> OutputFormat {
    cfg.format.unwrap_or(OutputFormat::Json)
}

fn need_spec(cfg: &RunConfig) -> Result<KernelSpec, String> {
    let spec = cfg
        .spec
        .clone()
        .ok_or("this command needs a `spec` entry in the config")?;
    Ok(match &cfg.tolerances {
        Some(t) => spec.with_tolerance(Tolerance::new(t.abs, t.rel)),
        None => spec,
    })
}

fn need_function(cfg: &RunConfig) -> Result<&FunctionLiteral, String> {
    cfg.function
        .as_ref()
        .ok_or_else(|| "this command needs a `function` literal".into())
}

fn function_or_unit(cfg: &RunConfig) -> FunctionLiteral {
    cfg.function
        .clone()
        .unwrap_or_else(FunctionLiteral::unit_indicator)
}

fn phi_description(cfg: &RunConfig) -> Result<PhiDescription, String> {
    cfg.phi
        .clone()
        .or_else(|| cfg.spec.as_ref().map(|s| s.phi().describe()))
        .ok_or_else(|| "this command needs a `phi` description (or a `spec` carrying one)".into())
}

fn grids(cfg: &RunConfig) -> GridConfig {
    cfg.grids.unwrap_or_default()
}

/// Log grid spanning `t_span_decades` on either side of `[lo, hi]`.
fn span_grid(lo: f64, hi: f64, g: &GridConfig) -> Vec<f64> {
    let pad = 10f64.powf(g.t_span_decades);
    log_grid(lo / pad, hi * pad, g.t_points)
}

fn family_grid(family: &[(String, StepFunction)], g: &GridConfig) -> Vec<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for (_, f) in family {
        if let Some((a, b)) = f.support_scales() {
            lo = lo.min(a);
            hi = hi.max(b);
        }
    }
    if lo.is_finite() && hi > 0.0 {
        span_grid(lo, hi, g)
    } else {
        span_grid(1.0, 1.0, g)
    }
}

fn step_grid(step: &StepFunction, g: &GridConfig) -> Vec<f64> {
    match step.support_scales() {
        Some((lo, hi)) => span_grid(lo, hi, g),
        None => span_grid(1.0, 1.0, g),
    }
}

/// The explicit `t_grid` when given, otherwise the generated fallback.
fn t_grid_or(cfg: &RunConfig, fallback: impl FnOnce() -> Vec<f64>) -> Vec<f64> {
    match &cfg.t_grid {
        Some(ts) => ts.clone(),
        None => fallback(),
    }
}

// ----------------------------------------------------------------------
// check-phi.

#[derive(Serialize)]
struct CheckPhiOut<'a> {
    command: &'a str,
    phi: &'a PhiDescription,
    report: &'a AdmissibilityReport,
}

fn cmd_check_phi(cfg: &RunConfig) -> CmdResult {
    let desc = phi_description(cfg)?;
    let phi = AdmissibleFunction::from_description(&desc).map_err(|e| e.to_string())?;
    let report = phi.check(&default_check_grid());
    let passed = report.passed;
    let out = CheckPhiOut {
        command: "check-phi",
        phi: &desc,
        report: &report,
    };
    let body = match fmt(cfg) {
        OutputFormat::Json => output::to_json(&out)?,
        OutputFormat::Csv => output::to_key_value_csv(&out)?,
    };
    Ok(Outcome { body, passed })
}

// ----------------------------------------------------------------------
// rearrange.

#[derive(Serialize)]
struct RearrangeOut<'a> {
    command: &'a str,
    rearranged: &'a DecreasingStep,
}

fn cmd_rearrange(cfg: &RunConfig) -> CmdResult {
    let fstar = need_function(cfg)?
        .to_decreasing()
        .map_err(|e| e.to_string())?;
    let body = match fmt(cfg) {
        OutputFormat::Json => output::to_json(&RearrangeOut {
            command: "rearrange",
            rearranged: &fstar,
        })?,
        OutputFormat::Csv => {
            let mut rows = vec![output::csv_row(&["break", "value"])];
            for (_, hi, v) in fstar.cells() {
                rows.push(output::csv_row(&[
                    &output::fmt_num(hi),
                    &output::fmt_num(v),
                ]));
            }
            rows.concat()
        }
    };
    Ok(Outcome { body, passed: true })
}

// ----------------------------------------------------------------------
// norm.

#[derive(Serialize)]
struct NormOut<'a> {
    command: &'a str,
    norm: &'a NormConfig,
    value: ExtVal,
}

fn cmd_norm(cfg: &RunConfig) -> CmdResult {
    let norm = cfg
        .norm
        .clone()
        .ok_or("the norm command needs a `norm` entry")?;
    let fstar = need_function(cfg)?
        .to_decreasing()
        .map_err(|e| e.to_string())?;
    let finite_exponent = |p: f64| -> Result<f64, String> {
        if p.is_finite() && p >= 1.0 {
            Ok(p)
        } else {
            Err(format!("exponent p = {p} must be finite and >= 1"))
        }
    };
    let value = match &norm {
        NormConfig::Lorentz { p, q } => lorentz_norm(
            &fstar,
            LorentzParams::new(*p, *q).map_err(|e| e.to_string())?,
        ),
        NormConfig::WeakLorentz { p } => weak_lorentz_norm(&fstar, finite_exponent(*p)?),
        NormConfig::Llogl { alpha } => {
            if !(alpha.is_finite() && *alpha >= 0.0) {
                return Err(format!("alpha = {alpha} must be finite and >= 0"));
            }
            llogl_norm(&fstar, *alpha)
        }
        NormConfig::LloglLog3 => llogl_log3_norm(&fstar),
        NormConfig::Mphi => mphi_norm(&fstar.double_star()),
        NormConfig::Lexp => lexp_norm(&fstar.double_star()),
        NormConfig::Philog { p, phi } => {
            let weight = AdmissibleFunction::from_description(phi).map_err(|e| e.to_string())?;
            philog_norm(&fstar, finite_exponent(*p)?, &weight)
        }
    };
    let out = NormOut {
        command: "norm",
        norm: &norm,
        value: ExtVal(value),
    };
    let body = match fmt(cfg) {
        OutputFormat::Json => output::to_json(&out)?,
        OutputFormat::Csv => output::to_key_value_csv(&out)?,
    };
    Ok(Outcome { body, passed: true })
}

// ----------------------------------------------------------------------
// apply.

#[derive(Serialize)]
struct ApplyOut<'a> {
    command: &'a str,
    spec: &'a KernelSpec,
    columns: [&'a str; 4],
    rows: Vec<[ExtVal; 4]>,
}

fn cmd_apply(cfg: &RunConfig) -> CmdResult {
    let spec = need_spec(cfg)?;
    // An atoms literal realizes as its decreasing rearrangement, which is
    // already what to_step yields for it.
    let step = need_function(cfg)?.to_step().map_err(|e| e.to_string())?;
    let input = OperatorInput::from(&step);
    let g = grids(cfg);
    let ts = t_grid_or(cfg, || step_grid(&step, &g));
    let rows: Vec<[ExtVal; 4]> = ts
        .iter()
        .map(|&t| {
            [
                ExtVal(t),
                ExtVal(spec.apply_p(&input, t)),
                ExtVal(spec.apply_q(&input, t)),
                ExtVal(spec.apply_r(&input, t)),
            ]
        })
        .collect();
    let body = match fmt(cfg) {
        OutputFormat::Json => output::to_json(&ApplyOut {
            command: "apply",
            spec: &spec,
            columns: ["t", "P", "Q", "R"],
            rows,
        })?,
        OutputFormat::Csv => {
            let mut lines = vec![output::csv_row(&["t", "P", "Q", "R"])];
            for row in &rows {
                let cells: Vec<String> = row.iter().map(|v| output::fmt_num(v.0)).collect();
                let refs: Vec<&str> = cells.iter().map(String::as_str).collect();
                lines.push(output::csv_row(&refs));
            }
            lines.concat()
        }
    };
    Ok(Outcome { body, passed: true })
}

// ----------------------------------------------------------------------
// verify.

pub const SUITES: [&str; 11] = [
    "char-bound",
    "gh",
    "pgqg",
    "forward",
    "converse",
    "corollary",
    "remark",
    "zygmund",
    "lemma-identity",
    "lemma-infimum",
    "dilation",
];

fn build_family(cfg: &RunConfig) -> Result<crate::config::BuiltFamily, String> {
    cfg.family.clone().unwrap_or_default().build()
}

fn cmd_verify(suite: &str, cfg: &RunConfig) -> CmdResult {
    let g = grids(cfg);
    let report: VerificationReport = match suite {
        "char-bound" => {
            let spec = need_spec(cfg)?;
            let m = cfg.m.unwrap_or(1.0);
            let ts = t_grid_or(cfg, || span_grid(m, m, &g));
            verify::verify_char_lower_bound(&spec, m, &ts).map_err(|e| e.to_string())?
        }
        "gh" => {
            let f = function_or_unit(cfg)
                .to_simple()
                .map_err(|e| e.to_string())?;
            verify::verify_gh_formulas(&f, cfg.t.unwrap_or(1.0)).map_err(|e| e.to_string())?
        }
        "pgqg" => {
            let spec = need_spec(cfg)?;
            let literal = function_or_unit(cfg);
            let f = literal.to_simple().map_err(|e| e.to_string())?;
            let step = literal.to_step().map_err(|e| e.to_string())?;
            let ts = t_grid_or(cfg, || step_grid(&step, &g));
            verify::verify_pg_qg_bounds(&spec, &f, &ts).map_err(|e| e.to_string())?
        }
        "forward" => {
            let spec = need_spec(cfg)?;
            let (family, seed) = build_family(cfg)?;
            let ts = t_grid_or(cfg, || family_grid(&family, &g));
            let report = verify::verify_forward(&spec, &family, &ts).map_err(|e| e.to_string())?;
            attach_seed(report, seed)
        }
        "converse" => {
            let spec = need_spec(cfg)?;
            let p = cfg.p.unwrap_or_else(|| spec.p1());
            let (family, seed) = build_family(cfg)?;
            let ts = t_grid_or(cfg, || family_grid(&family, &g));
            let report =
                verify::verify_converse(&spec, p, &family, &ts).map_err(|e| e.to_string())?;
            attach_seed(report, seed)
        }
        "corollary" => {
            let spec = need_spec(cfg)?;
            let v = cfg.v.unwrap_or(1.0);
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("v = {v} must be finite and positive"));
            }
            let pad = 10f64.powf(g.t_span_decades);
            let s_grid = log_grid(v / pad, v * pad, g.s_points);
            let ts = t_grid_or(cfg, || log_grid(v / pad, v, g.t_points));
            verify::verify_corollary(&spec, v, &s_grid, &ts).map_err(|e| e.to_string())?
        }
        "remark" => {
            let spec = need_spec(cfg)?;
            if spec.p0() != 1.0 {
                return Err(format!(
                    "the remark suite runs at the lower endpoint; spec has p0 = {}",
                    spec.p0()
                ));
            }
            let (family, seed) = build_family(cfg)?;
            let ts = t_grid_or(cfg, || family_grid(&family, &g));
            let report = verify::verify_remark_p0_1(spec.phi(), spec.p1(), &family, &ts)
                .map_err(|e| e.to_string())?;
            attach_seed(report, seed)
        }
        "zygmund" => {
            let (family, seed) = build_family(cfg)?;
            let lo = 10f64.powf(-(g.t_span_decades + 2.0));
            let ts = t_grid_or(cfg, || log_grid(lo, 0.999, g.t_points));
            let report =
                verify::verify_zygmund_recovery(&family, &ts).map_err(|e| e.to_string())?;
            attach_seed(report, seed)
        }
        "lemma-identity" => {
            let spec = need_spec(cfg)?;
            let fstar = function_or_unit(cfg)
                .to_decreasing()
                .map_err(|e| e.to_string())?;
            let ts = t_grid_or(cfg, || match fstar.support_scales() {
                Some((lo, hi)) => span_grid(lo, hi, &g),
                None => span_grid(1.0, 1.0, &g),
            });
            verify::verify_lemma_identity(&spec, &fstar, &ts).map_err(|e| e.to_string())?
        }
        "lemma-infimum" => {
            let desc = phi_description(cfg)?;
            let phi = AdmissibleFunction::from_description(&desc).map_err(|e| e.to_string())?;
            let q0s = cfg
                .q0_grid
                .clone()
                .unwrap_or_else(|| vec![1.0, 1.5, 2.0, 3.0, 4.5, 6.5, 8.0, 10.0]);
            let xs = cfg
                .x_grid
                .clone()
                .unwrap_or_else(|| (0..=20).map(|k| -50.0 + 5.0 * k as f64).collect());
            verify::verify_lemma_infimum(&phi, &q0s, &xs).map_err(|e| e.to_string())?
        }
        "dilation" => {
            let spec = need_spec(cfg)?;
            let step = function_or_unit(cfg).to_step().map_err(|e| e.to_string())?;
            let lambdas = cfg.lambdas.clone().unwrap_or_else(|| vec![0.5, 2.0, 8.0]);
            let ts = t_grid_or(cfg, || step_grid(&step, &g));
            verify::verify_dilation(&spec, &step, &lambdas, &ts).map_err(|e| e.to_string())?
        }
        other => {
            return Err(format!(
                "unknown suite {other}; expected one of {}",
                SUITES.join("|")
            ))
        }
    };

    eprintln!(
        "{}: {} (worst ratio {} vs threshold {})",
        report.suite(),
        if report.passed() { "pass" } else { "FAIL" },
        output::fmt_num(report.worst_ratio()),
        output::fmt_num(report.threshold()),
    );
    let passed = report.passed();
    let body = match fmt(cfg) {
        OutputFormat::Json => output::to_json(&report)?,
        OutputFormat::Csv => output::to_key_value_csv(&report)?,
    };
    Ok(Outcome { body, passed })
}

fn attach_seed(report: VerificationReport, seed: Option<u64>) -> VerificationReport {
    match seed {
        Some(s) => report.with_family_seed(s),
        None => report,
    }
}
