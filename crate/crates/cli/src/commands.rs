use std::time::{SystemTime, UNIX_EPOCH};

use bbar_core::calibration::render_table;
use bbar_core::experiments::{
    calibrate, check_direct, check_inverse, check_lemma1, check_lemma4, check_lemma5, check_lemma6,
    check_lemma7, check_stability, check_theorem1, check_theorem2, run_sweep, theorem3_target,
    BoundedReport, InverseReport, RateReport, SweepSpec, CALIBRATION_PANELS, REPORT_NOTE,
};
use bbar_core::moduli::{kfunctional_upper, omega2, omega2_mainpart, smoothing_candidates};
use bbar_core::operator::{build_surrogate, operator_grid, Branch};
use bbar_core::weight::{corpus, corpus_function, FunctionKind};
use bbar_core::{Function, Modulus};
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::error::{CliError, Outcome};
use crate::output::{emit, json_line, num, opt_num, CsvTable};
use crate::schema::{CHECK_COLUMNS, EVAL_COLUMNS, LIST_COLUMNS, MODULUS_COLUMNS, SCHEMA_VERSION};

/// Settings echoed into JSON output. The output path is left out so that the
/// same run written to two places gives the same document.
pub fn config_json(cfg: &RunConfig) -> Value {
    json!({
        "command": cfg.command,
        "function": cfg.function,
        "xi": cfg.weight.xi,
        "alpha": cfg.weight.alpha,
        "lambda": cfg.lambda,
        "n": cfg.n,
        "n_values": cfg.n_values,
        "t_values": cfg.t_values,
        "grid_count": cfg.grid.count,
        "grid_placement": cfg.grid.placement.to_string(),
        "exclusion_radius": cfg.grid.exclusion_radius,
        "h_steps": cfg.h_steps,
        "which": cfg.which,
        "beta": cfg.beta,
        "gamma": cfg.gamma,
        "u": cfg.u,
        "v": cfg.v,
    })
}

fn envelope(cfg: &RunConfig, body: Value) -> Value {
    let mut doc = json!({
        "schema_version": SCHEMA_VERSION,
        "note": REPORT_NOTE,
        "command": cfg.command,
        "config": config_json(cfg),
    });
    if let (Some(d), Value::Object(b)) = (doc.as_object_mut(), body) {
        d.extend(b);
    }
    doc
}

fn rows_json(columns: &[&str], rows: &[Vec<f64>]) -> Value {
    let rows: Vec<Value> = rows
        .iter()
        .map(|r| Value::Object(columns.iter().zip(r).map(|(c, v)| (c.to_string(), json!(v))).collect()))
        .collect();
    json!({ "rows": rows })
}

/// Writes a numeric table in the configured format.
fn emit_table(cfg: &RunConfig, columns: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let text = match cfg.format {
        Format::Csv => {
            let mut t = CsvTable::new(columns);
            for r in rows {
                t.row(r.iter().copied().map(num).collect());
            }
            t.finish()
        }
        Format::Json => json_line(envelope(cfg, rows_json(columns, rows))),
    };
    emit(cfg.output.as_deref(), &text)
}

fn function(cfg: &RunConfig) -> Result<Function, CliError> {
    let name = cfg.require_function()?;
    Ok(corpus_function(name, &cfg.weight, cfg.lambda)?)
}

fn spec(cfg: &RunConfig) -> SweepSpec {
    let mut s = SweepSpec::new(cfg.weight, cfg.lambda)
        .with_n_values(cfg.n_values.clone())
        .with_grid(cfg.grid);
    if let Some(f) = &cfg.function {
        s = s.with_function(f.clone());
    }
    s
}

/// `x, f(x), Bbar_n f(x), w(x) |f(x) - Bbar_n f(x)|` over the grid and the bridge nodes.
pub fn eval(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let f = function(cfg)?;
    cfg.require_nodes(cfg.n)?;
    let coeffs = build_surrogate(&f, cfg.n, &cfg.weight)?;
    let rows = operator_grid(&cfg.grid, &coeffs.nodes)
        .into_iter()
        .map(|x| {
            let fx = f.eval(x);
            let b = coeffs.apply(x)?;
            let err = if x == cfg.weight.xi { 0.0 } else { cfg.weight.at(x) * (fx - b).abs() };
            Ok(vec![x, fx, b, err])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    emit_table(cfg, &EVAL_COLUMNS, &rows)?;
    Ok(Outcome::Pass)
}

/// Both moduli and the K-functional upper bound at each `t`.
pub fn modulus(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let f = function(cfg)?;
    let candidates = smoothing_candidates(&f, &cfg.weight);
    let base = Modulus::new(f.clone(), cfg.weight, cfg.lambda, cfg.t_values[0])?
        .with_grid(cfg.grid)
        .with_h_steps(cfg.h_steps);
    let rows = cfg
        .t_values
        .iter()
        .map(|&t| {
            let q = base.at_t(t)?;
            let omega = omega2(&q)?;
            let main = omega2_mainpart(&q)?;
            let ratio = if main == 0.0 { 0.0 } else { main / omega };
            let k = kfunctional_upper(&f, &cfg.weight, cfg.lambda, t, &candidates, &cfg.grid)?;
            Ok(vec![t, omega, main, ratio, k])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    emit_table(cfg, &MODULUS_COLUMNS, &rows)?;
    Ok(Outcome::Pass)
}

enum Report {
    Bounded(BoundedReport),
    Rate(RateReport),
    Inverse(InverseReport),
}

impl Report {
    fn pass(&self) -> bool {
        match self {
            Report::Bounded(r) => r.pass,
            Report::Rate(r) => r.pass,
            Report::Inverse(r) => r.pass,
        }
    }

    fn to_json(&self) -> Value {
        let v = match self {
            Report::Bounded(r) => serde_json::to_value(r),
            Report::Rate(r) => serde_json::to_value(r),
            Report::Inverse(r) => serde_json::to_value(r),
        };
        v.expect("reports serialize")
    }

    fn write_csv(&self, t: &mut CsvTable) {
        let flag = |b: bool| b.to_string();
        let cells = |check: &str, function: &str, record: &str, rest: [String; 10]| {
            let mut c = vec![check.to_string(), function.to_string(), record.to_string()];
            c.extend(rest);
            c
        };
        let e = String::new;
        match self {
            Report::Bounded(r) => {
                let f = r.function.as_deref().unwrap_or("");
                for row in &r.rows {
                    t.row(cells(&r.check, f, "row", [
                        row.n.to_string(), e(), num(row.value), num(row.numerator), num(row.argmax),
                        e(), e(), e(), e(), e(),
                    ]));
                }
                t.row(cells(&r.check, f, "summary", [
                    e(), e(), e(), e(), e(),
                    opt_num(r.trend.slope), opt_num(r.trend.residual), num(r.trend.tail_max_over_median),
                    e(), flag(r.pass),
                ]));
            }
            Report::Rate(r) => {
                for (i, p) in r.pairs.iter().enumerate() {
                    let (value, argmax) = r
                        .normalized
                        .get(i)
                        .map_or((p.error, String::new()), |row| (row.value, num(row.argmax)));
                    t.row(cells("direct", &r.function, "row", [
                        p.n.to_string(), e(), num(value), num(p.error), argmax,
                        e(), e(), e(), e(), e(),
                    ]));
                }
                let spread = r.normalized_trend.as_ref().map(|tr| tr.tail_max_over_median);
                t.row(cells("direct", &r.function, "summary", [
                    e(), e(), e(), e(), e(),
                    opt_num(r.slope), opt_num(r.residual), opt_num(spread), opt_num(r.target), flag(r.pass),
                ]));
            }
            Report::Inverse(r) => {
                for row in &r.rows {
                    t.row(cells("inverse", &r.function, "row", [
                        e(), num(row.t), num(row.omega), num(row.omega_main), e(),
                        e(), e(), e(), e(), e(),
                    ]));
                }
                t.row(cells("inverse", &r.function, "summary", [
                    e(), e(), e(), e(), e(),
                    opt_num(r.omega_fit.map(|f| f.slope)), opt_num(r.omega_fit.map(|f| f.residual)),
                    num(r.sandwich), opt_num(r.target), flag(r.pass),
                ]));
            }
        }
    }
}

/// Needs a named function. Under `all` a missing one skips the check.
fn needs_function(cfg: &RunConfig, check: &str) -> Result<Option<Function>, CliError> {
    match (&cfg.function, cfg.which_all) {
        (Some(_), _) => function(cfg).map(Some),
        (None, true) => Ok(None),
        (None, false) => Err(CliError::config("function", format!("check `{check}` needs --f NAME"))),
    }
}

fn unsupported(cfg: &RunConfig, check: &str, why: &str) -> Result<Vec<Report>, CliError> {
    if cfg.which_all {
        Ok(Vec::new())
    } else {
        Err(CliError::config("function", format!("check `{check}`: {why}")))
    }
}

fn run_check(cfg: &RunConfig, spec: &SweepSpec, name: &str) -> Result<Vec<Report>, CliError> {
    let bounded = |r: bbar_core::Result<BoundedReport>| -> Result<Vec<Report>, CliError> { Ok(vec![Report::Bounded(r?)]) };
    match name {
        "lemma1" => bounded(check_lemma1(spec, cfg.u, cfg.v)),
        "lemma4" => bounded(check_lemma4(spec, cfg.gamma)),
        "lemma5" => bounded(check_lemma5(spec)),
        "lemma6" => bounded(check_lemma6(spec, cfg.beta)),
        _ => {
            let Some(f) = needs_function(cfg, name)? else {
                return Ok(Vec::new());
            };
            match name {
                "lemma2" => bounded(check_stability(&f, spec)),
                "lemma7" if !f.has_second_derivative() => unsupported(cfg, name, "function has no second derivative"),
                "lemma7" => bounded(check_lemma7(&f, spec)),
                "theorem1" => bounded(check_theorem1(&f, spec)),
                "theorem2" => {
                    let mut out = Vec::new();
                    for branch in cfg.branches() {
                        if branch == Branch::Sobolev && !f.has_second_derivative() {
                            if cfg.branches().len() == 1 {
                                return unsupported(cfg, name, "the sobolev branch needs a second derivative");
                            }
                            continue;
                        }
                        out.push(Report::Bounded(check_theorem2(&f, spec, branch)?));
                    }
                    Ok(out)
                }
                "direct" if f.expected_alpha0.is_none() && f.kind != FunctionKind::Linear => unsupported(
                    cfg,
                    name,
                    "no calibrated rate target for this function, xi, alpha and lambda",
                ),
                "direct" => Ok(vec![Report::Rate(check_direct(&f, spec)?)]),
                "inverse" => {
                    let target = theorem3_target(&f, &cfg.weight);
                    let r = check_inverse(&f, &cfg.weight, cfg.lambda, target, &cfg.t_values, &cfg.grid)?;
                    Ok(vec![Report::Inverse(r)])
                }
                other => Err(CliError::config("which", format!("unknown check `{other}`"))),
            }
        }
    }
}

/// Runs the named checks in order; fails the run if any check fails.
pub fn check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = spec(cfg);
    spec.validate()?;
    let mut reports = Vec::new();
    for name in &cfg.which {
        reports.extend(run_check(cfg, &spec, name)?);
    }
    let pass = reports.iter().all(Report::pass);
    let text = match cfg.format {
        Format::Csv => {
            let mut t = CsvTable::new(&CHECK_COLUMNS);
            for r in &reports {
                r.write_csv(&mut t);
            }
            t.finish()
        }
        Format::Json => {
            let reports: Vec<Value> = reports.iter().map(Report::to_json).collect();
            json_line(envelope(cfg, json!({"pass": pass, "reports": reports})))
        }
    };
    emit(cfg.output.as_deref(), &text)?;
    Ok(if pass { Outcome::Pass } else { Outcome::CheckFailed })
}

/// Sweep documents without the timestamp, one per function.
pub fn sweep_documents(cfg: &RunConfig) -> Result<Vec<Value>, CliError> {
    let spec = spec(cfg);
    spec.validate()?;
    let functions: Vec<Function> = match &cfg.function {
        Some(_) => vec![function(cfg)?],
        None => corpus(&cfg.weight, cfg.lambda),
    };
    let reports = run_sweep(&spec, &functions, &cfg.t_values)?;
    Ok(reports
        .iter()
        .map(|r| {
            let report = serde_json::to_value(r).expect("reports serialize");
            envelope(cfg, json!({"report": report}))
        })
        .collect())
}

/// JSON Lines: one document per function.
pub fn sweep(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let docs = sweep_documents(cfg)?;
    let pass = docs.iter().all(|d| d["report"]["pass"] == json!(true));
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let text: String = docs
        .into_iter()
        .map(|mut d| {
            d["timestamp"] = json!(timestamp);
            json_line(d)
        })
        .collect();
    emit(cfg.output.as_deref(), &text)?;
    Ok(if pass { Outcome::Pass } else { Outcome::CheckFailed })
}

pub fn list_functions(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let functions = corpus(&cfg.weight, cfg.lambda);
    let kind = |f: &Function| match f.kind {
        FunctionKind::Linear => "linear",
        FunctionKind::Smooth => "smooth",
        FunctionKind::Singular => "singular",
    };
    let text = match cfg.format {
        Format::Csv => {
            let mut t = CsvTable::new(&LIST_COLUMNS);
            for f in &functions {
                t.row(vec![
                    f.name.clone(),
                    kind(f).to_string(),
                    opt_num(f.singularity_exponent),
                    f.has_second_derivative().to_string(),
                    opt_num(f.expected_alpha0),
                ]);
            }
            t.finish()
        }
        Format::Json => {
            let rows: Vec<Value> = functions
                .iter()
                .map(|f| {
                    json!({
                        "name": f.name,
                        "kind": kind(f),
                        "beta": f.singularity_exponent,
                        "second_derivative": f.has_second_derivative(),
                        "alpha0": f.expected_alpha0,
                    })
                })
                .collect();
            json_line(envelope(cfg, json!({ "rows": rows })))
        }
    };
    emit(cfg.output.as_deref(), &text)?;
    Ok(Outcome::Pass)
}

/// Refits the frozen rate exponents over the calibration panels.
pub fn calibrate_table(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let entries = calibrate(&CALIBRATION_PANELS)?;
    emit(cfg.output.as_deref(), &render_table(&entries))?;
    Ok(Outcome::Pass)
}
