//! Subcommand implementations.

use patro::bayes::bayes_prior_regret;
use patro::regret::{centered_grid, improvement_rate, prior_expected_regret, RegretBreakdown};
use patro::scenario::{ScenarioConfig, TABLE1};
use patro::sim::run_pipeline;
use patro::snr::{validate_assumptions, AssumptionReport};
use patro::solver::{
    operational_asymptotic, operational_residual, rollout_asymptotic, rollout_residual, solve_all,
    solve_operational, solve_rollout_single, Interaction,
};
use patro::ExperimentDesign;
use serde::Serialize;
use serde_json::Value;

use crate::output::{Format, Report};
use crate::{CliError, Common, Mode};

pub struct Outcome {
    pub report: Report,
    pub default_format: Format,
    /// Set when output was produced but a solver did not converge.
    pub failure: Option<String>,
}

fn load(common: &Common) -> Result<ScenarioConfig, CliError> {
    let path = common.config.as_deref().ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

#[derive(Serialize)]
struct Document<'a, R> {
    command: &'static str,
    config: &'a ScenarioConfig,
    results: &'a [R],
}

fn finish<R: Serialize>(
    command: &'static str,
    cfg: &ScenarioConfig,
    rows: &[R],
    default_format: Format,
    failure: Option<String>,
) -> Result<Outcome, CliError> {
    let doc = Document { command, config: cfg, results: rows };
    Ok(Outcome { report: Report::new(&doc, rows)?, default_format, failure })
}

#[derive(Serialize)]
struct AdjustRow {
    n: usize,
    v_tilde: f64,
    mode: &'static str,
    delta_r: Option<f64>,
    delta_o: Option<f64>,
    asymptotic_r: Option<f64>,
    asymptotic_o: Option<f64>,
    residual_r: Option<f64>,
    residual_o: Option<f64>,
    single_r: Option<f64>,
    iterations: Option<usize>,
    converged: bool,
    interaction: Option<Interaction>,
}

pub fn adjust(common: &Common, mode: Mode) -> Result<Outcome, CliError> {
    let cfg = load(common)?;
    let mut rows = Vec::new();
    let mut failure = None;
    for inst in cfg.instances()? {
        let (m, ex) = (&inst.model, &inst.expectations);
        let base = AdjustRow {
            n: inst.n,
            v_tilde: inst.belief().v_tilde,
            mode: "",
            delta_r: None,
            delta_o: None,
            asymptotic_r: None,
            asymptotic_o: None,
            residual_r: None,
            residual_o: None,
            single_r: None,
            iterations: None,
            converged: true,
            interaction: None,
        };
        let row = match mode {
            Mode::Rollout => {
                let r = solve_rollout_single(m, ex, &cfg.solver)?;
                AdjustRow {
                    mode: "rollout",
                    delta_r: Some(r),
                    asymptotic_r: rollout_asymptotic(m, ex).ok(),
                    residual_r: Some(rollout_residual(m, ex, r, 0.0)?),
                    ..base
                }
            }
            Mode::Operational => {
                let o = solve_operational(m, ex, 0.0, &cfg.solver)?;
                AdjustRow {
                    mode: "operational",
                    delta_o: Some(o),
                    asymptotic_o: operational_asymptotic(m, ex, 0.0).ok(),
                    residual_o: Some(operational_residual(m, ex, 0.0, o)?),
                    ..base
                }
            }
            Mode::Dual => {
                let s = solve_all(m, ex, &cfg.solver)?;
                if !s.dual.converged && failure.is_none() {
                    failure = Some(format!("alternating scheme did not converge at n = {}", inst.n));
                }
                AdjustRow {
                    mode: "dual",
                    delta_r: Some(s.dual.delta_r),
                    delta_o: Some(s.dual.delta_o),
                    asymptotic_r: s.asymptotic_r,
                    asymptotic_o: s.asymptotic_o,
                    residual_r: Some(s.dual.residuals.0),
                    residual_o: Some(s.dual.residuals.1),
                    single_r: Some(s.single_r),
                    iterations: Some(s.dual.iterations),
                    converged: s.dual.converged,
                    interaction: Some(s.interaction),
                    ..base
                }
            }
        };
        rows.push(row);
    }
    finish("adjust", &cfg, &rows, Format::Json, failure)
}

#[derive(Serialize)]
struct TableRow {
    row: usize,
    scenario: String,
    label: Option<String>,
    model: &'static str,
    parameters: String,
    n: usize,
    improvement_pct: f64,
    reference_pct: Option<f64>,
    deviation: Option<f64>,
    abs_deviation: Option<f64>,
    parameter_ambiguous: bool,
    delta_r: f64,
    delta_o: f64,
}

fn parameters(cfg: &ScenarioConfig) -> String {
    let mut parts = Vec::new();
    if let Ok(Value::Object(map)) = serde_json::to_value(&cfg.model) {
        for (k, v) in map.iter().filter(|(k, _)| k.as_str() != "kind") {
            parts.push(format!("{k}={}", v.as_f64().map_or_else(|| v.to_string(), |x| x.to_string())));
        }
    }
    parts.push(format!("v0={}", cfg.prior.v0));
    parts.push(format!("sigma_eps={}", cfg.noise.sigma_eps));
    parts.join(" ")
}

fn table_configs(common: &Common) -> Result<Vec<(String, ScenarioConfig)>, CliError> {
    let Some(path) = common.config.as_deref() else {
        return Ok(TABLE1.iter().map(|s| (s.name.to_string(), s.config())).collect());
    };
    let files: Vec<_> = if path.is_dir() {
        let mut files: Vec<_> = std::fs::read_dir(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "toml"))
            .collect();
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    if files.is_empty() {
        return Err(CliError::Config(format!("no .toml files in {}", path.display())));
    }
    files
        .iter()
        .map(|p| {
            let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario").to_string();
            Ok((name, ScenarioConfig::load(p)?))
        })
        .collect()
}

fn select_rows(
    all: Vec<(String, ScenarioConfig)>,
    selector: Option<&str>,
) -> Result<Vec<(usize, String, ScenarioConfig)>, CliError> {
    let indexed = all.into_iter().enumerate().map(|(i, (n, c))| (i + 1, n, c));
    let Some(sel) = selector else {
        return Ok(indexed.collect());
    };
    let wanted: Vec<&str> = sel.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    let chosen: Vec<_> =
        indexed.filter(|(i, name, _)| wanted.iter().any(|w| *w == name || w.parse() == Ok(*i))).collect();
    if chosen.len() != wanted.len() {
        return Err(CliError::Config(format!("--rows {sel:?} does not match the available rows")));
    }
    Ok(chosen)
}

pub fn table1(common: &Common, selector: Option<&str>) -> Result<Outcome, CliError> {
    let configs = select_rows(table_configs(common)?, selector)?;
    let mut rows = Vec::new();
    let mut failure = None;
    for (row, name, mut cfg) in configs {
        if let Some(seed) = common.seed {
            cfg.seed = seed;
        }
        let reference = cfg.reference.clone();
        for (k, inst) in cfg.instances()?.into_iter().enumerate() {
            let s = solve_all(&inst.model, &inst.expectations, &cfg.solver)?;
            if !s.dual.converged && failure.is_none() {
                failure = Some(format!("{name}: alternating scheme did not converge at n = {}", inst.n));
            }
            let rate = improvement_rate(&inst.model, &inst.expectations, s.dual.delta_r, s.dual.delta_o)?;
            let target = reference.as_ref().and_then(|r| r.improvement_pct.get(k).copied());
            rows.push(TableRow {
                row,
                scenario: name.clone(),
                label: reference.as_ref().map(|r| r.label.clone()),
                model: cfg.model.kind(),
                parameters: parameters(&cfg),
                n: inst.n,
                improvement_pct: rate,
                reference_pct: target,
                deviation: target.map(|t| rate - t),
                abs_deviation: target.map(|t| (rate - t).abs()),
                parameter_ambiguous: reference.as_ref().is_some_and(|r| r.parameter_ambiguous),
                delta_r: s.dual.delta_r,
                delta_o: s.dual.delta_o,
            });
        }
    }
    #[derive(Serialize)]
    struct TableDocument<'a> {
        command: &'static str,
        results: &'a [TableRow],
    }
    let doc = TableDocument { command: "table1", results: &rows };
    Ok(Outcome { report: Report::new(&doc, &rows)?, default_format: Format::Csv, failure })
}

#[derive(Serialize)]
struct SweepRow {
    n: usize,
    v_tilde: f64,
    delta_r: f64,
    delta_o: f64,
    delta_r_dual: f64,
    delta_o_dual: f64,
    n_delta_r: f64,
    n_delta_o: f64,
    n_delta_r_dual: f64,
    n_delta_o_dual: f64,
    regret_pto: f64,
    regret_dual: RegretBreakdown<f64>,
    regret_dual_per_unit: RegretBreakdown<f64>,
    slope_delta_r: Option<f64>,
    slope_delta_o: Option<f64>,
    slope_delta_r_dual: Option<f64>,
    slope_delta_o_dual: Option<f64>,
}

/// Least-squares slope of `ln |y|` on `ln x`, or `None` if any `y` is zero.
fn log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || y.iter().any(|v| v.abs() < 1e-300) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Some(sxy / sxx)
}

pub fn sweep(common: &Common, n_list: Option<Vec<usize>>) -> Result<Outcome, CliError> {
    let mut cfg = load(common)?;
    if let Some(ns) = n_list {
        if ns.is_empty() || ns.contains(&0) {
            return Err(CliError::Config("--n-list must contain positive sample sizes".into()));
        }
        cfg.design.n = patro::scenario::SampleSizes::Many(ns);
        // Reference values belong to the original sample sizes.
        cfg.reference = None;
        cfg = ScenarioConfig::from_toml_str(&cfg.to_toml_string())?;
    }
    let mut rows = Vec::new();
    let mut failure = None;
    for inst in cfg.instances()? {
        let (m, ex) = (&inst.model, &inst.expectations);
        let s = solve_all(m, ex, &cfg.solver)?;
        if !s.dual.converged && failure.is_none() {
            failure = Some(format!("alternating scheme did not converge at n = {}", inst.n));
        }
        let regret = prior_expected_regret(m, ex, s.dual.delta_r, s.dual.delta_o)?;
        let nf = inst.n as f64;
        rows.push(SweepRow {
            n: inst.n,
            v_tilde: inst.belief().v_tilde,
            delta_r: s.single_r,
            delta_o: s.single_o,
            delta_r_dual: s.dual.delta_r,
            delta_o_dual: s.dual.delta_o,
            n_delta_r: nf * s.single_r,
            n_delta_o: nf * s.single_o,
            n_delta_r_dual: nf * s.dual.delta_r,
            n_delta_o_dual: nf * s.dual.delta_o,
            regret_pto: prior_expected_regret(m, ex, 0.0, 0.0)?.total,
            regret_dual: regret,
            regret_dual_per_unit: regret.per_unit(inst.n),
            slope_delta_r: None,
            slope_delta_o: None,
            slope_delta_r_dual: None,
            slope_delta_o_dual: None,
        });
    }
    let x: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let col = |f: fn(&SweepRow) -> f64| log_slope(&x, &rows.iter().map(f).collect::<Vec<_>>());
    let slopes = [col(|r| r.delta_r), col(|r| r.delta_o), col(|r| r.delta_r_dual), col(|r| r.delta_o_dual)];
    for r in &mut rows {
        [r.slope_delta_r, r.slope_delta_o, r.slope_delta_r_dual, r.slope_delta_o_dual] = slopes;
    }
    finish("sweep", &cfg, &rows, Format::Csv, failure)
}

#[derive(Serialize)]
struct ValidateResult {
    n: usize,
    passed: bool,
    report: AssumptionReport,
}

#[derive(Serialize)]
struct ClauseRow<'a> {
    n: usize,
    model: &'a str,
    clause: &'a str,
    title: &'a str,
    status: patro::snr::ClauseStatus,
    detail: &'a str,
}

pub fn validate(common: &Common) -> Result<Outcome, CliError> {
    let cfg = load(common)?;
    let grid = centered_grid(cfg.prior.m0, 4.0 * cfg.prior.v0.sqrt(), 41);
    let mut results = Vec::new();
    for inst in cfg.instances()? {
        let report = validate_assumptions(&inst.model, &inst.expectations, &grid);
        let passed = report.passed();
        let statuses: Vec<String> =
            report.clauses.iter().map(|c| format!("{} {}", c.clause, serde_json::to_value(c.status).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default())).collect();
        eprintln!("n = {}: {} ({})", inst.n, if passed { "all clauses hold" } else { "some clauses fail" }, statuses.join(", "));
        for note in &report.notes {
            eprintln!("    {note}");
        }
        results.push(ValidateResult { n: inst.n, passed, report });
    }
    let rows: Vec<ClauseRow> = results
        .iter()
        .flat_map(|r| {
            r.report.clauses.iter().map(move |c| ClauseRow {
                n: r.n,
                model: &r.report.model,
                clause: &c.clause,
                title: &c.title,
                status: c.status,
                detail: &c.detail,
            })
        })
        .collect();
    #[derive(Serialize)]
    struct ValidateDocument<'a> {
        command: &'static str,
        config: &'a ScenarioConfig,
        passed: bool,
        results: &'a [ValidateResult],
    }
    let doc = ValidateDocument { command: "validate", config: &cfg, passed: results.iter().all(|r| r.passed), results: &results };
    Ok(Outcome { report: Report::new(&doc, &rows)?, default_format: Format::Json, failure: None })
}

#[derive(Serialize)]
struct BenchmarkRow {
    n: usize,
    regret_pto: f64,
    regret_single_r: f64,
    regret_single_o: f64,
    regret_dual: f64,
    regret_bayes: f64,
    gap_pto_pct: f64,
    gap_single_r_pct: f64,
    gap_single_o_pct: f64,
    gap_dual_pct: f64,
    improvement_dual_pct: f64,
    bayes_thresholds: Vec<f64>,
    delta_r_single: f64,
    delta_o_single: f64,
    delta_r_dual: f64,
    delta_o_dual: f64,
}

pub fn benchmark(common: &Common) -> Result<Outcome, CliError> {
    let cfg = load(common)?;
    let mut rows = Vec::new();
    let mut failure = None;
    for inst in cfg.instances()? {
        let (m, ex) = (&inst.model, &inst.expectations);
        let s = solve_all(m, ex, &cfg.solver)?;
        if !s.dual.converged && failure.is_none() {
            failure = Some(format!("alternating scheme did not converge at n = {}", inst.n));
        }
        let r = |dr: f64, d_o: f64| prior_expected_regret(m, ex, dr, d_o).map(|b| b.total);
        let bayes = bayes_prior_regret(m, ex)?;
        let b = bayes.regret.total;
        let gap = |x: f64| if b > 0.0 { 100.0 * (x - b) / b } else { f64::NAN };
        let (pto, sr, so, dual) = (r(0.0, 0.0)?, r(s.single_r, 0.0)?, r(0.0, s.single_o)?, r(s.dual.delta_r, s.dual.delta_o)?);
        rows.push(BenchmarkRow {
            n: inst.n,
            regret_pto: pto,
            regret_single_r: sr,
            regret_single_o: so,
            regret_dual: dual,
            regret_bayes: b,
            gap_pto_pct: gap(pto),
            gap_single_r_pct: gap(sr),
            gap_single_o_pct: gap(so),
            gap_dual_pct: gap(dual),
            improvement_dual_pct: if pto > 0.0 { 100.0 * (pto - dual) / pto } else { f64::NAN },
            bayes_thresholds: bayes.thresholds,
            delta_r_single: s.single_r,
            delta_o_single: s.single_o,
            delta_r_dual: s.dual.delta_r,
            delta_o_dual: s.dual.delta_o,
        });
    }
    finish("benchmark", &cfg, &rows, Format::Json, failure)
}

#[derive(Serialize)]
struct SimulateRow {
    n: usize,
    replications: usize,
    seed: u64,
    delta_r: f64,
    delta_o: f64,
    quadrature: RegretBreakdown<f64>,
    simulated: RegretBreakdown<f64>,
    std_error: RegretBreakdown<f64>,
    z_score: RegretBreakdown<f64>,
    v_tilde: f64,
    error_mean: f64,
    error_variance: f64,
    error_correlation: f64,
}

pub fn simulate(common: &Common, replications: Option<usize>) -> Result<Outcome, CliError> {
    let mut cfg = load(common)?;
    if let Some(r) = replications {
        cfg.simulation.replications = r;
    }
    let mut rows = Vec::new();
    let mut failure = None;
    for inst in cfg.instances()? {
        let (m, ex) = (&inst.model, &inst.expectations);
        let s = solve_all(m, ex, &cfg.solver)?;
        if !s.dual.converged && failure.is_none() {
            failure = Some(format!("alternating scheme did not converge at n = {}", inst.n));
        }
        let (dr, d_o) = (s.dual.delta_r, s.dual.delta_o);
        let design = ExperimentDesign { n: inst.n, gamma: cfg.design.gamma };
        let sim = run_pipeline(m, cfg.prior, design, cfg.noise, (dr, d_o), cfg.simulation.replications, cfg.seed)
            .map_err(|e| match e {
                patro::PatroError::InvalidParameter { .. } => CliError::Config(e.to_string()),
                other => other.into(),
            })?;
        let q = prior_expected_regret(m, ex, dr, d_o)?;
        let z = |a: f64, b: f64, se: f64| if se > 0.0 { (b - a) / se } else { 0.0 };
        rows.push(SimulateRow {
            n: inst.n,
            replications: sim.replications,
            seed: cfg.seed,
            delta_r: dr,
            delta_o: d_o,
            quadrature: q,
            simulated: sim.regret,
            std_error: sim.std_errors,
            z_score: RegretBreakdown {
                type_one: z(q.type_one, sim.regret.type_one, sim.std_errors.type_one),
                type_two: z(q.type_two, sim.regret.type_two, sim.std_errors.type_two),
                operational: z(q.operational, sim.regret.operational, sim.std_errors.operational),
                total: z(q.total, sim.regret.total, sim.std_errors.total),
            },
            v_tilde: inst.belief().v_tilde,
            error_mean: sim.error_mean,
            error_variance: sim.error_variance,
            error_correlation: sim.error_correlation,
        });
    }
    finish("simulate", &cfg, &rows, Format::Json, failure)
}
