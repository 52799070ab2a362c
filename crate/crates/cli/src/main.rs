use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use metric_distortion::adversary::{distortion_of, solve_adversary, Lottery};
use metric_distortion::baselines::{evaluate_baselines, format_table};
use metric_distortion::certificate::{verify_certificate, Certificate, PRINTED_TOLERANCE};
use metric_distortion::fixtures::{self, PrintedMultipliers, REFERENCE_GAMMA};
use metric_distortion::lp::check_feasible;
use metric_distortion::optimal::{build_best_dist, optimal_dual_metrics, optimal_scf};
use metric_distortion::profile::{parse_profile, PreferenceProfile};
use metric_distortion::scalar::{Rational, Scalar};
use metric_distortion::search::{search_instances, SearchMode, SearchSpec};

/// Lotteries read from files must sum to one within this.
const LOTTERY_FILE_TOLERANCE: f64 = 1e-6;
const GAMMA_TOLERANCE: f64 = 1e-5;
const NORMALIZATION_TOLERANCE: f64 = 1e-4;

#[derive(Parser)]
#[command(
    name = "distortion",
    version,
    about = "Instance-optimal randomized social choice under metric distortion"
)]
struct Cli {
    /// Decimal places for numbers in the output.
    #[arg(long, global = true, default_value_t = 6)]
    precision: usize,

    /// Arithmetic used by solve, adversary, dual, verify-cert and baseline.
    #[arg(long, global = true, env = "DISTORTION_SOLVER_MODE", value_enum, default_value_t = Mode::Float)]
    solver_mode: Mode,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Float,
    Rational,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the optimal lottery and its distortion.
    Solve {
        profile: PathBuf,
        /// Skip the independent dual solve.
        #[arg(long)]
        no_dual: bool,
    },
    /// Distortion of a given lottery, with the worst-case metric.
    Adversary {
        profile: PathBuf,
        /// JSON object `{"a": 0.5, ...}` or lines `a 0.5`.
        lottery: PathBuf,
        /// Only solve for this reference facility.
        #[arg(long)]
        o: Option<String>,
    },
    /// Solve the dual LP and print the lower-bound metrics.
    Dual { profile: PathBuf },
    /// Verify a lower-bound certificate.
    VerifyCert {
        cert: PathBuf,
        /// Feasibility slack; 0 in rational mode gives an exact verdict.
        #[arg(long, default_value_t = PRINTED_TOLERANCE)]
        tolerance: f64,
    },
    /// Compare simple lotteries with the optimal one.
    Baseline {
        profile: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Search small profiles for high optimal distortion.
    Search {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 2)]
        max_groups: usize,
        #[arg(long, default_value_t = 1)]
        weight_cap: u64,
        #[arg(long, default_value_t = 2.0)]
        threshold: f64,
        #[arg(long, default_value_t = 1000)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = SearchModeArg::Exhaustive)]
        mode: SearchModeArg,
        /// Profile files evaluated before generated ones.
        #[arg(long)]
        include: Vec<PathBuf>,
    },
    /// Recompute every published value of the reference instance.
    ReproducePaper {
        /// Also verify the certificate in exact rational arithmetic.
        #[arg(long)]
        rational: bool,
        /// Slack for substituting the published multipliers into the min-max LP.
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SearchModeArg {
    Exhaustive,
    Sample,
}

/// Failure split by exit code: bad input (2) or failed computation (1).
enum Failure {
    Input(anyhow::Error),
    Compute(anyhow::Error),
}

type CmdResult = Result<(), Failure>;

fn input<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Input(e.into())
}

fn compute<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Compute(e.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve { profile, no_dual } => cmd_solve(&cli, profile, *no_dual),
        Command::Adversary { profile, lottery, o } => cmd_adversary(&cli, profile, lottery, o.as_deref()),
        Command::Dual { profile } => cmd_dual(&cli, profile),
        Command::VerifyCert { cert, tolerance } => cmd_verify_cert(&cli, cert, *tolerance),
        Command::Baseline { profile, format } => cmd_baseline(&cli, profile, *format),
        Command::Search {
            m,
            max_groups,
            weight_cap,
            threshold,
            budget,
            seed,
            mode,
            include,
        } => {
            let mode = match mode {
                SearchModeArg::Exhaustive => SearchMode::Exhaustive,
                SearchModeArg::Sample => SearchMode::Sample { seed: *seed },
            };
            include
                .iter()
                .map(|p| read_profile(p))
                .collect::<Result<Vec<_>, _>>()
                .and_then(|include| {
                    cmd_search(
                        &cli,
                        SearchSpec {
                            m: *m,
                            mode,
                            max_groups: *max_groups,
                            weight_cap: *weight_cap,
                            threshold: *threshold,
                            budget: *budget,
                            include,
                        },
                    )
                })
        }
        Command::ReproducePaper { rational, tolerance } => cmd_reproduce(&cli, *rational, *tolerance),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::Input)
}

/// Profiles are read as JSON when the file starts with `{`, else as text.
fn read_profile(path: &Path) -> Result<PreferenceProfile, Failure> {
    let text = read_text(path)?;
    let parsed = if text.trim_start().starts_with('{') {
        PreferenceProfile::from_json(&text)
    } else {
        parse_profile(&text)
    };
    parsed
        .with_context(|| format!("invalid profile {}", path.display()))
        .map_err(Failure::Input)
}

fn read_lottery_entries(path: &Path) -> Result<BTreeMap<String, f64>, Failure> {
    let text = read_text(path)?;
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(&text)
            .with_context(|| format!("invalid lottery {}", path.display()))
            .map_err(Failure::Input);
    }
    let mut entries = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(label), Some(value), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(input(anyhow!(
                "{}:{}: expected `<facility> <probability>`",
                path.display(),
                i + 1
            )));
        };
        let value: f64 = value
            .parse()
            .map_err(|_| input(anyhow!("{}:{}: bad probability `{value}`", path.display(), i + 1)))?;
        if entries.insert(label.to_string(), value).is_some() {
            return Err(input(anyhow!(
                "{}:{}: facility `{label}` listed twice",
                path.display(),
                i + 1
            )));
        }
    }
    Ok(entries)
}

/// Round every float in a JSON value to `precision` decimals.
fn rounded(value: Value, precision: usize) -> Value {
    match value {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64");
            let scale = 10f64.powi(precision as i32);
            let r = (x * scale).round() / scale;
            serde_json::Number::from_f64(if r == 0.0 { 0.0 } else { r })
                .map(Value::Number)
                .unwrap_or(Value::Null)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(|v| rounded(v, precision)).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, rounded(v, precision))).collect()),
        other => other,
    }
}

/// Write to stdout; a closed pipe ends output quietly.
fn write_out(text: &str) -> CmdResult {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(compute(e)),
        _ => Ok(()),
    }
}

fn emit<S: Serialize>(cli: &Cli, doc: &S) -> CmdResult {
    let value = rounded(serde_json::to_value(doc).map_err(compute)?, cli.precision);
    write_out(&(serde_json::to_string_pretty(&value).map_err(compute)? + "\n"))
}

fn cmd_solve(cli: &Cli, path: &Path, no_dual: bool) -> CmdResult {
    let profile = read_profile(path)?;
    match cli.solver_mode {
        Mode::Float => solve_as::<f64>(cli, &profile, no_dual),
        Mode::Rational => solve_as::<Rational>(cli, &profile, no_dual),
    }
}

fn solve_as<T: Scalar>(cli: &Cli, profile: &PreferenceProfile, no_dual: bool) -> CmdResult {
    let result = optimal_scf::<T>(profile).map_err(compute)?;
    let phi = if no_dual {
        None
    } else {
        Some(optimal_dual_metrics::<T>(profile).map_err(compute)?.phi.to_f64())
    };
    emit(cli, &result.to_doc(profile, phi))
}

fn cmd_adversary(cli: &Cli, profile: &Path, lottery: &Path, o: Option<&str>) -> CmdResult {
    let profile = read_profile(profile)?;
    let entries = read_lottery_entries(lottery)?;
    let o = o
        .map(|label| profile.facility_index(label).map_err(input))
        .transpose()?;
    match cli.solver_mode {
        Mode::Float => adversary_as::<f64>(cli, &profile, &entries, o),
        Mode::Rational => adversary_as::<Rational>(cli, &profile, &entries, o),
    }
}

fn adversary_as<T: Scalar>(
    cli: &Cli,
    profile: &PreferenceProfile,
    entries: &BTreeMap<String, f64>,
    o: Option<usize>,
) -> CmdResult {
    let q = Lottery::<T>::from_labels(profile, entries, LOTTERY_FILE_TOLERANCE).map_err(input)?;
    match o {
        None => emit(cli, &distortion_of(profile, &q).map_err(compute)?.to_doc(profile)),
        Some(o) => {
            let outcome = solve_adversary(profile, &q, o).map_err(compute)?;
            emit(
                cli,
                &json!({
                    "value": outcome.value.finite().map(Scalar::to_f64),
                    "o": profile.facility_label(o),
                    "witness": outcome.witness.as_ref().map(|w| w.to_doc()),
                    "unbounded": outcome.value.is_unbounded(),
                }),
            )
        }
    }
}

fn cmd_dual(cli: &Cli, path: &Path) -> CmdResult {
    let profile = read_profile(path)?;
    match cli.solver_mode {
        Mode::Float => emit(
            cli,
            &optimal_dual_metrics::<f64>(&profile).map_err(compute)?.to_doc(&profile),
        ),
        Mode::Rational => emit(
            cli,
            &optimal_dual_metrics::<Rational>(&profile)
                .map_err(compute)?
                .to_doc(&profile),
        ),
    }
}

fn cmd_verify_cert(cli: &Cli, path: &Path, tolerance: f64) -> CmdResult {
    let text = read_text(path)?;
    match cli.solver_mode {
        Mode::Float => verify_as::<f64>(cli, &text, tolerance),
        Mode::Rational => verify_as::<Rational>(cli, &text, tolerance),
    }
}

fn verify_as<T: Scalar>(cli: &Cli, text: &str, tolerance: f64) -> CmdResult {
    let cert = Certificate::<T>::from_json(text).map_err(input)?;
    let report = verify_certificate(&cert, &T::from_f64(tolerance)).map_err(compute)?;
    emit(cli, &report.to_doc(&cert.profile))?;
    if report.feasible {
        Ok(())
    } else {
        Err(compute(anyhow!("certificate is infeasible")))
    }
}

fn cmd_baseline(cli: &Cli, path: &Path, format: Format) -> CmdResult {
    let profile = read_profile(path)?;
    match cli.solver_mode {
        Mode::Float => baseline_as::<f64>(cli, &profile, format),
        Mode::Rational => baseline_as::<Rational>(cli, &profile, format),
    }
}

fn baseline_as<T: Scalar>(cli: &Cli, profile: &PreferenceProfile, format: Format) -> CmdResult {
    let rows = evaluate_baselines::<T>(profile).map_err(compute)?;
    match format {
        Format::Text => write_out(&format_table(&rows, profile, cli.precision)),
        Format::Json => emit(cli, &rows.iter().map(|r| r.to_doc(profile)).collect::<Vec<_>>()),
    }
}

fn cmd_search(cli: &Cli, spec: SearchSpec) -> CmdResult {
    let report = search_instances(&spec).map_err(input)?;
    let mut out = String::new();
    let line = |v: Value| serde_json::to_string(&rounded(v, cli.precision)).expect("serializable");
    for hit in &report.hits {
        let doc = serde_json::to_value(hit.to_doc()).map_err(compute)?;
        out.push_str(&line(doc));
        out.push('\n');
    }
    let summary = json!({
        "summary": {
            "evaluated": report.evaluated,
            "hits": report.hits.len(),
            "best_gamma": report.best.as_ref().map(|b| b.gamma),
            "best_profile": report.best.as_ref().map(|b| b.profile.to_doc()),
            "failures": report
                .failures
                .iter()
                .map(|f| json!({"profile": f.profile.to_doc(), "error": f.error}))
                .collect::<Vec<_>>(),
        }
    });
    out.push_str(&line(summary));
    out.push('\n');
    write_out(&out)
}

#[derive(Serialize)]
struct Item {
    name: &'static str,
    pass: bool,
    value: Option<f64>,
    expected: Option<f64>,
    tolerance: f64,
    #[serde(skip_serializing_if = "Value::is_null")]
    detail: Value,
}

fn cmd_reproduce(cli: &Cli, rational: bool, tolerance: f64) -> CmdResult {
    let profile = fixtures::reference_profile();
    let mut items = Vec::new();

    let optimal = optimal_scf::<f64>(&profile).map_err(compute)?;
    items.push(Item {
        name: "optimal",
        pass: (optimal.gamma - REFERENCE_GAMMA).abs() <= GAMMA_TOLERANCE,
        value: Some(optimal.gamma),
        expected: Some(REFERENCE_GAMMA),
        tolerance: GAMMA_TOLERANCE,
        detail: json!({ "q": optimal.q.to_labels(&profile) }),
    });

    let lottery = distortion_of(&profile, &fixtures::reference_lottery::<f64>()).map_err(compute)?;
    let value = lottery.value.to_f64();
    items.push(Item {
        name: "lottery",
        pass: (value - REFERENCE_GAMMA).abs() <= GAMMA_TOLERANCE,
        value: Some(value),
        expected: Some(REFERENCE_GAMMA),
        tolerance: GAMMA_TOLERANCE,
        detail: json!({ "o_star": profile.facility_label(lottery.o_star) }),
    });

    let dual = optimal_dual_metrics::<f64>(&profile).map_err(compute)?;
    items.push(Item {
        name: "dual",
        pass: (dual.phi - REFERENCE_GAMMA).abs() <= GAMMA_TOLERANCE,
        value: Some(dual.phi),
        expected: Some(REFERENCE_GAMMA),
        tolerance: GAMMA_TOLERANCE,
        detail: Value::Null,
    });

    let cert = fixtures::load_reference_certificate::<f64>();
    let report = verify_certificate(&cert, &PRINTED_TOLERANCE).map_err(compute)?;
    let phi = report.phi;
    let mut pass = report.feasible
        && (report.normalization - 1.0).abs() <= NORMALIZATION_TOLERANCE
        && phi.is_some_and(|p| (p - REFERENCE_GAMMA).abs() <= PRINTED_TOLERANCE);
    let mut detail = json!({ "normalization": report.normalization, "feasible": report.feasible });
    if rational {
        let exact = fixtures::load_reference_certificate::<Rational>();
        let exact_report = verify_certificate(&exact, &Rational::from_i64(0)).map_err(compute)?;
        pass &= exact_report.feasible;
        detail["exact"] = json!({
            "feasible": exact_report.feasible,
            "normalization": exact_report.normalization.to_string(),
            "phi": exact_report.phi.as_ref().map(|p| p.to_string()),
        });
    }
    items.push(Item {
        name: "certificate",
        pass,
        value: phi,
        expected: Some(REFERENCE_GAMMA),
        tolerance: PRINTED_TOLERANCE,
        detail,
    });

    let expanded = profile.expand();
    let lp = build_best_dist::<f64>(&expanded).map_err(compute)?;
    let printed = PrintedMultipliers::reference();
    let verbatim = check_feasible(
        &lp,
        &printed.assignment(&lp, &expanded, false).map_err(compute)?,
        &tolerance,
    )
    .map_err(compute)?;
    let corrected = check_feasible(
        &lp,
        &printed.assignment(&lp, &expanded, true).map_err(compute)?,
        &tolerance,
    )
    .map_err(compute)?;
    items.push(Item {
        name: "multipliers",
        pass: corrected.passed(),
        value: Some(corrected.max_violation),
        expected: Some(0.0),
        tolerance,
        detail: json!({
            "rows": corrected.checked_rows,
            "violated_rows": corrected.violations.len(),
            "relabels": printed.relabels.len(),
            "verbatim_max_violation": verbatim.max_violation,
            "verbatim_violated_rows": verbatim.violations.len(),
        }),
    });

    let all = items.iter().all(|i| i.pass);
    // Tolerances and violations are printed in full; only values are rounded.
    let mut doc = rounded(json!({ "pass": all, "items": items }), cli.precision);
    for (i, item) in items.iter().enumerate() {
        doc["items"][i]["tolerance"] = json!(item.tolerance);
        if item.name == "multipliers" {
            doc["items"][i]["value"] = json!(item.value);
            doc["items"][i]["detail"]["verbatim_max_violation"] = json!(verbatim.max_violation);
        }
    }
    write_out(&(serde_json::to_string_pretty(&doc).map_err(compute)? + "\n"))?;
    if all {
        Ok(())
    } else {
        Err(compute(anyhow!("reproduction failed")))
    }
}
