//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crisk_core::copula::theta_from_tau;
use crisk_core::data::{stratify, Dataset};
use crisk_core::estimators::{
    fit_2se, fit_3se, FittedModel, ModelKind, Prepared, ThreeStageConfig, TwoStageConfig,
};
use crisk_core::inference::{BootstrapConfig, BootstrapResult};
use crisk_core::marginals::{AftModel, Family};
use crisk_core::optim::TauGrid;
use crisk_core::simulate::{generate_dataset, DgpSpec, EstimatorSpec};

use crate::error::{usage, CliError};
use crate::io::{load_csv, write_curves, write_dataset, write_matrix, ColumnSpec};
use crate::parallel;
use crate::report::{envelope, mc_table};

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "crisk",
    version,
    about = "Copula-graphic estimators for dependent competing risks"
)]
pub struct Cli {
    /// Cap on worker threads for replications.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Estimate tau and the marginal model from a CSV file.
    Fit(FitArgs),
    /// Bootstrap standard errors and percentile intervals.
    Bootstrap(BootstrapArgs),
    /// Monte Carlo study of an estimator on simulated data.
    Simulate(SimulateArgs),
    /// Write one simulated sample as CSV.
    Gen(GenArgs),
    /// Dump copula-graphic curves per covariate stratum as CSV.
    Curve(CurveArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Method {
    #[value(name = "3se-aft")]
    #[serde(rename = "3se-aft")]
    ThreeStageAft,
    #[value(name = "3se-ph")]
    #[serde(rename = "3se-ph")]
    ThreeStagePh,
    #[value(name = "2se")]
    #[serde(rename = "2se")]
    TwoStage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Table {
    /// Weibull data, Weibull 3SE.
    S2Weibull,
    /// Exponential data, exponential 3SE.
    S3Exponential,
    /// Log-logistic data, log-logistic 3SE.
    S3Loglogistic,
    /// Weibull data, misspecified exponential 3SE.
    S5Misspecified,
    /// Weibull data, semiparametric 2SE.
    S6Semiparametric,
}

impl Table {
    /// `(data family, fitted family, method)`.
    fn design(self) -> (Family, Family, Method) {
        match self {
            Table::S2Weibull => (Family::Weibull, Family::Weibull, Method::ThreeStageAft),
            Table::S3Exponential => (
                Family::Exponential,
                Family::Exponential,
                Method::ThreeStageAft,
            ),
            Table::S3Loglogistic => (
                Family::LogLogistic,
                Family::LogLogistic,
                Method::ThreeStageAft,
            ),
            Table::S5Misspecified => (Family::Weibull, Family::Exponential, Method::ThreeStageAft),
            Table::S6Semiparametric => (Family::Weibull, Family::Weibull, Method::TwoStage),
        }
    }
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: crisk_core::Error| e.to_string())
}

fn parse_grid(s: &str) -> Result<TauGrid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        return Err(format!("expected lo:hi:step, got `{s}`"));
    };
    let num = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| format!("`{v}` is not a number"))
    };
    TauGrid::new(num(lo)?, num(hi)?, num(step)?).map_err(|e| e.to_string())
}

#[derive(Debug, Args, Serialize)]
pub struct InputArgs {
    /// CSV file with a header row.
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, default_value = "x")]
    pub x_col: String,
    #[arg(long, default_value = "delta")]
    pub delta_col: String,
    /// Covariate columns; defaults to every `z<k>` column.
    #[arg(long, value_delimiter = ',')]
    pub z_cols: Option<Vec<String>>,
    /// Risk of interest; every other label is pooled with censoring.
    #[arg(long, default_value_t = 1)]
    pub target_risk: u32,
}

impl InputArgs {
    fn load(&self) -> Result<Dataset, CliError> {
        let cols = ColumnSpec {
            x: self.x_col.clone(),
            delta: self.delta_col.clone(),
            z: self.z_cols.clone(),
        };
        let ds = load_csv(&self.input, &cols)?;
        Ok(ds.pool_risks(self.target_risk)?)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "3se-aft")]
    pub method: Method,
    /// Marginal family (exponential, weibull, loglogistic, lognormal).
    #[arg(long, value_parser = parse_family, default_value = "weibull")]
    pub family: Family,
    #[arg(long, value_parser = parse_grid, default_value = "-0.9:0.9:0.05", allow_hyphen_values = true)]
    pub tau_grid: TauGrid,
    /// Golden-section tolerance in tau.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Score the distance criterion on event rows only.
    #[arg(long)]
    pub events_only: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct ResampleArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Write the replicate estimates to this CSV file.
    #[arg(long)]
    pub replicates_csv: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub estimate: EstimateArgs,
    /// Also run this many bootstrap replicates.
    #[arg(long)]
    pub bootstrap: Option<usize>,
    #[command(flatten)]
    pub resample: ResampleArgs,
    /// JSON output file; stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BootstrapArgs {
    #[command(flatten)]
    pub estimate: EstimateArgs,
    #[arg(long, default_value_t = 500)]
    pub replicates: usize,
    #[command(flatten)]
    pub resample: ResampleArgs,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Preset design; individual flags override it.
    #[arg(long, value_enum)]
    pub table: Option<Table>,
    /// Family of the latent event time.
    #[arg(long, value_parser = parse_family)]
    pub dgp_family: Option<Family>,
    /// Family of the latent censoring time; defaults to the event family.
    #[arg(long, value_parser = parse_family)]
    pub censor_family: Option<Family>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Fitted family; defaults to the event family.
    #[arg(long, value_parser = parse_family)]
    pub family: Option<Family>,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    /// One or more true tau values, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.8",
        allow_hyphen_values = true
    )]
    pub tau: Vec<f64>,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Do not print the summary table.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    #[arg(long, value_parser = parse_family, default_value = "weibull")]
    pub family: Family,
    #[arg(long, value_parser = parse_family)]
    pub censor_family: Option<Family>,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub tau: f64,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.5)]
    pub sigma: f64,
    /// Probability that the binary covariate is 1.
    #[arg(long, default_value_t = 0.3)]
    pub p_z: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CurveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Kendall's tau values, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_hyphen_values = true
    )]
    pub tau: Vec<f64>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
                // a closed downstream pipe (e.g. `| head`) is not a failure
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                other => Ok(other?),
            }
        }
    }
}

fn emit_json(path: Option<&Path>, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(path, &text)
}

fn estimator_spec(
    method: Method,
    family: Family,
    grid: TauGrid,
    tol: f64,
    events_only: bool,
) -> Result<EstimatorSpec, CliError> {
    grid.validate().map_err(usage)?;
    if !(tol > 0.0) {
        return Err(CliError::Usage(format!(
            "--tol must be positive, got {tol}"
        )));
    }
    Ok(match method {
        Method::TwoStage => EstimatorSpec::TwoStage(TwoStageConfig { grid, tol }),
        Method::ThreeStageAft | Method::ThreeStagePh => {
            let kind = if method == Method::ThreeStagePh {
                ModelKind::Ph
            } else {
                ModelKind::Aft
            };
            if kind == ModelKind::Ph && !matches!(family, Family::Weibull | Family::Exponential) {
                return Err(CliError::Usage(format!(
                    "the PH variant supports weibull and exponential, not {family}"
                )));
            }
            let mut cfg = ThreeStageConfig::new(family, kind);
            cfg.grid = grid;
            cfg.tol = tol;
            cfg.events_only = events_only;
            EstimatorSpec::ThreeStage(cfg)
        }
    })
}

fn model_params(model: &FittedModel) -> Value {
    json!({ "alpha": model.alpha(), "beta": model.beta(), "sigma": model.sigma() })
}

/// Parameter names and point estimates used for the bootstrap.
fn flat_names(spec: &EstimatorSpec, k: usize) -> Vec<String> {
    let betas = (1..=k).map(|j| format!("beta{j}"));
    let mut names = vec!["tau".to_string()];
    match spec {
        EstimatorSpec::ThreeStage(_) => {
            names.push("alpha".into());
            names.extend(betas);
            names.push("sigma".into());
        }
        EstimatorSpec::TwoStage(_) => names.extend(betas),
    }
    names
}

fn flat_estimates(spec: &EstimatorSpec, ds: &Dataset) -> crisk_core::Result<Vec<f64>> {
    match spec {
        EstimatorSpec::ThreeStage(cfg) => {
            let f = fit_3se(ds, cfg)?;
            let mut v = vec![f.tau_hat, f.model.alpha()];
            v.extend_from_slice(f.model.beta());
            v.push(f.model.sigma());
            Ok(v)
        }
        EstimatorSpec::TwoStage(cfg) => {
            let f = fit_2se(ds, cfg)?;
            let mut v = vec![f.tau_hat];
            v.extend_from_slice(&f.beta_hat);
            Ok(v)
        }
    }
}

fn fit_value(spec: &EstimatorSpec, ds: &Dataset) -> Result<Value, CliError> {
    let common = json!({ "n": ds.len(), "k": ds.k(), "event_fraction": ds.event_fraction() });
    let body = match spec {
        EstimatorSpec::ThreeStage(cfg) => {
            let f = fit_3se(ds, cfg)?;
            json!({
                "tau_hat": f.tau_hat,
                "theta_hat": f.theta_hat,
                "model": f.model,
                "params": model_params(&f.model),
                "trace": f.objective_trace,
                "diagnostics": {
                    "objective_value": f.objective_value,
                    "kept_n": f.kept_n,
                    "clamped": f.clamped,
                    "mean_difference": f.mean_difference,
                    "evaluations": f.evaluations,
                },
            })
        }
        EstimatorSpec::TwoStage(cfg) => {
            let f = fit_2se(ds, cfg)?;
            json!({
                "tau_hat": f.tau_hat,
                "theta_hat": f.theta_hat,
                "params": { "beta": f.beta_hat },
                "trace": f.objective_trace,
                "diagnostics": {
                    "objective_value": f.objective_value,
                    "x_star": f.x_star,
                    "x_double_star": f.x_double_star,
                    "kept_n": f.kept_n,
                    "dropped": f.dropped,
                    "evaluations": f.evaluations,
                },
            })
        }
    };
    let mut out = body;
    out["data"] = common;
    Ok(out)
}

fn run_bootstrap(
    spec: &EstimatorSpec,
    ds: &Dataset,
    replicates: usize,
    args: &ResampleArgs,
) -> Result<(Vec<String>, BootstrapResult), CliError> {
    let cfg = BootstrapConfig {
        replicates,
        level: args.level,
        seed: args.seed,
    };
    cfg.validate().map_err(usage)?;
    let names = flat_names(spec, ds.k());
    let res = parallel::bootstrap(ds, |d| flat_estimates(spec, d), &cfg)?;
    if let Some(path) = &args.replicates_csv {
        let file =
            fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        write_matrix(file, &names, &res.replicates)?;
    }
    Ok((names, res))
}

fn bootstrap_value(names: &[String], res: &BootstrapResult) -> Value {
    json!({
        "parameters": names,
        "point": res.point,
        "se": res.se,
        "ci_lower": res.ci_lower,
        "ci_upper": res.ci_upper,
        "level": res.level,
        "requested": res.requested,
        "failures": res.failures,
    })
}

fn estimate_spec(e: &EstimateArgs) -> Result<EstimatorSpec, CliError> {
    estimator_spec(e.method, e.family, e.tau_grid, e.tol, e.events_only)
}

fn cmd_fit(args: &FitArgs) -> Result<Value, CliError> {
    let spec = estimate_spec(&args.estimate)?;
    let ds = args.estimate.input.load()?;
    let mut result = fit_value(&spec, &ds)?;
    result["method"] = json!(args.estimate.method);
    if let Some(b) = args.bootstrap {
        let (names, res) = run_bootstrap(&spec, &ds, b, &args.resample)?;
        result["bootstrap"] = bootstrap_value(&names, &res);
    }
    Ok(result)
}

fn cmd_bootstrap(args: &BootstrapArgs) -> Result<Value, CliError> {
    let spec = estimate_spec(&args.estimate)?;
    let ds = args.estimate.input.load()?;
    let (names, res) = run_bootstrap(&spec, &ds, args.replicates, &args.resample)?;
    Ok(json!({ "method": args.estimate.method, "bootstrap": bootstrap_value(&names, &res) }))
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(Value, String), CliError> {
    let (mut dgp, mut fitted, mut method) =
        args.table
            .map_or((Family::Weibull, None, Method::ThreeStageAft), |t| {
                let (d, f, m) = t.design();
                (d, Some(f), m)
            });
    if let Some(f) = args.dgp_family {
        dgp = f;
    }
    if let Some(f) = args.family {
        fitted = Some(f);
    }
    if let Some(m) = args.method {
        method = m;
    }
    let fitted = fitted.unwrap_or(dgp);
    let censor = args.censor_family.unwrap_or(dgp);
    if args.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    if args.tau.is_empty() {
        return Err(CliError::Usage("--tau needs at least one value".into()));
    }
    let est = estimator_spec(method, fitted, TauGrid::default(), 1e-4, false)?;
    let mut studies = Vec::with_capacity(args.tau.len());
    for &tau in &args.tau {
        let spec = DgpSpec::benchmark(dgp, censor, tau, args.n).map_err(usage)?;
        studies.push((
            tau,
            parallel::monte_carlo(&spec, &est, args.reps, args.seed)?,
        ));
    }
    let title = format!(
        "DGP: S ~ {dgp}, R ~ {censor}; estimated: {} {fitted}; {} replications",
        serde_json::to_value(method)?.as_str().unwrap_or_default(),
        args.reps
    );
    let table = mc_table(&title, args.n, &studies);
    let value = json!({
        "dgp_family": dgp,
        "censor_family": censor,
        "method": method,
        "family": fitted,
        "n": args.n,
        "replications": args.reps,
        "seed": args.seed,
        "studies": studies.iter().map(|(tau, r)| json!({ "tau": tau, "report": r })).collect::<Vec<_>>(),
    });
    Ok((value, table))
}

fn cmd_gen(args: &GenArgs) -> Result<(), CliError> {
    let censor = args.censor_family.unwrap_or(args.family);
    let theta = theta_from_tau(args.tau).map_err(usage)?;
    let model_t =
        AftModel::new(args.family, args.alpha, vec![args.beta], args.sigma).map_err(usage)?;
    let model_c = AftModel::new(censor, args.alpha, vec![args.beta], args.sigma).map_err(usage)?;
    let spec = DgpSpec::new(theta, model_t, model_c, args.p_z, args.n).map_err(usage)?;
    let ds = generate_dataset(&spec, args.seed)?;
    let mut buf = Vec::new();
    write_dataset(&mut buf, &ds)?;
    emit(args.output.as_deref(), &String::from_utf8_lossy(&buf))
}

fn cmd_curve(args: &CurveArgs) -> Result<(), CliError> {
    let thetas = args
        .tau
        .iter()
        .map(|&t| theta_from_tau(t).map_err(usage))
        .collect::<Result<Vec<_>, _>>()?;
    let ds = args.input.load()?;
    let prep = Prepared::new(&ds)?;
    let strata = stratify(&ds)?;
    let mut curves = Vec::new();
    for (&tau, &theta) in args.tau.iter().zip(&thetas) {
        for (st, c) in strata.strata().iter().zip(prep.curves(theta)?) {
            curves.push((tau, st.z.clone(), c));
        }
    }
    let mut buf = Vec::new();
    write_curves(&mut buf, ds.k(), &curves)?;
    emit(args.output.as_deref(), &String::from_utf8_lossy(&buf))
}

fn execute(cli: &Cli, argv: &[String]) -> Result<(), CliError> {
    let config = serde_json::to_value(cli)?;
    let run = || -> Result<(), CliError> {
        match &cli.command {
            Command::Fit(a) => emit_json(
                a.output.as_deref(),
                &envelope("fit", argv, config.clone(), cmd_fit(a)?),
            ),
            Command::Bootstrap(a) => emit_json(
                a.output.as_deref(),
                &envelope("bootstrap", argv, config.clone(), cmd_bootstrap(a)?),
            ),
            Command::Simulate(a) => {
                let (value, table) = cmd_simulate(a)?;
                emit_json(
                    a.output.as_deref(),
                    &envelope("simulate", argv, config.clone(), value),
                )?;
                if !a.quiet {
                    if a.output.is_some() {
                        print!("{table}");
                    } else {
                        eprint!("{table}");
                    }
                }
                Ok(())
            }
            Command::Gen(a) => cmd_gen(a),
            Command::Curve(a) => cmd_curve(a),
        }
    };
    parallel::with_threads(cli.threads, run).map_err(CliError::Usage)?
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code. Errors are reported on stderr as a JSON object.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let echo: Vec<String> = argv
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match execute(&cli, &echo) {
        Ok(()) => 0,
        Err(e) => {
            let report = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{report}");
            e.exit_code()
        }
    }
}
