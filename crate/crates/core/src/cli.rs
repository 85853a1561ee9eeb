//! Batch front end behind the `mlde` binary.
//!
//! Every command reads an [`ExperimentConfig`], either from `--config`
//! (TOML, or the JSON sidecar of an earlier run) or from flags; flags override
//! file values key by key. Each run writes `<out>/<command>.csv` and the
//! sidecar `<out>/<command>.json`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::bounds::BoundConstants;
use crate::conditions::{certify, BernsteinCertificate, DEFAULT_K_MAX};
use crate::error::{Error, Result};
use crate::model::{parse_finite_table, MartingaleSpec, ModelConfig};
use crate::montecarlo::{
    clt_rate_curve, conjugate_clt_check, mdp_diagnostic, ratio_experiment, run_estimator, AnRule, EstimatorConfig,
    LambdaChoice, Method, SamplingConfig,
};
use crate::output::{write_csv, write_json, Sidecar};
use crate::tilting::{check_lemma1, check_lemma2_lemma3, tilted_variance_constant};

const DEFAULT_SAMPLES: u64 = 100_000;
const DEFAULT_LAMBDA_POINTS: usize = 51;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Certify,
    Tail,
    RatioTable,
    CltRate,
    ConjugateClt,
    Mdp,
    Lemmas,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Certify => "certify",
            Command::Tail => "tail",
            Command::RatioTable => "ratio-table",
            Command::CltRate => "clt-rate",
            Command::ConjugateClt => "conjugate-clt",
            Command::Mdp => "mdp",
            Command::Lemmas => "lemmas",
        }
    }
}

/// Envelope and solver constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Constants {
    pub c_alpha: f64,
    pub alpha: f64,
    pub c_alpha0: f64,
    pub alpha0: f64,
    pub c_half: f64,
}

impl Default for Constants {
    fn default() -> Self {
        let b = BoundConstants::default();
        Constants { c_alpha: b.c_alpha, alpha: b.alpha, c_alpha0: b.c_alpha0, alpha0: b.alpha0, c_half: 1.0 }
    }
}

impl Constants {
    fn bounds(&self) -> BoundConstants {
        BoundConstants { c_alpha: self.c_alpha, alpha: self.alpha, c_alpha0: self.c_alpha0, alpha0: self.alpha0 }
    }
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// One experiment, as stored in config files and sidecars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default)]
    pub lambda: LambdaChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub constants: Constants,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub an_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

fn check_sorted<T: PartialOrd + Copy + std::fmt::Debug>(name: &str, v: &Option<Vec<T>>) -> Result<()> {
    if let Some(v) = v {
        if v.is_empty() {
            return Err(Error::Config(format!("{name} must not be empty")));
        }
        if v.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config(format!("{name} must be strictly increasing, got {v:?}")));
        }
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(config_err)
    }

    /// Config recorded in a JSON sidecar (or a bare JSON config).
    pub fn from_json_str(text: &str) -> Result<Self> {
        let mut v: serde_json::Value = serde_json::from_str(text)?;
        if let Some(inner) = v.get_mut("config") {
            v = inner.take();
        }
        let cfg: ExperimentConfig = serde_json::from_value(v).map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn spec(&self) -> Result<MartingaleSpec> {
        self.model.to_spec()
    }

    fn stochastic(&self) -> bool {
        match self.command {
            Command::Tail | Command::Mdp | Command::RatioTable => {
                matches!(self.method, Some(Method::Crude | Method::Tilted))
                    || (self.method.is_none() && self.command == Command::Tail)
            }
            _ => false,
        }
    }

    /// Structural checks that do not need the model.
    pub fn validate(&self) -> Result<()> {
        check_sorted("x_grid", &self.x_grid)?;
        check_sorted("n_list", &self.n_list)?;
        check_sorted("lambda_grid", &self.lambda_grid)?;
        if self.stochastic() && self.seed.is_none() {
            return Err(Error::Config(format!("{} with a sampling method needs --seed", self.command.name())));
        }
        let needs_n_list = matches!(self.command, Command::CltRate | Command::ConjugateClt | Command::Mdp);
        if needs_n_list && self.n_list.is_none() {
            return Err(Error::Config(format!("{} needs --n-list", self.command.name())));
        }
        if matches!(self.command, Command::Tail | Command::RatioTable) && self.x.is_none() && self.x_grid.is_none() {
            return Err(Error::Config(format!("{} needs --x or --x-grid", self.command.name())));
        }
        Ok(())
    }

    fn x_values(&self) -> Vec<f64> {
        self.x_grid.clone().unwrap_or_else(|| self.x.into_iter().collect())
    }

    fn sampling(&self) -> SamplingConfig {
        SamplingConfig { samples: self.samples.unwrap_or(DEFAULT_SAMPLES), seed: self.seed.unwrap_or(0), threads: self.threads }
    }

    fn estimator(&self, default: Method) -> EstimatorConfig {
        EstimatorConfig { method: self.method.unwrap_or(default), lambda: self.lambda, sampling: self.sampling() }
    }

    pub fn csv_path(&self) -> PathBuf {
        self.out.join(format!("{}.csv", self.command.name()))
    }

    pub fn sidecar_path(&self) -> PathBuf {
        self.out.join(format!("{}.json", self.command.name()))
    }
}

/// Command-line flags; each mirrors a config key.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML config file or JSON sidecar of an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// rademacher | gaussian | finite:<path> | varswitch
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub normalized: Option<bool>,
    /// Switching amplitude for varswitch.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Base law for varswitch: rademacher | gaussian | finite:<path>
    #[arg(long)]
    pub base: Option<String>,
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<f64>,
    /// a:b:step or a comma list.
    #[arg(long, allow_hyphen_values = true)]
    pub x_grid: Option<String>,
    /// Comma list of sample sizes.
    #[arg(long)]
    pub n_list: Option<String>,
    /// crude | tilted | exact_enum | exact_binomial | exact_gaussian
    #[arg(long)]
    pub method: Option<String>,
    /// saddlepoint | paper | <value>
    #[arg(long)]
    pub lambda: Option<String>,
    /// Tilt grid for lemmas and conjugate-clt: a:b:step or a comma list.
    #[arg(long)]
    pub lambda_grid: Option<String>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub c_alpha: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub c_alpha0: Option<f64>,
    #[arg(long)]
    pub alpha0: Option<f64>,
    #[arg(long)]
    pub c_half: Option<f64>,
    /// Exponent γ in a_n = n^γ for mdp.
    #[arg(long)]
    pub an_exponent: Option<f64>,
    /// Worker cap (overrides MLDE_THREADS).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Parser)]
#[command(name = "mlde", version, about = "Large-deviation experiments for martingales under Bernstein's condition")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Certify the Bernstein and variance constants of a model.
    Certify(Flags),
    /// Estimate P(X_n > x).
    Tail(Flags),
    /// Tail ratios against the Gaussian tail with fitted envelope constant.
    RatioTable(Flags),
    /// Exact Kolmogorov distance to the normal law across n.
    CltRate(Flags),
    /// Kolmogorov distance of the recentred walk under tilted measures.
    ConjugateClt(Flags),
    /// Moderate-deviation diagnostic (1/a_n²) ln P(X_n > a_n x).
    Mdp(Flags),
    /// Exact checks of the tilted moment, drift and cumulant bounds.
    Lemmas(Flags),
}

/// Parse `a:b:step` (inclusive) or `v1,v2,...`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Config(format!("bad grid value '{s}': {e}")));
    if parts.len() == 3 {
        let (a, b, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || !(b >= a) {
            return Err(Error::Config(format!("grid '{text}' needs a <= b and step > 0")));
        }
        let count = ((b - a) / step * (1.0 + 1e-12)).floor() as usize;
        return Ok((0..=count).map(|i| a + i as f64 * step).collect());
    }
    if parts.len() != 1 {
        return Err(Error::Config(format!("grid '{text}' must be a:b:step or a comma list")));
    }
    text.split(',').map(|s| num(s.trim())).collect()
}

fn parse_n_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|e| Error::Config(format!("bad n '{s}': {e}"))))
        .collect()
}

fn table_mut<'a>(t: &'a mut toml::Table, key: &str) -> Result<&'a mut toml::Table> {
    t.entry(key.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()))
        .as_table_mut()
        .ok_or_else(|| Error::Config(format!("`{key}` must be a table")))
}

fn set<T: Serialize>(t: &mut toml::Table, key: &str, v: Option<T>) -> Result<()> {
    if let Some(v) = v {
        t.insert(key.to_string(), toml::Value::try_from(v).map_err(config_err)?);
    }
    Ok(())
}

type Table = (Vec<f64>, Vec<f64>);

/// Split `finite:<path>` into the model kind and the table it names.
fn model_kind(text: &str) -> Result<(String, Option<Table>)> {
    match text.split_once(':') {
        Some(("finite", path)) => {
            let body = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {path}: {e}")))?;
            Ok(("finite".into(), Some(parse_finite_table(&body)?)))
        }
        Some(_) => Err(Error::Config(format!("unknown model '{text}'"))),
        None => Ok((text.to_string(), None)),
    }
}

fn load_table(path: &Path) -> Result<toml::Table> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        let mut v: serde_json::Value = serde_json::from_str(&text)?;
        if let Some(inner) = v.get_mut("config") {
            v = inner.take();
        }
        return toml::Table::try_from(v).map_err(config_err);
    }
    text.parse::<toml::Table>().map_err(config_err)
}

impl Flags {
    /// Merge the config file (if any) with flag overrides.
    pub fn to_config(&self, command: Command) -> Result<ExperimentConfig> {
        let mut t = match &self.config {
            Some(p) => load_table(p)?,
            None => toml::Table::new(),
        };
        t.insert("command".into(), toml::Value::String(command.name().into()));
        {
            let model = table_mut(&mut t, "model")?;
            if let Some(m) = &self.model {
                let (kind, table) = model_kind(m)?;
                model.insert("model".into(), toml::Value::String(kind));
                if let Some((values, probs)) = table {
                    let params = table_mut(model, "params")?;
                    set(params, "values", Some(values))?;
                    set(params, "probs", Some(probs))?;
                }
            }
            if !model.contains_key("model") {
                model.insert("model".into(), toml::Value::String("rademacher".into()));
            }
            set(model, "n", self.n)?;
            set(model, "normalized", self.normalized)?;
            let params = table_mut(model, "params")?;
            set(params, "rho", self.rho)?;
            set(params, "scale", self.scale)?;
            set(params, "sigma2", self.sigma2)?;
            if let Some(b) = &self.base {
                let (kind, table) = model_kind(b)?;
                set(params, "base", Some(kind))?;
                if let Some((values, probs)) = table {
                    set(params, "values", Some(values))?;
                    set(params, "probs", Some(probs))?;
                }
            }
        }
        let n_list = self.n_list.as_deref().map(parse_n_list).transpose()?;
        {
            // sweeps over n do not need a separate base size
            let model = table_mut(&mut t, "model")?;
            if !model.contains_key("n") {
                if let Some(first) = n_list.as_ref().and_then(|v| v.first()) {
                    set(model, "n", Some(*first))?;
                }
            }
        }
        set(&mut t, "x", self.x)?;
        set(&mut t, "x_grid", self.x_grid.as_deref().map(parse_grid).transpose()?)?;
        set(&mut t, "n_list", n_list)?;
        if let Some(m) = &self.method {
            set(&mut t, "method", Some(m.parse::<Method>().map_err(config_err)?))?;
        }
        if let Some(l) = &self.lambda {
            set(&mut t, "lambda", Some(l.parse::<LambdaChoice>().map_err(config_err)?))?;
        }
        set(&mut t, "lambda_grid", self.lambda_grid.as_deref().map(parse_grid).transpose()?)?;
        set(&mut t, "samples", self.samples)?;
        set(&mut t, "seed", self.seed)?;
        set(&mut t, "an_exponent", self.an_exponent)?;
        set(&mut t, "threads", self.threads)?;
        set(&mut t, "out", self.out.clone())?;
        {
            let c = table_mut(&mut t, "constants")?;
            set(c, "c_alpha", self.c_alpha)?;
            set(c, "alpha", self.alpha)?;
            set(c, "c_alpha0", self.c_alpha0)?;
            set(c, "alpha0", self.alpha0)?;
            set(c, "c_half", self.c_half)?;
        }
        let cfg: ExperimentConfig = toml::Value::Table(t).try_into().map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// What a finished run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub csv: PathBuf,
    pub sidecar: PathBuf,
    pub fitted_constants: BTreeMap<String, f64>,
}

struct Report {
    certificate: Option<BernsteinCertificate>,
    fitted: BTreeMap<String, f64>,
    /// Error raised after the outputs were written.
    deferred: Option<Error>,
}

fn default_exact(spec: &MartingaleSpec) -> Method {
    if spec.base_distribution().is_gaussian() {
        Method::ExactGaussian
    } else if spec.is_iid() {
        Method::ExactBinomial
    } else {
        Method::Tilted
    }
}

fn execute(cfg: &ExperimentConfig, csv: &Path) -> Result<Report> {
    let spec = cfg.spec()?;
    let mut fitted = BTreeMap::new();
    let mut deferred = None;
    let certificate = certify(&spec, DEFAULT_K_MAX).ok();
    match cfg.command {
        Command::Certify => {
            let cert = certify(&spec, DEFAULT_K_MAX)?;
            write_csv(csv, std::slice::from_ref(&cert))?;
            println!("{}", serde_json::to_string_pretty(&cert)?);
        }
        Command::Tail => {
            let est = cfg.estimator(Method::Tilted);
            let rows = cfg
                .x_values()
                .iter()
                .map(|&x| run_estimator(&spec, x, &est, cfg.constants.c_alpha))
                .collect::<Result<Vec<_>>>()?;
            write_csv(csv, &rows)?;
        }
        Command::RatioTable => {
            let default = default_exact(&spec);
            if cfg.method.is_none() && default == Method::Tilted && cfg.seed.is_none() {
                return Err(Error::Config("this model has no exact oracle; pass --method and --seed".into()));
            }
            let exp = ratio_experiment(&spec, &cfg.x_values(), &cfg.estimator(default), &cfg.constants.bounds())?;
            write_csv(csv, &exp.rows)?;
            fitted.insert("c_star".into(), exp.fitted_c);
            if let Some(x) = exp.first_failure_x {
                fitted.insert("first_failure_x".into(), x);
            }
        }
        Command::CltRate => {
            let sampling = cfg.seed.map(|_| cfg.sampling());
            let curve = clt_rate_curve(&spec, cfg.n_list.as_deref().unwrap_or_default(), sampling.as_ref())?;
            write_csv(csv, &curve.rows)?;
            fitted.insert("c".into(), curve.fitted_c());
            fitted.insert("c_spread".into(), curve.spread());
        }
        Command::ConjugateClt => {
            let lambdas = cfg.lambda_grid.clone().unwrap_or_else(|| vec![0.0]);
            let n_list = cfg.n_list.as_deref().unwrap_or_default();
            let mut rows = Vec::new();
            for &lambda in &lambdas {
                let curve = conjugate_clt_check(&spec, lambda, n_list)?;
                fitted.insert(format!("c_lambda_{lambda}"), curve.fitted_c());
                rows.extend(curve.rows);
            }
            let c = rows.iter().map(|r| r.fitted_c).fold(0.0, f64::max);
            fitted.insert("c".into(), c);
            write_csv(csv, &rows)?;
        }
        Command::Mdp => {
            let default = if spec.base_distribution().is_gaussian() { Method::ExactGaussian } else { Method::Tilted };
            if cfg.method.is_none() && default == Method::Tilted && cfg.seed.is_none() {
                return Err(Error::Config("mdp with tilted sampling needs --seed".into()));
            }
            let rule = AnRule { exponent: cfg.an_exponent.unwrap_or(AnRule::default().exponent) };
            let x = cfg.x.unwrap_or(1.0);
            let rows = mdp_diagnostic(&spec, rule, x, cfg.n_list.as_deref().unwrap_or_default(), &cfg.estimator(default), cfg.constants.c_alpha)?;
            write_csv(csv, &rows)?;
            let bad: Vec<usize> = rows.iter().filter(|r| !r.feasible).map(|r| r.n).collect();
            if !bad.is_empty() {
                deferred = Some(Error::Infeasible(format!("zero estimated probability at n = {bad:?}")));
            }
        }
        Command::Lemmas => {
            let cert = certify(&spec, DEFAULT_K_MAX)?;
            let grid = cfg.lambda_grid.clone().unwrap_or_else(|| {
                let top = 0.5 / cert.epsilon;
                (0..DEFAULT_LAMBDA_POINTS).map(|i| top * i as f64 / (DEFAULT_LAMBDA_POINTS - 1) as f64).collect()
            });
            let rows = check_lemma2_lemma3(&spec, &grid, cfg.constants.alpha, cfg.constants.c_alpha)?;
            write_csv(csv, &rows)?;
            fitted.insert("c2".into(), rows.first().map_or(0.0, |r| r.fitted_c2));
            fitted.insert("c3".into(), rows.first().map_or(0.0, |r| r.fitted_c3));
            fitted.insert("tilted_variance_c".into(), tilted_variance_constant(&spec, &grid)?);
            for (i, law) in spec.step_laws().iter().enumerate() {
                let rep = check_lemma1(law, cert.epsilon, DEFAULT_K_MAX);
                fitted.insert(format!("lemma1_moment_ratio_{i}"), rep.moment_ratio);
                fitted.insert(format!("lemma1_abs_moment_ratio_{i}"), rep.abs_moment_ratio);
            }
        }
    }
    Ok(Report { certificate, fitted, deferred })
}

/// Run one experiment, writing its CSV and sidecar.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let csv = cfg.csv_path();
    let sidecar_path = cfg.sidecar_path();
    let result = execute(cfg, &csv);
    let mut sidecar = Sidecar::new(cfg.command.name(), cfg.clone());
    sidecar.wall_time_seconds = start.elapsed().as_secs_f64();
    let stochastic = cfg.stochastic() || cfg.seed.is_some();
    sidecar.seed = cfg.seed.filter(|_| stochastic);
    sidecar.samples = stochastic.then(|| cfg.sampling().samples);
    match result {
        Ok(report) => {
            sidecar.certificate = report.certificate;
            sidecar.fitted_constants = report.fitted.clone();
            sidecar.outputs = vec![csv.clone()];
            sidecar.error = report.deferred.as_ref().map(|e| e.to_string());
            write_json(&sidecar_path, &sidecar)?;
            match report.deferred {
                Some(e) => Err(e),
                None => Ok(RunOutcome { csv, sidecar: sidecar_path, fitted_constants: report.fitted }),
            }
        }
        Err(e) => {
            sidecar.error = Some(e.to_string());
            // the sidecar is best effort once the run itself has failed
            let _ = write_json(&sidecar_path, &sidecar);
            Err(e)
        }
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let (command, flags) = match cli.command {
        Sub::Certify(f) => (Command::Certify, f),
        Sub::Tail(f) => (Command::Tail, f),
        Sub::RatioTable(f) => (Command::RatioTable, f),
        Sub::CltRate(f) => (Command::CltRate, f),
        Sub::ConjugateClt(f) => (Command::ConjugateClt, f),
        Sub::Mdp(f) => (Command::Mdp, f),
        Sub::Lemmas(f) => (Command::Lemmas, f),
    };
    match flags.to_config(command).and_then(|cfg| run(&cfg)) {
        Ok(outcome) => {
            eprintln!("wrote {} and {}", outcome.csv.display(), outcome.sidecar.display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
