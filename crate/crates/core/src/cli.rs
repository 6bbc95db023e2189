//! Command-line front end.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde_json::json;

use crate::config::{OneOrMany, RunConfig};
use crate::dpmm::{fit_dpmm, DpmmConfig};
use crate::error::{Error, Result};
use crate::estimate::DensityEstimate;
use crate::evalbench::{
    replicate_streams, run_benchmark, sensitivity_experiment, BenchmarkSpec, DensityId, ImseTable, MethodSpec,
    ReferenceDensity,
};
use crate::io::{format_density_csv, format_samples, load_csv, write_file, DensityTable};
use crate::laplace::laplace_check;
use crate::lindsey::{fit_lindsey, LindseyConfig};
use crate::pgm::{fit_pgm, HmcConfig, PgmConfig};
use crate::sample::SampleSet;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

const DEFAULT_ITERS: usize = 5000;
const DEFAULT_BURNIN: usize = 1000;
const SENSITIVITY_A: [f64; 6] = [1e-3, 1.0, 10.0, 100.0, 500.0, 1000.0];

#[derive(Debug, Parser)]
#[command(name = "densecraft", version, about = "Bayesian nonparametric density estimation")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one estimator to a data file.
    Fit(Flags),
    /// Draw benchmark data sets with the comparison's seed schedule.
    Simulate(Flags),
    /// Run the simulation benchmark and tabulate IMSE.
    Compare(Flags),
    /// Refit the mixture under several half-t scales on one data set.
    Sensitivity(Flags),
    /// Compare the normal approximation with the mixture chain.
    LaplaceCheck(Flags),
}

#[derive(Debug, Default, Args)]
pub struct Flags {
    /// JSON file with default values for any of these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Estimator: lindsey, pgm, dpmm or laplace-check.
    #[arg(long)]
    pub method: Option<String>,
    /// Single-column CSV of observations.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Lindsey bin count.
    #[arg(long = "k")]
    pub k: Option<usize>,
    /// Mixture components; a comma-separated list for compare.
    #[arg(long = "K", value_delimiter = ',')]
    pub big_k: Vec<usize>,
    /// Dirichlet process truncation level.
    #[arg(long = "N")]
    pub truncation: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    /// Random seed; falls back to DENSECRAFT_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for replicated runs.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output format: csv or json.
    #[arg(long)]
    pub format: Option<String>,
    /// Score benchmark fits on the evaluation grid instead of the sample.
    #[arg(long)]
    pub mse_grid: bool,
    /// Half-t scale; a comma-separated list for sensitivity.
    #[arg(long = "A", value_delimiter = ',', allow_negative_numbers = true)]
    pub scale_a: Vec<f64>,
    /// Prior constant of the first two mixture logits.
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    /// Half-t degrees of freedom.
    #[arg(long, allow_negative_numbers = true)]
    pub nu: Option<f64>,
    /// HMC step size.
    #[arg(long, allow_negative_numbers = true)]
    pub step_size: Option<f64>,
    /// HMC leapfrog steps.
    #[arg(long)]
    pub leapfrog: Option<usize>,
    /// Use the sample size rather than the bin count in the Lindsey
    /// variance update.
    #[arg(long)]
    pub shape_uses_raw_n: bool,
    /// Reference density for simulate and sensitivity (f1..f5).
    #[arg(long)]
    pub density: Option<String>,
    /// Sample size for simulate and sensitivity.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Comma-separated estimators for compare.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    /// Comma-separated reference densities for compare.
    #[arg(long, value_delimiter = ',')]
    pub densities: Vec<String>,
    /// Comma-separated sample sizes for compare.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
}

fn nonempty<T>(v: Vec<T>) -> Option<Vec<T>> {
    (!v.is_empty()).then_some(v)
}

impl Flags {
    fn into_config(self) -> Result<RunConfig> {
        let file = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            method: self.method,
            input: self.input,
            output: self.output,
            k: self.k,
            big_k: nonempty(self.big_k).map(OneOrMany::Many),
            truncation: self.truncation,
            c: self.c,
            nu: self.nu,
            scale_a: nonempty(self.scale_a).map(OneOrMany::Many),
            step_size: self.step_size,
            leapfrog: self.leapfrog,
            shape_uses_raw_n: self.shape_uses_raw_n.then_some(true),
            iters: self.iters,
            burnin: self.burnin,
            seed: self.seed,
            jobs: self.jobs,
            format: self.format,
            mse_grid: self.mse_grid.then_some(true),
            density: self.density,
            n: self.n,
            replicates: self.replicates,
            methods: nonempty(self.methods),
            densities: nonempty(self.densities),
            sizes: nonempty(self.sizes),
        };
        Ok(flags.or(file))
    }
}

/// Parsed and defaulted settings shared by the subcommands.
struct Settings {
    cfg: RunConfig,
    seed: u64,
    iters: usize,
    burnin: usize,
    format: Format,
}

#[derive(Clone, Copy, PartialEq)]
enum Format {
    Csv,
    Json,
}

impl Settings {
    fn new(cfg: RunConfig) -> Result<Self> {
        let seed = cfg.resolved_seed()?;
        let iters = cfg.iters.unwrap_or(DEFAULT_ITERS);
        let burnin = cfg.burnin.unwrap_or(DEFAULT_BURNIN);
        if iters <= burnin {
            return Err(Error::param(format!("iters ({iters}) must exceed burnin ({burnin})")));
        }
        let format = match cfg.format.as_deref().unwrap_or("csv") {
            "csv" => Format::Csv,
            "json" => Format::Json,
            other => return Err(Error::param(format!("unknown format '{other}' (expected csv or json)"))),
        };
        Ok(Self {
            cfg,
            seed,
            iters,
            burnin,
            format,
        })
    }

    fn output(&self) -> Result<&Path> {
        self.cfg
            .output
            .as_deref()
            .ok_or_else(|| Error::param("--output is required"))
    }

    fn input(&self) -> Result<SampleSet> {
        let path = self
            .cfg
            .input
            .as_deref()
            .ok_or_else(|| Error::param("--input is required"))?;
        load_csv(path)
    }

    fn single<T: Clone>(&self, name: &str, v: &Option<OneOrMany<T>>) -> Result<Option<T>> {
        match v.clone().map(OneOrMany::into_vec) {
            None => Ok(None),
            Some(v) if v.len() == 1 => Ok(Some(v[0].clone())),
            Some(v) => Err(Error::param(format!("--{name} takes one value here, got {}", v.len()))),
        }
    }

    fn lindsey(&self) -> LindseyConfig {
        LindseyConfig {
            bins: self.cfg.k,
            iterations: self.iters,
            burnin: self.burnin,
            seed: self.seed,
            shape_uses_raw_n: self.cfg.shape_uses_raw_n.unwrap_or(false),
            ..Default::default()
        }
    }

    fn pgm(&self, components: Option<usize>, scale_a: Option<f64>) -> PgmConfig {
        let d = PgmConfig::default();
        PgmConfig {
            components: components.unwrap_or(d.components),
            c: self.cfg.c.unwrap_or(d.c),
            nu: self.cfg.nu.unwrap_or(d.nu),
            scale_a: scale_a.unwrap_or(d.scale_a),
            hmc: HmcConfig {
                step_size: self.cfg.step_size.unwrap_or(d.hmc.step_size),
                leapfrog_steps: self.cfg.leapfrog.unwrap_or(d.hmc.leapfrog_steps),
            },
            iterations: self.iters,
            burnin: self.burnin,
            seed: self.seed,
            thin: d.thin,
        }
    }

    fn single_pgm(&self) -> Result<PgmConfig> {
        let k = self.single("K", &self.cfg.big_k)?;
        let a = self.single("A", &self.cfg.scale_a)?;
        Ok(self.pgm(k, a))
    }

    fn dpmm(&self) -> DpmmConfig {
        DpmmConfig {
            truncation: self.cfg.truncation.unwrap_or(DpmmConfig::default().truncation),
            iterations: self.iters,
            burnin: self.burnin,
            seed: self.seed,
            ..Default::default()
        }
    }

    fn jobs(&self) -> usize {
        self.cfg.jobs.unwrap_or(0)
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                EXIT_CONFIG
            } else {
                EXIT_NUMERIC
            }
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Fit(f) => cmd_fit(&Settings::new(f.into_config()?)?),
        Command::Simulate(f) => cmd_simulate(&Settings::new(f.into_config()?)?),
        Command::Compare(f) => cmd_compare(&Settings::new(f.into_config()?)?),
        Command::Sensitivity(f) => cmd_sensitivity(&Settings::new(f.into_config()?)?),
        Command::LaplaceCheck(f) => cmd_laplace_check(&Settings::new(f.into_config()?)?),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn write_estimate(s: &Settings, dir: &Path, est: &DensityEstimate) -> Result<()> {
    match s.format {
        Format::Csv => write_file(dir, "density.csv", &format_density_csv(&DensityTable::from(est)))?,
        Format::Json => write_file(dir, "density.json", &to_json(est)?)?,
    };
    Ok(())
}

fn trace_csv(header: &str, rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for (i, row) in rows.enumerate() {
        let _ = write!(out, "{i}");
        for v in row {
            let _ = write!(out, ",{v:.16e}");
        }
        out.push('\n');
    }
    out
}

fn cmd_fit(s: &Settings) -> Result<()> {
    let method = s
        .cfg
        .method
        .as_deref()
        .ok_or_else(|| Error::param("--method is required (lindsey, pgm, dpmm or laplace-check)"))?;
    if method == "laplace-check" {
        return cmd_laplace_check(s);
    }
    let out = s.output()?;
    let data = s.input()?;
    let start = Instant::now();
    let (estimate, trace, settings) = match method {
        "lindsey" => {
            let cfg = s.lindsey();
            let fit = fit_lindsey(&data, &cfg)?;
            let trace = trace_csv(
                "iteration,sigma2,tau2",
                fit.sigma2_trace.iter().zip(&fit.tau2_trace).map(|(a, b)| vec![*a, *b]),
            );
            (fit.estimate, trace, json!({ "config": cfg, "bins": fit.bins, "columns": fit.columns }))
        }
        "pgm" => {
            let cfg = s.single_pgm()?;
            let fit = fit_pgm(&data, &cfg)?;
            let header = std::iter::once("iteration,tau2".to_string())
                .chain((2..=cfg.components).map(|j| format!("beta_{j}")))
                .collect::<Vec<_>>()
                .join(",");
            let trace = trace_csv(
                &header,
                fit.beta_trace.iter().zip(&fit.tau2_trace).map(|(b, t)| {
                    let mut row = vec![*t];
                    row.extend_from_slice(b);
                    row
                }),
            );
            (
                fit.estimate,
                trace,
                json!({ "config": cfg, "grid": fit.grid, "mean_weights": fit.mean_weights }),
            )
        }
        "dpmm" => {
            let cfg = s.dpmm();
            let fit = fit_dpmm(&data, &cfg)?;
            let trace = trace_csv(
                "iteration,alpha,occupied",
                fit.alpha_trace
                    .iter()
                    .zip(&fit.occupied_trace)
                    .map(|(a, o)| vec![*a, *o as f64]),
            );
            (fit.estimate, trace, json!({ "config": cfg, "hyper": fit.hyper }))
        }
        other => {
            return Err(Error::param(format!(
                "unknown method '{other}' (expected lindsey, pgm, dpmm or laplace-check)"
            )))
        }
    };
    info!("{method} fit took {:.2?}", start.elapsed());
    write_estimate(s, out, &estimate)?;
    write_file(out, "trace.csv", &trace)?;
    let summary = json!({
        "method": method,
        "n": data.len(),
        "interval": data.interval(),
        "integral": estimate.integral(),
        "diagnostics": estimate.diagnostics,
        "settings": settings,
    });
    write_file(out, "summary.json", &to_json(&summary)?)?;
    for w in &estimate.diagnostics.warnings {
        log::warn!("{w}");
    }
    Ok(())
}

fn parse_density(name: Option<&str>, default: DensityId) -> Result<DensityId> {
    name.map_or(Ok(default), str::parse)
}

fn cmd_simulate(s: &Settings) -> Result<()> {
    let out = s.output()?;
    let density = parse_density(s.cfg.density.as_deref(), DensityId::F1)?;
    let n = s.cfg.n.unwrap_or(400);
    let replicates = s.cfg.replicates.unwrap_or(1);
    let truth = ReferenceDensity::new(density);
    for r in 0..replicates {
        let (mut rng, _) = replicate_streams(s.seed, density, n, r);
        let data = truth.sample(n, &mut rng)?;
        write_file(out, &format!("{density}_n{n}_r{r:03}.csv"), &format_samples(data.values()))?;
    }
    Ok(())
}

fn method_specs(s: &Settings) -> Result<Vec<MethodSpec>> {
    let names = s
        .cfg
        .methods
        .clone()
        .unwrap_or_else(|| vec!["lindsey".into(), "pgm".into(), "dpmm".into()]);
    let ks = s.cfg.big_k.clone().map(OneOrMany::into_vec).unwrap_or_else(|| vec![30]);
    let a = s.single("A", &s.cfg.scale_a)?;
    let mut specs = Vec::new();
    for name in names {
        match name.trim() {
            "lindsey" | "lm" => specs.push(MethodSpec::Lindsey(s.lindsey())),
            "pgm" => specs.extend(ks.iter().map(|&k| MethodSpec::Pgm(s.pgm(Some(k), a)))),
            "dpmm" => specs.push(MethodSpec::Dpmm(s.dpmm())),
            "oracle" => specs.push(MethodSpec::Oracle),
            other => return Err(Error::param(format!("unknown method '{other}'"))),
        }
    }
    Ok(specs)
}

fn cmd_compare(s: &Settings) -> Result<()> {
    let out = s.output()?;
    let densities = match &s.cfg.densities {
        Some(d) => d.iter().map(|x| x.parse()).collect::<Result<Vec<_>>>()?,
        None => DensityId::ALL.to_vec(),
    };
    let spec = BenchmarkSpec {
        methods: method_specs(s)?,
        densities,
        sizes: s.cfg.sizes.clone().unwrap_or_else(|| vec![100, 400]),
        replicates: s.cfg.replicates.unwrap_or(100),
        seed: s.seed,
        mse_on_grid: s.cfg.mse_grid.unwrap_or(false),
        jobs: s.jobs(),
    };
    let start = Instant::now();
    let reports = run_benchmark(&spec)?;
    for r in &reports {
        info!(
            "{} {} n={}: IMSE x 1e3 = {:.4} ({} failed, {:.1}s)",
            r.method,
            r.density,
            r.n,
            r.imse_x1000(),
            r.failed_replicates,
            r.wall_clock_secs
        );
    }
    info!("benchmark took {:.2?}", start.elapsed());
    match s.format {
        Format::Csv => {
            let mut csv = String::from("method,density,n,replicate,mse\n");
            for r in &reports {
                for (id, m) in r.replicate_ids.iter().zip(&r.mse) {
                    let _ = writeln!(csv, "{},{},{},{id},{m:.16e}", r.method, r.density, r.n);
                }
            }
            write_file(out, "reports.csv", &csv)?;
        }
        Format::Json => {
            write_file(out, "reports.json", &to_json(&reports)?)?;
        }
    }
    let summary = json!({
        "replicates": spec.replicates,
        "seed": spec.seed,
        "mse_on_grid": spec.mse_on_grid,
        "imse_x1000": ImseTable::from_reports(&reports),
        "failed_replicates": reports.iter().map(|r| r.failed_replicates).sum::<usize>(),
    });
    write_file(out, "summary.json", &to_json(&summary)?)?;
    Ok(())
}

fn cmd_sensitivity(s: &Settings) -> Result<()> {
    let out = s.output()?;
    let density = parse_density(s.cfg.density.as_deref(), DensityId::F3)?;
    let n = s.cfg.n.unwrap_or(400);
    let a_values = s
        .cfg
        .scale_a
        .clone()
        .map(OneOrMany::into_vec)
        .unwrap_or_else(|| SENSITIVITY_A.to_vec());
    let k = s.single("K", &s.cfg.big_k)?.unwrap_or(20);
    let base = s.pgm(Some(k), None);
    let report = sensitivity_experiment(&a_values, density, n, &base, s.seed, s.jobs())?;
    let mut csv = String::from("A,component,weight\n");
    for (a, w) in report.a_values.iter().zip(&report.weights) {
        for (j, c) in w.iter().enumerate() {
            let _ = writeln!(csv, "{a:.16e},{},{c:.16e}", j + 1);
        }
    }
    write_file(out, "weights.csv", &csv)?;
    write_file(out, "sensitivity.json", &to_json(&report)?)?;
    Ok(())
}

fn cmd_laplace_check(s: &Settings) -> Result<()> {
    let out = s.output()?;
    let data = s.input()?;
    let report = laplace_check(&data, &s.single_pgm()?)?;
    info!("largest |z| between approximation and chain: {:.3}", report.max_abs_z);
    write_file(out, "laplace.json", &to_json(&report)?)?;
    Ok(())
}
