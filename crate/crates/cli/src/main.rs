use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ordinal_impute::imputation::run_imputations;
use ordinal_impute::io::{
    emit_report, ingest_csv, read_matrix_csv, run_analysis, write_atomic, write_cohort_csv,
    write_estimates, write_json, write_matrix_csv, Mode, ReportPaths, RunConfig,
};
use ordinal_impute::model::fit_models;
use ordinal_impute::sensitivity::{export_heatmap_data, run_sensitivity};
use ordinal_impute::simulation::{
    application_analogue, default_covariate_pool, raw_covariate_pool, run_replications,
    APPLICATION_SEED, POOL_COLUMNS, POOL_SEED, POOL_SIZE,
};
use ordinal_impute::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "ordinal-impute",
    version,
    about = "Causal effects on a composite adverse-event/death outcome by multiple imputation"
)]
struct Cli {
    /// TOML run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Cohort CSV (id, w, a, d, covariates...)
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Master random seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of imputations
    #[arg(long, global = true)]
    m: Option<usize>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overwrite existing output files
    #[arg(long, global = true)]
    force: bool,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the propensity and outcome models and write them as JSON
    Fit,
    /// Write the completed datasets in long format
    Impute,
    /// Write the pooled estimate table
    Estimate,
    /// Full analysis: estimates, per-imputation draws and run manifest
    Analyze,
    /// Repeated-sampling study of interval coverage
    Simulate,
    /// Unobserved-confounder sensitivity grids
    Sensitivity,
    /// Regenerate the shipped covariate pool and application analogue
    GenerateData,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut c = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(d) = &cli.data {
        c.data.path = Some(d.clone());
    }
    if let Some(s) = cli.seed {
        c.seed = s;
        c.simulation.replications.seed = s;
    }
    if let Some(m) = cli.m {
        c.imputations = m;
        c.simulation.replications.imputations = m;
    }
    if let Some(o) = &cli.out {
        c.output.dir = o.clone();
    }
    c.output.force |= cli.force;
    c.mode = match cli.command {
        Command::Simulate => Mode::Simulate,
        Command::Sensitivity => Mode::Sensitivity,
        _ => Mode::Analyze,
    };
    Ok(c)
}

fn data_path(c: &RunConfig) -> Result<&Path> {
    c.data
        .path
        .as_deref()
        .ok_or_else(|| Error::InvalidConfig("no data path (use --data or [data] path)".into()))
}

fn run(cli: &Cli) -> Result<()> {
    if let Command::GenerateData = cli.command {
        let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("data"));
        let pool_path = dir.join("covariate_pool.csv");
        let pool = default_covariate_pool();
        write_atomic(&pool_path, cli.force, |w| {
            write_matrix_csv(&POOL_COLUMNS, &pool, w, &pool_path)
        })?;
        let raw_path = dir.join("covariate_pool_raw.csv");
        let raw = raw_covariate_pool(POOL_SIZE, POOL_SEED);
        write_atomic(&raw_path, cli.force, |w| {
            write_matrix_csv(&POOL_COLUMNS, &raw, w, &raw_path)
        })?;
        let app_path = dir.join("application.csv");
        let cohort = application_analogue(APPLICATION_SEED)?;
        write_atomic(&app_path, cli.force, |w| {
            write_cohort_csv(&cohort, w, &app_path)
        })?;
        log::info!(
            "wrote {}, {} and {}",
            pool_path.display(),
            raw_path.display(),
            app_path.display()
        );
        return Ok(());
    }
    let config = load_config(cli)?;
    config.validate()?;
    let out = config.output.dir.clone();
    let force = config.output.force;
    match cli.command {
        Command::Fit => {
            let data = ingest_csv(data_path(&config)?)?;
            let fitted = fit_models(&data.cohort, &config.model)?;
            write_json(&out.join("fit.json"), &fitted, force)?;
        }
        Command::Impute => {
            let data = ingest_csv(data_path(&config)?)?;
            let fitted = fit_models(&data.cohort, &config.model)?;
            let run = run_imputations(
                &fitted.arms,
                &fitted.design,
                &data.cohort,
                config.imputations,
                config.seed,
            )?;
            let path = out.join("imputations.csv");
            let ids = &data.cohort.ids;
            write_atomic(&path, force, |w| {
                writeln!(w, "m,id,w,a0,a1,d0,d1").map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
                for ds in &run.datasets {
                    for i in 0..ds.len() {
                        writeln!(
                            w,
                            "{},{},{},{},{},{},{}",
                            ds.m, ids[i], ds.w[i], ds.a0[i], ds.a1[i], ds.d0[i], ds.d1[i]
                        )
                        .map_err(|e| Error::Io {
                            path: path.clone(),
                            source: e,
                        })?;
                    }
                }
                Ok(())
            })?;
        }
        Command::Estimate => {
            let data = ingest_csv(data_path(&config)?)?;
            let results = run_analysis(&config, &data)?;
            let path = out.join("estimates.csv");
            write_atomic(&path, force, |w| {
                write_estimates(&results.estimates, w, &path)
            })?;
        }
        Command::Analyze => {
            let data = ingest_csv(data_path(&config)?)?;
            let results = run_analysis(&config, &data)?;
            emit_report(&results, &ReportPaths::in_dir(&out), force)?;
        }
        Command::Simulate => {
            let generator = config.simulation.generator()?;
            let pool = match &config.simulation.pool {
                Some(p) => read_matrix_csv(p)?.1,
                None => default_covariate_pool(),
            };
            let metrics = run_replications(&generator, &pool, &config.simulation.replications)?;
            let path = out.join("metrics.csv");
            write_atomic(&path, force, |w| metrics.write_csv(w))?;
            let summary = serde_json::json!({
                "generator": generator,
                "settings": config.simulation.replications,
                "failures": metrics.failures,
            });
            write_json(&out.join("simulation.json"), &summary, force)?;
        }
        Command::Sensitivity => {
            let data = ingest_csv(data_path(&config)?)?;
            let fitted = fit_models(&data.cohort, &config.model)?;
            for &mu in &config.sensitivity.mu_z_control {
                let spec = ordinal_impute::sensitivity::SensitivitySpec {
                    mu_z_control: mu,
                    ..config.sensitivity.grid.clone()
                };
                let grid = run_sensitivity(
                    &fitted,
                    &data.cohort,
                    &spec,
                    config.imputations,
                    config.seed,
                )?;
                export_heatmap_data(&grid, &out.join(format!("sensitivity_mu{mu}.csv")), force)?;
            }
        }
        Command::GenerateData => unreachable!(),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
