use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use co2_analysis::clustering::{dtw_kcluster, standardized_series, ward_cluster, KClusterOptions};
use co2_analysis::diagnostics::{breusch_pagan_panel, hausman, wald_time_effects};
use co2_analysis::estimators::{fit_model, ModelKind, ModelSpec};
use co2_analysis::pipeline::{
    self, load_dataset, provenance, run_phase1, run_phase2, write_outputs, Incomplete, PipelineReport, RunStatus,
};
use co2_analysis::sarimax::{forecast_entity, ScenarioConfig};
use co2_analysis::selection::SelectionReport;
use co2_analysis::{Error, PipelineConfig};

#[derive(Parser, Debug)]
#[command(name = "co2-analysis", version, about = "Panel regression, SARIMAX forecasting and DTW clustering of CO2 emission panels")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Input CSV; overrides `input` from the config.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    corr_threshold: Option<f64>,
    #[arg(long, global = true)]
    horizon: Option<usize>,
    #[arg(long, global = true)]
    split_year: Option<i32>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Log progress to standard error (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Full pipeline; writes report.json, tables/ and figures/.
    Run,
    /// Model-choice flow and feature selection only.
    Phase1,
    /// Forecasting and clustering from a saved selection.
    Phase2 {
        /// A report.json from `phase1`/`run`, or a bare selection JSON.
        #[arg(long)]
        selection: PathBuf,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Fit one model and print its coefficient table as CSV.
    Fit {
        #[arg(long, value_parser = parse_model)]
        model: ModelKind,
    },
    /// Run one specification test and print it as JSON.
    Test {
        #[arg(value_enum)]
        which: TestKind,
    },
    /// Hold-out forecasts of one entity under both feature sets, as JSON.
    Forecast {
        #[arg(long)]
        country: String,
        /// Comma-separated selected features; phase 1 runs when omitted.
        #[arg(long, value_delimiter = ',')]
        features: Option<Vec<String>>,
    },
    /// Ward and DTW k-clustering of the dependent variable; prints labels.
    Cluster {
        #[arg(long)]
        k: Option<usize>,
    },
    /// Load the panel and print its shape.
    ValidateData,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum TestKind {
    Bp,
    Wald,
    Hausman,
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    ModelKind::from_label(s).ok_or_else(|| format!("unknown model `{s}`; expected one of A, B, C, D, E"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            eprintln!("E_CONFIG: {}", e.to_string().trim_end());
            return ExitCode::from(1);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let cat = e.category();
            eprintln!("{}: {e}", cat.prefix());
            ExitCode::from(cat.exit_code() as u8)
        }
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, Error> {
    let mut cfg = match (&cli.config, &cli.input) {
        (Some(path), _) => PipelineConfig::load(path)?,
        (None, Some(input)) => PipelineConfig::with_input(input),
        (None, None) => return Err(Error::Config("either --config or --input is required".into())),
    };
    if let Some(i) = &cli.input {
        cfg.input = i.clone();
    }
    if let Some(o) = &cli.output_dir {
        cfg.output_dir = o.clone();
    }
    if let Some(a) = cli.alpha {
        cfg.alpha = a;
    }
    if let Some(c) = cli.corr_threshold {
        cfg.corr_threshold = c;
    }
    if let Some(h) = cli.horizon {
        cfg.forecast_horizon = h;
    }
    if cli.split_year.is_some() {
        cfg.split_year = cli.split_year;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Command::Phase2 { k: Some(k), .. } | Command::Cluster { k: Some(k) } = &cli.command {
        cfg.k_clusters = *k;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn stdout_line(s: &str) -> Result<(), Error> {
    let mut out = std::io::stdout().lock();
    out.write_all(s.as_bytes()).and_then(|_| out.flush()).map_err(|e| Error::io("cannot write to stdout", e))
}

fn run(cli: &Cli) -> Result<(), Error> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Run => {
            let (panel, _) = load_dataset(&cfg)?;
            match pipeline::run_pipeline(&cfg) {
                Ok(report) => {
                    let files = write_outputs(&report, &panel, &cfg.output_dir)?;
                    print_summary(&report);
                    log::info!("wrote {} files under {}", files.len(), cfg.output_dir.display());
                    Ok(())
                }
                Err((partial, error)) => {
                    if let Some(r) = partial {
                        write_outputs(&r, &panel, &cfg.output_dir)?;
                        eprintln!("incomplete report written to {}", cfg.output_dir.join("report.json").display());
                    }
                    Err(error)
                }
            }
        }
        Command::Phase1 => {
            let (panel, imputed) = load_dataset(&cfg)?;
            let mut report = PipelineReport {
                status: RunStatus::Complete,
                provenance: provenance(&cfg, &panel, imputed)?,
                phase1: None,
                phase2: None,
            };
            let result = run_phase1(&panel, &cfg);
            let error = match result {
                Ok(p1) => {
                    report.phase1 = Some(p1);
                    None
                }
                Err(Incomplete { partial, error }) => {
                    report.phase1 = Some(partial);
                    report.status = RunStatus::Incomplete {
                        stage: "phase1".into(),
                        error: error.to_string(),
                    };
                    Some(error)
                }
            };
            write_outputs(&report, &panel, &cfg.output_dir)?;
            match error {
                Some(e) => Err(e),
                None => {
                    print_summary(&report);
                    Ok(())
                }
            }
        }
        Command::Phase2 { selection, .. } => {
            let sel = read_selection(selection)?;
            let (panel, imputed) = load_dataset(&cfg)?;
            let p2 = run_phase2(&panel, &sel, &cfg)?;
            let report = PipelineReport {
                status: RunStatus::Complete,
                provenance: provenance(&cfg, &panel, imputed)?,
                phase1: None,
                phase2: Some(p2),
            };
            write_outputs(&report, &panel, &cfg.output_dir)?;
            print_summary(&report);
            Ok(())
        }
        Command::Fit { model } => {
            let (panel, _) = load_dataset(&cfg)?;
            let fit = fit_model(&panel, &ModelSpec::new(*model, panel.dependent(), &panel.candidate_predictors()))?;
            let mut buf = Vec::new();
            pipeline::write_coefficient_table(&fit, &mut buf)?;
            stdout_line(&String::from_utf8_lossy(&buf))
        }
        Command::Test { which } => {
            let (panel, _) = load_dataset(&cfg)?;
            let preds = panel.candidate_predictors();
            let fit = |k| fit_model(&panel, &ModelSpec::new(k, panel.dependent(), &preds));
            let result = match which {
                TestKind::Bp => breusch_pagan_panel(&fit(ModelKind::PooledOls)?, &panel, cfg.alpha)?,
                TestKind::Wald => wald_time_effects(&fit(ModelKind::RandomEffects)?, &fit(ModelKind::RandomEffectsTime)?, cfg.alpha)?,
                TestKind::Hausman => hausman(&fit(ModelKind::FixedEffects)?, &fit(ModelKind::RandomEffects)?, cfg.alpha)?,
            };
            stdout_line(&(serde_json::to_string_pretty(&result)? + "\n"))
        }
        Command::Forecast { country, features } => {
            let (panel, _) = load_dataset(&cfg)?;
            let selected = match features {
                Some(f) => f.clone(),
                None => {
                    let p1 = run_phase1(&panel, &cfg).map_err(|i| i.error)?;
                    p1.selection.expect("complete phase 1 has a selection").selected
                }
            };
            let periods = panel.periods();
            let last = periods[periods.len() - 1];
            let split = cfg.split_year.unwrap_or(last - cfg.forecast_horizon as i32);
            let sc = ScenarioConfig {
                split_year: split,
                horizon: cfg.forecast_horizon,
                search: cfg.sarimax.search(),
                options: cfg.sarimax.fit_options(),
            };
            let pair = forecast_entity(&panel, country, &selected, &panel.candidate_predictors(), &sc)?;
            stdout_line(&(serde_json::to_string_pretty(&pair)? + "\n"))
        }
        Command::Cluster { .. } => {
            let (panel, _) = load_dataset(&cfg)?;
            let names = panel.entities().to_vec();
            let series = standardized_series(&panel, panel.dependent())?;
            let opts = KClusterOptions {
                local_cost: cfg.clustering.local_cost,
                band: cfg.clustering.band,
                ..KClusterOptions::default()
            };
            let seed = if names.len() > 1 && cfg.k_clusters > 1 {
                Some(ward_cluster(&series, &names)?.cut(cfg.k_clusters)?)
            } else {
                None
            };
            let report = dtw_kcluster(&series, &names, cfg.k_clusters, seed.as_deref(), &opts)?;
            let mut out = String::from("country,cluster\n");
            for l in &report.labels {
                out.push_str(&format!("{},{}\n", l.entity, l.cluster));
            }
            stdout_line(&out)
        }
        Command::ValidateData => {
            let (panel, imputed) = load_dataset(&cfg)?;
            let (e, t, v) = panel.shape();
            let p = panel.periods();
            stdout_line(&format!(
                "{e} entities x {t} periods x {v} variables ({}-{}), {imputed} imputed cells\n",
                p[0],
                p[p.len() - 1]
            ))
        }
    }
}

fn read_selection(path: &Path) -> Result<SelectionReport, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read selection {}: {e}", path.display())))?;
    if let Ok(report) = serde_json::from_str::<PipelineReport>(&text) {
        return report
            .phase1
            .and_then(|p| p.selection)
            .ok_or_else(|| Error::Config(format!("{} contains no feature selection", path.display())));
    }
    serde_json::from_str::<SelectionReport>(&text).map_err(|e| Error::Config(format!("invalid selection file {}: {e}", path.display())))
}

fn print_summary(report: &PipelineReport) {
    if let Some(p1) = &report.phase1 {
        for step in &p1.decision_trace {
            println!("{:<28} p = {:<12.4e} -> {}", step.test, step.p_value, step.branch);
        }
        if let Some(sel) = &p1.selection {
            println!("final model {}; selected features: {}", p1.final_model.as_deref().unwrap_or("?"), sel.selected.join(", "));
        }
    }
    if let Some(p2) = &report.phase2 {
        println!(
            "forecasts: {} entities, selected features lower RMSE for {}; {} skipped",
            p2.forecasts.len(),
            p2.selected_improves,
            p2.forecast_failures.len()
        );
        for c in 0..p2.clusters.k {
            println!("cluster {c}: {}", p2.clusters.members(c).join(", "));
        }
    }
}
