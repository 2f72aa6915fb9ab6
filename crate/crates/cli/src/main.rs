#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use fastglt_cli::{analyze, run_experiment, run_suite, threads, ExperimentConfig, Precision, SuiteConfig};
use fastglt_core::graph::{convert_linqs, save_bundle, LinqsOptions};

#[derive(Parser)]
#[command(name = "fastglt", version, about = "Graph lottery tickets for a two-layer GCN")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a LINQS citation dataset into a bundle directory.
    Convert(ConvertArgs),
    /// Run one method.
    Run(RunArgs),
    /// Run several methods from one shared initialization.
    Suite(RunArgs),
    /// Build efficiency.csv from existing report files.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct ConvertArgs {
    /// `<name>.content`, optionally gzipped.
    #[arg(long)]
    content: PathBuf,
    /// `<name>.cites`, optionally gzipped.
    #[arg(long)]
    cites: PathBuf,
    #[arg(long, default_value = "cora")]
    name: String,
    /// Seed of the train/val/test split.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Drop citations naming unknown papers instead of failing.
    #[arg(long)]
    skip_unknown: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    precision: Option<Precision>,
    /// Override one config field, e.g. `--set s_g=0.3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl RunArgs {
    fn flag_overrides(&self) -> Vec<String> {
        let mut all = self.overrides.clone();
        if let Some(seed) = self.seed {
            all.push(format!("seed={seed}"));
        }
        if let Some(out) = &self.out {
            all.push(format!("out={}", serde_json::Value::String(out.display().to_string())));
        }
        if let Some(p) = self.precision {
            all.push(format!("precision={}", p.as_str()));
        }
        all
    }

    fn experiment(&self) -> Result<ExperimentConfig> {
        let base = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        base.apply_overrides(&self.flag_overrides())
    }

    fn suite(&self) -> Result<SuiteConfig> {
        let path = self.config.as_ref().context("suite needs --config <file>")?;
        let mut suite = SuiteConfig::load(path)?;
        suite.base = suite.base.apply_overrides(&self.flag_overrides())?;
        Ok(suite)
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    out: PathBuf,
    /// Report JSON files; one must come from a dense arm.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    threads()?;
    match cli.command {
        Command::Convert(a) => {
            let opts = LinqsOptions {
                name: a.name,
                split_seed: a.seed,
                skip_unknown: a.skip_unknown,
                ..Default::default()
            };
            let d = convert_linqs(&a.content, &a.cites, &opts).context("convert")?;
            save_bundle(&d, &a.out).context("convert")?;
            println!(
                "{}: {} nodes, {} edges, {} features, {} classes -> {}",
                d.name(),
                d.num_nodes(),
                d.num_edges(),
                d.num_features(),
                d.num_classes(),
                a.out.display()
            );
        }
        Command::Run(a) => {
            let cfg = a.experiment()?;
            let r = run_experiment(&cfg)?;
            println!(
                "{}: s_g={:.4} s_theta={:.4} retrained_test_acc={:.4} in_place_test_acc={:.4} -> {}",
                r.method,
                r.s_g,
                r.s_theta,
                r.retrained_test_acc,
                r.in_place_test_acc,
                cfg.out.display()
            );
        }
        Command::Suite(a) => {
            let suite = a.suite()?;
            let outcome = run_suite(&suite)?;
            for r in &outcome.reports {
                println!(
                    "{}: s_g={:.4} s_theta={:.4} retrained_test_acc={:.4} search_s={:.2}",
                    r.method, r.s_g, r.s_theta, r.retrained_test_acc, r.timing.search_seconds
                );
            }
            for e in &outcome.extreme {
                println!("extreme {}: s_g={:.2}", e.method, e.extreme_s_g);
            }
        }
        Command::Analyze(a) => {
            let rows = analyze(&a.reports, &a.out)?;
            for r in rows {
                println!("{}: relative_time={:.3}", r.method, r.relative_time);
            }
        }
    }
    Ok(())
}
