use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use fastglt_core::analysis::{
    distance_curve, init_gradient_magnitudes, pruned_set_stats, timing_report, write_csv,
    DistanceRow, EfficiencyRow, PrunedStats, RunInfo, TicketReport,
};
use fastglt_core::baselines::{
    oneshot_graph_masks, random_masks, run_dense, run_imp, run_imp_to_levels, run_oneshot_only,
    run_random, ImpConfig,
};
use fastglt_core::denoise::{run_fastglt, write_swap_records};
use fastglt_core::graph::{edge_degree_scores, generate_sbm, load_bundle};
use fastglt_core::masking::kept_count;
use fastglt_core::{Dataset, Mask, Method, Real, Session, TicketRun};

use crate::config::{ExperimentConfig, Precision, SuiteConfig, SweepConfig};

/// Kernel thread cap from `GLT_THREADS` (default 1).
pub fn threads() -> Result<usize> {
    match std::env::var("GLT_THREADS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .with_context(|| format!("GLT_THREADS={v:?} is not a positive integer"))?;
            if n == 0 {
                bail!("GLT_THREADS must be at least 1");
            }
            Ok(n)
        }
        Err(_) => Ok(1),
    }
}

pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    if cfg.dataset == "sbm" {
        Ok(generate_sbm(&cfg.sbm)?)
    } else {
        load_bundle(Path::new(&cfg.dataset)).with_context(|| format!("loading bundle {}", cfg.dataset))
    }
}

fn open_session<'d, T: Real>(cfg: &ExperimentConfig, dataset: &'d Dataset) -> Result<Session<'d, T>> {
    Ok(Session::new(
        dataset,
        cfg.hidden,
        cfg.seed,
        cfg.step_options(),
        cfg.train_epochs,
    )?)
}

/// Runs `cfg.method` at `(cfg.s_g, cfg.s_theta)` inside an existing session.
pub fn run_arm<T: Real>(session: &Session<'_, T>, cfg: &ExperimentConfig) -> Result<TicketRun> {
    let run = match cfg.method {
        Method::Dense => run_dense(session)?,
        Method::Fastglt => run_fastglt(session, &cfg.fastglt()?)?,
        Method::Imp => run_imp(session, &cfg.imp()?, cfg.s_g, cfg.s_theta)?,
        Method::Random => run_random(session, cfg.s_g, cfg.s_theta)?,
        Method::Oneshot => run_oneshot_only(session, cfg.oneshot_epochs, cfg.s_g, cfg.s_theta)?,
    };
    Ok(run)
}

fn report_for<T: Real>(
    session: &Session<'_, T>,
    cfg: &ExperimentConfig,
    run: &TicketRun,
) -> Result<TicketReport> {
    let info = RunInfo {
        dataset: session.dataset().name().to_string(),
        seed: cfg.seed,
        config_digest: cfg.digest(),
        precision: T::NAME.to_string(),
        threads: threads()?,
    };
    Ok(TicketReport::from_run(
        run,
        session.dataset().num_nodes(),
        session.shape(),
        info,
    )?)
}

/// Writes the report, final masks, swap records and IMP round masks of one arm.
fn write_arm(dir: &Path, prefix: &str, run: &TicketRun, report: &TicketReport) -> Result<()> {
    report.write(&dir.join(format!("{prefix}report.json")))?;
    run.masks.graph.write(&dir.join(format!("{prefix}graph.gltm")))?;
    run.masks.weights.write(&dir.join(format!("{prefix}weights.gltm")))?;
    if run.method == Method::Fastglt {
        write_swap_records(&dir.join(format!("{prefix}swaps.jsonl")), &run.swaps)?;
    }
    if run.method == Method::Imp {
        for (k, m) in run.mask_history.iter().enumerate() {
            m.graph.write(&dir.join(format!("{prefix}round{:02}_graph.gltm", k + 1)))?;
            m.weights.write(&dir.join(format!("{prefix}round{:02}_weights.gltm", k + 1)))?;
        }
    }
    Ok(())
}

fn flag_failure(dir: &Path, err: &anyhow::Error) {
    let _ = fs::write(dir.join("FAILED"), format!("{err:#}\n"));
}

/// Single-method run: validates, trains and writes every artifact under `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<TicketReport> {
    cfg.validate().context("invalid configuration")?;
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let result = match cfg.precision {
        Precision::F32 => run_experiment_as::<f32>(cfg),
        Precision::F64 => run_experiment_as::<f64>(cfg),
    };
    if let Err(e) = &result {
        flag_failure(&cfg.out, e);
    }
    result
}

fn run_experiment_as<T: Real>(cfg: &ExperimentConfig) -> Result<TicketReport> {
    let dataset = load_dataset(cfg)?;
    let session = open_session::<T>(cfg, &dataset)?;
    let run = run_arm(&session, cfg).with_context(|| format!("{} arm", cfg.method))?;
    let report = report_for(&session, cfg, &run)?;
    fs::write(cfg.out.join("config.json"), serde_json::to_string_pretty(cfg)? + "\n")?;
    write_arm(&cfg.out, "", &run, &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: Method,
    pub s_g: f64,
    pub s_theta: f64,
    pub retrained_test_acc: f64,
    pub dense_test_acc: f64,
    pub winning: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremeRow {
    pub method: Method,
    /// Highest graph sparsity that still gave a winning ticket, 0 if none did.
    pub extreme_s_g: f64,
}

#[derive(Debug, Default)]
pub struct SuiteOutcome {
    pub reports: Vec<TicketReport>,
    pub efficiency: Vec<EfficiencyRow>,
    pub distances: Vec<DistanceRow>,
    pub pruned: Vec<PrunedStats>,
    pub sweep: Vec<SweepRow>,
    pub extreme: Vec<ExtremeRow>,
}

/// Runs every arm of a suite from one shared Θ₀ and emits the comparison files.
pub fn run_suite(suite: &SuiteConfig) -> Result<SuiteOutcome> {
    suite.validate().context("invalid suite")?;
    let out = &suite.base.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let result = match suite.base.precision {
        Precision::F32 => run_suite_as::<f32>(suite),
        Precision::F64 => run_suite_as::<f64>(suite),
    };
    if let Err(e) = &result {
        flag_failure(out, e);
    }
    result
}

fn run_suite_as<T: Real>(suite: &SuiteConfig) -> Result<SuiteOutcome> {
    let base = &suite.base;
    let out = &base.out;
    let dataset = load_dataset(base)?;
    let session = open_session::<T>(base, &dataset)?;
    fs::write(out.join("suite.json"), serde_json::to_string_pretty(suite)? + "\n")?;
    let mut outcome = SuiteOutcome::default();

    let mut runs = Vec::new();
    for &method in &suite.arms {
        let cfg = ExperimentConfig {
            method,
            ..base.clone()
        };
        eprintln!("[suite] {method} arm at s_g={} s_theta={}", cfg.s_g, cfg.s_theta);
        let run = run_arm(&session, &cfg).with_context(|| format!("{method} arm"))?;
        let report = report_for(&session, &cfg, &run)?;
        write_arm(out, &format!("{method}_"), &run, &report)?;
        outcome.reports.push(report);
        runs.push(run);
    }

    if suite.arms.contains(&Method::Dense) {
        outcome.efficiency = timing_report(&mut outcome.reports)?;
        for r in &outcome.reports {
            r.write(&out.join(format!("{}_report.json", r.method)))?;
        }
        write_csv(&out.join("efficiency.csv"), &outcome.efficiency)?;
    }

    let find = |m: Method| runs.iter().find(|r| r.method == m);
    if let (Some(imp), Some(oneshot)) = (find(Method::Imp), find(Method::Oneshot)) {
        let grads = init_gradient_magnitudes(&session)?;
        let degrees = edge_degree_scores(&dataset, &Mask::ones(dataset.num_edges()))?;
        outcome.pruned = pruned_set_stats(
            &[("imp", &imp.masks), ("oneshot", &oneshot.masks)],
            &grads,
            &degrees,
        )?;
        write_csv(&out.join("fig2_right.csv"), &outcome.pruned)?;
    }

    if !suite.distance_levels.is_empty() {
        eprintln!("[suite] mask distances at {:?}", suite.distance_levels);
        outcome.distances = distance_figure(&session, base, &suite.distance_levels)?;
        write_csv(&out.join("fig2_left.csv"), &outcome.distances)?;
    }

    if let Some(sweep) = &suite.sweep {
        let seeds = sweep_seeds(sweep, base);
        let sessions = seeds
            .iter()
            .map(|&seed| open_session::<T>(&ExperimentConfig { seed, ..base.clone() }, &dataset))
            .collect::<Result<Vec<_>>>()?;
        let reused = outcome
            .reports
            .iter()
            .find(|r| r.method == Method::Dense)
            .filter(|_| seeds == [base.seed]);
        let dense_acc = match reused {
            Some(r) => r.retrained_test_acc,
            None => mean_dense_accuracy(&sessions)?,
        };
        let (rows, extreme) = extreme_sweep(&sessions, base, sweep, dense_acc, &out.join("sweep"))?;
        write_csv(&out.join("sweep.csv"), &rows)?;
        write_csv(&out.join("extreme.csv"), &extreme)?;
        outcome.sweep = rows;
        outcome.extreme = extreme;
    }
    Ok(outcome)
}

/// Hamming distance of one-shot and random graph masks to IMP graph masks
/// at matched graph sparsities, all weights kept.
pub fn distance_figure<T: Real>(
    session: &Session<'_, T>,
    base: &ExperimentConfig,
    levels: &[f64],
) -> Result<Vec<DistanceRow>> {
    let num_edges = session.dataset().num_edges();
    let num_weights = session.shape().num_weights();
    let imp = run_imp_to_levels(session, &ImpConfig::new(base.imp_p_g, 0.0)?, levels, &[])?;
    let mut reference = Vec::new();
    for &s in levels {
        let want = kept_count(num_edges, s);
        let mask = imp
            .mask_history
            .iter()
            .find(|m| m.graph.count_ones() == want)
            .with_context(|| format!("imp never landed on graph sparsity {s}"))?;
        reference.push((s, mask.graph.clone()));
    }
    let oneshot = oneshot_graph_masks(session, base.oneshot_epochs, levels)?;
    let random = levels
        .iter()
        .map(|&s| Ok((s, random_masks(num_edges, num_weights, s, 0.0, base.seed)?.graph)))
        .collect::<Result<Vec<_>>>()?;
    Ok(distance_curve(&reference, &[("oneshot", oneshot), ("random", random)])?)
}

fn level(start: f64, step: f64, k: usize) -> f64 {
    ((start + step * k as f64) * 1e9).round() / 1e9
}

fn sweep_seeds(sweep: &SweepConfig, base: &ExperimentConfig) -> Vec<u64> {
    if sweep.seeds.is_empty() {
        vec![base.seed]
    } else {
        sweep.seeds.clone()
    }
}

/// Retrained dense test accuracy averaged over sessions.
pub fn mean_dense_accuracy<T: Real>(sessions: &[Session<'_, T>]) -> Result<f64> {
    let mut total = 0.0;
    for s in sessions {
        total += run_dense(s)?.verification.test_acc;
    }
    Ok(total / sessions.len() as f64)
}

/// Climbs graph sparsity per method until the first non-winning ticket.
/// Each level's accuracy is the mean over `sessions`, one per seed.
pub fn extreme_sweep<T: Real>(
    sessions: &[Session<'_, T>],
    base: &ExperimentConfig,
    sweep: &SweepConfig,
    dense_acc: f64,
    dir: &Path,
) -> Result<(Vec<SweepRow>, Vec<ExtremeRow>)> {
    if sessions.is_empty() {
        bail!("sweep needs at least one seed");
    }
    fs::create_dir_all(dir)?;
    let mut rows = Vec::new();
    let mut extreme = Vec::new();
    for &method in &sweep.methods {
        let mut best = 0.0;
        for k in 0.. {
            let s_g = level(sweep.start, sweep.step, k);
            if s_g > sweep.max + 1e-9 {
                break;
            }
            let mut accs = Vec::with_capacity(sessions.len());
            for session in sessions {
                let cfg = ExperimentConfig {
                    method,
                    s_g,
                    seed: session.seed(),
                    ..base.clone()
                };
                cfg.validate()?;
                let run = run_arm(session, &cfg).with_context(|| format!("{method} sweep at s_g={s_g}"))?;
                let report = report_for(session, &cfg, &run)?;
                report.write(&dir.join(format!(
                    "{method}_sg{:03}_seed{}_report.json",
                    (s_g * 100.0).round(),
                    cfg.seed
                )))?;
                accs.push(report.retrained_test_acc);
            }
            let acc = accs.iter().sum::<f64>() / accs.len() as f64;
            let winning = acc >= dense_acc - sweep.tolerance;
            eprintln!(
                "[sweep] {method} s_g={s_g:.2}: {acc:.4} vs dense {dense_acc:.4} -> {}",
                if winning { "winning" } else { "stop" }
            );
            rows.push(SweepRow {
                method,
                s_g,
                s_theta: base.s_theta,
                retrained_test_acc: acc,
                dense_test_acc: dense_acc,
                winning,
            });
            if !winning {
                break;
            }
            best = s_g;
        }
        extreme.push(ExtremeRow {
            method,
            extreme_s_g: best,
        });
    }
    Ok((rows, extreme))
}

/// Post-hoc efficiency table from report files.
pub fn analyze(reports: &[std::path::PathBuf], out: &Path) -> Result<Vec<EfficiencyRow>> {
    let mut loaded = reports
        .iter()
        .map(|p| TicketReport::read(p).with_context(|| format!("reading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(out)?;
    let rows = timing_report(&mut loaded)?;
    write_csv(&out.join("efficiency.csv"), &rows)?;
    Ok(rows)
}
