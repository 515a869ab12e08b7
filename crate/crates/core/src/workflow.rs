//! End-to-end commands behind the `lfc` binary. Each writes its artifacts into an output
//! directory and returns what it wrote, so the same flows can be driven from tests.

use std::path::{Component, Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controllers::ActiveController;
use crate::error::{Error, Result};
use crate::io::{fmt_f64, from_toml, read_file, sha256_hex, to_toml, write_file};
use crate::metrics::{
    compute_metrics, metrics_csv_row, metrics_report, RunMetrics, METRICS_CSV_HEADER,
};
use crate::narma::{
    generate_excitation, history_csv, identification_report, save_weights, train_lm, IdDataset,
    IdentificationReport, NarmaL2Net, Segment,
};
use crate::optimizer::{
    benchmarks, convergence_csv, tune_pid, woa_run, TuneResult, WoaConfig, WoaVariant,
};
use crate::scenario::{ControllerKind, GainsFile, Scenario};
use crate::simulation::{simulate, RunOptions, Trace};

pub const TOOL_VERSION: &str = concat!("lfc ", env!("CARGO_PKG_VERSION"));

pub const TRACE_FILE: &str = "trace.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const REPORT_FILE: &str = "metrics.txt";
pub const RECORD_FILE: &str = "run.toml";

/// Command-line values that take precedence over the scenario file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub controller: Option<ControllerKind>,
}

pub fn load_scenario(path: &Path, overrides: &Overrides) -> Result<Scenario> {
    let mut s = Scenario::load(path)?;
    if let Some(seed) = overrides.seed {
        s.seed = seed;
    }
    if let Some(kind) = overrides.controller {
        s.controller = kind;
    }
    s.validate()?;
    Ok(s)
}

/// Simulates `kind` on the scenario and scores the run.
pub fn run_controller(scenario: &Scenario, kind: ControllerKind) -> Result<(Trace, RunMetrics)> {
    let controller = scenario.controller_for(kind)?;
    run_with(scenario, controller)
}

fn run_with(scenario: &Scenario, mut controller: ActiveController) -> Result<(Trace, RunMetrics)> {
    let model = scenario.model()?;
    let trace = simulate(
        &model,
        &scenario.disturbances(),
        &mut controller,
        RunOptions::guarded(scenario.duration),
    )?;
    let metrics = compute_metrics(&trace, scenario.metrics.band, scenario.window())?;
    Ok((trace, metrics))
}

/// Everything needed to reproduce one simulation, stored next to its trace.
///
/// Paths are relative to the directory holding the record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub tool_version: String,
    pub seed: u64,
    pub controller: ControllerKind,
    pub trace_csv: PathBuf,
    pub trace_sha256: String,
    pub metrics_csv: PathBuf,
    pub gains_file: Option<PathBuf>,
    pub weights_file: Option<PathBuf>,
    pub metrics: RunMetrics,
    pub scenario: Scenario,
}

impl RunRecord {
    pub fn load(path: &Path) -> Result<Self> {
        let mut r: RunRecord = from_toml(&read_file(path)?, path)?;
        r.scenario.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(r)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &to_toml(self, path)?)
    }
}

fn absolute(p: &Path) -> Result<PathBuf> {
    let abs = std::path::absolute(p).map_err(|e| Error::io(p, e))?;
    let mut out = PathBuf::new();
    for c in abs.components() {
        match c {
            Component::ParentDir => {
                out.pop();
            }
            Component::CurDir => {}
            other => out.push(other),
        }
    }
    Ok(out)
}

/// `target` expressed relative to the directory `base`, purely lexically.
pub fn relative_path(target: &Path, base: &Path) -> Result<PathBuf> {
    let target = absolute(target)?;
    let base = absolute(base)?;
    let t: Vec<_> = target.components().collect();
    let b: Vec<_> = base.components().collect();
    let common = t.iter().zip(&b).take_while(|(x, y)| x == y).count();
    let mut rel = PathBuf::new();
    for _ in common..b.len() {
        rel.push("..");
    }
    for c in &t[common..] {
        rel.push(c);
    }
    Ok(rel)
}

/// Copy of `scenario` whose file references resolve from `dir` instead.
fn rebased(scenario: &Scenario, dir: &Path) -> Result<Scenario> {
    let mut s = scenario.clone();
    let rebase = |p: &mut Option<PathBuf>| -> Result<()> {
        if let Some(path) = p.as_mut() {
            *path = relative_path(&scenario.resolve(path), dir)?;
        }
        Ok(())
    };
    rebase(&mut s.mwoa_pid.gains_file)?;
    rebase(&mut s.woa_pid.gains_file)?;
    rebase(&mut s.narma.weights_file)?;
    s.base_dir = dir.to_path_buf();
    Ok(s)
}

fn referenced_file(
    scenario: &Scenario,
    kind: ControllerKind,
) -> Result<(Option<PathBuf>, Option<PathBuf>)> {
    Ok(match kind {
        ControllerKind::MwoaPid | ControllerKind::WoaPid => {
            (Some(scenario.gains_path(kind)?), None)
        }
        ControllerKind::Narma => (None, Some(scenario.weights_path()?)),
        _ => (None, None),
    })
}

/// Runs the scenario's controller and writes trace, metrics and a [`RunRecord`] into `out`.
pub fn cmd_simulate(scenario_path: &Path, out: &Path, overrides: &Overrides) -> Result<RunRecord> {
    let scenario = load_scenario(scenario_path, overrides)?;
    let kind = scenario.controller;
    let (trace, metrics) = run_controller(&scenario, kind)?;
    let csv = trace.to_csv();
    write_file(&out.join(TRACE_FILE), &csv)?;
    let label = kind.name().to_string();
    write_file(
        &out.join(METRICS_FILE),
        &format!(
            "{METRICS_CSV_HEADER}\n{}\n",
            metrics_csv_row(&label, &metrics)
        ),
    )?;
    write_file(&out.join(REPORT_FILE), &metrics_report(&[(label, metrics)]))?;

    let snapshot = rebased(&scenario, out)?;
    let (gains, weights) = referenced_file(&snapshot, kind)?;
    let record = RunRecord {
        tool_version: TOOL_VERSION.into(),
        seed: scenario.seed,
        controller: kind,
        trace_csv: TRACE_FILE.into(),
        trace_sha256: sha256_hex(csv.as_bytes()),
        metrics_csv: METRICS_FILE.into(),
        gains_file: gains.map(|p| relative_path(&p, out)).transpose()?,
        weights_file: weights.map(|p| relative_path(&p, out)).transpose()?,
        metrics,
        scenario: snapshot,
    };
    record.save(&out.join(RECORD_FILE))?;
    Ok(record)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub trace_path: PathBuf,
    pub recorded_sha256: String,
    pub replayed_sha256: String,
    /// The replayed CSV equals the stored file byte for byte.
    pub identical: bool,
}

/// Re-runs a recorded simulation and compares the trace with the stored one.
pub fn cmd_replay(record_path: &Path) -> Result<ReplayReport> {
    let record = RunRecord::load(record_path)?;
    let mut scenario = record.scenario.clone();
    scenario.seed = record.seed;
    scenario.controller = record.controller;
    scenario.validate()?;
    let (trace, _) = run_controller(&scenario, record.controller)?;
    let csv = trace.to_csv();
    let trace_path = scenario.resolve(&record.trace_csv);
    let stored = std::fs::read(&trace_path).map_err(|e| Error::io(&trace_path, e))?;
    let replayed_sha256 = sha256_hex(csv.as_bytes());
    Ok(ReplayReport {
        identical: stored == csv.as_bytes() && replayed_sha256 == record.trace_sha256,
        trace_path,
        recorded_sha256: record.trace_sha256,
        replayed_sha256,
    })
}

/// File-name stem for a tuned controller's artifacts.
pub fn tuned_prefix(kind: ControllerKind) -> &'static str {
    match kind {
        ControllerKind::WoaPid => "woa",
        _ => "mwoa",
    }
}

/// Searches PID gains for the scenario; writes `<prefix>_gains.toml` and `<prefix>_convergence.csv`.
pub fn cmd_tune(scenario_path: &Path, out: &Path, overrides: &Overrides) -> Result<TuneResult> {
    let scenario = load_scenario(scenario_path, overrides)?;
    let kind = scenario.controller;
    let (Some(variant), Some(settings)) = (kind.woa_variant(), scenario.tuned_settings(kind))
    else {
        return Err(Error::Validation(vec![format!(
            "controller: tuning needs `mwoa-pid` or `woa-pid`, got `{}`",
            kind.name()
        )]));
    };
    let cfg = settings.woa_config(variant, scenario.seed);
    let result = tune_pid(&scenario.tuning_problem()?, &cfg)?;
    let prefix = tuned_prefix(kind);
    let mut search = settings.clone();
    search.gains_file = None;
    GainsFile {
        kp: result.gains.kp,
        ki: result.gains.ki,
        kd: result.gains.kd,
        variant,
        seed: scenario.seed,
        index: scenario.metrics.index,
        best_fitness: result.best_fitness,
        scenario: scenario.name.clone(),
        search,
    }
    .save(&out.join(format!("{prefix}_gains.toml")))?;
    write_file(
        &out.join(format!("{prefix}_convergence.csv")),
        &convergence_csv(&result.convergence_curve),
    )?;
    Ok(result)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: NarmaL2Net,
    pub report: IdentificationReport,
    pub epochs: usize,
    pub dataset: IdDataset,
}

fn prediction_csv(net: &NarmaL2Net, data: &IdDataset) -> String {
    let mut s = String::from("k,t,segment,y_next,y_pred\n");
    for (seg, label) in [
        (Segment::Train, "train"),
        (Segment::Validation, "val"),
        (Segment::Test, "test"),
    ] {
        let set = data.regression(seg, net.n_delays_y, net.n_delays_u);
        for i in 0..set.len() {
            let k = set.index[i];
            let pred = crate::narma::narma_predict(net, &set.x[i], set.u[i]);
            s.push_str(&format!(
                "{k},{},{label},{},{}\n",
                fmt_f64((k + 1) as f64 * data.h),
                fmt_f64(set.y_next[i]),
                fmt_f64(pred)
            ));
        }
    }
    s
}

/// Identifies the plant and trains the NARMA-L2 networks; writes weights, training history,
/// the identification report and per-sample one-step predictions.
pub fn cmd_train(scenario_path: &Path, out: &Path, overrides: &Overrides) -> Result<TrainOutcome> {
    let scenario = load_scenario(scenario_path, overrides)?;
    let cfg = scenario.narma_config();
    let data = generate_excitation(&scenario.model()?, &cfg)?;
    let (net, history) = train_lm(&NarmaL2Net::init(&cfg), &data, &cfg)?;
    let report = identification_report(&net, &data);
    save_weights(&net, &out.join("narma_weights.txt"))?;
    write_file(&out.join("narma_history.csv"), &history_csv(&history))?;
    write_file(&out.join("narma_identification.txt"), &report.to_text())?;
    write_file(
        &out.join("narma_prediction.csv"),
        &prediction_csv(&net, &data),
    )?;
    Ok(TrainOutcome {
        net,
        report,
        epochs: history.len() - 1,
        dataset: data,
    })
}

/// Distinct labels for a controller list; repeats get a numeric suffix.
pub fn compare_labels(kinds: &[ControllerKind]) -> Vec<String> {
    kinds
        .iter()
        .enumerate()
        .map(|(i, k)| {
            let n = kinds[..i].iter().filter(|x| *x == k).count();
            if n == 0 {
                k.name().to_string()
            } else {
                format!("{}_{}", k.name(), n + 1)
            }
        })
        .collect()
}

pub const DEFAULT_COMPARE: [ControllerKind; 3] = [
    ControllerKind::Pid,
    ControllerKind::MwoaPid,
    ControllerKind::Narma,
];

/// Runs several controllers on one scenario. Writes `compare_trace.csv` (time, load, then
/// Δf and u per controller), `metrics.csv` and `metrics.txt`.
pub fn cmd_compare(
    scenario_path: &Path,
    out: &Path,
    kinds: &[ControllerKind],
    overrides: &Overrides,
) -> Result<Vec<(String, RunMetrics)>> {
    let scenario = load_scenario(scenario_path, overrides)?;
    let kinds = if kinds.is_empty() {
        &DEFAULT_COMPARE[..]
    } else {
        kinds
    };
    let labels = compare_labels(kinds);
    let controllers = kinds
        .iter()
        .map(|&k| scenario.controller_for(k))
        .collect::<Result<Vec<_>>>()?;
    let runs = controllers
        .into_par_iter()
        .map(|c| run_with(&scenario, c))
        .collect::<Result<Vec<_>>>()?;

    let mut csv = String::from("t,load");
    for l in &labels {
        csv.push_str(&format!(",delta_f_{l},u_{l}"));
    }
    csv.push('\n');
    let first = &runs[0].0;
    for k in 0..first.len() {
        csv.push_str(&fmt_f64(first.t[k]));
        csv.push(',');
        csv.push_str(&fmt_f64(first.load[k]));
        for (trace, _) in &runs {
            csv.push(',');
            csv.push_str(&fmt_f64(trace.delta_f[k]));
            csv.push(',');
            csv.push_str(&fmt_f64(trace.u[k]));
        }
        csv.push('\n');
    }
    write_file(&out.join("compare_trace.csv"), &csv)?;

    let rows: Vec<(String, RunMetrics)> = labels
        .into_iter()
        .zip(runs.into_iter().map(|(_, m)| m))
        .collect();
    let mut table = format!("{METRICS_CSV_HEADER}\n");
    for (l, m) in &rows {
        table.push_str(&metrics_csv_row(l, m));
        table.push('\n');
    }
    write_file(&out.join(METRICS_FILE), &table)?;
    write_file(&out.join(REPORT_FILE), &metrics_report(&rows))?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub function: String,
    pub dim: usize,
    pub agents: usize,
    pub max_iter: usize,
    pub b_spiral: f64,
    pub cf1: f64,
    pub cf2: f64,
    pub seeds: Vec<u64>,
}

impl BenchConfig {
    pub fn new(function: &str, seeds: Vec<u64>) -> Self {
        Self {
            function: function.into(),
            dim: 5,
            agents: 30,
            max_iter: 500,
            b_spiral: 1.0,
            cf1: 2.0,
            cf2: 2.0,
            seeds,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRun {
    pub variant: WoaVariant,
    pub seed: u64,
    pub initial_best: f64,
    pub final_fitness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchSummary {
    pub variant: WoaVariant,
    pub runs: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub median_initial: f64,
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

fn variant_name(v: WoaVariant) -> &'static str {
    match v {
        WoaVariant::Canonical => "woa",
        WoaVariant::Modified => "mwoa",
    }
}

/// Runs both search variants on a benchmark function for every seed; writes
/// `bench_<function>.csv` (one row per run) and `bench_<function>_summary.csv`.
pub fn cmd_bench_optimizer(
    cfg: &BenchConfig,
    out: &Path,
) -> Result<(Vec<BenchRun>, Vec<BenchSummary>)> {
    let Some((f, bound)) = benchmarks::by_name(&cfg.function) else {
        return Err(Error::Validation(vec![format!(
            "function: unknown `{}`, expected one of {}",
            cfg.function,
            benchmarks::NAMES.join(", ")
        )]));
    };
    if cfg.seeds.is_empty() {
        return Err(Error::Validation(vec!["seeds: need at least one".into()]));
    }
    let jobs: Vec<(WoaVariant, u64)> = [WoaVariant::Canonical, WoaVariant::Modified]
        .into_iter()
        .flat_map(|v| cfg.seeds.iter().map(move |&s| (v, s)))
        .collect();
    let runs = jobs
        .into_par_iter()
        .map(|(variant, seed)| {
            let woa = WoaConfig {
                variant,
                agents: cfg.agents,
                max_iter: cfg.max_iter,
                bounds: vec![[-bound, bound]; cfg.dim],
                b_spiral: cfg.b_spiral,
                cf1: cfg.cf1,
                cf2: cfg.cf2,
                seed,
            };
            woa_run(&woa, &f).map(|o| BenchRun {
                variant,
                seed,
                initial_best: o.convergence_curve[0],
                final_fitness: o.best_fitness,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut csv = String::from("function,variant,seed,initial_best,final_fitness\n");
    for r in &runs {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            cfg.function,
            variant_name(r.variant),
            r.seed,
            fmt_f64(r.initial_best),
            fmt_f64(r.final_fitness)
        ));
    }
    write_file(&out.join(format!("bench_{}.csv", cfg.function)), &csv)?;

    let summaries: Vec<BenchSummary> = [WoaVariant::Canonical, WoaVariant::Modified]
        .into_iter()
        .map(|variant| {
            let fin: Vec<f64> = runs
                .iter()
                .filter(|r| r.variant == variant)
                .map(|r| r.final_fitness)
                .collect();
            let init: Vec<f64> = runs
                .iter()
                .filter(|r| r.variant == variant)
                .map(|r| r.initial_best)
                .collect();
            BenchSummary {
                variant,
                runs: fin.len(),
                median: quantile(&fin, 0.5),
                q1: quantile(&fin, 0.25),
                q3: quantile(&fin, 0.75),
                median_initial: quantile(&init, 0.5),
            }
        })
        .collect();
    let mut summary = String::from("function,variant,runs,median,q1,q3,iqr,median_initial_best\n");
    for s in &summaries {
        summary.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            cfg.function,
            variant_name(s.variant),
            s.runs,
            fmt_f64(s.median),
            fmt_f64(s.q1),
            fmt_f64(s.q3),
            fmt_f64(s.q3 - s.q1),
            fmt_f64(s.median_initial)
        ));
    }
    write_file(
        &out.join(format!("bench_{}_summary.csv", cfg.function)),
        &summary,
    )?;
    Ok((runs, summaries))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths() {
        assert_eq!(
            relative_path(Path::new("/a/b/c.txt"), Path::new("/a/d/e")).unwrap(),
            Path::new("../../b/c.txt")
        );
        assert_eq!(
            relative_path(Path::new("/a/x/../b"), Path::new("/a")).unwrap(),
            Path::new("b")
        );
    }

    #[test]
    fn labels_disambiguate_repeats() {
        use ControllerKind::*;
        assert_eq!(
            compare_labels(&[Pid, Narma, Pid, Pid]),
            ["pid", "narma", "pid_2", "pid_3"]
        );
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [4.0, 1.0, 3.0, 2.0, 5.0];
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert_eq!(quantile(&v, 0.25), 2.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.5), 1.5);
    }
}
