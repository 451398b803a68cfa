//! Monte-Carlo experiment drivers.
//!
//! Every trial draws its link once from `(master_seed, trial)` and reuses it
//! for all sweep points and all schemes, so comparisons are paired.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{PortSelection, Scenario};
use crate::metrics::McEstimate;
use crate::portopt::random_selection;
use crate::rng::{substream, Purpose};

use super::altopt::{run_baseline_fpa, run_baseline_random_with, run_proposed, AltOptions, Link, SchemeOutcome};
use super::config::{ExperimentKind, ExperimentSpec, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Proposed,
    Random,
    Fpa,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Proposed, Scheme::Random, Scheme::Fpa];

    pub fn label(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Random => "random",
            Scheme::Fpa => "fpa",
        }
    }
}

/// One row of `<experiment>_trials.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub scheme: Scheme,
    pub sweep_name: String,
    pub sweep_value: f64,
    pub trial: u64,
    pub ee: f64,
    pub rate: f64,
    pub iterations: usize,
    pub seed: u64,
    pub power: f64,
    /// Hex fingerprint of the trial's path sets; equal across schemes.
    pub path_hash: String,
}

/// One row of `<experiment>_summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub scheme: Scheme,
    pub sweep_name: String,
    pub sweep_value: f64,
    pub snr_db: f64,
    pub m_active: usize,
    pub trials: usize,
    pub ee_mean: f64,
    pub ee_std_error: f64,
    pub rate_mean: f64,
    pub rate_std_error: f64,
    pub power_mean: f64,
    pub master_seed: u64,
}

/// Mean outer-iteration `η` for the convergence experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRow {
    pub sweep_name: String,
    pub sweep_value: f64,
    pub iteration: usize,
    pub eta_mean: f64,
    pub eta_std_error: f64,
    pub trials: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub kind: ExperimentKind,
    pub spec: ExperimentSpec,
    pub records: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
    pub iterations: Vec<IterationRow>,
}

impl ExperimentResult {
    pub fn name(&self) -> &'static str {
        self.kind.label()
    }

    /// Records of one scheme at one sweep value, in trial order.
    pub fn column(&self, scheme: Scheme, sweep_value: f64) -> Vec<&TrialRecord> {
        self.records.iter().filter(|r| r.scheme == scheme && r.sweep_value == sweep_value).collect()
    }

    pub fn summary_for(&self, scheme: Scheme, sweep_value: f64) -> Option<&SummaryRow> {
        self.summary.iter().find(|s| s.scheme == scheme && s.sweep_value == sweep_value)
    }
}

/// Scenario at one sweep point.
pub fn scenario_at(base: &Scenario, kind: ExperimentKind, value: f64) -> Scenario {
    match kind {
        ExperimentKind::Convergence | ExperimentKind::VsSnr => base.clone().with_snr_db(value),
        ExperimentKind::VsPorts => Scenario { m_active: value as usize, ..base.clone() },
    }
}

struct TrialOutput {
    records: Vec<TrialRecord>,
    /// Per sweep value, the proposed scheme's `η` trajectory.
    trajectories: Vec<Vec<f64>>,
}

fn record(
    scheme: Scheme,
    spec: &ExperimentSpec,
    value: f64,
    trial: u64,
    seed: u64,
    hash: &str,
    out: &SchemeOutcome,
) -> TrialRecord {
    TrialRecord {
        scheme,
        sweep_name: spec.sweep.clone(),
        sweep_value: value,
        trial,
        ee: out.eta,
        rate: out.rate,
        iterations: out.iterations,
        seed,
        power: out.power,
        path_hash: hash.to_string(),
    }
}

fn initial_selection(seed: u64, trial: u64, scenario: &Scenario) -> PortSelection {
    random_selection(&mut substream(seed, trial, Purpose::RandomPorts), scenario)
}

fn run_trial(cfg: &RunConfig, spec: &ExperimentSpec, trial: u64) -> Result<TrialOutput> {
    let seed = cfg.master_seed;
    let opts = AltOptions::from(&cfg.solver);
    let link = Link::sample(seed, trial, &cfg.scenario, &cfg.channel)?;
    let hash = format!("{:016x}", link.path_hash());
    let mut records = Vec::new();
    let mut trajectories = Vec::new();

    // FPA does not depend on m0; solve it once per trial for the port sweep.
    let fpa_fixed = match spec.name {
        ExperimentKind::VsPorts => Some(run_baseline_fpa(&link, &cfg.scenario, opts.dinkelbach_max_iter)?),
        _ => None,
    };

    for &value in &spec.values {
        let sc = scenario_at(&cfg.scenario, spec.name, value);
        let init = initial_selection(seed, trial, &sc);
        let (proposed, report) = run_proposed(&link, &sc, &init, &opts)?;
        records.push(record(Scheme::Proposed, spec, value, trial, seed, &hash, &proposed));
        trajectories.push(report.eta_per_iteration);
        if spec.name == ExperimentKind::Convergence {
            continue;
        }
        let random = run_baseline_random_with(&link, &sc, &init, opts.dinkelbach_max_iter)?;
        records.push(record(Scheme::Random, spec, value, trial, seed, &hash, &random));
        let fpa = match &fpa_fixed {
            Some(f) => f.clone(),
            None => run_baseline_fpa(&link, &sc, opts.dinkelbach_max_iter)?,
        };
        records.push(record(Scheme::Fpa, spec, value, trial, seed, &hash, &fpa));
    }
    Ok(TrialOutput { records, trajectories })
}

fn summarize(cfg: &RunConfig, spec: &ExperimentSpec, records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for &value in &spec.values {
        let sc = scenario_at(&cfg.scenario, spec.name, value);
        for scheme in Scheme::ALL {
            let col: Vec<&TrialRecord> =
                records.iter().filter(|r| r.scheme == scheme && r.sweep_value == value).collect();
            if col.is_empty() {
                continue;
            }
            let ee = McEstimate::from_samples(&col.iter().map(|r| r.ee).collect::<Vec<_>>());
            let rate = McEstimate::from_samples(&col.iter().map(|r| r.rate).collect::<Vec<_>>());
            let power = col.iter().map(|r| r.power).sum::<f64>() / col.len() as f64;
            rows.push(SummaryRow {
                experiment: spec.name.label().to_string(),
                scheme,
                sweep_name: spec.sweep.clone(),
                sweep_value: value,
                snr_db: sc.snr_db(),
                m_active: if scheme == Scheme::Fpa { 2 } else { sc.m_active },
                trials: col.len(),
                ee_mean: ee.mean,
                ee_std_error: ee.std_error,
                rate_mean: rate.mean,
                rate_std_error: rate.std_error,
                power_mean: power,
                master_seed: cfg.master_seed,
            });
        }
    }
    rows
}

/// Mean trajectory with early finishers held at their final value.
fn mean_trajectories(spec: &ExperimentSpec, per_trial: &[Vec<Vec<f64>>]) -> Vec<IterationRow> {
    let mut rows = Vec::new();
    for (k, &value) in spec.values.iter().enumerate() {
        let runs: Vec<&Vec<f64>> = per_trial.iter().map(|t| &t[k]).collect();
        let len = runs.iter().map(|r| r.len()).max().unwrap_or(0);
        for it in 0..len {
            let xs: Vec<f64> = runs.iter().map(|r| r[it.min(r.len() - 1)]).collect();
            let est = McEstimate::from_samples(&xs);
            rows.push(IterationRow {
                sweep_name: spec.sweep.clone(),
                sweep_value: value,
                iteration: it,
                eta_mean: est.mean,
                eta_std_error: est.std_error,
                trials: xs.len(),
            });
        }
    }
    rows
}

/// Runs one experiment. Trials execute on the current rayon pool and are
/// gathered in trial order.
pub fn run_experiment(cfg: &RunConfig, spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let outputs: Vec<TrialOutput> =
        (0..spec.trials as u64).into_par_iter().map(|t| run_trial(cfg, spec, t)).collect::<Result<_>>()?;
    let mut records = Vec::new();
    let mut trajectories = Vec::with_capacity(outputs.len());
    for out in outputs {
        records.extend(out.records);
        trajectories.push(out.trajectories);
    }
    // Group rows by sweep value first so the file reads like the table.
    let key = |r: &TrialRecord| spec.values.iter().position(|v| *v == r.sweep_value).unwrap_or(usize::MAX);
    records.sort_by(|a, b| key(a).cmp(&key(b)).then(a.scheme.cmp(&b.scheme)).then(a.trial.cmp(&b.trial)));
    let summary = summarize(cfg, spec, &records);
    let iterations =
        if spec.name == ExperimentKind::Convergence { mean_trajectories(spec, &trajectories) } else { Vec::new() };
    Ok(ExperimentResult { kind: spec.name, spec: spec.clone(), records, summary, iterations })
}

/// Runs every configured experiment on a dedicated pool of `threads`
/// workers (`0` lets rayon choose).
pub fn run_all(cfg: &RunConfig, threads: usize) -> Result<Vec<ExperimentResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| cfg.experiments.iter().map(|spec| run_experiment(cfg, spec)).collect())
}
