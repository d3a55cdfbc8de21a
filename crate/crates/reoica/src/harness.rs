//! Multi-seed experiment harness: expands an experiment spec into isolated
//! runs, executes them on a worker pool, scores each run on the trailing
//! evaluation window, and writes per-seed, aggregate, running-curve, and
//! diagnostics CSVs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;

use crate::baselines::{fastica_batch, FastIcaConfig};
use crate::error::{Error, Result};
use crate::metrics::{match_sources, running_si_sdr, si_sdr_sc, CurvePoint, DEFAULT_MAX_LAG};
use crate::mixing::Regime;
use crate::pipeline::{
    build_mixed_stream, build_sources, run_reoica, run_vanilla, Method, RunConfig, RunTrace,
    SteadyStateDiag,
};
use crate::reservoir::ReservoirMode;
use crate::seeding::component_seed;
use crate::signals::SourceKind;

/// Samples scored at the end of each run.
pub const EVAL_WINDOW: usize = 5_000;
/// Trailing window of the running curve.
pub const CURVE_WINDOW: usize = 2_000;
/// Evaluation stride of the running curve.
pub const CURVE_STRIDE: usize = 100;

/// One point of the sweep grid (`None` = protocol default).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepPoint {
    pub reservoir_size: Option<usize>,
    pub epsilon: Option<f64>,
    pub architecture: Option<ReservoirMode>,
}

/// Parameter grid: cartesian product of the per-key value lists.
#[derive(Debug, Clone, Default)]
pub struct SweepGrid {
    pub reservoir_sizes: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub architectures: Vec<ReservoirMode>,
}

impl SweepGrid {
    pub fn is_empty(&self) -> bool {
        self.reservoir_sizes.is_empty()
            && self.epsilons.is_empty()
            && self.architectures.is_empty()
    }

    fn points(&self) -> Vec<SweepPoint> {
        let ns: Vec<Option<usize>> = if self.reservoir_sizes.is_empty() {
            vec![None]
        } else {
            self.reservoir_sizes.iter().map(|v| Some(*v)).collect()
        };
        let eps: Vec<Option<f64>> = if self.epsilons.is_empty() {
            vec![None]
        } else {
            self.epsilons.iter().map(|v| Some(*v)).collect()
        };
        let archs: Vec<Option<ReservoirMode>> = if self.architectures.is_empty() {
            vec![None]
        } else {
            self.architectures.iter().map(|v| Some(*v)).collect()
        };
        let mut points = Vec::new();
        for n in &ns {
            for e in &eps {
                for a in &archs {
                    points.push(SweepPoint {
                        reservoir_size: *n,
                        epsilon: *e,
                        architecture: *a,
                    });
                }
            }
        }
        points
    }
}

/// Experiment description: regimes x methods x seeds x sweep grid.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub regimes: Vec<Regime>,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub t_horizon: usize,
    pub source_kinds: Vec<SourceKind>,
    pub sweep: SweepGrid,
    pub output_dir: Option<PathBuf>,
    pub jobs: usize,
    pub master_seed: u64,
    /// Method used for per-seed win counts; defaults to vanilla when present.
    pub reference: Option<Method>,
    /// Protocol defaults applied to every run before sweep overrides.
    pub base: RunConfig,
    /// Skip running-curve computation (cheaper sweeps).
    pub skip_curves: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            regimes: vec![Regime::Nonlinear],
            methods: vec![Method::ReoicaBase, Method::Vanilla],
            seeds: (0..10).collect(),
            t_horizon: 15_000,
            source_kinds: crate::signals::chaotic_kinds(),
            sweep: SweepGrid::default(),
            output_dir: None,
            jobs: 0,
            master_seed: 0,
            reference: None,
            base: RunConfig::default(),
            skip_curves: false,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.regimes.is_empty() {
            return Err(Error::Config("no regimes selected".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("empty seeds list".into()));
        }
        if self.source_kinds.is_empty() {
            return Err(Error::Config("no source kinds selected".into()));
        }
        Ok(())
    }

    fn reference_method(&self) -> Method {
        if let Some(m) = self.reference {
            return m;
        }
        if self.methods.contains(&Method::Vanilla) {
            Method::Vanilla
        } else {
            self.methods[0]
        }
    }
}

/// Identifying key of one run.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RunKey {
    pub regime: String,
    pub method: String,
    pub arch: String,
    pub reservoir_size: usize,
    /// Drift amplitude in effect ("0" outside the time-varying regime).
    pub eps_label: String,
    pub seed: u64,
}

/// Score row for one completed run.
#[derive(Debug, Clone)]
pub struct SeedResult {
    pub key: RunKey,
    pub si_sdr_sc_mean: f64,
    pub per_source: Vec<f64>,
    pub mean_abs_corr: f64,
    pub steady: Option<SteadyStateDiag>,
    pub curve: Vec<CurvePoint>,
    /// Per-refresh rows: (step, alpha, ier, sso, rho_x, coherence).
    pub diagnostics: Vec<(usize, f64, f64, f64, f64, f64)>,
}

/// Aggregate over seeds for one (regime, method, sweep-point) group.
#[derive(Debug, Clone)]
pub struct AggregateRow {
    pub regime: String,
    pub method: String,
    pub arch: String,
    pub reservoir_size: usize,
    pub eps_label: String,
    pub seeds: usize,
    pub si_sdr_sc_mean: f64,
    pub si_sdr_sc_sem: f64,
    pub mean_abs_corr_mean: f64,
    pub mean_abs_corr_sem: f64,
    /// Seeds on which this method beat the reference (None for the
    /// reference itself or when the reference is missing).
    pub win_count: Option<usize>,
    pub ier_mean: Option<f64>,
    pub sso_mean: Option<f64>,
    pub rho_x_mean: Option<f64>,
    pub coherence_mean: Option<f64>,
}

/// A failed run, recorded without aborting the rest of the experiment.
#[derive(Debug, Clone)]
pub struct RunError {
    pub key: RunKey,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub per_seed: Vec<SeedResult>,
    pub aggregates: Vec<AggregateRow>,
    pub errors: Vec<RunError>,
}

fn arch_label(method: Method, arch: ReservoirMode) -> String {
    if method.uses_reservoir() {
        arch.name().to_string()
    } else {
        "-".to_string()
    }
}

fn eps_label(regime: Regime, eps: f64) -> String {
    match regime {
        Regime::TimeVarying => format_float(eps),
        _ => "0".to_string(),
    }
}

/// Expand the spec into concrete run configs.
fn expand_runs(spec: &ExperimentSpec) -> Vec<(RunKey, RunConfig)> {
    let mut runs = Vec::new();
    for point in spec.sweep.points() {
        for &regime in &spec.regimes {
            for &method in &spec.methods {
                for &seed in &spec.seeds {
                    let mut config = spec.base.clone();
                    config.method = method;
                    config.regime = regime;
                    config.t_horizon = spec.t_horizon;
                    config.seed = seed;
                    config.master_seed = spec.master_seed;
                    if let Some(n) = point.reservoir_size {
                        config.reservoir_size = n;
                    }
                    if let Some(e) = point.epsilon {
                        config.epsilon = e;
                    }
                    if let Some(a) = point.architecture {
                        config.architecture = a;
                    }
                    let key = RunKey {
                        regime: regime.name().to_string(),
                        method: method.name().to_string(),
                        arch: arch_label(method, config.architecture),
                        reservoir_size: if method.uses_reservoir() {
                            config.reservoir_size
                        } else {
                            0
                        },
                        eps_label: eps_label(regime, config.epsilon),
                        seed,
                    };
                    runs.push((key, config));
                }
            }
        }
    }
    runs
}

/// Execute one run and score it.
fn execute_run(spec: &ExperimentSpec, key: &RunKey, config: &RunConfig) -> Result<SeedResult> {
    let sources = build_sources(config, &spec.source_kinds)?;
    let mixed = build_mixed_stream(config, &sources)?;

    let (outputs, trace): (nalgebra::DMatrix<f64>, Option<RunTrace>) = match config.method {
        Method::Fastica => {
            let fastica_config = FastIcaConfig {
                seed: component_seed(config.master_seed, config.seed, "fastica"),
                ..FastIcaConfig::default()
            };
            let out = fastica_batch(&mixed.data, &fastica_config)?;
            (out.components, None)
        }
        Method::Vanilla => {
            let trace = run_vanilla(config, &sources, &mixed)?;
            (trace.outputs.clone(), Some(trace))
        }
        _ => {
            let trace = run_reoica(config, &sources, &mixed)?;
            (trace.outputs.clone(), Some(trace))
        }
    };

    // Score on the trailing evaluation window.
    let total = sources.sample_count();
    let window = EVAL_WINDOW.min(total);
    let s_eval = sources.data.columns(total - window, window).into_owned();
    let y_eval = outputs.columns(total - window, window).into_owned();
    let matching = match_sources(&s_eval, &y_eval, DEFAULT_MAX_LAG)?;
    let (per_source, mean) = si_sdr_sc(&s_eval, &y_eval, &matching)?;

    let curve = if spec.skip_curves {
        Vec::new()
    } else {
        running_si_sdr(&sources.data, &outputs, CURVE_WINDOW.min(total), CURVE_STRIDE)?
    };

    let (steady, diagnostics) = match &trace {
        Some(tr) => (
            tr.steady_state_diagnostics(EVAL_WINDOW),
            tr.refresh_trace
                .iter()
                .map(|r| {
                    (
                        r.step,
                        r.alpha,
                        r.diag.ier,
                        r.diag.sso,
                        r.diag.rho_x,
                        r.diag.coherence,
                    )
                })
                .collect(),
        ),
        None => (None, Vec::new()),
    };

    Ok(SeedResult {
        key: key.clone(),
        si_sdr_sc_mean: mean,
        per_source,
        mean_abs_corr: matching.mean_abs_corr(),
        steady,
        curve,
        diagnostics,
    })
}

/// Run every (regime, method, seed, sweep-point) tuple, aggregate, and write
/// CSV outputs when an output directory is set. Individual run failures are
/// recorded and do not abort the remaining runs.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let runs = expand_runs(spec);

    let execute_all = || -> Vec<(RunKey, Result<SeedResult>)> {
        runs.par_iter()
            .map(|(key, config)| (key.clone(), execute_run(spec, key, config)))
            .collect()
    };
    let outcomes = if spec.jobs > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.jobs)
            .build()
            .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
        pool.install(execute_all)
    } else {
        execute_all()
    };

    let mut per_seed = Vec::new();
    let mut errors = Vec::new();
    for (key, outcome) in outcomes {
        match outcome {
            Ok(row) => per_seed.push(row),
            Err(e) => errors.push(RunError {
                key,
                message: e.to_string(),
            }),
        }
    }
    per_seed.sort_by(|a, b| a.key.cmp(&b.key));
    errors.sort_by(|a, b| a.key.cmp(&b.key));

    let aggregates = aggregate_seeds(&per_seed, spec.reference_method())?;

    let output = ExperimentOutput {
        per_seed,
        aggregates,
        errors,
    };
    if let Some(dir) = &spec.output_dir {
        write_outputs(dir, &output)?;
    }
    Ok(output)
}

fn mean_and_sem(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let k = values.len();
    let mean = values.iter().sum::<f64>() / k as f64;
    if k < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1) as f64;
    (mean, var.sqrt() / (k as f64).sqrt())
}

fn group_of(key: &RunKey) -> (String, String, String, usize, String) {
    (
        key.regime.clone(),
        key.method.clone(),
        key.arch.clone(),
        key.reservoir_size,
        key.eps_label.clone(),
    )
}

/// Aggregate per-seed rows into per-group means, SEMs, and win counts
/// against the reference method (paired by regime/drift point/seed).
pub fn aggregate_seeds(rows: &[SeedResult], reference: Method) -> Result<Vec<AggregateRow>> {
    let mut groups: BTreeMap<(String, String, String, usize, String), Vec<&SeedResult>> =
        BTreeMap::new();
    for row in rows {
        groups.entry(group_of(&row.key)).or_default().push(row);
    }

    let ref_name = reference.name();
    let mut ref_scores: BTreeMap<(String, String, usize, String, u64), f64> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.key.method == ref_name) {
        ref_scores.insert(
            (
                row.key.regime.clone(),
                row.key.arch.clone(),
                row.key.reservoir_size,
                row.key.eps_label.clone(),
                row.key.seed,
            ),
            row.si_sdr_sc_mean,
        );
    }
    // Exact sweep-point match first; reservoir-free references (arch "-",
    // N = 0) pair against every sweep point in their regime/drift cell.
    let lookup_ref = |row: &SeedResult| -> Option<f64> {
        let exact = (
            row.key.regime.clone(),
            row.key.arch.clone(),
            row.key.reservoir_size,
            row.key.eps_label.clone(),
            row.key.seed,
        );
        if let Some(v) = ref_scores.get(&exact) {
            return Some(*v);
        }
        let plain = (
            row.key.regime.clone(),
            "-".to_string(),
            0usize,
            row.key.eps_label.clone(),
            row.key.seed,
        );
        ref_scores.get(&plain).copied()
    };

    let mut aggregates = Vec::new();
    for ((regime, method, arch, reservoir_size, eps_label), members) in groups {
        {
            let mut seeds: Vec<u64> = members.iter().map(|m| m.key.seed).collect();
            let before = seeds.len();
            seeds.sort_unstable();
            seeds.dedup();
            if seeds.len() != before {
                return Err(Error::Aggregation(format!(
                    "duplicate seeds in group {regime}/{method}"
                )));
            }
        }
        let finite_scores: Vec<f64> = members
            .iter()
            .map(|m| m.si_sdr_sc_mean)
            .filter(|v| v.is_finite())
            .collect();
        if finite_scores.len() < members.len() {
            eprintln!(
                "warning: {} infinite SI-SDR values excluded from {regime}/{method} aggregate",
                members.len() - finite_scores.len()
            );
        }
        let (mean, sem) = mean_and_sem(&finite_scores);
        let corrs: Vec<f64> = members.iter().map(|m| m.mean_abs_corr).collect();
        let (corr_mean, corr_sem) = mean_and_sem(&corrs);

        let win_count = if method == ref_name {
            None
        } else {
            let mut wins = 0usize;
            let mut comparable = 0usize;
            for m in &members {
                if let Some(ref_score) = lookup_ref(m) {
                    comparable += 1;
                    if m.si_sdr_sc_mean > ref_score {
                        wins += 1;
                    }
                }
            }
            (comparable > 0).then_some(wins)
        };

        let steadies: Vec<&SteadyStateDiag> =
            members.iter().filter_map(|m| m.steady.as_ref()).collect();
        let diag_mean = |f: fn(&SteadyStateDiag) -> f64| -> Option<f64> {
            if steadies.is_empty() {
                None
            } else {
                Some(steadies.iter().map(|s| f(s)).sum::<f64>() / steadies.len() as f64)
            }
        };

        aggregates.push(AggregateRow {
            regime,
            method,
            arch,
            reservoir_size,
            eps_label,
            seeds: members.len(),
            si_sdr_sc_mean: mean,
            si_sdr_sc_sem: sem,
            mean_abs_corr_mean: corr_mean,
            mean_abs_corr_sem: corr_sem,
            win_count,
            ier_mean: diag_mean(|s| s.ier),
            sso_mean: diag_mean(|s| s.sso),
            rho_x_mean: diag_mean(|s| s.rho_x),
            coherence_mean: diag_mean(|s| s.coherence),
        });
    }
    Ok(aggregates)
}

/// Shortest round-trip decimal; infinities as "inf"/"-inf".
pub fn format_float(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{v}")
}

fn opt_float(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

fn write_outputs(dir: &PathBuf, output: &ExperimentOutput) -> Result<()> {
    std::fs::create_dir_all(dir)?;

    let mut per_seed = String::from(
        "regime,method,arch,N,eps,seed,si_sdr_sc_mean,per_source_1,per_source_2,per_source_3,mean_abs_corr,ier,sso,rho_x,coherence\n",
    );
    for row in &output.per_seed {
        let k = &row.key;
        let mut sources = [String::new(), String::new(), String::new()];
        for (i, v) in row.per_source.iter().take(3).enumerate() {
            sources[i] = format_float(*v);
        }
        let _ = writeln!(
            per_seed,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            k.regime,
            k.method,
            k.arch,
            k.reservoir_size,
            k.eps_label,
            k.seed,
            format_float(row.si_sdr_sc_mean),
            sources[0],
            sources[1],
            sources[2],
            format_float(row.mean_abs_corr),
            opt_float(row.steady.map(|s| s.ier)),
            opt_float(row.steady.map(|s| s.sso)),
            opt_float(row.steady.map(|s| s.rho_x)),
            opt_float(row.steady.map(|s| s.coherence)),
        );
    }
    std::fs::write(dir.join("per_seed.csv"), per_seed)?;

    let mut aggregate = String::from(
        "regime,method,arch,N,eps,seeds,si_sdr_sc_mean,si_sdr_sc_sem,mean_abs_corr_mean,mean_abs_corr_sem,win_count,ier,sso,rho_x,coherence\n",
    );
    for row in &output.aggregates {
        let _ = writeln!(
            aggregate,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.regime,
            row.method,
            row.arch,
            row.reservoir_size,
            row.eps_label,
            row.seeds,
            format_float(row.si_sdr_sc_mean),
            format_float(row.si_sdr_sc_sem),
            format_float(row.mean_abs_corr_mean),
            format_float(row.mean_abs_corr_sem),
            row.win_count.map(|w| w.to_string()).unwrap_or_default(),
            opt_float(row.ier_mean),
            opt_float(row.sso_mean),
            opt_float(row.rho_x_mean),
            opt_float(row.coherence_mean),
        );
    }
    std::fs::write(dir.join("aggregate.csv"), aggregate)?;

    let mut curves = String::from("regime,method,seed,t,running_si_sdr\n");
    for row in &output.per_seed {
        for point in &row.curve {
            let _ = writeln!(
                curves,
                "{},{},{},{},{}",
                row.key.regime,
                row.key.method,
                row.key.seed,
                point.t,
                format_float(point.value),
            );
        }
    }
    std::fs::write(dir.join("curves.csv"), curves)?;

    let mut diagnostics =
        String::from("regime,method,seed,refresh_step,alpha,ier,sso,rho_x,coherence\n");
    for row in &output.per_seed {
        for (step, alpha, ier, sso, rho_x, coherence) in &row.diagnostics {
            let _ = writeln!(
                diagnostics,
                "{},{},{},{},{},{},{},{},{}",
                row.key.regime,
                row.key.method,
                row.key.seed,
                step,
                format_float(*alpha),
                format_float(*ier),
                format_float(*sso),
                format_float(*rho_x),
                format_float(*coherence),
            );
        }
    }
    std::fs::write(dir.join("diagnostics.csv"), diagnostics)?;

    let mut errors = String::from("regime,method,arch,N,eps,seed,error\n");
    for e in &output.errors {
        let k = &e.key;
        let _ = writeln!(
            errors,
            "{},{},{},{},{},{},\"{}\"",
            k.regime,
            k.method,
            k.arch,
            k.reservoir_size,
            k.eps_label,
            k.seed,
            e.message.replace('"', "'"),
        );
    }
    std::fs::write(dir.join("errors.csv"), errors)?;

    Ok(())
}
