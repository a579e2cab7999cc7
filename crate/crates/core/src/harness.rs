//! Experiment harness: seeded episodes, replicated experiments with exact
//! pseudo-regret against the best fixed bid, log-log slope fits, and the
//! CSV/JSON output formats.
//!
//! Pseudo-regret uses the expected utility of each played bid under the true
//! marginals, not the realized utility, so traces carry no Monte-Carlo noise
//! from the adversary draws; realized utility is accumulated separately for
//! diagnostics. Episodes are reproducible: round t of replication r draws
//! its own counter-seeded generator, so results are bit-identical for any
//! thread count.

use std::collections::HashMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::auction::settle;
use crate::bids::{AuctionFormat, BidVector, ValuationVector};
use crate::distributions::{build_distribution, AdversaryDistribution, DistributionError, DistributionSpec};
use crate::learners::{build_learner, Feedback, FeedbackKind, LearnerError, LearnerSpec};
use crate::optimizer::{
    candidate_grid, eval_expected_utility, maximize_on_grid, polish, BidConstraints, CdfProfile,
    OptimizerError,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error("slope fit needs at least 3 positive points, have {0}")]
    NotEnoughPoints(usize),
    #[error("episode (horizon {horizon}, replication {replication}) failed: {detail}")]
    Episode { horizon: u64, replication: usize, detail: String },
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

/// Everything one experiment needs. `t` is the horizon of a single run;
/// `t_grid` switches to a sweep over horizons for slope studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub format: AuctionFormat,
    pub k: usize,
    pub t: u64,
    pub valuations: ValuationVector,
    pub distribution: DistributionSpec,
    pub learner: LearnerSpec,
    pub feedback: FeedbackKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<u64>>,
    /// Monte-Carlo sample count for the oracle when a distribution lacks
    /// closed-form marginals. Every built-in kind has exact marginals, so
    /// this is accepted but unused by them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_precision: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

fn default_replications() -> usize {
    1
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.t < 1 {
            return Err(HarnessError::Config("horizon t must be >= 1".into()));
        }
        if self.replications < 1 {
            return Err(HarnessError::Config("replications must be >= 1".into()));
        }
        if self.k != self.valuations.k() {
            return Err(HarnessError::Config(format!(
                "k = {} but valuations have K = {}",
                self.k,
                self.valuations.k()
            )));
        }
        if let Some(required) = self.learner.required_feedback() {
            if required != self.feedback {
                return Err(HarnessError::Config(format!(
                    "learner {:?} requires {:?} feedback, config says {:?}",
                    self.learner, required, self.feedback
                )));
            }
        }
        if let LearnerSpec::Ubiid { n } = &self.learner {
            match &self.distribution {
                DistributionSpec::IidOrderStats { n: dist_n, .. } => {
                    if dist_n != n {
                        return Err(HarnessError::Config(format!(
                            "ubiid declares N = {n} but the adversary has N = {dist_n}"
                        )));
                    }
                }
                DistributionSpec::IidBernoulliHard { .. } => {
                    if *n != 2 {
                        return Err(HarnessError::Config(format!(
                            "ubiid declares N = {n} but the two-coin adversary has N = 2"
                        )));
                    }
                }
                other => {
                    return Err(HarnessError::Config(format!(
                        "ubiid requires an i.i.d. order-statistic adversary, got {other:?}"
                    )));
                }
            }
        }
        if let Some(grid) = &self.t_grid {
            if grid.is_empty() || grid.iter().any(|&t| t < 1) {
                return Err(HarnessError::Config("t_grid must be non-empty with positive horizons".into()));
            }
        }
        // Surfaces distribution construction errors before round 1.
        build_distribution(&self.distribution, self.k)?;
        build_learner(&self.learner, self.format, &self.valuations, self.t)?;
        Ok(())
    }

    fn seed_for_replication(&self, r: usize) -> u64 {
        match &self.seeds {
            Some(seeds) if !seeds.is_empty() => seeds[r % seeds.len()].wrapping_add((r / seeds.len()) as u64),
            _ => splitmix(self.seed ^ splitmix(r as u64)),
        }
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// One independent generator per (episode seed, round): reproducible under
/// any parallel schedule.
pub fn round_rng(episode_seed: u64, round: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix(episode_seed ^ splitmix(round)))
}

/// Per-round pseudo-regret of one episode. For horizons of a million rounds
/// or more the stored rows are strided to keep episodes memory-bounded.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    /// (round, instant pseudo-regret, cumulative pseudo-regret) rows.
    pub rows: Vec<(u64, f64, f64)>,
    pub final_cumulative: f64,
    pub realized_utility_total: f64,
}

const TRACE_MEMORY_LIMIT: u64 = 1_000_000;

fn trace_stride(t: u64) -> u64 {
    if t >= TRACE_MEMORY_LIMIT {
        t.div_ceil(1 << 20)
    } else {
        1
    }
}

/// The oracle: maximize expected utility under the exact marginals over the
/// candidate grid augmented with a uniform 10^4-point grid and the
/// distribution's own breakpoints, then polish coordinates on the continuum.
pub fn best_fixed_bid(
    dist: &AdversaryDistribution,
    v: &ValuationVector,
    format: AuctionFormat,
) -> Result<(BidVector, f64), HarnessError> {
    let marginals = dist.profile();
    let profile = CdfProfile::new(marginals);
    let constraints = BidConstraints::free(dist.k());
    let mut grid = candidate_grid(&profile, v, &constraints);
    grid.reserve(10_001);
    for i in 0..=10_000u32 {
        grid.push(i as f64 / 10_000.0);
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    let (b, value) = maximize_on_grid(format, &profile, v, &constraints, &grid)?;
    let (pb, polished) = polish(format, &profile, v, &constraints, &b, 2e-4);
    Ok(if polished > value { (pb, polished) } else { (b, value) })
}

struct EpisodeContext<'a> {
    config: &'a ExperimentConfig,
    dist: &'a AdversaryDistribution,
    oracle_value: f64,
}

fn run_episode_inner(
    ctx: &EpisodeContext,
    horizon: u64,
    replication: usize,
) -> Result<RegretTrace, HarnessError> {
    let config = ctx.config;
    let mut learner = build_learner(&config.learner, config.format, &config.valuations, horizon)?;
    let episode_seed = config.seed_for_replication(replication);
    let stride = trace_stride(horizon);
    let mut rows = Vec::with_capacity((horizon / stride) as usize + 1);
    let mut cumulative = 0.0;
    let mut realized = 0.0;
    // Expected utility of repeated bids is cached; the committed phases of
    // the bandit learners replay one vector for most of the horizon.
    let mut value_cache: HashMap<Vec<u64>, f64> = HashMap::new();
    let true_profile = CdfProfile::new(ctx.dist.profile());
    for t in 1..=horizon {
        let bid = learner.next_bid(t);
        let mut rng = round_rng(episode_seed, t);
        let beta = ctx.dist.sample(&mut rng);
        let outcome = settle(config.format, &bid, &beta, &config.valuations)
            .map_err(|e| HarnessError::Episode { horizon, replication, detail: e.to_string() })?;
        realized += outcome.utility;
        let feedback = match config.feedback {
            FeedbackKind::Full => Feedback::Full(beta),
            FeedbackKind::Bandit => Feedback::Bandit {
                allocation: outcome.allocation,
                unit_prices: outcome.unit_prices,
            },
        };
        learner.observe(&feedback);
        let key: Vec<u64> = bid.values().iter().map(|x| x.to_bits()).collect();
        let expected = match value_cache.get(&key) {
            Some(&u) => u,
            None => {
                let u = eval_expected_utility(config.format, &true_profile, &bid, &config.valuations)?;
                value_cache.insert(key, u);
                u
            }
        };
        let instant = ctx.oracle_value - expected;
        cumulative += instant;
        if t % stride == 0 || t == horizon {
            rows.push((t, instant, cumulative));
        }
    }
    Ok(RegretTrace { rows, final_cumulative: cumulative, realized_utility_total: realized })
}

/// Run a single seeded episode at the config's base horizon.
pub fn run_episode(config: &ExperimentConfig, replication: usize) -> Result<RegretTrace, HarnessError> {
    config.validate()?;
    let dist = build_distribution(&config.distribution, config.k)?;
    let (_, oracle_value) = best_fixed_bid(&dist, &config.valuations, config.format)?;
    let ctx = EpisodeContext { config, dist: &dist, oracle_value };
    run_episode_inner(&ctx, config.t, replication)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointStat {
    pub t: u64,
    pub mean_cumulative_regret: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonStat {
    pub horizon: u64,
    pub mean_cumulative_regret: f64,
    pub stderr: f64,
    pub mean_realized_utility: f64,
    pub checkpoints: Vec<CheckpointStat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub oracle_value: f64,
    pub horizons: Vec<HorizonStat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_fit: Option<SlopeFit>,
}

/// Summary plus the raw traces (horizon, replication, trace), for output.
pub struct ExperimentResult {
    pub summary: ExperimentSummary,
    pub episodes: Vec<(u64, usize, RegretTrace)>,
}

/// Run replications at every horizon (the base `t`, or each entry of
/// `t_grid`), in parallel across episodes, and aggregate. Deterministic for
/// a fixed seed list regardless of the thread count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    config.validate()?;
    let dist = build_distribution(&config.distribution, config.k)?;
    let (_, oracle_value) = best_fixed_bid(&dist, &config.valuations, config.format)?;
    let horizons: Vec<u64> = match &config.t_grid {
        Some(grid) => grid.clone(),
        None => vec![config.t],
    };
    let jobs: Vec<(u64, usize)> = horizons
        .iter()
        .flat_map(|&h| (0..config.replications).map(move |r| (h, r)))
        .collect();
    let results: Mutex<Vec<Option<Result<RegretTrace, HarnessError>>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());
    let next_job = AtomicUsize::new(0);
    let workers = config
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        .clamp(1, jobs.len().max(1));
    let ctx = EpisodeContext { config, dist: &dist, oracle_value };
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next_job.fetch_add(1, Ordering::Relaxed);
                if idx >= jobs.len() {
                    break;
                }
                let (horizon, replication) = jobs[idx];
                let out = run_episode_inner(&ctx, horizon, replication);
                results.lock().unwrap()[idx] = Some(out);
            });
        }
    });
    let mut episodes = Vec::with_capacity(jobs.len());
    for (idx, slot) in results.into_inner().unwrap().into_iter().enumerate() {
        let (horizon, replication) = jobs[idx];
        let trace = slot.expect("every job ran").map_err(|e| HarnessError::Episode {
            horizon,
            replication,
            detail: e.to_string(),
        })?;
        episodes.push((horizon, replication, trace));
    }

    let mut stats = Vec::with_capacity(horizons.len());
    for &h in &horizons {
        let traces: Vec<&RegretTrace> =
            episodes.iter().filter(|(eh, _, _)| *eh == h).map(|(_, _, t)| t).collect();
        let finals: Vec<f64> = traces.iter().map(|t| t.final_cumulative).collect();
        let (mean, stderr) = mean_stderr(&finals);
        let realized: Vec<f64> = traces.iter().map(|t| t.realized_utility_total).collect();
        let (mean_realized, _) = mean_stderr(&realized);
        let checkpoints = checkpoint_stats(&traces, h);
        stats.push(HorizonStat {
            horizon: h,
            mean_cumulative_regret: mean,
            stderr,
            mean_realized_utility: mean_realized,
            checkpoints,
        });
    }
    let slope_fit = if config.t_grid.is_some() {
        let points: Vec<(f64, f64)> =
            stats.iter().map(|s| (s.horizon as f64, s.mean_cumulative_regret)).collect();
        Some(fit_loglog_slope(&points)?)
    } else {
        None
    };
    Ok(ExperimentResult {
        summary: ExperimentSummary { config: config.clone(), oracle_value, horizons: stats, slope_fit },
        episodes,
    })
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn checkpoint_stats(traces: &[&RegretTrace], horizon: u64) -> Vec<CheckpointStat> {
    // Powers of two up to the horizon, plus the horizon itself.
    let mut marks: Vec<u64> = (0..64).map(|i| 1u64 << i).take_while(|&m| m < horizon).collect();
    marks.push(horizon);
    let stride = trace_stride(horizon);
    marks.retain(|&m| m % stride == 0 || m == horizon);
    marks
        .into_iter()
        .map(|m| {
            let at: Vec<f64> = traces
                .iter()
                .map(|t| {
                    let idx = t.rows.partition_point(|row| row.0 < m);
                    t.rows.get(idx).map(|r| r.2).unwrap_or(t.final_cumulative)
                })
                .collect();
            let (mean, stderr) = mean_stderr(&at);
            CheckpointStat { t: m, mean_cumulative_regret: mean, stderr }
        })
        .collect()
}

/// Least-squares fit of log(regret) against log(T). Nonpositive regret
/// points cannot be log-transformed; they are dropped with a warning.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<SlopeFit, HarnessError> {
    let mut warnings = Vec::new();
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(t, r)| {
            if *r > 0.0 && *t > 0.0 {
                true
            } else {
                warnings.push(format!("dropped nonpositive point (T = {t}, regret = {r})"));
                false
            }
        })
        .map(|&(t, r)| (t.ln(), r.ln()))
        .collect();
    if usable.len() < 3 {
        return Err(HarnessError::NotEnoughPoints(usable.len()));
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = usable.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(HarnessError::NotEnoughPoints(1));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(SlopeFit { slope, intercept, r_squared, points_used: usable.len(), warnings })
}

/// Write `summary.json` plus one trace CSV per horizon (`trace.csv` for a
/// single-horizon run, `trace_T<horizon>.csv` within a sweep). All files are
/// UTF-8 and newline-terminated; the CSV header is
/// `replication,t,instant_regret,cumulative_regret`.
pub fn write_outputs(result: &ExperimentResult, out_dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let summary_path = out_dir.join("summary.json");
    let mut json = serde_json::to_string_pretty(&result.summary)
        .map_err(|e| HarnessError::Config(format!("summary serialization failed: {e}")))?;
    json.push('\n');
    std::fs::write(&summary_path, json).map_err(io_err(&summary_path))?;

    let sweep = result.summary.config.t_grid.is_some();
    let horizons: Vec<u64> = result.summary.horizons.iter().map(|h| h.horizon).collect();
    for h in horizons {
        let name = if sweep { format!("trace_T{h}.csv") } else { "trace.csv".to_string() };
        let path = out_dir.join(name);
        let file = std::fs::File::create(&path).map_err(io_err(&path))?;
        let mut w = std::io::BufWriter::new(file);
        writeln!(w, "replication,t,instant_regret,cumulative_regret").map_err(io_err(&path))?;
        for (eh, replication, trace) in &result.episodes {
            if *eh != h {
                continue;
            }
            for (t, instant, cumulative) in &trace.rows {
                writeln!(w, "{replication},{t},{instant},{cumulative}").map_err(io_err(&path))?;
            }
        }
        w.flush().map_err(io_err(&path))?;
    }
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<ExperimentSummary, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("cannot parse {path:?}: {e}")))
}
