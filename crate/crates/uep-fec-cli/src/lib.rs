//! Experiment harness for the uep-fec library.
//!
//! Five commands mirror the experiment structure the library is validated
//! against: `counts` (solution-space tables), `compare` (exhaustive oracles
//! vs the annealer), `optimize` (per-block runs along a stream with timing
//! aggregates), `sweep` (loss-grid comparison of protection strategies), and
//! `histogram` (how many matrices the winning configs use).
//!
//! All commands are deterministic for fixed seeds: timing uses a simulated
//! clock that advances a fixed tick per cost evaluation, so emitted CSV is
//! byte-identical across runs. `--real-clock` swaps in the wall clock, which
//! trades reproducible output for real timing data. SVG files are derived
//! from the emitted CSV text alone.

pub mod plot;

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use uep_fec::channel::derive_ge;
use uep_fec::clock::{Clock, FakeClock, SystemClock};
use uep_fec::cost::{expected_distortion, mc_expected_distortion, CostEvaluator};
use uep_fec::fec::standard_config;
use uep_fec::optimizer::{
    exhaustive_optimum_timed, optimize_block, solve_subproblem, Budget, SolveReport,
};
use uep_fec::rate::CodeRate;
use uep_fec::space::{
    count_restricted, count_unrestricted, enumerate_restricted, enumerate_unrestricted,
};
use uep_fec::stream::{packet_count, synthesize_stream, GopSpec, ProtectionBlock};

pub const PAYLOAD_BYTES: u64 = 1348;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("experiment spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Channel(#[from] uep_fec::channel::ChannelError),
    #[error(transparent)]
    Stream(#[from] uep_fec::stream::StreamError),
    #[error(transparent)]
    Codec(#[from] uep_fec::fec::CodecError),
    #[error(transparent)]
    Cost(#[from] uep_fec::cost::CostError),
    #[error(transparent)]
    Optimize(#[from] uep_fec::optimizer::OptimizeError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("spec json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum EvaluatorMode {
    Iid,
    #[default]
    Markov,
    Mc,
}

fn default_bitrate() -> f64 {
    8e6
}
fn default_latency() -> f64 {
    0.2
}
fn default_split() -> f64 {
    0.5
}
fn default_rate() -> CodeRate {
    CodeRate::new(5, 6).unwrap()
}
fn default_plr() -> Vec<f64> {
    vec![7.5e-3, 1.0e-2, 1.75e-2, 2.5e-2]
}
fn default_abl_ms() -> Vec<f64> {
    vec![1.0, 3.0, 5.0]
}
fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}
fn default_n_matrices() -> Vec<u32> {
    vec![1, 2, 3, 4]
}
fn default_blocks() -> u64 {
    100
}
fn default_trials() -> u64 {
    10_000
}

/// One experiment scenario. The latency budget T_L splits into a receiver
/// buffering window (which fixes the block dimensions) and a transmitter
/// optimization budget.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default = "default_bitrate")]
    pub bitrate_bps: f64,
    #[serde(default = "default_latency")]
    pub latency_s: f64,
    #[serde(default = "default_split")]
    pub transmitter_split: f64,
    #[serde(default = "default_rate")]
    pub rate: CodeRate,
    #[serde(default = "default_plr")]
    pub plr: Vec<f64>,
    #[serde(default = "default_abl_ms")]
    pub abl_ms: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_n_matrices")]
    pub n_matrices: Vec<u32>,
    #[serde(default = "default_blocks")]
    pub stream_blocks: u64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub evaluator: EvaluatorMode,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults are total")
    }
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.bitrate_bps > 0.0) {
            return Err(CliError::Spec("bitrate_bps must be positive".into()));
        }
        if !(self.latency_s > 0.0) {
            return Err(CliError::Spec("latency_s must be positive".into()));
        }
        if !(self.transmitter_split > 0.0 && self.transmitter_split < 1.0) {
            return Err(CliError::Spec(
                "transmitter_split must lie strictly between 0 and 1".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(CliError::Spec("seeds must be nonempty".into()));
        }
        if self.plr.is_empty() || self.abl_ms.is_empty() {
            return Err(CliError::Spec("plr and abl_ms grids must be nonempty".into()));
        }
        if self.n_matrices.is_empty() {
            return Err(CliError::Spec("n_matrices must be nonempty".into()));
        }
        let (n_data, n_fec) = self.block_dims();
        if n_fec == 0 || n_fec >= n_data {
            return Err(CliError::Spec(format!(
                "scenario yields degenerate block dimensions ({n_data} data, {n_fec} repair)"
            )));
        }
        Ok(())
    }

    /// Transmitter-side optimization budget T_T.
    pub fn t_transmit(&self) -> f64 {
        self.latency_s * self.transmitter_split
    }

    /// Receiver-side buffering window T_R, which dimensions the block.
    pub fn t_receive(&self) -> f64 {
        self.latency_s - self.t_transmit()
    }

    /// (n_data, n_fec) for the receiver window.
    pub fn block_dims(&self) -> (u64, u64) {
        let n_data = packet_count(self.bitrate_bps, self.t_receive(), PAYLOAD_BYTES);
        (n_data, self.rate.repair_count(n_data))
    }

    /// Mean burst length in wire packets for a burst length in milliseconds.
    /// Bursts shorter than one packet collapse to one packet, the shortest
    /// loss event the channel model can express.
    pub fn abl_packets(&self, abl_ms: f64) -> f64 {
        let wire_pps = self.rate.wire_bitrate(self.bitrate_bps) / (8.0 * PAYLOAD_BYTES as f64);
        (abl_ms / 1e3 * wire_pps).max(1.0)
    }

    fn budget(&self, opts: &RunOptions) -> Budget {
        let mut budget = Budget::new(Duration::from_secs_f64(self.t_transmit()));
        if let Some(tau) = opts.tau {
            budget.tau = tau;
        }
        if let Some(i_max) = opts.imax {
            budget.i_max = i_max;
        }
        budget
    }

    fn evaluator_for(
        &self,
        opts: &RunOptions,
        plr: f64,
        abl_ms: f64,
        seed: u64,
    ) -> Result<CostEvaluator, CliError> {
        let mode = opts.evaluator.unwrap_or(self.evaluator);
        Ok(match mode {
            EvaluatorMode::Iid => CostEvaluator::Iid { plr },
            EvaluatorMode::Markov => CostEvaluator::Markov {
                channel: derive_ge(plr, self.abl_packets(abl_ms))?,
            },
            EvaluatorMode::Mc => CostEvaluator::MonteCarlo {
                channel: derive_ge(plr, self.abl_packets(abl_ms))?,
                trials: opts.trials.unwrap_or(self.trials),
                seed,
            },
        })
    }

    /// Weighted block for the receiver window, deterministic in the seed.
    fn weighted_block(&self, window_s: f64, seed: u64) -> Result<ProtectionBlock, CliError> {
        let packets = synthesize_stream(
            self.bitrate_bps,
            window_s,
            PAYLOAD_BYTES,
            &GopSpec::default(),
            seed,
        )?;
        let n_data = packets.len() as u64;
        Ok(ProtectionBlock::new(packets, self.rate.repair_count(n_data))?)
    }
}

/// Command-line knobs that are not part of the scenario itself.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub evaluator: Option<EvaluatorMode>,
    pub trials: Option<u64>,
    pub tau: Option<f64>,
    pub imax: Option<u64>,
    /// Simulated cost of one evaluation when the fake clock is in use.
    pub tick: Duration,
    pub real_clock: bool,
    /// Largest space the compare command will scan exhaustively.
    pub oracle_cap: u128,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            evaluator: None,
            trials: None,
            tau: None,
            imax: None,
            tick: Duration::from_micros(2),
            real_clock: false,
            oracle_cap: 2_000_000,
        }
    }
}

impl RunOptions {
    fn clock(&self) -> Box<dyn Clock> {
        if self.real_clock {
            Box::new(SystemClock::new())
        } else {
            Box::new(FakeClock::with_eval_tick(self.tick))
        }
    }
}

/// Files a command produced plus any violated runtime guard. Guards failing
/// turns into a nonzero process exit.
#[derive(Debug, Default)]
pub struct CmdOutputs {
    pub files: Vec<(String, String)>,
    pub guard_failures: Vec<String>,
}

/// CSV accumulator. The schema comment line versions the column layout.
struct Csv {
    buf: String,
}

impl Csv {
    fn new(schema: &str, header: &str) -> Self {
        Self {
            buf: format!("# schema: {schema}\n{header}\n"),
        }
    }

    fn row(&mut self, fields: &[String]) {
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    fn finish(self) -> String {
        self.buf
    }
}

fn fnum(x: f64) -> String {
    format!("{x:.6e}")
}

fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Solution-space size table over the scenario's matrix counts.
pub fn cmd_counts(spec: &ExperimentSpec) -> Result<CmdOutputs, CliError> {
    spec.validate()?;
    let (n_data, n_fec) = spec.block_dims();
    let mut csv = Csv::new("counts v1", "n_data,n_fec,n_matrices,unrestricted,restricted");
    for &n_m in &spec.n_matrices {
        csv.row(&[
            n_data.to_string(),
            n_fec.to_string(),
            n_m.to_string(),
            count_unrestricted(n_data, n_fec, n_m).to_string(),
            count_restricted(n_data, n_fec, n_m).to_string(),
        ]);
    }
    Ok(CmdOutputs {
        files: vec![("counts.csv".into(), csv.finish())],
        guard_failures: Vec::new(),
    })
}

/// Exhaustive oracles (full and restricted space) against the annealer on
/// the scenario block, one row per matrix count.
pub fn cmd_compare(spec: &ExperimentSpec, opts: &RunOptions) -> Result<CmdOutputs, CliError> {
    spec.validate()?;
    let (n_data, n_fec) = spec.block_dims();
    let block = spec.weighted_block(spec.t_receive(), spec.seeds[0])?;
    let evaluator = spec.evaluator_for(opts, spec.plr[0], spec.abl_ms[0], spec.seeds[0])?;
    let t_init = expected_distortion(&block, &standard_config(n_data, n_fec)?, &evaluator)?;
    let mut budget = spec.budget(opts);
    // The comparison wants full annealing runs, not budget-truncated ones.
    budget.t_total = Duration::from_secs(3_600);

    let mut guard_failures = Vec::new();
    let mut csv = Csv::new(
        "compare v1",
        "n_data,n_fec,n_matrices,count_unrestricted,count_restricted,\
         cost_unrestricted,wall_unrestricted_s,cost_restricted,wall_restricted_s,\
         cost_hsa_mean,wall_hsa_mean_s,gap_restricted,gap_hsa_mean,hsa_within_2pct,note",
    );
    for &n_m in &spec.n_matrices {
        let full_count = count_unrestricted(n_data, n_fec, n_m);
        let space = enumerate_restricted(n_data, n_fec, n_m);
        if space.len() == 0 {
            csv.row(&[
                n_data.to_string(),
                n_fec.to_string(),
                n_m.to_string(),
                full_count.to_string(),
                "0".into(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                "no feasible config".into(),
            ]);
            continue;
        }

        let mut note = String::new();
        let unrestricted = if full_count <= opts.oracle_cap {
            let configs = enumerate_unrestricted(n_data, n_fec, n_m);
            let clock = opts.clock();
            let found = exhaustive_optimum_timed(&configs, &block, &evaluator, &*clock)?;
            Some((found.expect("nonempty space").1, clock.now().as_secs_f64()))
        } else {
            note = format!("unrestricted oracle skipped ({full_count} configs > cap)");
            None
        };

        let clock = opts.clock();
        let (_, cost_restricted) =
            exhaustive_optimum_timed(space.configs(), &block, &evaluator, &*clock)?
                .expect("nonempty space");
        let wall_restricted = clock.now().as_secs_f64();

        let mut cost_sum = 0.0;
        let mut wall_sum = 0.0;
        let mut within = 0u64;
        for &seed in &spec.seeds {
            let clock = opts.clock();
            let report =
                solve_subproblem(&space, &block, &evaluator, &budget, t_init, seed, &*clock)?;
            let cost = report.best_cost.expect("nonempty space");
            cost_sum += cost;
            wall_sum += report.wall_s;
            if cost_restricted == 0.0 || (cost - cost_restricted) / cost_restricted <= 0.02 {
                within += 1;
            }
        }
        let n_seeds = spec.seeds.len() as f64;
        let cost_hsa = cost_sum / n_seeds;
        let wall_hsa = wall_sum / n_seeds;
        let within_frac = within as f64 / n_seeds;
        if within_frac < 0.9 {
            guard_failures.push(format!(
                "annealer within 2% of the restricted oracle in only {:.0}% of seeds at n_matrices={n_m}",
                within_frac * 100.0
            ));
        }

        let (gap_restricted, cost_u_str, wall_u_str) = match unrestricted {
            Some((cost_u, wall_u)) => {
                if cost_u > cost_restricted + 1e-12 {
                    guard_failures.push(format!(
                        "unrestricted oracle lost to its own subset at n_matrices={n_m}"
                    ));
                }
                let gap = if cost_u == 0.0 {
                    0.0
                } else {
                    (cost_restricted - cost_u) / cost_u
                };
                // The shape restriction is near-lossless under memoryless loss but
                // can cost more on correlated channels; that is a property of the
                // instance, not an error, so it is reported rather than fatal.
                if gap > 0.01 {
                    if !note.is_empty() {
                        note.push_str("; ");
                    }
                    note.push_str(&format!("restriction costs {:.2}%", gap * 100.0));
                }
                (fnum(gap), fnum(cost_u), fnum(wall_u))
            }
            None => (String::new(), String::new(), String::new()),
        };
        let gap_hsa = if cost_restricted == 0.0 {
            0.0
        } else {
            (cost_hsa - cost_restricted) / cost_restricted
        };

        csv.row(&[
            n_data.to_string(),
            n_fec.to_string(),
            n_m.to_string(),
            full_count.to_string(),
            space.len().to_string(),
            cost_u_str,
            wall_u_str,
            fnum(cost_restricted),
            fnum(wall_restricted),
            fnum(cost_hsa),
            fnum(wall_hsa),
            gap_restricted,
            fnum(gap_hsa),
            fnum(within_frac),
            note,
        ]);
    }

    Ok(CmdOutputs {
        files: vec![("compare.csv".into(), csv.finish())],
        guard_failures,
    })
}

/// Optimizes every block of a synthesized stream under the transmitter
/// budget. Shared by the optimize and histogram commands.
fn run_stream(spec: &ExperimentSpec, opts: &RunOptions) -> Result<Vec<SolveReport>, CliError> {
    let window = spec.t_receive();
    let duration = window * spec.stream_blocks as f64;
    let packets = synthesize_stream(
        spec.bitrate_bps,
        duration,
        PAYLOAD_BYTES,
        &GopSpec::default(),
        spec.seeds[0],
    )?;
    let blocks = uep_fec::stream::partition_blocks(
        &packets,
        spec.bitrate_bps,
        window,
        PAYLOAD_BYTES,
        spec.rate,
    )?;
    let budget = spec.budget(opts);
    let mut reports = Vec::new();
    for (index, block) in blocks.iter().take(spec.stream_blocks as usize).enumerate() {
        let seed = mix_seed(spec.seeds[0], index as u64);
        let evaluator = spec.evaluator_for(opts, spec.plr[0], spec.abl_ms[0], seed)?;
        let clock = opts.clock();
        reports.push(optimize_block(block, &evaluator, &budget, seed, &*clock)?);
    }
    Ok(reports)
}

/// Per-block optimization along a stream with wall-time aggregates.
pub fn cmd_optimize(spec: &ExperimentSpec, opts: &RunOptions) -> Result<CmdOutputs, CliError> {
    spec.validate()?;
    let reports = run_stream(spec, opts)?;
    let mut jsonl = String::new();
    for report in &reports {
        jsonl.push_str(&serde_json::to_string(report)?);
        jsonl.push('\n');
    }

    let t_transmit = spec.t_transmit();
    let mut guard_failures = Vec::new();
    let mut csv = Csv::new(
        "optimize-summary v1",
        "t_transmit_s,blocks,wall_mean_s,wall_max_s,wall_var_s2,n_m_max_mean,cost_mean",
    );
    if reports.is_empty() {
        csv.row(&[
            fnum(t_transmit),
            "0".into(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ]);
    } else {
        let n = reports.len() as f64;
        let walls: Vec<f64> = reports.iter().map(|r| r.total_wall_s).collect();
        let wall_mean = walls.iter().sum::<f64>() / n;
        let wall_max = walls.iter().cloned().fold(0.0, f64::max);
        let wall_var = walls.iter().map(|w| (w - wall_mean).powi(2)).sum::<f64>() / n;
        let n_m_mean = reports
            .iter()
            .map(|r| f64::from(r.n_m_max_reached))
            .sum::<f64>()
            / n;
        let cost_mean = reports.iter().map(|r| r.overall_cost).sum::<f64>() / n;
        if wall_max > 1.1 * t_transmit {
            guard_failures.push(format!(
                "block optimization overran its budget: {wall_max:.4} s > 1.1 x {t_transmit} s"
            ));
        }
        csv.row(&[
            fnum(t_transmit),
            reports.len().to_string(),
            fnum(wall_mean),
            fnum(wall_max),
            fnum(wall_var),
            fnum(n_m_mean),
            fnum(cost_mean),
        ]);
    }

    Ok(CmdOutputs {
        files: vec![
            ("optimize.jsonl".into(), jsonl),
            ("optimize_summary.csv".into(), csv.finish()),
        ],
        guard_failures,
    })
}

/// Loss-grid sweep comparing three protection strategies: the standard
/// config over the full latency window, the standard config over the
/// receiver half-window, and the optimized multi-matrix config over the same
/// half-window. Costs are normalized per data packet so the two window sizes
/// are comparable.
pub fn cmd_sweep(spec: &ExperimentSpec, opts: &RunOptions) -> Result<CmdOutputs, CliError> {
    spec.validate()?;
    let trials = opts.trials.unwrap_or(spec.trials);
    let half_window = spec.t_receive();
    let block_half = spec.weighted_block(half_window, spec.seeds[0])?;
    let block_full = spec.weighted_block(spec.latency_s, spec.seeds[0])?;
    let (p_half, f_half) = (block_half.n_data(), block_half.n_fec());
    let (p_full, f_full) = (block_full.n_data(), block_full.n_fec());
    if f_full == 0 || f_full >= p_full {
        return Err(CliError::Spec(format!(
            "full-window block dimensions are degenerate ({p_full} data, {f_full} repair)"
        )));
    }
    let std_half = standard_config(p_half, f_half)?;
    let std_full = standard_config(p_full, f_full)?;
    let budget = spec.budget(opts);

    let mut guard_failures = Vec::new();
    let mut csv = Csv::new(
        "sweep v1",
        "plr,abl_ms,model_full_std,model_half_std,model_uep,\
         mc_full_std,mc_half_std,mc_uep,uep_config",
    );
    for (ai, &abl_ms) in spec.abl_ms.iter().enumerate() {
        for (pi, &plr) in spec.plr.iter().enumerate() {
            let cell = (ai * spec.plr.len() + pi) as u64;
            let evaluator =
                spec.evaluator_for(opts, plr, abl_ms, mix_seed(spec.seeds[0], cell))?;
            let channel = derive_ge(plr, spec.abl_packets(abl_ms))?;

            let model_full = expected_distortion(&block_full, &std_full, &evaluator)?;
            let model_half = expected_distortion(&block_half, &std_half, &evaluator)?;
            let clock = opts.clock();
            let report = optimize_block(
                &block_half,
                &evaluator,
                &budget,
                mix_seed(spec.seeds[0], 1 + 3 * cell),
                &*clock,
            )?;
            let model_uep = report.overall_cost;
            if model_uep > model_half + 1e-12 {
                guard_failures.push(format!(
                    "optimized config lost to the standard one at plr={plr}, abl={abl_ms} ms"
                ));
            }

            let (mc_full, _) = mc_expected_distortion(
                &block_full,
                &std_full,
                &channel,
                trials,
                mix_seed(spec.seeds[0], 2 + 3 * cell),
            )?;
            let (mc_half, _) = mc_expected_distortion(
                &block_half,
                &std_half,
                &channel,
                trials,
                mix_seed(spec.seeds[0], 3 + 3 * cell),
            )?;
            let (mc_uep, _) = mc_expected_distortion(
                &block_half,
                &report.overall_best,
                &channel,
                trials,
                mix_seed(spec.seeds[0], 4 + 3 * cell),
            )?;

            csv.row(&[
                fnum(plr),
                fnum(abl_ms),
                fnum(model_full / p_full as f64),
                fnum(model_half / p_half as f64),
                fnum(model_uep / p_half as f64),
                fnum(mc_full / p_full as f64),
                fnum(mc_half / p_half as f64),
                fnum(mc_uep / p_half as f64),
                report.overall_best.to_string(),
            ]);
        }
    }

    let csv_text = csv.finish();
    let mut files = vec![("sweep.csv".into(), csv_text.clone())];
    for (column, stem) in [
        (2usize, "sweep_full_std"),
        (3, "sweep_half_std"),
        (4, "sweep_uep"),
    ] {
        files.push((
            format!("{stem}.svg"),
            sweep_svg_from_csv(&csv_text, column, stem),
        ));
    }

    Ok(CmdOutputs {
        files,
        guard_failures,
    })
}

/// Line plot of one sweep column, one series per burst length. Consumes only
/// the CSV text, never the in-memory results.
fn sweep_svg_from_csv(csv: &str, column: usize, title: &str) -> String {
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for line in csv.lines() {
        if line.starts_with('#') || line.starts_with("plr,") || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let (Ok(plr), Ok(y)) = (fields[0].parse::<f64>(), fields[column].parse::<f64>()) else {
            continue;
        };
        series
            .entry(format!("abl {} ms", fields[1].parse::<f64>().unwrap_or(0.0)))
            .or_default()
            .push((plr, y));
    }
    let series: Vec<plot::Series> = series
        .into_iter()
        .map(|(label, points)| plot::Series { label, points })
        .collect();
    plot::line_plot(title, "packet loss rate", "mean distortion per packet", &series)
}

/// Histogram of the matrix count of each block's winning config.
pub fn cmd_histogram(spec: &ExperimentSpec, opts: &RunOptions) -> Result<CmdOutputs, CliError> {
    spec.validate()?;
    let reports = run_stream(spec, opts)?;
    let mut tally: BTreeMap<u32, u64> = BTreeMap::new();
    for report in &reports {
        *tally
            .entry(report.overall_best.n_matrices() as u32)
            .or_insert(0) += 1;
    }
    let total = reports.len() as f64;
    let mut csv = Csv::new("histogram v1", "n_matrices,blocks,percent");
    for (&n_m, &count) in &tally {
        csv.row(&[
            n_m.to_string(),
            count.to_string(),
            fnum(100.0 * count as f64 / total),
        ]);
    }
    let csv_text = csv.finish();
    let svg = histogram_svg_from_csv(&csv_text);
    Ok(CmdOutputs {
        files: vec![
            ("histogram.csv".into(), csv_text),
            ("histogram.svg".into(), svg),
        ],
        guard_failures: Vec::new(),
    })
}

fn histogram_svg_from_csv(csv: &str) -> String {
    let mut bars = Vec::new();
    for line in csv.lines() {
        if line.starts_with('#') || line.starts_with("n_matrices,") || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if let Ok(percent) = fields[2].parse::<f64>() {
            bars.push((format!("{} matrices", fields[0]), percent));
        }
    }
    plot::bar_chart(
        "winning matrix counts",
        "selected configurations (%)",
        &bars,
    )
}
