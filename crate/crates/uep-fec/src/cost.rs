//! Expected-distortion objective: the sum over data packets of weight times
//! loss-after-repair probability.
//!
//! Three evaluators share the per-column failure model "the packet is lost
//! and so is at least one other column member (data or repair)", which is
//! exact for single-pass column-only recovery:
//! * `iid`: closed form under independent losses.
//! * `markov`: exact under the two-state burst channel, by dynamic
//!   programming over member positions. Positions are matrix-local (column
//!   members one matrix width apart, the repair one width after the last
//!   row), an approximation to the transmitted order whose gap is measured
//!   against the Monte-Carlo estimator in tests.
//! * `monte_carlo`: simulates traces over the true transmission schedule and
//!   runs the full decoder; the ground-truth oracle for both analytic modes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::channel::{simulate_losses_with, ChannelParams};
use crate::fec::{assign_packets, decode, realized_distortion, CodecError, ProtectionConfig};
use crate::stream::ProtectionBlock;

#[derive(Debug, Error, PartialEq)]
pub enum CostError {
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("monte carlo needs at least one trial")]
    NoTrials,
}

/// Loss-probability model used by [`expected_distortion`].
#[derive(Debug, Clone, Copy)]
pub enum CostEvaluator {
    Iid { plr: f64 },
    Markov { channel: ChannelParams },
    MonteCarlo { channel: ChannelParams, trials: u64, seed: u64 },
}

impl CostEvaluator {
    /// Convenience dispatch used by the optimizer.
    pub fn evaluate(&self, block: &ProtectionBlock, config: &ProtectionConfig) -> Result<f64, CostError> {
        expected_distortion(block, config, self)
    }
}

/// Probability that a packet stays lost when protected by a column with
/// `column_peers` other members (fellow data packets plus the repair), under
/// independent losses: lost and at least one peer lost.
pub fn p_loss_iid(plr: f64, column_peers: u32) -> f64 {
    plr * (1.0 - (1.0 - plr).powi(column_peers as i32))
}

fn stationary_bad(channel: &ChannelParams) -> f64 {
    if channel.p_g2b == 0.0 {
        0.0
    } else {
        channel.p_g2b / (channel.p_g2b + channel.p_b2g)
    }
}

/// Exact probability, under the two-state channel, that the member at
/// `target_index` is lost and at least one other listed member is lost.
/// `positions` (strictly increasing) holds the wire slots of every column
/// member including the repair.
pub fn p_loss_markov(channel: &ChannelParams, positions: &[usize], target_index: usize) -> f64 {
    assert!(target_index < positions.len());
    debug_assert!(positions.windows(2).all(|w| w[0] < w[1]));

    // dist[channel][target_lost][peer_lost]; channel 1 = bad (always drops).
    let mut dist = [[[0.0f64; 2]; 2]; 2];
    let pi_b = stationary_bad(channel);
    dist[0][0][0] = 1.0 - pi_b;
    dist[1][0][0] = pi_b;

    let observe = |dist: &mut [[[f64; 2]; 2]; 2], is_target: bool| {
        // Mass sitting in the bad state loses this member.
        for t in 0..2 {
            for p in 0..2 {
                let m = dist[1][t][p];
                if m == 0.0 {
                    continue;
                }
                dist[1][t][p] = 0.0;
                if is_target {
                    dist[1][1][p] += m;
                } else {
                    dist[1][t][1] += m;
                }
            }
        }
    };

    observe(&mut dist, target_index == 0);
    for i in 1..positions.len() {
        let gap = positions[i] - positions[i - 1];
        for _ in 0..gap {
            for t in 0..2 {
                for p in 0..2 {
                    let g = dist[0][t][p];
                    let b = dist[1][t][p];
                    dist[0][t][p] = g * (1.0 - channel.p_g2b) + b * channel.p_b2g;
                    dist[1][t][p] = g * channel.p_g2b + b * (1.0 - channel.p_b2g);
                }
            }
        }
        observe(&mut dist, i == target_index);
    }
    dist[0][1][1] + dist[1][1][1]
}

/// Matrix-local member positions for a column with `members` data packets in
/// a `columns`-wide, `rows`-tall matrix: rows are one width apart and the
/// repair sits one width after the full grid's last row.
fn column_positions(columns: u32, rows: u32, members: u32) -> Vec<usize> {
    let mut positions: Vec<usize> = (0..members).map(|r| (r * columns) as usize).collect();
    positions.push((rows * columns) as usize);
    positions
}

/// Per-member loss probabilities for one column shape, by model.
fn column_member_losses(evaluator: &CostEvaluator, columns: u32, rows: u32, members: u32) -> Vec<f64> {
    match evaluator {
        CostEvaluator::Iid { plr } => vec![p_loss_iid(*plr, members); members as usize],
        CostEvaluator::Markov { channel } => {
            let positions = column_positions(columns, rows, members);
            (0..members as usize)
                .map(|t| p_loss_markov(channel, &positions, t))
                .collect()
        }
        CostEvaluator::MonteCarlo { .. } => unreachable!("monte carlo is trace-based"),
    }
}

/// Expected distortion of protecting `block` with `config`: the sum over
/// packets of weight times residual loss probability. Monte-Carlo
/// evaluators delegate to [`mc_expected_distortion`] and return the mean.
pub fn expected_distortion(
    block: &ProtectionBlock,
    config: &ProtectionConfig,
    evaluator: &CostEvaluator,
) -> Result<f64, CostError> {
    if let CostEvaluator::MonteCarlo { channel, trials, seed } = evaluator {
        return Ok(mc_expected_distortion(block, config, channel, *trials, *seed)?.0);
    }
    let assignment = assign_packets(block, config)?;
    let base = block.first_seq();
    let packets = block.packets();
    let mut total = 0.0f64;
    for grid in assignment.grids() {
        let (columns, rows) = (grid.spec.columns, grid.spec.rows);
        // All columns with the same member count share their loss profile.
        let mut by_members: Vec<Option<Vec<f64>>> = vec![None; rows as usize + 1];
        for c in 0..columns {
            let member_seqs: Vec<u64> = (0..rows)
                .filter_map(|r| grid.members[(r * columns + c) as usize])
                .collect();
            let k = member_seqs.len();
            if k == 0 {
                continue;
            }
            let profile = by_members[k]
                .get_or_insert_with(|| column_member_losses(evaluator, columns, rows, k as u32));
            for (t, seq) in member_seqs.iter().enumerate() {
                total += packets[(seq - base) as usize].distortion_weight * profile[t];
            }
        }
    }
    Ok(total)
}

/// Average residual loss probability of each matrix's real members (padding
/// excluded), in matrix order.
pub fn per_matrix_loss_rates(
    block: &ProtectionBlock,
    config: &ProtectionConfig,
    evaluator: &CostEvaluator,
) -> Result<Vec<f64>, CostError> {
    let assignment = assign_packets(block, config)?;
    let mut rates = Vec::with_capacity(config.n_matrices());
    for grid in assignment.grids() {
        let (columns, rows) = (grid.spec.columns, grid.spec.rows);
        let mut sum = 0.0f64;
        let mut count = 0u64;
        let mut by_members: Vec<Option<Vec<f64>>> = vec![None; rows as usize + 1];
        for c in 0..columns {
            let k = (0..rows)
                .filter(|&r| grid.members[(r * columns + c) as usize].is_some())
                .count();
            if k == 0 {
                continue;
            }
            let profile = by_members[k]
                .get_or_insert_with(|| column_member_losses(evaluator, columns, rows, k as u32));
            sum += profile.iter().sum::<f64>();
            count += k as u64;
        }
        rates.push(if count == 0 { 0.0 } else { sum / count as f64 });
    }
    Ok(rates)
}

fn trial_seed(seed: u64, trial: u64) -> u64 {
    // SplitMix64 step keyed by (seed, trial); decorrelates nearby trials.
    let mut z = seed ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Monte-Carlo point estimate: `(mean, standard error of the mean)`.
pub type McEstimate = (f64, f64);

/// Monte-Carlo estimate of the expected distortion: simulate a loss trace
/// over the transmission schedule, decode, and accumulate the distortion of
/// what stayed lost. Returns (mean, standard error). Per-trial seeds derive
/// from `(seed, trial)`, so the result is independent of parallelism.
pub fn mc_expected_distortion(
    block: &ProtectionBlock,
    config: &ProtectionConfig,
    channel: &ChannelParams,
    trials: u64,
    seed: u64,
) -> Result<McEstimate, CostError> {
    if trials == 0 {
        return Err(CostError::NoTrials);
    }
    let assignment = assign_packets(block, config)?;
    let n_slots = assignment.schedule().len();
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, trial));
            let trace = simulate_losses_with(channel, n_slots, &mut rng);
            let outcome = decode(&assignment, &trace).expect("trace sized to schedule");
            realized_distortion(block, &outcome.unrecoverable)
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / trials as f64;
    let stderr = if trials < 2 {
        0.0
    } else {
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
            / (trials as f64 - 1.0);
        (var / trials as f64).sqrt()
    };
    Ok((mean, stderr))
}
