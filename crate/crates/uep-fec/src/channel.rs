//! Two-state burst-loss channel.
//!
//! The channel sits in a good or bad state per packet slot; bad always drops,
//! good always delivers. Transition probabilities are derived from a target
//! packet loss rate `plr` and a mean burst length `abl` in packets:
//!
//! - `p_b2g = 1 / abl` (bursts are geometric with mean `abl`),
//! - `p_g2b = plr * p_b2g / (1 - plr)` (stationary loss probability `plr`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::rate::CodeRate;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("packet loss rate must lie in [0, 1), got {0}")]
    BadPlr(f64),
    #[error("mean burst length must be >= 1 packet, got {0}")]
    BadAbl(f64),
    #[error("plr {plr} with burst length {abl} needs p_g2b = {p_g2b} > 1")]
    NotAProbability { plr: f64, abl: f64, p_g2b: f64 },
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChannelParams {
    pub p_g2b: f64,
    pub p_b2g: f64,
    pub plr: f64,
    pub abl_packets: f64,
}

/// Derives transition probabilities from stationary loss rate and mean burst
/// length. `plr = 0` is the lossless limit (`p_g2b = 0`).
pub fn derive_ge(plr: f64, abl_packets: f64) -> Result<ChannelParams, ChannelError> {
    if !(0.0..1.0).contains(&plr) {
        return Err(ChannelError::BadPlr(plr));
    }
    if !(abl_packets >= 1.0) {
        return Err(ChannelError::BadAbl(abl_packets));
    }
    let p_b2g = 1.0 / abl_packets;
    let p_g2b = plr * p_b2g / (1.0 - plr);
    if p_g2b > 1.0 {
        return Err(ChannelError::NotAProbability {
            plr,
            abl: abl_packets,
            p_g2b,
        });
    }
    Ok(ChannelParams {
        p_g2b,
        p_b2g,
        plr,
        abl_packets,
    })
}

/// Converts a burst length in seconds to packets on the wire, where the wire
/// rate includes repair overhead (`bitrate / r`). Clamped to at least one
/// packet, fractional values allowed above that.
pub fn abl_packets_from_time(
    abl_s: f64,
    bitrate_bps: f64,
    rate: CodeRate,
    payload_bytes: u64,
) -> f64 {
    let wire_pps = rate.wire_bitrate(bitrate_bps) / (8.0 * payload_bytes as f64);
    (abl_s * wire_pps).max(1.0)
}

/// Per-slot loss flags; `true` means the packet in that slot was lost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LossTrace(Vec<bool>);

impl LossTrace {
    pub fn new(flags: Vec<bool>) -> Self {
        Self(flags)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_lost(&self, position: usize) -> bool {
        self.0[position]
    }

    pub fn flags(&self) -> &[bool] {
        &self.0
    }

    pub fn loss_count(&self) -> usize {
        self.0.iter().filter(|&&l| l).count()
    }

    /// Loss runs as `start,length` CSV rows (run-length encoding).
    pub fn runs_to_csv(&self) -> String {
        let mut out = String::from("start,length\n");
        let mut i = 0;
        while i < self.0.len() {
            if self.0[i] {
                let start = i;
                while i < self.0.len() && self.0[i] {
                    i += 1;
                }
                out.push_str(&format!("{},{}\n", start, i - start));
            } else {
                i += 1;
            }
        }
        out
    }
}

/// Simulates `n` packet slots. The initial state is drawn from the stationary
/// distribution, so traces are stationary from the first slot.
pub fn simulate_losses(params: &ChannelParams, n: usize, seed: u64) -> LossTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_losses_with(params, n, &mut rng)
}

/// As [`simulate_losses`], drawing from a caller-supplied RNG stream.
pub fn simulate_losses_with<R: Rng>(params: &ChannelParams, n: usize, rng: &mut R) -> LossTrace {
    let mut flags = Vec::with_capacity(n);
    let mut bad = rng.gen::<f64>() < params.plr;
    for _ in 0..n {
        flags.push(bad);
        bad = if bad {
            rng.gen::<f64>() >= params.p_b2g
        } else {
            rng.gen::<f64>() < params.p_g2b
        };
    }
    LossTrace(flags)
}

/// Empirical `(loss_rate, mean_burst_length)` of a trace. Both zero for a
/// lossless trace.
pub fn empirical_stats(trace: &LossTrace) -> (f64, f64) {
    let losses = trace.loss_count();
    if losses == 0 || trace.is_empty() {
        return (0.0, 0.0);
    }
    let mut runs = 0usize;
    let mut prev = false;
    for &l in trace.flags() {
        if l && !prev {
            runs += 1;
        }
        prev = l;
    }
    (
        losses as f64 / trace.len() as f64,
        losses as f64 / runs as f64,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derives_reference_parameters() {
        let p = derive_ge(0.01, 1.0).unwrap();
        assert!((p.p_b2g - 1.0).abs() < 1e-12);
        assert!((p.p_g2b - 0.01 / 0.99).abs() < 1e-12);
        assert!((p.p_g2b - 0.010101).abs() < 1e-6);

        let p = derive_ge(0.5, 2.0).unwrap();
        assert!((p.p_b2g - 0.5).abs() < 1e-12);
        assert!((p.p_g2b - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(derive_ge(1.0, 2.0), Err(ChannelError::BadPlr(_))));
        assert!(matches!(derive_ge(-0.1, 2.0), Err(ChannelError::BadPlr(_))));
        assert!(matches!(derive_ge(0.1, 0.5), Err(ChannelError::BadAbl(_))));
        // p_g2b would exceed 1.
        assert!(matches!(
            derive_ge(0.9, 1.0),
            Err(ChannelError::NotAProbability { .. })
        ));
    }

    #[test]
    fn lossless_limit() {
        let p = derive_ge(0.0, 4.0).unwrap();
        let trace = simulate_losses(&p, 10_000, 3);
        assert_eq!(trace.loss_count(), 0);
    }

    #[test]
    fn abl_time_conversion_includes_repair_overhead() {
        let r = CodeRate::new(5, 6).unwrap();
        // 8 Mbps payload -> 9.6 Mbps wire -> 890.2 pkt/s; 1 ms clamps to 1.
        let one_ms = abl_packets_from_time(0.001, 8e6, r, 1348);
        assert_eq!(one_ms, 1.0);
        let five_ms = abl_packets_from_time(0.005, 8e6, r, 1348);
        assert!((five_ms - 4.451).abs() < 1e-3, "got {five_ms}");
        let three_ms_12m = abl_packets_from_time(0.003, 12e6, r, 1348);
        assert!((three_ms_12m - 4.006).abs() < 1e-3, "got {three_ms_12m}");
    }

    #[test]
    fn stationary_loss_rate_within_three_sigma() {
        let n = 1_000_000;
        for (plr, abl) in [(0.01, 1.0), (0.01, 5.0), (0.025, 3.0), (0.1, 4.0)] {
            let p = derive_ge(plr, abl).unwrap();
            let trace = simulate_losses(&p, n, 1234);
            let (rate, _) = empirical_stats(&trace);
            // Correlated mean: variance scales by (1 + lambda) / (1 - lambda)
            // with lambda the chain's second eigenvalue.
            let lambda = 1.0 - p.p_g2b - p.p_b2g;
            let sigma =
                (plr * (1.0 - plr) / n as f64 * (1.0 + lambda) / (1.0 - lambda)).sqrt();
            assert!(
                (rate - plr).abs() < 3.0 * sigma,
                "plr {plr} abl {abl}: rate {rate} vs sigma {sigma}"
            );
        }
    }

    #[test]
    fn mean_burst_length_within_five_percent() {
        let n = 1_000_000;
        for (plr, abl) in [(0.01, 3.0), (0.02, 5.0), (0.05, 2.0)] {
            let p = derive_ge(plr, abl).unwrap();
            let trace = simulate_losses(&p, n, 99);
            let (_, mean_burst) = empirical_stats(&trace);
            assert!(
                (mean_burst - abl).abs() / abl < 0.05,
                "plr {plr} abl {abl}: burst {mean_burst}"
            );
        }
    }

    #[test]
    fn unit_burst_length_never_repeats_losses() {
        let p = derive_ge(0.05, 1.0).unwrap();
        let trace = simulate_losses(&p, 100_000, 17);
        for w in trace.flags().windows(2) {
            assert!(!(w[0] && w[1]), "consecutive losses at abl = 1");
        }
    }

    #[test]
    fn rle_export_round_trips_runs() {
        let trace = LossTrace::new(vec![
            false, true, true, false, true, false, false, true, true, true,
        ]);
        assert_eq!(trace.runs_to_csv(), "start,length\n1,2\n4,1\n7,3\n");
        let (rate, burst) = empirical_stats(&trace);
        assert!((rate - 0.6).abs() < 1e-12);
        assert!((burst - 2.0).abs() < 1e-12);
    }

    #[test]
    fn traces_are_deterministic_per_seed() {
        let p = derive_ge(0.02, 3.0).unwrap();
        assert_eq!(simulate_losses(&p, 1000, 5), simulate_losses(&p, 1000, 5));
        assert_ne!(simulate_losses(&p, 1000, 5), simulate_losses(&p, 1000, 6));
    }
}
