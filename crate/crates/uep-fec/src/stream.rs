//! Synthetic GOP-structured packet streams and protection blocks.
//!
//! A stream is a flat sequence of fixed-size packets grouped into frames and
//! GOPs. Each packet carries a distortion weight: the number of packets from
//! itself to the end of its GOP (itself included), i.e. how many packets
//! render wrong if this one is lost and everything after it in the GOP
//! depends on it. Weights therefore decay linearly inside a GOP and reset at
//! GOP boundaries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::rate::CodeRate;

#[derive(Debug, Error, PartialEq)]
pub enum StreamError {
    #[error("parameters yield zero packets (bitrate {bitrate_bps}, duration {duration_s} s)")]
    ZeroPackets { bitrate_bps: f64, duration_s: f64 },
    #[error("{packets} packets cannot cover {frames} frames (every frame needs one)")]
    TooFewPackets { packets: u64, frames: u64 },
    #[error("window of {window_s} s yields an empty block")]
    EmptyBlock { window_s: f64 },
    #[error("block of {n_data} data packets gets {n_fec} repair packets; need 1 <= n_fec < n_data")]
    BadRepairCount { n_data: u64, n_fec: u64 },
    #[error("payload size must be positive")]
    ZeroPayload,
    #[error("frame rate and GOP length must be positive")]
    BadGop,
}

/// GOP shape: `frames_per_gop` frames, the first of which is the intra frame.
/// Intra frames get a 4x packet allotment relative to inter frames.
#[derive(Debug, Clone, Copy, Serialize, serde::Deserialize)]
pub struct GopSpec {
    pub frames_per_gop: u64,
    pub frame_rate: f64,
}

impl Default for GopSpec {
    fn default() -> Self {
        Self {
            frames_per_gop: 15,
            frame_rate: 30.0,
        }
    }
}

const INTRA_WEIGHT: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StreamPacket {
    pub seq: u64,
    pub payload_bytes: u64,
    pub gop_index: u64,
    pub frame_index: u64,
    /// Packets from this one to the end of its GOP, itself included.
    pub distortion_weight: f64,
}

/// A contiguous run of stream packets protected as one unit, plus the repair
/// budget it is entitled to. Invariant: `1 <= n_fec < n_data = packets.len()`.
#[derive(Debug, Clone)]
pub struct ProtectionBlock {
    packets: Vec<StreamPacket>,
    n_fec: u64,
}

impl ProtectionBlock {
    pub fn new(packets: Vec<StreamPacket>, n_fec: u64) -> Result<Self, StreamError> {
        let n_data = packets.len() as u64;
        if n_fec == 0 || n_fec >= n_data {
            return Err(StreamError::BadRepairCount { n_data, n_fec });
        }
        Ok(Self { packets, n_fec })
    }

    /// Block of `n_data` packets with every weight equal to one.
    pub fn uniform(n_data: u64, n_fec: u64) -> Result<Self, StreamError> {
        let packets = (0..n_data)
            .map(|seq| StreamPacket {
                seq,
                payload_bytes: 1348,
                gop_index: 0,
                frame_index: 0,
                distortion_weight: 1.0,
            })
            .collect();
        Self::new(packets, n_fec)
    }

    pub fn n_data(&self) -> u64 {
        self.packets.len() as u64
    }

    pub fn n_fec(&self) -> u64 {
        self.n_fec
    }

    pub fn packets(&self) -> &[StreamPacket] {
        &self.packets
    }

    pub fn first_seq(&self) -> u64 {
        self.packets[0].seq
    }
}

/// Packet count that fits a payload bitrate over a window:
/// `floor(bitrate * window / (8 * payload))`.
pub fn packet_count(bitrate_bps: f64, window_s: f64, payload_bytes: u64) -> u64 {
    (bitrate_bps * window_s / (8.0 * payload_bytes as f64)).floor() as u64
}

/// Builds a synthetic stream. Packets are spread over frames by a 4:1
/// intra:inter allotment with mild seeded jitter; every frame gets at least
/// one packet; weights follow the suffix rule. Deterministic given the seed.
pub fn synthesize_stream(
    bitrate_bps: f64,
    duration_s: f64,
    payload_bytes: u64,
    gop: &GopSpec,
    seed: u64,
) -> Result<Vec<StreamPacket>, StreamError> {
    if payload_bytes == 0 {
        return Err(StreamError::ZeroPayload);
    }
    if gop.frames_per_gop == 0 || !(gop.frame_rate > 0.0) {
        return Err(StreamError::BadGop);
    }
    let n_packets = packet_count(bitrate_bps, duration_s, payload_bytes);
    if n_packets == 0 {
        return Err(StreamError::ZeroPackets {
            bitrate_bps,
            duration_s,
        });
    }
    let n_frames = ((duration_s * gop.frame_rate).round() as u64).max(1);
    if n_packets < n_frames {
        return Err(StreamError::TooFewPackets {
            packets: n_packets,
            frames: n_frames,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..n_frames)
        .map(|f| {
            let base = if f % gop.frames_per_gop == 0 {
                INTRA_WEIGHT
            } else {
                1.0
            };
            base * (1.0 + 0.2 * (rng.gen::<f64>() - 0.5))
        })
        .collect();
    let per_frame = apportion(n_packets - n_frames, &weights);

    let mut packets = Vec::with_capacity(n_packets as usize);
    let mut seq = 0;
    for f in 0..n_frames {
        for _ in 0..1 + per_frame[f as usize] {
            packets.push(StreamPacket {
                seq,
                payload_bytes,
                gop_index: f / gop.frames_per_gop,
                frame_index: f,
                distortion_weight: 0.0,
            });
            seq += 1;
        }
    }
    let weights = distortion_weights(&packets);
    for (p, w) in packets.iter_mut().zip(weights) {
        p.distortion_weight = w;
    }
    Ok(packets)
}

/// Largest-remainder apportionment of `total` units over positive weights.
fn apportion(total: u64, weights: &[f64]) -> Vec<u64> {
    let sum: f64 = weights.iter().sum();
    let shares: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut out: Vec<u64> = shares.iter().map(|s| s.floor() as u64).collect();
    let mut leftover = total - out.iter().sum::<u64>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = shares[a] - shares[a].floor();
        let fb = shares[b] - shares[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for i in order {
        if leftover == 0 {
            break;
        }
        out[i] += 1;
        leftover -= 1;
    }
    out
}

/// Distortion weight of each packet: the count of packets from it to the end
/// of its GOP, itself included.
pub fn distortion_weights(stream: &[StreamPacket]) -> Vec<f64> {
    let mut weights = vec![0.0; stream.len()];
    let mut i = 0;
    while i < stream.len() {
        let gop = stream[i].gop_index;
        let mut end = i;
        while end < stream.len() && stream[end].gop_index == gop {
            end += 1;
        }
        for (k, w) in weights[i..end].iter_mut().enumerate() {
            *w = (end - i - k) as f64;
        }
        i = end;
    }
    weights
}

/// Splits a stream into protection blocks of
/// `packet_count(bitrate, window, payload)` packets each, dropping a trailing
/// partial block. Each block's repair budget comes from the code rate.
pub fn partition_blocks(
    stream: &[StreamPacket],
    bitrate_bps: f64,
    fec_window_s: f64,
    payload_bytes: u64,
    rate: CodeRate,
) -> Result<Vec<ProtectionBlock>, StreamError> {
    let n_data = packet_count(bitrate_bps, fec_window_s, payload_bytes);
    if n_data == 0 {
        return Err(StreamError::EmptyBlock {
            window_s: fec_window_s,
        });
    }
    let n_fec = rate.repair_count(n_data);
    stream
        .chunks_exact(n_data as usize)
        .map(|chunk| ProtectionBlock::new(chunk.to_vec(), n_fec))
        .collect()
}

/// Stream dump: packets as an array of `{seq, bytes, gop, frame, weight}`.
pub fn stream_to_json(stream: &[StreamPacket]) -> String {
    #[derive(Serialize)]
    struct Row {
        seq: u64,
        bytes: u64,
        gop: u64,
        frame: u64,
        weight: f64,
    }
    let rows: Vec<Row> = stream
        .iter()
        .map(|p| Row {
            seq: p.seq,
            bytes: p.payload_bytes,
            gop: p.gop_index,
            frame: p.frame_index,
            weight: p.distortion_weight,
        })
        .collect();
    serde_json::to_string_pretty(&rows).expect("stream serialization")
}
