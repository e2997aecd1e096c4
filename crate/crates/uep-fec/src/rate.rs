//! Exact rational FEC code rate.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RateError {
    #[error("code rate must satisfy 0 < data < total, got {data}/{total}")]
    OutOfRange { data: u64, total: u64 },
    #[error("code rate must be written as DATA/TOTAL, got {0:?}")]
    Malformed(String),
}

/// FEC code rate `data/total`: `data` payload packets per `total` packets on
/// the wire. Kept as integers so overhead rounding is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeRate {
    data: u64,
    total: u64,
}

impl CodeRate {
    pub fn new(data: u64, total: u64) -> Result<Self, RateError> {
        if data == 0 || data >= total {
            return Err(RateError::OutOfRange { data, total });
        }
        Ok(Self { data, total })
    }

    pub fn data(&self) -> u64 {
        self.data
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Rate as a float in (0, 1).
    pub fn value(&self) -> f64 {
        self.data as f64 / self.total as f64
    }

    /// Repair packet count for a block of `n_data` packets:
    /// `n_data * (1/r - 1)` rounded half-up, computed exactly.
    pub fn repair_count(&self, n_data: u64) -> u64 {
        // round_half_up(a/b) = floor((2a + b) / 2b)
        let a = n_data * (self.total - self.data);
        let b = self.data;
        (2 * a + b) / (2 * b)
    }

    /// Wire bitrate for a given payload bitrate (repair overhead included).
    pub fn wire_bitrate(&self, payload_bitrate: f64) -> f64 {
        payload_bitrate / self.value()
    }
}

impl fmt::Display for CodeRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.data, self.total)
    }
}

impl FromStr for CodeRate {
    type Err = RateError;

    fn from_str(s: &str) -> Result<Self, RateError> {
        let (d, t) = s
            .split_once('/')
            .ok_or_else(|| RateError::Malformed(s.to_owned()))?;
        let data = d
            .trim()
            .parse()
            .map_err(|_| RateError::Malformed(s.to_owned()))?;
        let total = t
            .trim()
            .parse()
            .map_err(|_| RateError::Malformed(s.to_owned()))?;
        CodeRate::new(data, total)
    }
}

impl Serialize for CodeRate {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for CodeRate {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}
