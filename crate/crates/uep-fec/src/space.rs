//! The configuration space of one subproblem: all matrix configurations with
//! a fixed matrix count that protect a given block.
//!
//! Counting and enumeration treat every matrix before the last as exactly
//! full and require at least one member per column of the last matrix. The
//! restricted space additionally imposes non-increasing columns and
//! non-decreasing rows across matrices. Enumeration is the ground truth for
//! the restricted count: the closed-form recursion is checked against it in
//! tests, and a floor-bound variant of that recursion is kept only to
//! document where its iterator bounds disagree.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use thiserror::Error;

use crate::fec::{MatrixSpec, ProtectionConfig};

#[derive(Debug, Error, PartialEq)]
pub enum SpaceError {
    #[error("configs have different matrix counts ({a} vs {b})")]
    MatrixCountMismatch { a: usize, b: usize },
    #[error("cannot sample from an empty space")]
    EmptySpace,
    #[error("config is not a member of this space")]
    NotInSpace,
}

/// Column budget, coverage, and (optionally) the monotone ordering rules.
pub fn is_feasible(config: &ProtectionConfig, n_data: u64, n_fec: u64, restricted: bool) -> bool {
    config.total_columns() == n_fec
        && config.covers(n_data)
        && (!restricted || (config.columns_non_increasing() && config.rows_non_decreasing()))
}

fn div_ceil_i128(a: i128, b: i128) -> i128 {
    debug_assert!(a >= 0 && b > 0);
    (a + b - 1) / b
}

/// Number of configs with exactly `n_matrices` matrices, no ordering rules.
/// The single-matrix base case counts one config unconditionally.
pub fn count_unrestricted(n_data: u64, n_fec: u64, n_matrices: u32) -> u128 {
    let mut memo = HashMap::new();
    count_u(n_data as i128, n_fec as i128, n_matrices, &mut memo)
}

fn count_u(p: i128, f: i128, n: u32, memo: &mut HashMap<(i128, i128, u32), u128>) -> u128 {
    if n == 1 {
        return 1;
    }
    if let Some(&v) = memo.get(&(p, f, n)) {
        return v;
    }
    let mut total = 0u128;
    // Leave at least one column per remaining matrix, and enough packets to
    // put one member in every remaining column.
    for c in 1..=f - (n as i128 - 1) {
        let r_hi = (p - f + c).div_euclid(c);
        for r in 1..=r_hi {
            total += count_u(p - c * r, f - c, n - 1, memo);
        }
    }
    memo.insert((p, f, n), total);
    total
}

/// Number of configs in the restricted space. Agrees with
/// [`enumerate_restricted`] by construction (same bounds); tests verify both
/// against brute force.
pub fn count_restricted(n_data: u64, n_fec: u64, n_matrices: u32) -> u128 {
    let mut memo = HashMap::new();
    count_r(
        n_data as i128,
        n_fec as i128,
        n_matrices,
        n_fec as i128,
        1,
        &mut memo,
    )
}

type RKey = (i128, i128, u32, i128, i128);

fn count_r(
    p: i128,
    f: i128,
    n: u32,
    c_max: i128,
    r_min: i128,
    memo: &mut HashMap<RKey, u128>,
) -> u128 {
    if n == 1 {
        // Columns and rows of the last matrix are forced; it only remains to
        // check the ordering rules and that no column is left empty.
        return u128::from(f >= 1 && f <= c_max && p >= f && div_ceil_i128(p, f) >= r_min);
    }
    let key = (p, f, n, c_max, r_min);
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let mut total = 0u128;
    // Non-increasing columns force the current matrix to hold at least the
    // average of the remaining column budget.
    let lo = div_ceil_i128(f, n as i128).max(1);
    let hi = c_max.min(f - (n as i128 - 1));
    for c in lo..=hi {
        let r_hi = (p - f + c).div_euclid(c);
        for r in r_min..=r_hi {
            total += count_r(p - c * r, f - c, n - 1, c, r, memo);
        }
    }
    memo.insert(key, total);
    total
}

/// Restricted-count recursion with floor-based bounds: the column iterator
/// starts at `floor(n_fec / n_matrices)` and the base case tests
/// `floor((p - f) / f) >= r_min` without re-checking the column ordering.
/// Disagrees with [`count_restricted`] on some inputs (see tests); retained
/// only to document the divergence.
pub fn count_restricted_floor_bounds(n_data: u64, n_fec: u64, n_matrices: u32) -> u128 {
    let f = n_fec as i128;
    count_r_floor(
        n_data as i128,
        f,
        n_matrices,
        f - (n_matrices as i128 - 1),
        1,
    )
}

fn count_r_floor(p: i128, f: i128, n: u32, c_max: i128, r_min: i128) -> u128 {
    if n == 1 {
        return u128::from(f >= 1 && (p - f).div_euclid(f) >= r_min);
    }
    let lo = f.div_euclid(n as i128).max(1);
    let hi = c_max.min(f - (n as i128 - 1));
    let mut total = 0u128;
    for c in lo..=hi {
        let r_hi = (p - f + c).div_euclid(c);
        for r in r_min..=r_hi {
            total += count_r_floor(p - c * r, f - c, n - 1, c, r);
        }
    }
    total
}

/// A fully materialized restricted space in canonical (lexicographic) order,
/// with per-coordinate extrema and the derived initial search radius.
///
/// Only the first `n_matrices - 1` matrices carry free coordinates: the last
/// matrix's dimensions are forced by the column budget and coverage, so
/// distances and extrema ignore it.
#[derive(Debug, Clone)]
pub struct EnumeratedSpace {
    n_data: u64,
    n_fec: u64,
    n_matrices: u32,
    configs: Vec<ProtectionConfig>,
    /// Flattened `(C_1, R_1, ..., C_{n-1}, R_{n-1})` per config.
    coords: Vec<u32>,
    coord_min: Vec<u32>,
    coord_max: Vec<u32>,
    d_init: f64,
}

/// Lists every feasible restricted config, in lexicographic coordinate order.
pub fn enumerate_restricted(n_data: u64, n_fec: u64, n_matrices: u32) -> EnumeratedSpace {
    let mut configs = Vec::new();
    let mut prefix = Vec::with_capacity(n_matrices as usize);
    gen_r(
        n_data as i128,
        n_fec as i128,
        n_matrices,
        n_fec as i128,
        1,
        &mut prefix,
        &mut configs,
    );

    let stride = 2 * (n_matrices as usize - 1);
    let mut coords = Vec::with_capacity(configs.len() * stride);
    for config in &configs {
        for m in &config.matrices()[..n_matrices as usize - 1] {
            coords.push(m.columns);
            coords.push(m.rows);
        }
    }
    let mut coord_min = vec![u32::MAX; stride];
    let mut coord_max = vec![0u32; stride];
    for row in coords.chunks_exact(stride.max(1)) {
        for (k, &v) in row.iter().enumerate() {
            coord_min[k] = coord_min[k].min(v);
            coord_max[k] = coord_max[k].max(v);
        }
    }
    if configs.is_empty() {
        coord_min = vec![0; stride];
        coord_max = vec![0; stride];
    }
    let d_init = coord_min
        .iter()
        .zip(&coord_max)
        .map(|(&lo, &hi)| {
            let d = (hi - lo) as f64;
            d * d
        })
        .sum::<f64>()
        .sqrt();

    EnumeratedSpace {
        n_data,
        n_fec,
        n_matrices,
        configs,
        coords,
        coord_min,
        coord_max,
        d_init,
    }
}

fn gen_r(
    p: i128,
    f: i128,
    n: u32,
    c_max: i128,
    r_min: i128,
    prefix: &mut Vec<MatrixSpec>,
    out: &mut Vec<ProtectionConfig>,
) {
    if n == 1 {
        if f >= 1 && f <= c_max && p >= f && div_ceil_i128(p, f) >= r_min {
            let mut dims = prefix.clone();
            dims.push(MatrixSpec::new(f as u32, div_ceil_i128(p, f) as u32));
            out.push(ProtectionConfig::new(dims).expect("nonzero dims"));
        }
        return;
    }
    let lo = div_ceil_i128(f, n as i128).max(1);
    let hi = c_max.min(f - (n as i128 - 1));
    for c in lo..=hi {
        let r_hi = (p - f + c).div_euclid(c);
        for r in r_min..=r_hi {
            prefix.push(MatrixSpec::new(c as u32, r as u32));
            gen_r(p - c * r, f - c, n - 1, c, r, prefix, out);
            prefix.pop();
        }
    }
}

/// Lists every feasible config without the ordering rules, in lexicographic
/// order. Sizes grow fast (see the counting tests); callers are expected to
/// check [`count_unrestricted`] first.
pub fn enumerate_unrestricted(n_data: u64, n_fec: u64, n_matrices: u32) -> Vec<ProtectionConfig> {
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(n_matrices as usize);
    gen_u(
        n_data as i128,
        n_fec as i128,
        n_matrices,
        &mut prefix,
        &mut out,
    );
    out
}

fn gen_u(
    p: i128,
    f: i128,
    n: u32,
    prefix: &mut Vec<MatrixSpec>,
    out: &mut Vec<ProtectionConfig>,
) {
    if n == 1 {
        if f >= 1 && p >= f {
            let mut dims = prefix.clone();
            dims.push(MatrixSpec::new(f as u32, div_ceil_i128(p, f) as u32));
            out.push(ProtectionConfig::new(dims).expect("nonzero dims"));
        }
        return;
    }
    for c in 1..=f - (n as i128 - 1) {
        let r_hi = (p - f + c).div_euclid(c);
        for r in 1..=r_hi {
            prefix.push(MatrixSpec::new(c as u32, r as u32));
            gen_u(p - c * r, f - c, n - 1, prefix, out);
            prefix.pop();
        }
    }
}

/// Euclidean distance over the free coordinates (first `n - 1` matrices).
/// Single-matrix configs are all at distance 0.
pub fn distance(s1: &ProtectionConfig, s2: &ProtectionConfig) -> Result<f64, SpaceError> {
    if s1.n_matrices() != s2.n_matrices() {
        return Err(SpaceError::MatrixCountMismatch {
            a: s1.n_matrices(),
            b: s2.n_matrices(),
        });
    }
    let n = s1.n_matrices();
    let mut acc = 0f64;
    for (a, b) in s1.matrices()[..n - 1].iter().zip(&s2.matrices()[..n - 1]) {
        let dc = a.columns as f64 - b.columns as f64;
        let dr = a.rows as f64 - b.rows as f64;
        acc += dc * dc + dr * dr;
    }
    Ok(acc.sqrt())
}

impl EnumeratedSpace {
    pub fn n_data(&self) -> u64 {
        self.n_data
    }

    pub fn n_fec(&self) -> u64 {
        self.n_fec
    }

    pub fn n_matrices(&self) -> u32 {
        self.n_matrices
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn configs(&self) -> &[ProtectionConfig] {
        &self.configs
    }

    pub fn config(&self, index: usize) -> &ProtectionConfig {
        &self.configs[index]
    }

    /// Canonical position of a config, if it belongs to the space.
    pub fn index_of(&self, config: &ProtectionConfig) -> Option<usize> {
        self.configs.binary_search(config).ok()
    }

    pub fn coord_min(&self) -> &[u32] {
        &self.coord_min
    }

    pub fn coord_max(&self) -> &[u32] {
        &self.coord_max
    }

    /// Greatest possible distance between two members, from the coordinate
    /// extrema. Zero for empty and single-matrix spaces.
    pub fn d_init(&self) -> f64 {
        self.d_init
    }

    fn stride(&self) -> usize {
        2 * (self.n_matrices as usize - 1)
    }

    pub fn distance_by_index(&self, a: usize, b: usize) -> f64 {
        let stride = self.stride();
        let (ca, cb) = (
            &self.coords[a * stride..(a + 1) * stride],
            &self.coords[b * stride..(b + 1) * stride],
        );
        ca.iter()
            .zip(cb)
            .map(|(&x, &y)| {
                let d = x as f64 - y as f64;
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Indices of all configs within `radius` of `center`, center included.
    pub fn neighborhood_indices(&self, center: usize, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.scan_neighborhood(center, radius, |i| out.push(i));
        out
    }

    /// Size of the neighborhood without materializing it.
    pub fn neighborhood_size(&self, center: usize, radius: f64) -> usize {
        let mut n = 0usize;
        self.scan_neighborhood(center, radius, |_| n += 1);
        n
    }

    /// True when a ball of this radius covers the whole space regardless of
    /// its center. The bounding-box diagonal bounds every pairwise distance.
    pub fn ball_covers_space(&self, radius: f64) -> bool {
        radius >= self.d_init()
    }

    fn scan_neighborhood(&self, center: usize, radius: f64, mut visit: impl FnMut(usize)) {
        let stride = self.stride();
        if stride == 0 || self.ball_covers_space(radius) {
            // All configs coincide in coordinate space, or the ball covers
            // everything; either way no distances need computing.
            if radius >= 0.0 {
                for i in 0..self.configs.len() {
                    visit(i);
                }
            }
            return;
        }
        // Configs sort lexicographically, so the first coordinate is
        // non-decreasing; |delta C_1| <= radius bounds the scan band.
        let c1 = |i: usize| self.coords[i * stride];
        let center_c1 = c1(center) as f64;
        let lo_c1 = (center_c1 - radius).ceil().max(0.0) as u32;
        let hi_c1 = (center_c1 + radius).floor() as u32;
        let lo = partition_point(self.configs.len(), |i| c1(i) < lo_c1);
        let hi = partition_point(self.configs.len(), |i| c1(i) <= hi_c1);
        for i in lo..hi {
            if self.distance_by_index(center, i) <= radius {
                visit(i);
            }
        }
    }

    /// Member configs within `radius` of `s` (which must belong to the
    /// space), `s` included.
    pub fn neighborhood(
        &self,
        s: &ProtectionConfig,
        radius: f64,
    ) -> Result<Vec<&ProtectionConfig>, SpaceError> {
        let center = self.index_of(s).ok_or(SpaceError::NotInSpace)?;
        Ok(self
            .neighborhood_indices(center, radius)
            .into_iter()
            .map(|i| &self.configs[i])
            .collect())
    }

    /// Uniform draw, deterministic in the seed.
    pub fn sample_uniform(&self, seed: u64) -> Result<&ProtectionConfig, SpaceError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(&self.configs[self.sample_index_with(&mut rng)?])
    }

    pub fn sample_index_with<R: Rng>(&self, rng: &mut R) -> Result<usize, SpaceError> {
        if self.configs.is_empty() {
            return Err(SpaceError::EmptySpace);
        }
        Ok(rng.gen_range(0..self.configs.len()))
    }
}

fn partition_point(len: usize, pred: impl Fn(usize) -> bool) -> usize {
    let mut lo = 0usize;
    let mut hi = len;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}
