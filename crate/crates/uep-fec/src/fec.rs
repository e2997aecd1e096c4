//! Interleaving-matrix FEC codec.
//!
//! A protection config is an ordered list of matrices. Packets are ranked by
//! distortion weight (ties by sequence number) and the first matrix takes the
//! highest-ranked `columns * rows` packets, the second the next chunk, and so
//! on. Inside a matrix, members are re-sorted by sequence number and placed
//! row by row, so a column holds members `columns` positions apart. Every
//! column emits one XOR repair packet; the optional two-dimensional mode adds
//! one repair per row. Only the last matrix may hold virtual padding slots,
//! and padding is never transmitted or lost.
//!
//! Decoding is iterative peeling: any line (column, or row when row repairs
//! are in use) with exactly one missing member whose repair arrived rebuilds
//! that member, and rebuilt packets immediately count as present for every
//! other line, repeated to a fixpoint.

use serde::Serialize;
use std::collections::VecDeque;
use std::fmt;
use thiserror::Error;

use crate::channel::LossTrace;
use crate::stream::ProtectionBlock;

#[derive(Debug, Error, PartialEq)]
pub enum CodecError {
    #[error("config must contain at least one matrix with nonzero dimensions")]
    EmptyConfig,
    #[error("config has {columns} columns but the block budgets {n_fec} repair packets")]
    ColumnBudgetMismatch { columns: u64, n_fec: u64 },
    #[error("config does not cover {n_data} data packets (capacity {capacity}, slack bound {slack_bound})")]
    CoverageViolation {
        n_data: u64,
        capacity: u64,
        slack_bound: u64,
    },
    #[error("standard config needs 1 <= n_fec < n_data, got n_data {n_data}, n_fec {n_fec}")]
    BadStandardShape { n_data: u64, n_fec: u64 },
    #[error("trace covers {got} slots but the schedule has {want}")]
    TraceLengthMismatch { got: usize, want: usize },
}

/// One interleaving matrix: `columns` XOR groups of `rows` members each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, serde::Deserialize)]
pub struct MatrixSpec {
    pub columns: u32,
    pub rows: u32,
}

impl MatrixSpec {
    pub fn new(columns: u32, rows: u32) -> Self {
        Self { columns, rows }
    }

    pub fn capacity(&self) -> u64 {
        self.columns as u64 * self.rows as u64
    }
}

impl fmt::Display for MatrixSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}x{}]", self.columns, self.rows)
    }
}

/// Ordered matrix list. Matrix order is protection order: earlier matrices
/// receive higher-weight packets.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, serde::Deserialize)]
pub struct ProtectionConfig {
    matrices: Vec<MatrixSpec>,
}

impl ProtectionConfig {
    pub fn new(matrices: Vec<MatrixSpec>) -> Result<Self, CodecError> {
        if matrices.is_empty() || matrices.iter().any(|m| m.columns == 0 || m.rows == 0) {
            return Err(CodecError::EmptyConfig);
        }
        Ok(Self { matrices })
    }

    /// Convenience constructor from `(columns, rows)` pairs.
    pub fn from_dims(dims: &[(u32, u32)]) -> Self {
        Self::new(dims.iter().map(|&(c, r)| MatrixSpec::new(c, r)).collect())
            .expect("nonzero dimensions")
    }

    pub fn matrices(&self) -> &[MatrixSpec] {
        &self.matrices
    }

    pub fn n_matrices(&self) -> usize {
        self.matrices.len()
    }

    pub fn total_columns(&self) -> u64 {
        self.matrices.iter().map(|m| m.columns as u64).sum()
    }

    pub fn capacity(&self) -> u64 {
        self.matrices.iter().map(|m| m.capacity()).sum()
    }

    /// Coverage rule: every matrix before the last is exactly full, the last
    /// may pad its final row, so
    /// `capacity - last.columns < n_data <= capacity` must hold.
    pub fn covers(&self, n_data: u64) -> bool {
        let capacity = self.capacity();
        let last = self.matrices.last().expect("nonempty");
        let slack_bound = capacity - last.columns as u64;
        slack_bound < n_data && n_data <= capacity
    }

    /// Number of padding slots when protecting `n_data` packets.
    pub fn padding(&self, n_data: u64) -> u64 {
        self.capacity().saturating_sub(n_data)
    }

    pub fn columns_non_increasing(&self) -> bool {
        self.matrices.windows(2).all(|w| w[0].columns >= w[1].columns)
    }

    pub fn rows_non_decreasing(&self) -> bool {
        self.matrices.windows(2).all(|w| w[0].rows <= w[1].rows)
    }
}

impl fmt::Display for ProtectionConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for m in &self.matrices {
            write!(f, "{m}")?;
        }
        Ok(())
    }
}

/// The single-matrix configuration every receiver understands: `n_fec`
/// columns of `ceil(n_data / n_fec)` rows.
pub fn standard_config(n_data: u64, n_fec: u64) -> Result<ProtectionConfig, CodecError> {
    if n_fec == 0 || n_fec >= n_data {
        return Err(CodecError::BadStandardShape { n_data, n_fec });
    }
    let rows = n_data.div_ceil(n_fec);
    Ok(ProtectionConfig::from_dims(&[(n_fec as u32, rows as u32)]))
}

/// One matrix with its member grid. `members` is row-major; `None` is a
/// padding slot (only in the last matrix, only trailing).
#[derive(Debug, Clone, Serialize)]
pub struct MatrixGrid {
    pub spec: MatrixSpec,
    pub members: Vec<Option<u64>>,
}

impl MatrixGrid {
    pub fn slot(&self, row: u32, column: u32) -> Option<u64> {
        self.members[(row * self.spec.columns + column) as usize]
    }
}

/// A transmission slot, in wire order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScheduledSlot {
    Data { seq: u64 },
    Repair { matrix: usize, column: u32 },
}

/// The result of placing one block's packets into a config's matrices.
#[derive(Debug, Clone)]
pub struct MatrixAssignment {
    config: ProtectionConfig,
    grids: Vec<MatrixGrid>,
    base_seq: u64,
    n_data: u64,
    schedule: Vec<ScheduledSlot>,
    /// Wire position of each data packet, indexed by `seq - base_seq`.
    data_position: Vec<usize>,
    /// Wire position of each column repair, indexed by matrix then column.
    repair_position: Vec<Vec<usize>>,
}

impl MatrixAssignment {
    pub fn config(&self) -> &ProtectionConfig {
        &self.config
    }

    pub fn grids(&self) -> &[MatrixGrid] {
        &self.grids
    }

    pub fn base_seq(&self) -> u64 {
        self.base_seq
    }

    pub fn n_data(&self) -> u64 {
        self.n_data
    }

    pub fn padding(&self) -> u64 {
        self.config.padding(self.n_data)
    }

    /// Wire order: data packets in sequence order, each matrix's repairs
    /// (in column order) right after that matrix's last member.
    pub fn schedule(&self) -> &[ScheduledSlot] {
        &self.schedule
    }

    pub fn data_position(&self, seq: u64) -> usize {
        self.data_position[(seq - self.base_seq) as usize]
    }

    pub fn repair_position(&self, matrix: usize, column: u32) -> usize {
        self.repair_position[matrix][column as usize]
    }

    /// Grid dump used by golden-file tests: per-matrix grids of seq numbers.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Grid<'a> {
            columns: u32,
            rows: u32,
            grid: Vec<&'a [Option<u64>]>,
        }
        #[derive(Serialize)]
        struct Dump<'a> {
            matrices: Vec<Grid<'a>>,
            padding: u64,
        }
        let dump = Dump {
            matrices: self
                .grids
                .iter()
                .map(|g| Grid {
                    columns: g.spec.columns,
                    rows: g.spec.rows,
                    grid: g.members.chunks(g.spec.columns as usize).collect(),
                })
                .collect(),
            padding: self.padding(),
        };
        serde_json::to_string_pretty(&dump).expect("assignment serialization")
    }
}

/// Ranks packets by weight (descending, ties by seq ascending) and fills the
/// matrices in rank order; members are laid out row-major in seq order.
pub fn assign_packets(
    block: &ProtectionBlock,
    config: &ProtectionConfig,
) -> Result<MatrixAssignment, CodecError> {
    let n_data = block.n_data();
    if config.total_columns() != block.n_fec() {
        return Err(CodecError::ColumnBudgetMismatch {
            columns: config.total_columns(),
            n_fec: block.n_fec(),
        });
    }
    if !config.covers(n_data) {
        let capacity = config.capacity();
        return Err(CodecError::CoverageViolation {
            n_data,
            capacity,
            slack_bound: capacity - config.matrices().last().unwrap().columns as u64,
        });
    }

    let packets = block.packets();
    let mut rank: Vec<usize> = (0..packets.len()).collect();
    rank.sort_by(|&a, &b| {
        packets[b]
            .distortion_weight
            .partial_cmp(&packets[a].distortion_weight)
            .expect("finite weights")
            .then(packets[a].seq.cmp(&packets[b].seq))
    });

    let mut grids = Vec::with_capacity(config.n_matrices());
    let mut taken = 0usize;
    for (i, spec) in config.matrices().iter().enumerate() {
        let capacity = spec.capacity() as usize;
        let end = if i + 1 == config.n_matrices() {
            packets.len()
        } else {
            taken + capacity
        };
        let mut seqs: Vec<u64> = rank[taken..end].iter().map(|&k| packets[k].seq).collect();
        seqs.sort_unstable();
        let mut members: Vec<Option<u64>> = seqs.into_iter().map(Some).collect();
        members.resize(capacity, None);
        grids.push(MatrixGrid {
            spec: *spec,
            members,
        });
        taken = end;
    }

    // Repairs of matrix m go right after m's last member. Last members are
    // distinct across matrices (every matrix holds at least one packet), but
    // ties would break by ascending matrix index anyway.
    let last_member: Vec<u64> = grids
        .iter()
        .map(|g| g.members.iter().flatten().max().copied().expect("nonempty matrix"))
        .collect();
    let base_seq = block.first_seq();
    let mut schedule = Vec::with_capacity(packets.len() + block.n_fec() as usize);
    let mut data_position = vec![0usize; packets.len()];
    let mut repair_position: Vec<Vec<usize>> = config
        .matrices()
        .iter()
        .map(|m| vec![0usize; m.columns as usize])
        .collect();
    for p in packets {
        data_position[(p.seq - base_seq) as usize] = schedule.len();
        schedule.push(ScheduledSlot::Data { seq: p.seq });
        for (m, &last) in last_member.iter().enumerate() {
            if last == p.seq {
                for column in 0..config.matrices()[m].columns {
                    repair_position[m][column as usize] = schedule.len();
                    schedule.push(ScheduledSlot::Repair { matrix: m, column });
                }
            }
        }
    }

    Ok(MatrixAssignment {
        config: config.clone(),
        grids,
        base_seq,
        n_data,
        schedule,
        data_position,
        repair_position,
    })
}

/// A generated repair packet. Payload is the XOR of its members' payloads
/// (shorter payloads zero-extended; padding contributes nothing).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairPacket {
    pub matrix: usize,
    pub kind: RepairKind,
    pub index: u32,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepairKind {
    Column,
    Row,
}

/// Repair dimensions to generate or use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimensions {
    ColumnOnly,
    RowAndColumn,
}

fn xor_into(acc: &mut Vec<u8>, payload: &[u8]) {
    if payload.len() > acc.len() {
        acc.resize(payload.len(), 0);
    }
    for (a, b) in acc.iter_mut().zip(payload) {
        *a ^= b;
    }
}

/// Generates repair payloads. `payloads` is indexed by `seq - base_seq`.
pub fn encode(
    assignment: &MatrixAssignment,
    payloads: &[Vec<u8>],
    dimensions: Dimensions,
) -> Vec<RepairPacket> {
    assert_eq!(payloads.len() as u64, assignment.n_data(), "one payload per packet");
    let mut repairs = Vec::new();
    for (m, grid) in assignment.grids().iter().enumerate() {
        for column in 0..grid.spec.columns {
            let mut acc = Vec::new();
            for row in 0..grid.spec.rows {
                if let Some(seq) = grid.slot(row, column) {
                    xor_into(&mut acc, &payloads[(seq - assignment.base_seq) as usize]);
                }
            }
            repairs.push(RepairPacket {
                matrix: m,
                kind: RepairKind::Column,
                index: column,
                payload: acc,
            });
        }
        if dimensions == Dimensions::RowAndColumn {
            for row in 0..grid.spec.rows {
                let mut acc = Vec::new();
                for column in 0..grid.spec.columns {
                    if let Some(seq) = grid.slot(row, column) {
                        xor_into(&mut acc, &payloads[(seq - assignment.base_seq) as usize]);
                    }
                }
                repairs.push(RepairPacket {
                    matrix: m,
                    kind: RepairKind::Row,
                    index: row,
                    payload: acc,
                });
            }
        }
    }
    repairs
}

/// Iterative peeling over one matrix grid. Slots are row-major; `occupied`
/// marks real members, `missing` the lost ones (missing implies occupied).
/// Returns recovered slots in peel order. Row repairs participate only for
/// slots where `row_repair_ok` is nonempty.
pub fn peel_matrix(
    columns: usize,
    rows: usize,
    occupied: &[bool],
    missing: &[bool],
    col_repair_ok: &[bool],
    row_repair_ok: &[bool],
) -> Vec<usize> {
    assert_eq!(occupied.len(), columns * rows);
    assert_eq!(missing.len(), columns * rows);
    assert_eq!(col_repair_ok.len(), columns);
    assert!(row_repair_ok.is_empty() || row_repair_ok.len() == rows);

    let mut lost = missing.to_vec();
    let mut col_missing = vec![0usize; columns];
    let mut row_missing = vec![0usize; rows];
    for slot in 0..columns * rows {
        if lost[slot] {
            debug_assert!(occupied[slot], "padding cannot be lost");
            col_missing[slot % columns] += 1;
            row_missing[slot / columns] += 1;
        }
    }

    let use_rows = !row_repair_ok.is_empty();
    let col_ready = |c: usize, col_missing: &[usize]| col_missing[c] == 1 && col_repair_ok[c];
    let row_ready =
        |r: usize, row_missing: &[usize]| use_rows && row_missing[r] == 1 && row_repair_ok[r];

    #[derive(Clone, Copy, PartialEq)]
    enum Line {
        Col(usize),
        Row(usize),
    }
    let mut queue: VecDeque<Line> = VecDeque::new();
    for c in 0..columns {
        if col_ready(c, &col_missing) {
            queue.push_back(Line::Col(c));
        }
    }
    for r in 0..rows {
        if row_ready(r, &row_missing) {
            queue.push_back(Line::Row(r));
        }
    }

    let mut recovered = Vec::new();
    while let Some(line) = queue.pop_front() {
        let slot = match line {
            Line::Col(c) => {
                if !col_ready(c, &col_missing) {
                    continue; // already resolved through another line
                }
                (0..rows).map(|r| r * columns + c).find(|&s| lost[s])
            }
            Line::Row(r) => {
                if !row_ready(r, &row_missing) {
                    continue;
                }
                (0..columns).map(|c| r * columns + c).find(|&s| lost[s])
            }
        };
        let slot = slot.expect("line with one missing member");
        lost[slot] = false;
        recovered.push(slot);
        let (c, r) = (slot % columns, slot / columns);
        col_missing[c] -= 1;
        row_missing[r] -= 1;
        if col_ready(c, &col_missing) {
            queue.push_back(Line::Col(c));
        }
        if row_ready(r, &row_missing) {
            queue.push_back(Line::Row(r));
        }
    }
    recovered
}

/// Seq-level decode outcome. Both lists are sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutcome {
    pub recovered: Vec<u64>,
    pub unrecoverable: Vec<u64>,
}

/// Decodes a wire trace against the assignment's schedule (column repairs
/// only, as transmitted). A lost data packet is recovered when some column
/// with all its other members present has its repair delivered, iterated to
/// a fixpoint.
pub fn decode(
    assignment: &MatrixAssignment,
    trace: &LossTrace,
) -> Result<DecodeOutcome, CodecError> {
    if trace.len() != assignment.schedule().len() {
        return Err(CodecError::TraceLengthMismatch {
            got: trace.len(),
            want: assignment.schedule().len(),
        });
    }
    let mut recovered = Vec::new();
    let mut unrecoverable = Vec::new();
    for (m, grid) in assignment.grids().iter().enumerate() {
        let columns = grid.spec.columns as usize;
        let rows = grid.spec.rows as usize;
        let mut occupied = vec![false; columns * rows];
        let mut missing = vec![false; columns * rows];
        for (slot, member) in grid.members.iter().enumerate() {
            if let Some(seq) = member {
                occupied[slot] = true;
                missing[slot] = trace.is_lost(assignment.data_position(*seq));
            }
        }
        let col_repair_ok: Vec<bool> = (0..grid.spec.columns)
            .map(|c| !trace.is_lost(assignment.repair_position(m, c)))
            .collect();
        let peeled = peel_matrix(columns, rows, &occupied, &missing, &col_repair_ok, &[]);
        let mut still_missing = missing;
        for slot in peeled {
            recovered.push(grid.members[slot].expect("recovered slot is occupied"));
            still_missing[slot] = false;
        }
        for (slot, &m) in still_missing.iter().enumerate() {
            if m {
                unrecoverable.push(grid.members[slot].expect("occupied"));
            }
        }
    }
    recovered.sort_unstable();
    unrecoverable.sort_unstable();
    Ok(DecodeOutcome {
        recovered,
        unrecoverable,
    })
}

/// Rebuilds actual payload bytes. `payloads[i]` is `None` when data packet
/// `base_seq + i` was lost; recovered payloads are filled in. `repairs` must
/// come from [`encode`]; a repair counts as available only if its scheduled
/// slot survived in `trace` (row repairs, which are never scheduled, count as
/// available when `row_repairs_available`).
pub fn rebuild_payloads(
    assignment: &MatrixAssignment,
    trace: &LossTrace,
    payloads: &mut [Option<Vec<u8>>],
    repairs: &[RepairPacket],
    row_repairs_available: bool,
) -> Result<Vec<u64>, CodecError> {
    if trace.len() != assignment.schedule().len() {
        return Err(CodecError::TraceLengthMismatch {
            got: trace.len(),
            want: assignment.schedule().len(),
        });
    }
    assert_eq!(payloads.len() as u64, assignment.n_data());
    let find_repair = |m: usize, kind: RepairKind, index: u32| {
        repairs
            .iter()
            .find(|r| r.matrix == m && r.kind == kind && r.index == index)
    };

    let mut recovered_seqs = Vec::new();
    for (m, grid) in assignment.grids().iter().enumerate() {
        let columns = grid.spec.columns as usize;
        let rows = grid.spec.rows as usize;
        let mut occupied = vec![false; columns * rows];
        let mut missing = vec![false; columns * rows];
        for (slot, member) in grid.members.iter().enumerate() {
            if let Some(seq) = member {
                occupied[slot] = true;
                missing[slot] = payloads[(seq - assignment.base_seq) as usize].is_none();
            }
        }
        let col_repair_ok: Vec<bool> = (0..grid.spec.columns)
            .map(|c| {
                !trace.is_lost(assignment.repair_position(m, c))
                    && find_repair(m, RepairKind::Column, c).is_some()
            })
            .collect();
        let row_repair_ok: Vec<bool> = if row_repairs_available {
            (0..grid.spec.rows)
                .map(|r| find_repair(m, RepairKind::Row, r).is_some())
                .collect()
        } else {
            Vec::new()
        };
        for slot in peel_matrix(columns, rows, &occupied, &missing, &col_repair_ok, &row_repair_ok)
        {
            let seq = grid.members[slot].expect("occupied");
            let (c, r) = (slot % columns, slot / columns);
            // Prefer the column repair; peeling guarantees at least one line
            // around this slot was usable when it fired, but rebuilding from
            // either line is valid once all other members are known.
            let (repair, along_column) = if col_repair_ok[c as usize]
                && (0..rows).all(|rr| {
                    rr == r || !grid_slot_missing(grid, rr, c, payloads, assignment.base_seq)
                }) {
                (
                    find_repair(m, RepairKind::Column, c as u32).expect("available repair"),
                    true,
                )
            } else {
                (
                    find_repair(m, RepairKind::Row, r as u32).expect("available repair"),
                    false,
                )
            };
            let mut acc = repair.payload.clone();
            if along_column {
                for rr in 0..rows {
                    if rr == r {
                        continue;
                    }
                    if let Some(seq) = grid.slot(rr as u32, c as u32) {
                        let p = payloads[(seq - assignment.base_seq) as usize]
                            .as_ref()
                            .expect("peel order provides members");
                        xor_into(&mut acc, p);
                    }
                }
            } else {
                for cc in 0..columns {
                    if cc == c {
                        continue;
                    }
                    if let Some(seq) = grid.slot(r as u32, cc as u32) {
                        let p = payloads[(seq - assignment.base_seq) as usize]
                            .as_ref()
                            .expect("peel order provides members");
                        xor_into(&mut acc, p);
                    }
                }
            }
            payloads[(seq - assignment.base_seq) as usize] = Some(acc);
            recovered_seqs.push(seq);
        }
    }
    recovered_seqs.sort_unstable();
    Ok(recovered_seqs)
}

fn grid_slot_missing(
    grid: &MatrixGrid,
    row: usize,
    column: usize,
    payloads: &[Option<Vec<u8>>],
    base_seq: u64,
) -> bool {
    match grid.slot(row as u32, column as u32) {
        Some(seq) => payloads[(seq - base_seq) as usize].is_none(),
        None => false,
    }
}

/// Total distortion of the packets that stayed lost.
pub fn realized_distortion(block: &ProtectionBlock, unrecoverable: &[u64]) -> f64 {
    let base = block.first_seq();
    unrecoverable
        .iter()
        .map(|&seq| block.packets()[(seq - base) as usize].distortion_weight)
        .sum()
}
