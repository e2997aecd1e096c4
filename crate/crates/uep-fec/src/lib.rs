//! Unequal-error-protection packet FEC for constant-rate media streams.
//!
//! A protected block of `n_data` packets is spread over one or more XOR
//! interleaving matrices. Matrix `m` has `columns_m * rows_m` slots, is filled
//! row by row in sequence order, and emits one XOR repair packet per column
//! (plus one per row in the optional two-dimensional mode), so each column is
//! a `(rows+1, rows)` erasure code: any single missing member of a column can
//! be rebuilt. Packets are ranked by distortion weight and the highest-weight
//! packets go to the first (smallest, best-protected) matrix; only the last
//! matrix may carry virtual padding.
//!
//! The crate provides:
//!
//! - [`stream`]: synthetic GOP-structured streams, distortion weights, and
//!   partitioning into protection blocks;
//! - [`channel`]: a two-state (good/bad) burst-loss channel simulator;
//! - [`fec`]: matrix assignment, XOR encode, transmission scheduling, and the
//!   iterative (peeling) erasure decoder;
//! - [`space`]: enumeration and counting of feasible matrix configurations,
//!   plus the metric and neighborhoods the optimizer searches over;
//! - [`cost`]: analytic (independent-loss and exact two-state-chain) and
//!   Monte-Carlo estimators of expected distortion;
//! - [`optimizer`]: a wall-clock-budgeted hybrid simulated-annealing / tabu
//!   search over per-matrix-count subproblems;
//! - [`clock`]: the injectable monotonic clock the optimizer budgets against.

#![forbid(unsafe_code)]
#![deny(rust_2018_idioms)]

pub mod channel;
pub mod clock;
pub mod cost;
pub mod fec;
pub mod optimizer;
pub mod rate;
pub mod space;
pub mod stream;

pub use channel::{ChannelParams, LossTrace};
pub use clock::{Clock, FakeClock, SystemClock};
pub use cost::{CostEvaluator, McEstimate};
pub use fec::{MatrixAssignment, MatrixSpec, ProtectionConfig};
pub use optimizer::{Budget, SolveReport};
pub use rate::CodeRate;
pub use space::EnumeratedSpace;
pub use stream::{GopSpec, ProtectionBlock, StreamPacket};
