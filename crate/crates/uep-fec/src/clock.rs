//! Monotonic clock abstraction.
//!
//! The optimizer plans its iteration counts from measured elapsed time, so
//! tests (and deterministic CLI runs) inject a fake clock instead of reading
//! the real one. The fake clock can also advance by a fixed tick per cost
//! evaluation, which makes time budgets bind deterministically.

use std::cell::Cell;
use std::time::{Duration, Instant};

pub trait Clock {
    /// Monotonic elapsed time since the clock was created.
    fn now(&self) -> Duration;

    /// Hook invoked by the optimizer once per cost evaluation.
    fn on_cost_evaluation(&self) {}
}

/// Real wall clock.
#[derive(Debug)]
pub struct SystemClock {
    start: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        Self {
            start: Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.start.elapsed()
    }
}

/// Simulated clock. Time moves only when `advance` is called or, if a
/// per-evaluation tick is set, when the optimizer reports a cost evaluation.
#[derive(Debug)]
pub struct FakeClock {
    now_ns: Cell<u64>,
    tick_per_eval: Duration,
}

impl FakeClock {
    pub fn new() -> Self {
        Self {
            now_ns: Cell::new(0),
            tick_per_eval: Duration::ZERO,
        }
    }

    /// Clock that advances by `tick` on every cost evaluation.
    pub fn with_eval_tick(tick: Duration) -> Self {
        Self {
            now_ns: Cell::new(0),
            tick_per_eval: tick,
        }
    }

    pub fn advance(&self, by: Duration) {
        let ns = u64::try_from(by.as_nanos()).expect("fake clock overflow");
        self.now_ns.set(self.now_ns.get() + ns);
    }
}

impl Default for FakeClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for FakeClock {
    fn now(&self) -> Duration {
        Duration::from_nanos(self.now_ns.get())
    }

    fn on_cost_evaluation(&self) {
        if self.tick_per_eval > Duration::ZERO {
            self.advance(self.tick_per_eval);
        }
    }
}
