//! Budget-driven search for the best protection config.
//!
//! The solver walks matrix counts upward. Each count poses a subproblem over
//! the enumerated restricted space, attacked with simulated annealing whose
//! candidate pool is a shrinking neighborhood ball and whose visited set is
//! tabu for the rest of the subproblem. Schedules are derived from a single
//! wall-clock budget: the first outer iteration of each subproblem is timed,
//! the remaining iterations are planned from that measurement, and the jump
//! to the next matrix count is gated by extrapolating the measured iteration
//! cost through the ratio of space sizes.

use std::time::Duration;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::clock::Clock;
use crate::cost::{CostError, CostEvaluator};
use crate::fec::{standard_config, CodecError, ProtectionConfig};
use crate::space::{count_restricted, enumerate_restricted, EnumeratedSpace, SpaceError};
use crate::stream::ProtectionBlock;

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// Search budget. `t_total` is the only mandatory knob; the rest default to
/// the values used throughout the experiments.
#[derive(Debug, Clone, Serialize)]
pub struct Budget {
    /// Wall-clock allowance for the whole optimization.
    pub t_total: Duration,
    /// Hard cap on outer iterations per subproblem.
    pub i_max: u64,
    /// Fraction of the current neighborhood sampled per outer iteration.
    pub tau: f64,
    /// Largest matrix count ever posed as a subproblem.
    pub n_m_cap: u32,
}

impl Budget {
    pub fn new(t_total: Duration) -> Self {
        Self {
            t_total,
            i_max: 10,
            tau: 0.05,
            n_m_cap: 16,
        }
    }
}

/// Linear cooling: full heat on the first outer iteration, zero on the last.
/// A single planned iteration pins the temperature at `t_init`.
pub fn temperature(i: u64, i_outer: u64, t_init: f64) -> f64 {
    debug_assert!(i >= 1 && i <= i_outer.max(1));
    if i_outer <= 1 {
        return t_init;
    }
    t_init * (i_outer - i) as f64 / (i_outer - 1) as f64
}

/// Linear radius decay from the space diagonal down to the exploration floor
/// `sqrt(n_matrices)`, which keeps at least the adjacent configs reachable.
pub fn radius_schedule(i: u64, i_outer: u64, d_init: f64, n_matrices: u32) -> f64 {
    let floor = (n_matrices as f64).sqrt();
    if i_outer <= 1 {
        return d_init.max(floor);
    }
    let linear = d_init * (i_outer - i) as f64 / (i_outer - 1) as f64;
    linear.max(floor)
}

/// Number of outer iterations that fit in what is left of the budget, given
/// the measured duration of the first one. The first iteration has already
/// run, so it is counted into the plan. Capped at `i_max`.
pub fn plan_outer_iters(
    t_total: Duration,
    t_consumed: Duration,
    t_iter: Duration,
    i_max: u64,
) -> u64 {
    let remaining = t_total.saturating_sub(t_consumed).as_secs_f64();
    let per_iter = t_iter.as_secs_f64();
    if per_iter <= 0.0 {
        return i_max;
    }
    let fit = 1.0 + remaining / per_iter;
    if fit >= i_max as f64 {
        i_max
    } else {
        fit.floor() as u64
    }
}

/// Inner iteration count: a `tau` fraction of the current neighborhood, but
/// never fewer draws than the close neighborhood holds.
pub fn inner_iter_count(tau: f64, n_nbr: usize, n_close: usize) -> u64 {
    let sampled = (tau * n_nbr as f64).ceil() as u64;
    sampled.max(n_close as u64)
}

/// Metropolis rule. Strict improvements always pass; at zero temperature
/// nothing else does. `u` is the caller's uniform draw, compared inclusively
/// so a unit acceptance probability can never be missed.
pub fn acceptance(cost_current: f64, cost_candidate: f64, temperature: f64, u: f64) -> bool {
    if cost_candidate < cost_current {
        return true;
    }
    if temperature <= 0.0 {
        return false;
    }
    u <= ((cost_current - cost_candidate) / temperature).exp()
}

/// Extrapolates the worst measured outer-iteration time to the next space by
/// scaling with the ratio of space sizes.
pub fn estimate_next_iter_time(
    t_iter_max: Duration,
    count_next: u128,
    count_current: u128,
) -> Duration {
    if count_current == 0 {
        return Duration::MAX;
    }
    let ratio = count_next as f64 / count_current as f64;
    Duration::from_secs_f64(t_iter_max.as_secs_f64() * ratio)
}

/// Doubled growth-scaled forecast for bookkeeping whose per-item cost rises
/// with the table size itself (counting, enumeration).
fn scale_padded(t_prev: Duration, growth: u128) -> Duration {
    let factor = (growth.min(u128::from(u32::MAX / 2)) as u32).saturating_mul(2);
    t_prev.saturating_mul(factor.max(1))
}

/// One subproblem's outcome. `best` is absent when the subproblem was skipped
/// (empty space) or never got to evaluate a config.
#[derive(Debug, Clone, Serialize)]
pub struct SubproblemReport {
    pub n_matrices: u32,
    pub space_size: u64,
    pub best: Option<ProtectionConfig>,
    pub best_cost: Option<f64>,
    pub evaluations: u64,
    pub outer_iters: u64,
    pub wall_s: f64,
    pub note: String,
}

/// Full optimization outcome, JSON-serializable for the experiment tooling.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub overall_best: ProtectionConfig,
    pub overall_cost: f64,
    pub n_m_max_reached: u32,
    pub total_wall_s: f64,
    pub subproblems: Vec<SubproblemReport>,
}

impl SolveReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// One cost evaluation inside a subproblem, for search-trajectory dumps.
#[derive(Debug, Clone, Serialize)]
pub struct TraceEvent {
    pub n_matrices: u32,
    pub outer_iter: u64,
    pub inner_iter: u64,
    pub config: String,
    pub cost: f64,
    pub accepted: bool,
}

enum InnerExit {
    Completed,
    Exhausted,
    Deadline,
}

/// Per-subproblem search state: tabu flags double as the cost-memo key set,
/// so no config is ever evaluated twice within a subproblem.
struct SubproblemRun<'a, C: Clock + ?Sized> {
    space: &'a EnumeratedSpace,
    block: &'a ProtectionBlock,
    evaluator: &'a CostEvaluator,
    clock: &'a C,
    deadline: Duration,
    tabu: Vec<bool>,
    cached_cost: Vec<f64>,
    evaluations: u64,
    trace: Option<&'a mut Vec<TraceEvent>>,
}

impl<'a, C: Clock + ?Sized> SubproblemRun<'a, C> {
    fn new(
        space: &'a EnumeratedSpace,
        block: &'a ProtectionBlock,
        evaluator: &'a CostEvaluator,
        clock: &'a C,
        deadline: Duration,
        trace: Option<&'a mut Vec<TraceEvent>>,
    ) -> Self {
        Self {
            space,
            block,
            evaluator,
            clock,
            deadline,
            tabu: vec![false; space.len()],
            cached_cost: vec![f64::NAN; space.len()],
            evaluations: 0,
            trace,
        }
    }

    /// Evaluates a not-yet-visited config, marking it tabu.
    fn evaluate(&mut self, index: usize) -> Result<f64, OptimizeError> {
        debug_assert!(!self.tabu[index]);
        let cost = self
            .evaluator
            .evaluate(self.block, self.space.config(index))?;
        self.clock.on_cost_evaluation();
        self.tabu[index] = true;
        self.cached_cost[index] = cost;
        self.evaluations += 1;
        Ok(cost)
    }

    /// Candidate pool: the radius ball around `center` minus everything
    /// already visited. The center itself is tabu by the time this runs.
    fn candidates(&self, center: usize, radius: f64) -> Vec<usize> {
        self.space
            .neighborhood_indices(center, radius)
            .into_iter()
            .filter(|&i| !self.tabu[i])
            .collect()
    }

    fn record(&mut self, outer: u64, inner: u64, index: usize, cost: f64, accepted: bool) {
        if let Some(events) = self.trace.as_deref_mut() {
            events.push(TraceEvent {
                n_matrices: self.space.n_matrices(),
                outer_iter: outer,
                inner_iter: inner,
                config: self.space.config(index).to_string(),
                cost,
                accepted,
            });
        }
    }

    /// One outer iteration's worth of annealing moves at fixed temperature
    /// and radius. Rejected candidates leave the pool (they are tabu now);
    /// accepted moves recenter it.
    #[allow(clippy::too_many_arguments)]
    fn inner_loop(
        &mut self,
        rng: &mut ChaCha8Rng,
        outer: u64,
        s: &mut usize,
        s_cost: &mut f64,
        best: &mut usize,
        best_cost: &mut f64,
        temp: f64,
        radius: f64,
        iters: u64,
    ) -> Result<InnerExit, OptimizeError> {
        // A ball that covers the whole space is center-independent, so an
        // accepted move only removes the (now tabu) candidate from the pool
        // instead of recentering it.
        let center_free = self.space.ball_covers_space(radius);
        let mut pool = self.candidates(*s, radius);
        for inner in 1..=iters {
            if self.clock.now() >= self.deadline {
                return Ok(InnerExit::Deadline);
            }
            if pool.is_empty() {
                return Ok(InnerExit::Exhausted);
            }
            let slot = rng.gen_range(0..pool.len());
            let candidate = pool[slot];
            let cand_cost = self.evaluate(candidate)?;
            let u: f64 = rng.gen();
            let accepted = acceptance(*s_cost, cand_cost, temp, u);
            self.record(outer, inner, candidate, cand_cost, accepted);
            if accepted {
                *s = candidate;
                *s_cost = cand_cost;
                if cand_cost < *best_cost {
                    *best = candidate;
                    *best_cost = cand_cost;
                }
                if center_free {
                    pool.swap_remove(slot);
                } else {
                    pool = self.candidates(*s, radius);
                }
            } else {
                pool.swap_remove(slot);
            }
        }
        Ok(InnerExit::Completed)
    }
}

struct SubproblemOutcome {
    report: SubproblemReport,
    /// Longest measured outer iteration; input to the next size gate.
    t_iter_max: Duration,
    /// True when the planned iteration count collapsed below two, which ends
    /// the whole procedure, not just this subproblem.
    budget_collapsed: bool,
}

/// Anneals one enumerated space in isolation, outside the matrix-count
/// ladder. `t_init` seeds the temperature schedule; callers usually pass the
/// standard config's cost. Deterministic per seed whenever the clock is.
pub fn solve_subproblem<C: Clock + ?Sized>(
    space: &EnumeratedSpace,
    block: &ProtectionBlock,
    evaluator: &CostEvaluator,
    budget: &Budget,
    t_init: f64,
    seed: u64,
    clock: &C,
) -> Result<SubproblemReport, OptimizeError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outcome = solve_subproblem_impl(
        space,
        block,
        evaluator,
        budget,
        clock.now(),
        t_init,
        &mut rng,
        clock,
        None,
    )?;
    Ok(outcome.report)
}

/// Anneals one subproblem. The first outer iteration is timed to plan the
/// rest; a plan under two iterations reports budget collapse upward.
#[allow(clippy::too_many_arguments)]
fn solve_subproblem_impl<C: Clock + ?Sized>(
    space: &EnumeratedSpace,
    block: &ProtectionBlock,
    evaluator: &CostEvaluator,
    budget: &Budget,
    t_start: Duration,
    t_init: f64,
    rng: &mut ChaCha8Rng,
    clock: &C,
    trace: Option<&mut Vec<TraceEvent>>,
) -> Result<SubproblemOutcome, OptimizeError> {
    let deadline = t_start + budget.t_total;
    let sub_start = clock.now();
    let n_matrices = space.n_matrices();
    let d_init = space.d_init();
    let close_radius = (n_matrices as f64).sqrt();

    let mut run = SubproblemRun::new(space, block, evaluator, clock, deadline, trace);

    // First outer iteration doubles as the time probe for budget planning.
    let mut s = space.sample_index_with(rng)?;
    let mut s_cost = run.evaluate(s)?;
    run.record(1, 0, s, s_cost, true);
    let mut best = s;
    let mut best_cost = s_cost;
    let iters = inner_iter_count(
        budget.tau,
        space.neighborhood_size(s, d_init),
        space.neighborhood_size(s, close_radius),
    );
    let first_exit = run.inner_loop(
        rng,
        1,
        &mut s,
        &mut s_cost,
        &mut best,
        &mut best_cost,
        t_init,
        d_init,
        iters,
    )?;
    let t_iter = (clock.now() - sub_start).max(Duration::from_nanos(1));
    let mut t_iter_max = t_iter;
    let mut outer_done = 1;

    let i_outer = plan_outer_iters(budget.t_total, clock.now() - t_start, t_iter, budget.i_max);
    let budget_collapsed = i_outer < 2;

    if !budget_collapsed && !matches!(first_exit, InnerExit::Deadline) {
        for i in 2..=i_outer {
            if clock.now() >= deadline {
                break;
            }
            let iter_start = clock.now();
            let temp = temperature(i, i_outer, t_init);
            let radius = radius_schedule(i, i_outer, d_init, n_matrices);
            s = best;
            s_cost = best_cost;
            let iters = inner_iter_count(
                budget.tau,
                space.neighborhood_size(s, radius),
                space.neighborhood_size(s, close_radius),
            );
            let exit = run.inner_loop(
                rng,
                i,
                &mut s,
                &mut s_cost,
                &mut best,
                &mut best_cost,
                temp,
                radius,
                iters,
            )?;
            outer_done = i;
            t_iter_max = t_iter_max.max(clock.now() - iter_start);
            if matches!(exit, InnerExit::Deadline) {
                break;
            }
        }
    }

    let report = SubproblemReport {
        n_matrices: space.n_matrices(),
        space_size: space.len() as u64,
        best: Some(space.config(best).clone()),
        best_cost: Some(best_cost),
        evaluations: run.evaluations,
        outer_iters: outer_done,
        wall_s: (clock.now() - sub_start).as_secs_f64(),
        note: if budget_collapsed {
            "planned outer iterations fell below two; procedure stops here".to_string()
        } else {
            String::new()
        },
    };
    Ok(SubproblemOutcome {
        report,
        t_iter_max,
        budget_collapsed,
    })
}

/// Optimizes the block's protection config under a wall-clock budget.
///
/// Matrix count 1 is solved exactly (its space is the single standard
/// config); each further count must first pass the time gate that compares
/// the extrapolated cost of one outer iteration against the remaining
/// budget. Deterministic for a fixed seed whenever the injected clock is.
pub fn optimize_block<C: Clock + ?Sized>(
    block: &ProtectionBlock,
    evaluator: &CostEvaluator,
    budget: &Budget,
    seed: u64,
    clock: &C,
) -> Result<SolveReport, OptimizeError> {
    optimize_block_impl(block, evaluator, budget, seed, clock, None)
}

/// Same as [`optimize_block`], additionally returning every cost evaluation
/// made during the search in order.
pub fn optimize_block_with_trace<C: Clock + ?Sized>(
    block: &ProtectionBlock,
    evaluator: &CostEvaluator,
    budget: &Budget,
    seed: u64,
    clock: &C,
) -> Result<(SolveReport, Vec<TraceEvent>), OptimizeError> {
    let mut events = Vec::new();
    let report = optimize_block_impl(block, evaluator, budget, seed, clock, Some(&mut events))?;
    Ok((report, events))
}

fn optimize_block_impl<C: Clock + ?Sized>(
    block: &ProtectionBlock,
    evaluator: &CostEvaluator,
    budget: &Budget,
    seed: u64,
    clock: &C,
    mut trace: Option<&mut Vec<TraceEvent>>,
) -> Result<SolveReport, OptimizeError> {
    let t_start = clock.now();
    let deadline = t_start + budget.t_total;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_data = block.n_data();
    let n_fec = block.n_fec();

    // Matrix count 1: the space is a single config, solved by evaluation.
    // Its cost seeds the temperature schedule of every later subproblem, and
    // its wall time seeds the size gate.
    let standard = standard_config(n_data, n_fec)?;
    let t_init = evaluator.evaluate(block, &standard)?;
    clock.on_cost_evaluation();
    let sub1_wall = clock.now() - t_start;
    if let Some(events) = trace.as_deref_mut() {
        events.push(TraceEvent {
            n_matrices: 1,
            outer_iter: 1,
            inner_iter: 0,
            config: standard.to_string(),
            cost: t_init,
            accepted: true,
        });
    }

    let mut subproblems = vec![SubproblemReport {
        n_matrices: 1,
        space_size: 1,
        best: Some(standard.clone()),
        best_cost: Some(t_init),
        evaluations: 1,
        outer_iters: 1,
        wall_s: sub1_wall.as_secs_f64(),
        note: String::new(),
    }];
    let mut overall_best = standard;
    let mut overall_cost = t_init;
    let mut n_m_max = 1u32;

    // Zero cost means the uniform config already loses nothing measurable;
    // annealing against a zero temperature cannot improve on it.
    if t_init == 0.0 {
        subproblems[0].note = "standard config has zero cost; search skipped".to_string();
        return Ok(SolveReport {
            overall_best,
            overall_cost,
            n_m_max_reached: n_m_max,
            total_wall_s: (clock.now() - t_start).as_secs_f64(),
            subproblems,
        });
    }

    let mut t_iter_prev = sub1_wall.max(Duration::from_nanos(1));
    let mut count_prev: u128 = 1;
    // Enumeration cost of the previous space, extrapolated the same way the
    // iteration cost is; the trivial first space enumerates for free.
    let mut t_enum_prev = Duration::ZERO;
    // Counting a space walks a memo table that grows with the space, so the
    // count call itself needs the same protection. Its cost is forecast from
    // the previous count's wall time and the last observed size ratio.
    let mut t_count_prev = Duration::ZERO;
    let mut prev_counted: u128 = 1;
    let mut count_growth: u128 = 1;

    for n_m in 2..=budget.n_m_cap {
        let count_forecast = scale_padded(t_count_prev, count_growth);
        if count_forecast > deadline.saturating_sub(clock.now()) {
            break;
        }
        let count_start = clock.now();
        let count_next = count_restricted(n_data, n_fec, n_m);
        t_count_prev = clock.now() - count_start;
        if count_next > 0 {
            count_growth = (count_next / prev_counted).max(1);
            prev_counted = count_next;
        }
        if count_next == 0 {
            subproblems.push(SubproblemReport {
                n_matrices: n_m,
                space_size: 0,
                best: None,
                best_cost: None,
                evaluations: 0,
                outer_iters: 0,
                wall_s: 0.0,
                note: "no feasible config at this matrix count".to_string(),
            });
            if u64::from(n_m) >= n_fec {
                // Columns cannot outnumber repair packets; larger counts
                // stay empty.
                break;
            }
            continue;
        }

        let iter_estimate = estimate_next_iter_time(t_iter_prev, count_next, count_prev);
        // Enumeration cost per config grows with the space, so its linear
        // extrapolation is padded; the iteration estimate is pure ratio scaling.
        let enum_estimate =
            estimate_next_iter_time(t_enum_prev, count_next, count_prev).saturating_mul(2);
        let remaining = deadline.saturating_sub(clock.now());
        if iter_estimate.saturating_add(enum_estimate) > remaining {
            break;
        }

        let enum_start = clock.now();
        let space = enumerate_restricted(n_data, n_fec, n_m);
        t_enum_prev = clock.now() - enum_start;
        debug_assert_eq!(space.len() as u128, count_next);
        if clock.now() >= deadline {
            break;
        }

        let outcome = solve_subproblem_impl(
            &space,
            block,
            evaluator,
            budget,
            t_start,
            t_init,
            &mut rng,
            clock,
            trace.as_deref_mut(),
        )?;
        n_m_max = n_m;
        if let (Some(cost), Some(config)) = (
            outcome.report.best_cost,
            outcome.report.best.as_ref(),
        ) {
            if cost < overall_cost {
                overall_cost = cost;
                overall_best = config.clone();
            }
        }
        let collapsed = outcome.budget_collapsed;
        subproblems.push(outcome.report);
        t_iter_prev = outcome.t_iter_max.max(Duration::from_nanos(1));
        count_prev = count_next;
        if collapsed {
            break;
        }
    }

    Ok(SolveReport {
        overall_best,
        overall_cost,
        n_m_max_reached: n_m_max,
        total_wall_s: (clock.now() - t_start).as_secs_f64(),
        subproblems,
    })
}

/// Scans an enumerated space sequentially and returns the exact optimum.
/// Ties resolve to the earliest config in canonical order.
pub fn exhaustive_optimum(
    space: &EnumeratedSpace,
    block: &ProtectionBlock,
    evaluator: &CostEvaluator,
) -> Result<Option<(ProtectionConfig, f64)>, OptimizeError> {
    exhaustive_optimum_over(space.configs(), block, evaluator)
}

/// Exact optimum over an arbitrary config list, same tie-break rule.
pub fn exhaustive_optimum_over(
    configs: &[ProtectionConfig],
    block: &ProtectionBlock,
    evaluator: &CostEvaluator,
) -> Result<Option<(ProtectionConfig, f64)>, OptimizeError> {
    exhaustive_optimum_timed(configs, block, evaluator, &crate::clock::FakeClock::new())
}

/// Exhaustive scan that reports every evaluation to the clock, so oracle and
/// annealer wall times come from the same time source.
pub fn exhaustive_optimum_timed<C: Clock + ?Sized>(
    configs: &[ProtectionConfig],
    block: &ProtectionBlock,
    evaluator: &CostEvaluator,
    clock: &C,
) -> Result<Option<(ProtectionConfig, f64)>, OptimizeError> {
    let mut best: Option<(ProtectionConfig, f64)> = None;
    for config in configs {
        let cost = evaluator.evaluate(block, config)?;
        clock.on_cost_evaluation();
        match &best {
            Some((_, incumbent)) if cost >= *incumbent => {}
            _ => best = Some((config.clone(), cost)),
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::FakeClock;
    use crate::space::enumerate_restricted;
    use crate::stream::ProtectionBlock;

    fn assert_close(got: f64, want: f64, tol: f64) {
        assert!(
            (got - want).abs() <= tol,
            "got {got}, want {want} (tol {tol})"
        );
    }

    #[test]
    fn temperature_is_linear_from_t_init_to_zero() {
        assert_close(temperature(1, 10, 7.0), 7.0, 1e-12);
        assert_close(temperature(10, 10, 7.0), 0.0, 1e-12);
        assert_close(temperature(5, 10, 9.0), 5.0, 1e-12);
        assert_close(temperature(1, 1, 3.0), 3.0, 1e-12);
    }

    #[test]
    fn radius_decays_linearly_with_floor() {
        assert_close(radius_schedule(1, 10, 18.0, 4), 18.0, 1e-12);
        assert_close(radius_schedule(10, 10, 18.0, 4), 2.0, 1e-12);
        assert_close(radius_schedule(5, 10, 18.0, 4), 10.0, 1e-12);
        // Floor binds before the linear ramp reaches zero.
        assert_close(radius_schedule(9, 10, 18.0, 9), 3.0, 1e-12);
    }

    #[test]
    fn outer_iteration_plan_counts_the_probe_iteration() {
        let s = Duration::from_secs_f64;
        assert_eq!(plan_outer_iters(s(0.1), s(0.02), s(0.02), 10), 5);
        assert_eq!(plan_outer_iters(s(0.1), s(0.1), s(0.02), 10), 1);
        assert_eq!(plan_outer_iters(s(10.0), s(0.0), s(0.01), 10), 10);
        assert_eq!(plan_outer_iters(s(0.1), s(0.2), s(0.05), 10), 1);
    }

    #[test]
    fn inner_iteration_count_takes_the_larger_bound() {
        assert_eq!(inner_iter_count(0.05, 1000, 12), 50);
        assert_eq!(inner_iter_count(0.05, 100, 12), 12);
        assert_eq!(inner_iter_count(0.05, 0, 0), 0);
        assert_eq!(inner_iter_count(1.0, 7, 3), 7);
    }

    #[test]
    fn acceptance_rule_is_greedy_at_zero_temperature() {
        assert!(acceptance(10.0, 5.0, 0.0, 0.999));
        assert!(!acceptance(5.0, 10.0, 0.0, 0.0));
        assert!(!acceptance(5.0, 5.0, 0.0, 0.0));
    }

    #[test]
    fn acceptance_boundary_is_inclusive() {
        // Equal cost at positive temperature has acceptance probability
        // exactly one, so even a unit draw must pass: the comparison against
        // the draw is inclusive.
        assert!(acceptance(5.0, 5.0, 3.0, 1.0));
        // Uphill by T*ln 2 puts the probability at one half up to rounding.
        let t = 3.0;
        let uphill = t * std::f64::consts::LN_2;
        assert!(acceptance(5.0, 5.0 + uphill, t, 0.5 - 1e-9));
        assert!(!acceptance(5.0, 5.0 + uphill, t, 0.5 + 1e-9));
    }

    #[test]
    fn next_iteration_estimate_scales_by_space_ratio() {
        let est = estimate_next_iter_time(Duration::from_secs_f64(0.01), 3887, 85);
        assert_close(est.as_secs_f64(), 0.01 * 3887.0 / 85.0, 1e-9);
        let same = estimate_next_iter_time(Duration::from_secs_f64(0.01), 85, 85);
        assert_close(same.as_secs_f64(), 0.01, 1e-12);
        assert_eq!(
            estimate_next_iter_time(Duration::from_secs_f64(1.0), 0, 7),
            Duration::ZERO
        );
    }

    fn test_block(n_data: u64, n_fec: u64) -> ProtectionBlock {
        // Bitrate chosen so a 0.1 s window holds exactly n_data packets.
        let bitrate = n_data as f64 * 8.0 * 1348.0 / 0.1;
        let packets = crate::stream::synthesize_stream(
            bitrate,
            0.1,
            1348,
            &crate::stream::GopSpec::default(),
            99,
        )
        .unwrap();
        assert_eq!(packets.len() as u64, n_data);
        ProtectionBlock::new(packets, n_fec).unwrap()
    }

    #[test]
    fn solver_is_deterministic_under_a_fake_clock() {
        let block = test_block(37, 7);
        let evaluator = CostEvaluator::Iid { plr: 0.01 };
        let budget = Budget::new(Duration::from_secs_f64(0.050));
        let run = || {
            let clock = FakeClock::with_eval_tick(Duration::from_micros(20));
            optimize_block(&block, &evaluator, &budget, 7, &clock)
                .unwrap()
                .to_json()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn generous_budget_finds_the_small_space_optimum() {
        let block = test_block(37, 7);
        let evaluator = CostEvaluator::Iid { plr: 0.01 };
        let budget = Budget::new(Duration::from_secs(3600));
        let clock = FakeClock::with_eval_tick(Duration::from_micros(2));
        let (report, trace) =
            optimize_block_with_trace(&block, &evaluator, &budget, 11, &clock).unwrap();

        // Against the exact optimum over every matrix count that ran.
        let mut exact: Option<(ProtectionConfig, f64)> = None;
        for n_m in 1..=report.n_m_max_reached {
            let space = enumerate_restricted(37, 7, n_m);
            if let Some((config, cost)) =
                exhaustive_optimum(&space, &block, &evaluator).unwrap()
            {
                if exact.as_ref().map_or(true, |(_, c)| cost < *c) {
                    exact = Some((config, cost));
                }
            }
        }
        let (_, exact_cost) = exact.unwrap();
        assert_close(report.overall_cost, exact_cost, 1e-12);

        // Tabu soundness: never more evaluations than configs, and the
        // reported best matches the cheapest trace event.
        for sub in &report.subproblems {
            assert!(sub.evaluations <= sub.space_size.max(1));
        }
        let trace_min = trace.iter().map(|e| e.cost).fold(f64::INFINITY, f64::min);
        assert_close(report.overall_cost, trace_min, 1e-12);
    }

    #[test]
    fn tiny_budget_returns_the_standard_config() {
        let block = test_block(37, 7);
        let evaluator = CostEvaluator::Iid { plr: 0.01 };
        let budget = Budget::new(Duration::from_micros(2));
        // One evaluation consumes the whole budget.
        let clock = FakeClock::with_eval_tick(Duration::from_micros(2));
        let report = optimize_block(&block, &evaluator, &budget, 5, &clock).unwrap();
        assert_eq!(report.n_m_max_reached, 1);
        assert_eq!(report.overall_best, standard_config(37, 7).unwrap());
        assert_eq!(report.subproblems.len(), 1);
    }

    #[test]
    fn size_gate_stops_before_an_unaffordable_space() {
        let block = test_block(37, 7);
        let evaluator = CostEvaluator::Iid { plr: 0.01 };
        // Restricted spaces: 15 configs at two matrices, 121 at three. A
        // budget near the two-matrix cost cannot fund the extrapolated
        // three-matrix iteration.
        let budget = Budget::new(Duration::from_micros(400));
        let clock = FakeClock::with_eval_tick(Duration::from_micros(10));
        let report = optimize_block(&block, &evaluator, &budget, 5, &clock).unwrap();
        assert!(report.n_m_max_reached <= 2, "reached {}", report.n_m_max_reached);
        let total = report.total_wall_s;
        assert!(total <= 400e-6 + 10e-6 + 1e-9, "wall {total}");
    }

    #[test]
    fn zero_cost_standard_config_short_circuits() {
        let block = test_block(37, 7);
        let evaluator = CostEvaluator::Iid { plr: 0.0 };
        let budget = Budget::new(Duration::from_secs(10));
        let clock = FakeClock::with_eval_tick(Duration::from_micros(2));
        let report = optimize_block(&block, &evaluator, &budget, 5, &clock).unwrap();
        assert_eq!(report.n_m_max_reached, 1);
        assert_eq!(report.overall_cost, 0.0);
        assert!(report.subproblems[0].note.contains("zero cost"));
    }

    #[test]
    fn uniform_weights_never_beat_the_standard_config_materially() {
        let block = ProtectionBlock::uniform(74, 15).unwrap();
        let evaluator = CostEvaluator::Iid { plr: 0.02 };
        let budget = Budget::new(Duration::from_secs_f64(0.25));
        let clock = FakeClock::with_eval_tick(Duration::from_micros(50));
        let report = optimize_block(&block, &evaluator, &budget, 17, &clock).unwrap();
        let standard_cost = report.subproblems[0].best_cost.unwrap();
        assert!(report.overall_cost <= standard_cost + 1e-12);
    }

    #[test]
    fn trace_rows_carry_running_best() {
        let block = test_block(37, 4);
        let evaluator = CostEvaluator::Iid { plr: 0.015 };
        let budget = Budget::new(Duration::from_secs_f64(0.05));
        let clock = FakeClock::with_eval_tick(Duration::from_micros(5));
        let (report, trace) =
            optimize_block_with_trace(&block, &evaluator, &budget, 23, &clock).unwrap();
        assert!(!trace.is_empty());
        let evals: u64 = report.subproblems.iter().map(|s| s.evaluations).sum();
        assert_eq!(trace.len() as u64, evals);
        let min_seen = trace.iter().map(|e| e.cost).fold(f64::INFINITY, f64::min);
        assert_close(report.overall_cost, min_seen, 0.0);
    }

    #[test]
    fn exhaustive_optimum_breaks_ties_canonically() {
        let space = enumerate_restricted(37, 7, 2);
        let block = test_block(37, 7);
        // Zero loss rate costs every config zero, so the tie-break must pick
        // the first config in canonical order.
        let evaluator = CostEvaluator::Iid { plr: 0.0 };
        let (config, cost) = exhaustive_optimum(&space, &block, &evaluator)
            .unwrap()
            .unwrap();
        assert_eq!(&config, space.config(0));
        assert_eq!(cost, 0.0);
    }
}
