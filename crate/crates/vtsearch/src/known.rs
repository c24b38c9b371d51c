//! Scheduler for search with known evaluation times.
//!
//! The pipeline reduces the general instance to sub-instances that
//! likely contain exactly one marked item (random subset chain), then
//! schedules each sub-instance: cheap items are checked sequentially,
//! small success probabilities are boosted, the remaining algorithms
//! are bucketed into geometric (time, probability) cells, and the
//! bucket composites are searched recursively down to a constant-size
//! base case.
//!
//! The simulator computes the exact cost and the exact success
//! probability of every composed schedule in closed form; randomness is
//! used only to draw subset chains and final outcomes.

use crate::calculus::{amplify_exact, choose_m_with_log, AmpSchedule, ProbInterval};
use crate::log2n;
use crate::model::{run_item, ChargeMode, CostMeter, Instance, QueryOutcome};
use rand::Rng;
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, PI};

/// Conditional output of a sub-algorithm given that its output bit is 1:
/// the named index and whether that index is truly marked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub index: usize,
    pub weight: f64,
    pub good: bool,
}

/// An abstract timed sub-algorithm: a deterministic per-invocation cost,
/// the scheduler's knowledge of its success probability (an interval
/// valid when the algorithm is marked), and the simulator's exact
/// success probability with its conditional witness distribution.
///
/// An unmarked algorithm has `true_success = 0` unless it carries false
/// positives (read-once children do), in which case every witness is
/// flagged bad.
#[derive(Debug, Clone)]
pub struct TimedAlg {
    pub cost: u64,
    pub interval: ProbInterval,
    pub true_success: f64,
    pub witnesses: Vec<Witness>,
}

impl TimedAlg {
    /// Wraps the algorithm in `2m+1`-call amplification. The scheduler
    /// interval moves through `amplify_exact` at both ends; the exact
    /// success probability moves through the same map (which also covers
    /// over-rotation); witnesses are unchanged.
    pub fn amplified(&self, m: AmpSchedule) -> TimedAlg {
        TimedAlg {
            cost: self.cost * m.calls(),
            interval: self.interval.amplify(m),
            true_success: amplify_exact(self.true_success, m),
            witnesses: self.witnesses.clone(),
        }
    }

    pub fn is_marked(&self) -> bool {
        self.witnesses.iter().any(|w| w.good)
    }
}

/// Item evaluators of a sub-instance as timed algorithms: certainty
/// when marked, exact failure when unmarked.
pub fn item_algs(instance: &Instance, subset: &[usize]) -> Vec<TimedAlg> {
    subset
        .iter()
        .map(|&i| {
            let it = instance.item(i);
            TimedAlg {
                cost: it.t,
                interval: ProbInterval::exact(1.0),
                true_success: if it.x { 1.0 } else { 0.0 },
                witnesses: if it.x {
                    vec![Witness {
                        index: i,
                        weight: 1.0,
                        good: true,
                    }]
                } else {
                    Vec::new()
                },
            }
        })
        .collect()
}

/// Tuning constants of the scheduler. The paper leaves every constant
/// unspecified; defaults are recorded here and exercised by the tests.
#[derive(Debug, Clone, Copy)]
pub struct KnownConfig {
    /// Base-case size n₀: at or below this the schedule amplifies each
    /// algorithm to a constant and runs one Grover-style search.
    pub base_threshold: usize,
    /// Whole-schedule repetitions of the reduction chain.
    pub repetitions: u32,
    /// Scale on the sequential-check threshold T₀/(n log n).
    pub seq_threshold_scale: f64,
    /// Scale β of the grid ratio 1 + β/log n.
    pub grid_scale: f64,
    /// Bucketing must shrink the algorithm count below this fraction,
    /// otherwise the level falls through to the base case.
    pub stall_fraction: f64,
    /// Guaranteed success probability targeted by the final
    /// amplification of the base case.
    pub base_target: f64,
    pub charge_mode: ChargeMode,
}

impl Default for KnownConfig {
    fn default() -> Self {
        KnownConfig {
            base_threshold: 16,
            repetitions: 3,
            seq_threshold_scale: 1.0,
            grid_scale: 1.0,
            stall_fraction: 0.875,
            base_target: 0.9,
            charge_mode: ChargeMode::EarlyStop,
        }
    }
}

/// One bucket of the (time, probability) partition.
#[derive(Debug, Clone)]
pub struct Bucket {
    /// Half-open time cell (lo, hi].
    pub time_cell: (f64, f64),
    /// Half-open probability cell (lo, hi].
    pub prob_cell: (f64, f64),
    /// Indices into the partitioned slice.
    pub members: Vec<usize>,
    pub composite: TimedAlg,
}

/// Per-level introspection used by the invariant tests.
#[derive(Debug, Clone)]
pub struct LevelReport {
    pub n_algs: usize,
    pub t0: f64,
    pub seq_checked: usize,
    pub seq_cost: u64,
    pub boosted: usize,
    /// Multiplicative growth of Σ t²/p caused by boosting.
    pub boost_overhead: f64,
    pub bucket_count: usize,
    /// (Σ_j s_j²/q_j) / (Σ_i t_i²/p_i) over the boosted survivors.
    pub bucket_overhead: f64,
    /// Claim-pT ranges held for every boosted survivor.
    pub claim_pt_ok: bool,
    /// Largest scheduler interval ratio d at this level.
    pub max_ratio: f64,
}

/// Base-case introspection.
#[derive(Debug, Clone, Copy)]
pub struct BaseReport {
    pub n_algs: usize,
    pub m_base: u32,
    /// Worst-case success guaranteed by the scheduler intervals.
    pub guaranteed: f64,
}

/// Exact simulation of one composed schedule.
#[derive(Debug, Clone)]
pub struct ScheduleSim {
    /// Deterministic worst-case oracle cost of one execution.
    pub cost: u64,
    /// Exact probability that the schedule outputs bit 1.
    pub success: f64,
    /// Conditional witness distribution given bit 1.
    pub witnesses: Vec<Witness>,
    pub levels: Vec<LevelReport>,
    pub base: BaseReport,
}

impl ScheduleSim {
    /// Probability of outputting a truly marked index.
    pub fn good_success(&self) -> f64 {
        self.success
            * self
                .witnesses
                .iter()
                .filter(|w| w.good)
                .map(|w| w.weight)
                .sum::<f64>()
    }
}

fn merge_witnesses(parts: &[(f64, &[Witness])]) -> Vec<Witness> {
    let total: f64 = parts.iter().map(|(p, _)| p).sum();
    if total <= 0.0 {
        return Vec::new();
    }
    let mut acc: BTreeMap<(usize, bool), f64> = BTreeMap::new();
    for (p, ws) in parts {
        for w in *ws {
            *acc.entry((w.index, w.good)).or_insert(0.0) += p * w.weight / total;
        }
    }
    acc.into_iter()
        .map(|((index, good), weight)| Witness { index, weight, good })
        .collect()
}

/// Smallest m with (2m+1)·arcsin√p_lo ≥ target angle.
fn smallest_m_reaching(p_lo: f64, target_angle: f64) -> AmpSchedule {
    let theta = p_lo.clamp(0.0, 1.0).sqrt().asin();
    if theta <= 0.0 {
        return AmpSchedule::new(0);
    }
    let k = (target_angle / theta).max(1.0);
    let mut m = ((k - 1.0) / 2.0).ceil().max(0.0) as u32;
    while (2.0 * m as f64 + 1.0) * theta < target_angle - 1e-12 {
        m += 1;
    }
    AmpSchedule::new(m)
}

/// Worst guaranteed success of `2m+1`-call amplification over a
/// probability interval. sin² on [a_lo, a_hi] attains its minimum at an
/// interior multiple of π if one exists, otherwise at an endpoint.
fn worst_over_interval(interval: ProbInterval, m: AmpSchedule) -> f64 {
    let k = m.calls() as f64;
    let a_lo = k * interval.lo.sqrt().asin();
    let a_hi = k * interval.hi.sqrt().asin();
    if (a_lo / PI).ceil() * PI <= a_hi {
        return 0.0;
    }
    a_lo.sin().powi(2).min(a_hi.sin().powi(2))
}

/// T₀ = max over algorithms of cost/√(interval lower end).
pub fn t_zero(algs: &[TimedAlg]) -> f64 {
    algs.iter()
        .map(|a| a.cost as f64 / a.interval.lo.sqrt())
        .fold(0.0, f64::max)
}

/// Splits a level into sequentially checked algorithms and survivors.
/// Each check is repeated ⌈2 log n⌉ times, so the eligibility threshold
/// carries the repetition count: cost/√p ≤ T₀/(2n log²n) keeps the
/// whole phase below T₀/log n. Returns (checked, survivors) as index
/// lists, checked in ascending cost order.
pub fn sequential_phase(algs: &[TimedAlg], scale: f64) -> (Vec<usize>, Vec<usize>) {
    let n = algs.len();
    let log_n = log2n(n);
    let t0 = t_zero(algs);
    let threshold = scale * t0 / (2.0 * n as f64 * log_n * log_n);
    let mut checked: Vec<usize> = (0..n)
        .filter(|&i| algs[i].cost as f64 / algs[i].interval.lo.sqrt() <= threshold)
        .collect();
    checked.sort_by_key(|&i| (algs[i].cost, i));
    let survivors: Vec<usize> = (0..n).filter(|i| !checked.contains(i)).collect();
    (checked, survivors)
}

/// Amplifies every algorithm whose lower success bound is below
/// 1/(9 log n) so that all lower bounds land in [p₀, 1]. Returns the
/// new algorithms, the number boosted, and the growth of Σ t²/p.
pub fn boost_small_probs(algs: &[TimedAlg], n: usize) -> (Vec<TimedAlg>, usize, f64) {
    let log_n = log2n(n);
    let floor = 1.0 / (9.0 * log_n);
    let before: f64 = algs
        .iter()
        .map(|a| (a.cost as f64).powi(2) / a.interval.lo)
        .sum();
    let mut boosted = 0;
    let out: Vec<TimedAlg> = algs
        .iter()
        .map(|a| {
            if a.interval.lo < floor {
                let m = choose_m_with_log(a.interval.lo, log_n)
                    .expect("lower bound is below the amplification floor");
                boosted += 1;
                a.amplified(m)
            } else {
                a.clone()
            }
        })
        .collect();
    let after: f64 = out
        .iter()
        .map(|a| (a.cost as f64).powi(2) / a.interval.lo)
        .sum();
    (out, boosted, if before > 0.0 { after / before } else { 1.0 })
}

/// Geometric cell index for a value in the grid anchored at `top` with
/// log-ratio `ln_r`: the half-open cell (top·r^{−(k+1)}, top·r^{−k}].
fn cell_index(value: f64, top: f64, ln_r: f64) -> i64 {
    debug_assert!(value > 0.0 && value <= top * (1.0 + 1e-9));
    let mut k = ((top / value).ln() / ln_r).floor() as i64;
    // Float guard at the half-open boundaries.
    while k > 0 && value > top * (-(k as f64) * ln_r).exp() {
        k -= 1;
    }
    while value <= top * (-((k + 1) as f64) * ln_r).exp() {
        k += 1;
    }
    k.max(0)
}

/// Partitions boosted algorithms into geometric (time, probability)
/// buckets of ratio 1 + β/log n and composes each bucket into one
/// algorithm: pick a member uniformly at random and run it.
pub fn partition_buckets(algs: &[TimedAlg], n: usize, grid_scale: f64) -> Vec<Bucket> {
    assert!(!algs.is_empty());
    let log_n = log2n(n);
    let r = 1.0 + grid_scale / log_n;
    let ln_r = r.ln();
    let t_top = algs.iter().map(|a| a.cost as f64).fold(0.0, f64::max);
    let mut cells: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for (i, a) in algs.iter().enumerate() {
        let tk = cell_index(a.cost as f64, t_top, ln_r);
        let pk = cell_index(a.interval.lo, 1.0, ln_r);
        cells.entry((tk, pk)).or_default().push(i);
    }
    cells
        .into_iter()
        .map(|((tk, pk), members)| {
            let time_cell = (
                t_top * (-((tk + 1) as f64) * ln_r).exp(),
                t_top * (-(tk as f64) * ln_r).exp(),
            );
            let prob_cell = (
                (-((pk + 1) as f64) * ln_r).exp(),
                (-(pk as f64) * ln_r).exp(),
            );
            let size = members.len() as f64;
            let cost = members.iter().map(|&i| algs[i].cost).max().unwrap();
            let q = prob_cell.0 / size;
            let d_max = members
                .iter()
                .map(|&i| algs[i].interval.ratio())
                .fold(1.0, f64::max);
            let hi = (q * r * d_max).min(1.0);
            let true_success: f64 =
                members.iter().map(|&i| algs[i].true_success).sum::<f64>() / size;
            let parts: Vec<(f64, &[Witness])> = members
                .iter()
                .map(|&i| (algs[i].true_success / size, algs[i].witnesses.as_slice()))
                .collect();
            let witnesses = merge_witnesses(&parts);
            Bucket {
                time_cell,
                prob_cell,
                members,
                composite: TimedAlg {
                    cost,
                    interval: ProbInterval::new(q, hi.max(q)),
                    true_success,
                    witnesses,
                },
            }
        })
        .collect()
}

/// Minimum guaranteed success a base-case plan must reach before cost
/// alone decides between variants.
const BASE_ACCEPT: f64 = 0.8;

/// Final amplification for a uniform mixture: smallest schedule whose
/// guaranteed success over the interval reaches the target, or the best
/// achievable one when the interval is too wide.
fn mixture_schedule(sigma: ProbInterval, target: f64) -> (AmpSchedule, f64) {
    let cap = AmpSchedule::max_admissible(sigma.lo) + 2;
    let mut best = (AmpSchedule::new(0), -1.0);
    for m in 0..=cap {
        let w = worst_over_interval(sigma, AmpSchedule::new(m));
        if w > best.1 {
            best = (AmpSchedule::new(m), w);
        }
        if w >= target {
            return (AmpSchedule::new(m), w);
        }
    }
    best
}

/// Grover-style search over a uniform mixture of already-amplified
/// algorithms: schedule, guaranteed success, and cost.
fn mixture_plan(amped: &[TimedAlg], target: f64) -> (AmpSchedule, f64, u64) {
    let n = amped.len() as f64;
    let sigma_lo = amped
        .iter()
        .map(|a| a.interval.lo)
        .fold(f64::INFINITY, f64::min)
        / n;
    let sigma_hi = (amped.iter().map(|a| a.interval.hi).fold(0.0, f64::max) / n)
        .min(1.0)
        .max(sigma_lo);
    let sigma = ProbInterval::new(sigma_lo, sigma_hi);
    let (m, guaranteed) = mixture_schedule(sigma, target);
    let oracle_cost = amped.iter().map(|a| a.cost).max().unwrap();
    (m, guaranteed, m.calls() * oracle_cost)
}

/// Base-case variant: optionally pre-amplify every algorithm so its
/// guaranteed success reaches 1/2 before mixing. Raw mixing wins when
/// the probabilities are comparable (no rounding waste from tiny
/// amplification counts); pre-amplified mixing wins when they spread.
#[derive(Clone, Copy)]
enum BasePreamp {
    Raw,
    Half,
}

/// One searched group of the base case: a mixture schedule, classical
/// repetitions lifting its guarantee over the acceptance floor, and the
/// resulting cost.
#[derive(Debug, Clone, Copy)]
struct GroupPlan {
    m: AmpSchedule,
    reps: u64,
    guaranteed: f64,
    cost: u64,
}

/// Mixture search of one group, repeated classically until the
/// guarantee clears the floor (at most 4 passes). Returns None when
/// even repetition cannot reach it.
fn group_plan(group: &[TimedAlg], target: f64) -> Option<GroupPlan> {
    let (m, g, c) = mixture_plan(group, target);
    if g <= 0.0 {
        return None;
    }
    let mut reps: u64 = 1;
    let mut total = g;
    while reps < 4 && total < BASE_ACCEPT - 1e-9 {
        reps += 1;
        total = 1.0 - (1.0 - g).powi(reps as i32);
    }
    if total < BASE_ACCEPT - 1e-9 {
        return None;
    }
    Some(GroupPlan {
        m,
        reps,
        guaranteed: total,
        cost: c * reps,
    })
}

fn base_variant(algs: &[TimedAlg], preamp: BasePreamp, cfg: &KnownConfig) -> ScheduleSim {
    let n = algs.len();
    let mut mix: Vec<TimedAlg> = match preamp {
        BasePreamp::Raw => algs.to_vec(),
        BasePreamp::Half => algs
            .iter()
            .map(|a| a.amplified(smallest_m_reaching(a.interval.lo, FRAC_PI_4)))
            .collect(),
    };
    // Minimum-cost partition into contiguous cost-sorted groups, each
    // searched as one (possibly repeated) mixture. The dynamic program
    // subsumes a flat mixture, cost tiers, and peeling a dominant
    // member into its own group.
    mix.sort_by_key(|a| std::cmp::Reverse(a.cost));
    let mut best: Vec<Option<(u64, usize, GroupPlan)>> = vec![None; n + 1];
    // best[i]: (total cost, split point j, plan of group i..j) for the
    // suffix starting at i.
    let mut suffix_ok = vec![false; n + 1];
    suffix_ok[n] = true;
    for i in (0..n).rev() {
        for j in (i + 1)..=n {
            if !suffix_ok[j] {
                continue;
            }
            if let Some(plan) = group_plan(&mix[i..j], cfg.base_target) {
                let tail = if j == n { 0 } else { best[j].unwrap().0 };
                let total = plan.cost + tail;
                if best[i].map_or(true, |(c, _, _)| total < c) {
                    best[i] = Some((total, j, plan));
                }
            }
        }
        suffix_ok[i] = best[i].is_some();
    }
    // Collect groups; fall back to one flat best-effort mixture when no
    // partition reaches the floor everywhere.
    let mut groups: Vec<(usize, usize, GroupPlan)> = Vec::new();
    if suffix_ok[0] {
        let mut i = 0;
        while i < n {
            let (_, j, plan) = best[i].unwrap();
            groups.push((i, j, plan));
            i = j;
        }
    } else {
        let (m, g, c) = mixture_plan(&mix, cfg.base_target);
        groups.push((
            0,
            n,
            GroupPlan {
                m,
                reps: 1,
                guaranteed: g,
                cost: c,
            },
        ));
    }

    // Exact composition, cheapest group first; the first success wins.
    groups.reverse();
    let mut cost = 0u64;
    let mut reach = 1.0;
    let mut success = 0.0;
    let mut guaranteed: f64 = 1.0;
    let mut m_report = 0;
    let mut parts: Vec<(f64, Vec<Witness>)> = Vec::new();
    for &(i, j, plan) in &groups {
        let group = &mix[i..j];
        cost += plan.cost;
        guaranteed = guaranteed.min(plan.guaranteed);
        m_report = m_report.max(plan.m.m);
        let k = group.len() as f64;
        let sigma_true: f64 = group.iter().map(|a| a.true_success).sum::<f64>() / k;
        let one_pass = amplify_exact(sigma_true, plan.m);
        let search_success = 1.0 - (1.0 - one_pass).powi(plan.reps as i32);
        let fire = reach * search_success;
        success += fire;
        for a in group {
            let share = if sigma_true > 0.0 {
                a.true_success / (sigma_true * k)
            } else {
                0.0
            };
            parts.push((fire * share, a.witnesses.clone()));
        }
        reach *= 1.0 - search_success;
    }
    let flat: Vec<(f64, &[Witness])> = parts.iter().map(|(p, w)| (*p, w.as_slice())).collect();
    ScheduleSim {
        cost,
        success,
        witnesses: merge_witnesses(&flat),
        levels: Vec::new(),
        base: BaseReport {
            n_algs: n,
            m_base: m_report,
            guaranteed,
        },
    }
}

/// Constant-size base case: the cheaper of the raw-mixture and
/// pre-amplified-mixture variants among those meeting the scheduler's
/// success guarantee. Selection uses only scheduler-side quantities.
fn base_case(algs: &[TimedAlg], cfg: &KnownConfig) -> ScheduleSim {
    let raw = base_variant(algs, BasePreamp::Raw, cfg);
    let half = base_variant(algs, BasePreamp::Half, cfg);
    let floor = BASE_ACCEPT - 1e-9;
    match (raw.base.guaranteed >= floor, half.base.guaranteed >= floor) {
        (true, true) => {
            if raw.cost <= half.cost {
                raw
            } else {
                half
            }
        }
        (true, false) => raw,
        (false, true) => half,
        (false, false) => {
            if raw.base.guaranteed >= half.base.guaranteed {
                raw
            } else {
                half
            }
        }
    }
}

/// Builds and exactly simulates the schedule for one set of algorithms
/// under the assumption of exactly one marked member.
///
/// Levels of more than 4 algorithms run the full pipeline; the base
/// case fires once the bucket composites number at most n₀ (or the
/// grid stops shrinking the level).
pub fn schedule(algs: &[TimedAlg], cfg: &KnownConfig) -> ScheduleSim {
    let n = algs.len();
    if n <= 4 {
        return base_case(algs, cfg);
    }
    let log_n = log2n(n);
    let t0 = t_zero(algs);
    let (checked, survivor_idx) = sequential_phase(algs, cfg.seq_threshold_scale);

    // Sequential checks: amplify to guaranteed 1/2, repeat ⌈2 log n⌉
    // times; the first success wins.
    let reps = (2.0 * log_n).ceil() as u64;
    let mut seq_cost = 0u64;
    let mut reach = 1.0; // probability no earlier check fired
    let mut seq_parts: Vec<(f64, &[Witness])> = Vec::new();
    let mut p_seq = 0.0;
    for &i in &checked {
        let m = smallest_m_reaching(algs[i].interval.lo, FRAC_PI_4);
        let one = amplify_exact(algs[i].true_success, m);
        let hit = 1.0 - (1.0 - one).powi(reps as i32);
        seq_cost += reps * m.calls() * algs[i].cost;
        let fire = reach * hit;
        p_seq += fire;
        seq_parts.push((fire, algs[i].witnesses.as_slice()));
        reach *= 1.0 - hit;
    }

    let survivors: Vec<TimedAlg> = survivor_idx.iter().map(|&i| algs[i].clone()).collect();
    let mut report = LevelReport {
        n_algs: n,
        t0,
        seq_checked: checked.len(),
        seq_cost,
        boosted: 0,
        boost_overhead: 1.0,
        bucket_count: 0,
        bucket_overhead: 1.0,
        claim_pt_ok: true,
        max_ratio: algs.iter().map(|a| a.interval.ratio()).fold(1.0, f64::max),
    };

    let search = if survivors.is_empty() {
        None
    } else if survivors.len() <= 4 {
        Some(base_case(&survivors, cfg))
    } else {
        let (boosted, boosted_count, boost_overhead) = boost_small_probs(&survivors, n);
        report.boosted = boosted_count;
        report.boost_overhead = boost_overhead;
        report.claim_pt_ok = claim_pt_holds(&boosted, t0, n, cfg.seq_threshold_scale);
        let buckets = partition_buckets(&boosted, n, cfg.grid_scale);
        report.bucket_count = buckets.len();
        let sum_parent: f64 = boosted
            .iter()
            .map(|a| (a.cost as f64).powi(2) / a.interval.lo)
            .sum();
        let sum_child: f64 = buckets
            .iter()
            .map(|b| (b.composite.cost as f64).powi(2) / b.composite.interval.lo)
            .sum();
        report.bucket_overhead = if sum_parent > 0.0 {
            sum_child / sum_parent
        } else {
            1.0
        };
        if buckets.len() <= cfg.base_threshold {
            let composites: Vec<TimedAlg> = buckets.into_iter().map(|b| b.composite).collect();
            Some(base_case(&composites, cfg))
        } else if buckets.len() as f64 > cfg.stall_fraction * n as f64 {
            // The grid stopped shrinking the level; finish directly.
            Some(base_case(&boosted, cfg))
        } else {
            let composites: Vec<TimedAlg> = buckets.into_iter().map(|b| b.composite).collect();
            Some(schedule(&composites, cfg))
        }
    };

    match search {
        None => ScheduleSim {
            cost: seq_cost,
            success: p_seq,
            witnesses: merge_witnesses(&seq_parts),
            levels: vec![report],
            base: BaseReport {
                n_algs: 0,
                m_base: 0,
                guaranteed: 0.0,
            },
        },
        Some(child) => {
            let success = p_seq + reach * child.success;
            let mut parts = seq_parts;
            parts.push((reach * child.success, child.witnesses.as_slice()));
            let witnesses = merge_witnesses(&parts);
            let mut levels = vec![report];
            levels.extend(child.levels.iter().cloned());
            ScheduleSim {
                cost: seq_cost + child.cost,
                success,
                witnesses,
                levels,
                base: child.base,
            }
        }
    }
}

/// Claim-pT check for boosted survivors: probabilities in [p₀, 1] and
/// costs above the sequential threshold times √p₀, below T₀.
fn claim_pt_holds(boosted: &[TimedAlg], t0: f64, n: usize, scale: f64) -> bool {
    let log_n = log2n(n);
    let p0 = (1.0 - 1.0 / (3.0 * log_n)) / (9.0 * log_n);
    let cost_lo = scale * t0 * p0.sqrt() / (2.0 * n as f64 * log_n * log_n);
    boosted.iter().all(|a| {
        a.interval.lo >= p0 * (1.0 - 1e-9)
            && a.interval.lo <= 1.0 + 1e-9
            && a.cost as f64 >= cost_lo * (1.0 - 1e-9)
            && a.cost as f64 <= t0 * (1.0 + 1e-9)
    })
}

/// The subset chain plus the schedule repetition count: running the
/// single-marked search once per chain element and repeating the whole
/// schedule amplifies the constant success of the one-marked reduction.
pub fn reduce_to_single_marked<R: Rng>(
    instance: &Instance,
    rng: &mut R,
    repetitions: u32,
) -> (Vec<Vec<usize>>, u32) {
    (crate::model::random_subset_chain(instance, rng), repetitions)
}

/// Outcome of one full known-times search run.
#[derive(Debug, Clone)]
pub struct KnownRun {
    pub found: Option<usize>,
    /// Oracle steps charged by this run (schedules plus verifications).
    pub cost: u64,
    /// Exact probability that this run (with its sampled chains) finds
    /// a marked item.
    pub analytic_success: f64,
    /// Simulation of the full-instance schedule from the first
    /// repetition, for invariant inspection.
    pub first_sim: ScheduleSim,
}

/// Full pipeline: subset-chain reduction, per-sub-instance schedules,
/// verified candidates, early exit on the first verified find.
pub fn known_search<R: Rng>(
    instance: &Instance,
    cfg: &KnownConfig,
    rng: &mut R,
    meter: &mut CostMeter,
) -> KnownRun {
    let mut analytic_fail = 1.0;
    let mut found = None;
    let mut first_sim: Option<ScheduleSim> = None;
    'outer: for _rep in 0..cfg.repetitions {
        let (chain, _) = reduce_to_single_marked(instance, rng, cfg.repetitions);
        for subset in &chain {
            let algs = item_algs(instance, subset);
            let sim = schedule(&algs, cfg);
            meter.charge(sim.cost);
            analytic_fail *= 1.0 - sim.good_success();
            if first_sim.is_none() {
                first_sim = Some(sim.clone());
            }
            // Draw the outcome and verify any candidate by running its
            // evaluator to completion.
            if rng.gen::<f64>() < sim.success {
                if let Some(w) = sample_witness(&sim.witnesses, rng) {
                    let t = instance.item(w).t;
                    if let QueryOutcome::Complete(true) =
                        run_item(instance, w, t, cfg.charge_mode, meter).unwrap()
                    {
                        found = Some(w);
                        break 'outer;
                    }
                }
            }
        }
    }
    KnownRun {
        found,
        cost: meter.total(),
        analytic_success: 1.0 - analytic_fail,
        first_sim: first_sim.expect("chain is never empty"),
    }
}

fn sample_witness<R: Rng>(witnesses: &[Witness], rng: &mut R) -> Option<usize> {
    if witnesses.is_empty() {
        return None;
    }
    let mut u = rng.gen::<f64>();
    for w in witnesses {
        u -= w.weight;
        if u <= 0.0 {
            return Some(w.index);
        }
    }
    Some(witnesses.last().unwrap().index)
}
