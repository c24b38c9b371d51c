//! Exact amplitude-amplification arithmetic in the 2-D invariant
//! subspace.
//!
//! Every algorithm composed in this crate ends in a state of the form
//! `sin θ |1⟩|ψ₁⟩ + cos θ |0⟩|ψ₀⟩`, so amplification with `2m+1` calls
//! is exactly the angle map `θ → (2m+1)θ`. All functions here are pure
//! and exact up to double rounding; no state vectors are involved.

use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

const ANGLE_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum CalculusError {
    /// `(2m+1)·arcsin√δ` exceeds π/2, so the amplification bound of the
    /// tight analysis does not apply.
    #[error("amplification constraint violated: (2m+1)·arcsin√δ = {angle} > π/2")]
    ConstraintViolated { angle: f64 },
    /// `choose_m` was asked to amplify a probability that needs no
    /// amplification, or a degenerate one.
    #[error("probability {p} outside (0, 1/(9 log n)) = (0, {limit})")]
    NoAmplificationNeeded { p: f64, limit: f64 },
}

/// A success probability δ ∈ [0,1] together with its angle
/// θ = arcsin√δ ∈ [0, π/2].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuccessProb {
    delta: f64,
    theta: f64,
}

impl SuccessProb {
    pub fn new(delta: f64) -> Self {
        assert!(
            (-ANGLE_TOL..=1.0 + ANGLE_TOL).contains(&delta),
            "probability {delta} outside [0,1]"
        );
        let delta = delta.clamp(0.0, 1.0);
        SuccessProb {
            delta,
            theta: delta.sqrt().asin(),
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Number of amplification rounds; the amplified algorithm makes `2m+1`
/// calls to the original and its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AmpSchedule {
    pub m: u32,
}

impl AmpSchedule {
    pub fn new(m: u32) -> Self {
        AmpSchedule { m }
    }

    pub fn calls(&self) -> u64 {
        2 * self.m as u64 + 1
    }

    /// The largest m admissible for a probability cap ε:
    /// m ≤ π/(4 arcsin √ε) − 1/2.
    pub fn max_admissible(epsilon: f64) -> u32 {
        let theta = epsilon.clamp(0.0, 1.0).sqrt().asin();
        if theta <= 0.0 {
            return u32::MAX;
        }
        let bound = PI / (4.0 * theta) - 0.5;
        if bound < 0.0 {
            0
        } else {
            bound.floor() as u32
        }
    }
}

/// A success probability known only to lie in `[lo, hi]` with
/// `hi = d·lo`, `d ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbInterval {
    pub lo: f64,
    pub hi: f64,
}

impl ProbInterval {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo > 0.0 && lo <= hi + ANGLE_TOL, "bad interval [{lo}, {hi}]");
        assert!(hi <= 1.0 + ANGLE_TOL, "interval ceiling {hi} > 1");
        ProbInterval {
            lo: lo.min(1.0),
            hi: hi.min(1.0).max(lo.min(1.0)),
        }
    }

    pub fn exact(p: f64) -> Self {
        Self::new(p, p)
    }

    /// The ratio d = hi/lo.
    pub fn ratio(&self) -> f64 {
        self.hi / self.lo
    }

    /// Both interval ends mapped through `amplify_exact`. The ratio of
    /// the new interval never exceeds the old one (Claim-2 monotonicity),
    /// provided the schedule is admissible for `hi`.
    pub fn amplify(&self, m: AmpSchedule) -> Self {
        ProbInterval::new(
            amplify_exact(self.lo, m),
            amplify_exact(self.hi, m).max(amplify_exact(self.lo, m)),
        )
    }
}

/// Success probability after amplitude amplification with `2m+1` calls:
/// sin²((2m+1)·arcsin√δ). Exact for any δ and m, including past π/2
/// (over-rotation reduces the probability again).
pub fn amplify_exact(delta: f64, m: AmpSchedule) -> f64 {
    let theta = SuccessProb::new(delta).theta();
    ((2.0 * m.m as f64 + 1.0) * theta).sin().powi(2)
}

/// The tight amplification lower bound
/// `(1 − (2m+1)²δ/3)·(2m+1)²δ ≤ amplify_exact(δ, m)`,
/// valid whenever `(2m+1)·arcsin√δ ≤ π/2`.
pub fn aa_lower_bound(delta: f64, m: AmpSchedule) -> Result<f64, CalculusError> {
    let theta = SuccessProb::new(delta).theta();
    let k = 2.0 * m.m as f64 + 1.0;
    let angle = k * theta;
    if angle > FRAC_PI_2 + ANGLE_TOL {
        return Err(CalculusError::ConstraintViolated { angle });
    }
    Ok((1.0 - k * k * delta / 3.0) * k * k * delta)
}

/// Smallest m with `(2m+1)²·p ≥ 1/(9 log n)`. The squeeze argument
/// guarantees `(2m+1)²·p ≤ 1/log n` for that m, which the function
/// asserts. Requires `0 < p < 1/(9 log n)`.
pub fn choose_m(p: f64, n: usize) -> Result<AmpSchedule, CalculusError> {
    choose_m_with_log(p, crate::log2n(n))
}

/// `choose_m` with the (base-2) logarithm supplied directly; the
/// schedulers call this with a clamped log for tiny n.
pub fn choose_m_with_log(p: f64, log_n: f64) -> Result<AmpSchedule, CalculusError> {
    let floor = 1.0 / (9.0 * log_n);
    if !(p > 0.0 && p < floor) {
        return Err(CalculusError::NoAmplificationNeeded { p, limit: floor });
    }
    // (2m+1)^2 >= 1/(9 p log n)
    let k_min = (1.0 / (9.0 * log_n * p)).sqrt();
    let mut m = ((k_min - 1.0) / 2.0).ceil().max(1.0) as u32;
    // Guard against float rounding right at the boundary.
    while (2.0 * m as f64 + 1.0).powi(2) * p < floor {
        m += 1;
    }
    while m > 1 && (2.0 * (m - 1) as f64 + 1.0).powi(2) * p >= floor {
        m -= 1;
    }
    let k2p = (2.0 * m as f64 + 1.0).powi(2) * p;
    debug_assert!(
        k2p <= 1.0 / log_n + ANGLE_TOL,
        "squeeze bound failed: (2m+1)^2 p = {k2p} > 1/log n"
    );
    Ok(AmpSchedule::new(m))
}

/// Claim-2 pair: amplifies both ends and checks the sandwich
/// `p(δ_lo) ≤ p(δ_hi) ≤ (δ_hi/δ_lo)·p(δ_lo)`.
pub fn monotone_pair(
    delta_lo: f64,
    delta_hi: f64,
    m: AmpSchedule,
) -> Result<(f64, f64), CalculusError> {
    assert!(delta_lo <= delta_hi, "delta_lo must not exceed delta_hi");
    // Admissibility at the larger δ implies it at the smaller.
    let angle_hi = (2.0 * m.m as f64 + 1.0) * SuccessProb::new(delta_hi).theta();
    if angle_hi > FRAC_PI_2 + ANGLE_TOL {
        return Err(CalculusError::ConstraintViolated { angle: angle_hi });
    }
    let p_lo = amplify_exact(delta_lo, m);
    let p_hi = amplify_exact(delta_hi, m);
    let c = if delta_lo > 0.0 { delta_hi / delta_lo } else { 1.0 };
    debug_assert!(p_lo <= p_hi + ANGLE_TOL);
    debug_assert!(p_hi <= c * p_lo + ANGLE_TOL);
    Ok((p_lo, p_hi))
}

/// A Grover run over a group with a 0-or-1-marked promise, with the
/// final rotation shrunk so that a marked item is measured with
/// certainty.
#[derive(Debug, Clone, Copy)]
pub struct GroverPlan {
    /// Oracle queries consumed by the iterations (final one adjusted).
    pub iterations: u64,
    /// Rotation half-angle of the adjusted final iteration, in (0, θ].
    pub final_half_angle: f64,
    /// sin² of the final state angle; 1 up to rounding.
    pub success_prob: f64,
}

/// Exact-Grover plan for `n_items ≥ 2` with one marked item: the
/// smallest iteration count whose full rotations reach or pass π/2,
/// with the last rotation shrunk to land on π/2 exactly.
pub fn exact_grover_plan(n_items: u64) -> GroverPlan {
    assert!(n_items >= 2, "plans exist for groups of at least 2");
    let theta = (1.0 / (n_items as f64).sqrt()).asin();
    let mut j = (FRAC_PI_2 / (2.0 * theta) - 0.5).ceil() as u64;
    while (2.0 * j as f64 + 1.0) * theta < FRAC_PI_2 - ANGLE_TOL {
        j += 1;
    }
    // After j-1 full iterations the angle is (2j-1)θ < π/2; one partial
    // rotation by 2·final_half_angle closes the gap.
    let prior = (2.0 * (j as f64) - 1.0) * theta;
    let final_half_angle = ((FRAC_PI_2 - prior) / 2.0).max(0.0).min(theta);
    let final_angle = prior + 2.0 * final_half_angle;
    GroverPlan {
        iterations: j,
        final_half_angle,
        success_prob: final_angle.sin().powi(2),
    }
}

/// Query budget and success probability of exact Grover search under
/// the 0-or-1-marked promise: `⌈(π/4)√n⌉` queries, probability 1.
/// The realized plan (`exact_grover_plan`) never exceeds the budget.
pub fn exact_grover_prob(n_items: u64, marked: u8) -> (u64, f64) {
    assert!(n_items >= 1);
    assert!(marked <= 1, "promise allows 0 or 1 marked items");
    let budget = (PI / 4.0 * (n_items as f64).sqrt()).ceil() as u64;
    (budget, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(v: u32) -> AmpSchedule {
        AmpSchedule::new(v)
    }

    #[test]
    fn amplify_identity_at_m0() {
        assert!((amplify_exact(0.37, m(0)) - 0.37).abs() < 1e-12);
    }

    #[test]
    fn amplify_quarter_reaches_one() {
        // 3·arcsin(1/2) = π/2 exactly.
        assert!((amplify_exact(0.25, m(1)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn amplify_small_delta() {
        // sin²(5·arcsin 0.1), recomputed directly.
        assert!((amplify_exact(0.01, m(2)) - 0.2305536256).abs() < 1e-9);
    }

    #[test]
    fn lower_bound_example() {
        let lb = aa_lower_bound(0.01, m(2)).unwrap();
        assert!((lb - 0.229_166_666_666_666_6).abs() < 1e-12);
        assert!(amplify_exact(0.01, m(2)) >= lb);
    }

    #[test]
    fn lower_bound_below_identity_at_m0() {
        for delta in [0.0, 0.1, 0.5, 0.9, 1.0] {
            let lb = aa_lower_bound(delta, m(0)).unwrap();
            assert!((lb - (1.0 - delta / 3.0) * delta).abs() < 1e-12);
            assert!(lb <= delta + 1e-12);
        }
    }

    #[test]
    fn lower_bound_zero() {
        assert_eq!(aa_lower_bound(0.0, m(7)).unwrap(), 0.0);
    }

    #[test]
    fn lower_bound_rejects_overrotation() {
        assert!(matches!(
            aa_lower_bound(0.5, m(3)),
            Err(CalculusError::ConstraintViolated { .. })
        ));
    }

    #[test]
    fn choose_m_examples() {
        // log n = 10 throughout (n = 1024).
        assert_eq!(choose_m(0.001, 1024).unwrap().m, 2);
        // p just below the floor: m = 1 and 9p ≤ 1/log n.
        let p = 1.0 / (9.01 * 10.0);
        assert_eq!(choose_m(p, 1024).unwrap().m, 1);
        assert!(9.0 * p <= 1.0 / 10.0);
        assert_eq!(choose_m(1.0 / 360.0, 1024).unwrap().m, 1);
        assert!(choose_m(1.0 / 90.0, 1024).is_err());
        assert!(choose_m(0.5, 1024).is_err());
    }

    #[test]
    fn monotone_pair_equal_deltas() {
        let (lo, hi) = monotone_pair(0.01, 0.01, m(2)).unwrap();
        assert_eq!(lo, hi);
    }

    #[test]
    fn monotone_pair_ratio_bounded() {
        let (lo, hi) = monotone_pair(0.01, 0.02, m(2)).unwrap();
        assert!(lo <= hi);
        assert!(hi <= 2.0 * lo + 1e-12);
    }

    #[test]
    fn monotone_pair_identity_ratio_exact() {
        let (lo, hi) = monotone_pair(0.003, 0.009, m(0)).unwrap();
        assert!((hi / lo - 3.0).abs() < 1e-12);
    }

    #[test]
    fn grover_budgets() {
        assert_eq!(exact_grover_prob(1, 1), (1, 1.0));
        assert_eq!(exact_grover_prob(4, 1), (2, 1.0));
        assert_eq!(exact_grover_prob(10, 0), (3, 1.0));
    }

    #[test]
    fn grover_plan_certain_and_within_budget() {
        for n in 2..=2000u64 {
            let plan = exact_grover_plan(n);
            let (budget, _) = exact_grover_prob(n, 1);
            assert!(plan.iterations <= budget, "n={n}");
            assert!((plan.success_prob - 1.0).abs() < 1e-9, "n={n}");
            let theta = (1.0 / (n as f64).sqrt()).asin();
            assert!(plan.final_half_angle > 0.0 && plan.final_half_angle <= theta + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn amplify_dominates_lower_bound(delta in 0.0f64..1.0, mm in 0u32..40) {
            let cap = AmpSchedule::max_admissible(delta);
            let mm = mm.min(cap);
            if let Ok(lb) = aa_lower_bound(delta, m(mm)) {
                prop_assert!(amplify_exact(delta, m(mm)) >= lb - 1e-12);
            }
        }

        #[test]
        fn amplify_nondecreasing_on_admissible(d1 in 0.0f64..0.9, d2 in 0.0f64..0.9, mm in 0u32..20) {
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            let cap = AmpSchedule::max_admissible(hi);
            let mm = mm.min(cap);
            prop_assert!(amplify_exact(lo, m(mm)) <= amplify_exact(hi, m(mm)) + 1e-12);
        }

        #[test]
        fn choose_m_lands_in_window(p in 1e-7f64..1e-3, n in 2usize..100_000) {
            let log_n = crate::log2n(n);
            if p < 1.0 / (9.0 * log_n) {
                let sched = choose_m(p, n).unwrap();
                let k2p = (sched.calls() as f64).powi(2) * p;
                prop_assert!(k2p >= 1.0 / (9.0 * log_n) - 1e-12);
                prop_assert!(k2p <= 1.0 / log_n + 1e-12);
            }
        }
    }
}
