//! Amplitude estimation: Est-Amp backends, median boosting, and the
//! doubling `estimate` procedure with its cost contract.
//!
//! The estimation guarantee used downstream is: with probability at
//! least 8/π², an M-point estimate ε̃ of a success probability ε
//! satisfies |ε − ε̃| ≤ 2π√(max(ε(1−ε), ε̃(1−ε̃)))/M + π²/M², and all
//! estimates lie on the grid {sin²(πy/M)}. The reference backend draws
//! from the exact M-point phase-estimation outcome distribution of the
//! rotation angle θ = arcsin√ε; a second backend returns worst-case
//! estimates that meet the bound with exactly that probability, so
//! downstream algorithms can be exercised against both.

use crate::model::CostMeter;
use rand::{Rng, RngCore};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EstimationError {
    #[error("relative accuracy c = {0} must lie in (0, 1); the round cap diverges at 1")]
    BadAccuracy(f64),
    #[error("promise floor p = {0} must lie in (0, 1]")]
    BadFloor(f64),
    #[error("confidence exponent k must be at least 1")]
    BadConfidence,
    #[error("median repetitions must be odd, got {0}")]
    EvenReps(u64),
}

/// Source of single Est-Amp outcomes. `epsilon` is the true success
/// probability (known to the simulator, hidden from the procedures that
/// consume the estimates).
pub trait EstAmpBackend {
    fn draw(&self, epsilon: f64, m_points: u64, rng: &mut dyn RngCore) -> f64;
}

/// Theorem-2 error allowance for an (ε, ε̃, M) triple.
pub fn est_amp_bound(epsilon: f64, estimate: f64, m_points: u64) -> f64 {
    let m = m_points as f64;
    let spread = (epsilon * (1.0 - epsilon)).max(estimate * (1.0 - estimate));
    2.0 * PI * spread.sqrt() / m + PI * PI / (m * m)
}

/// Squared Fejér kernel of phase estimation: the probability weight of
/// an outcome at signed bin distance `d` from the true phase, M points.
fn kernel(d: f64, m_points: u64) -> f64 {
    if d.abs() < 1e-12 {
        return 1.0;
    }
    let m = m_points as f64;
    let denom = m * (PI * d / m).sin();
    let num = (PI * d).sin();
    (num / denom).powi(2)
}

/// Exact phase-estimation backend: outcome y ∈ {0,…,M−1} distributed as
/// the equal mixture of the two eigenphase branches ±θ/π, estimate
/// sin²(πy/M). Sampling is rejection against a 1/d² tail envelope and
/// takes O(1) expected time per draw.
#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseEstimationBackend;

impl PhaseEstimationBackend {
    /// Full outcome pmf over y = 0..M−1, O(M); used by tests and by the
    /// calibration suite.
    pub fn pmf(&self, epsilon: f64, m_points: u64) -> Vec<f64> {
        let theta = epsilon.clamp(0.0, 1.0).sqrt().asin();
        let m = m_points as f64;
        let z = theta / PI * m;
        (0..m_points)
            .map(|y| {
                let d_plus = wrap_bins(z - y as f64, m);
                let d_minus = wrap_bins(-z - y as f64, m);
                0.5 * kernel(d_plus, m_points) + 0.5 * kernel(d_minus, m_points)
            })
            .collect()
    }

    fn sample_branch(&self, z: f64, m_points: u64, rng: &mut dyn RngCore) -> u64 {
        let m = m_points as f64;
        let base = z.floor();
        let f = z - base;
        // Rejection against e(j): 1 on the two central bins, else
        // (1/2)·1/(k(k+1)) on tail bins; region masses 2 : 1/2 : 1/2.
        loop {
            let u: f64 = rng.gen();
            let j: i64 = if u < 2.0 / 3.0 {
                if rng.gen::<bool>() {
                    0
                } else {
                    1
                }
            } else {
                let k = (1.0 / rng.gen_range(f64::MIN_POSITIVE..1.0)).floor() as i64;
                if u < 5.0 / 6.0 {
                    k + 1
                } else {
                    -k
                }
            };
            let d = f - j as f64;
            if d.abs() > m / 2.0 {
                continue;
            }
            let envelope = match j {
                0 | 1 => 1.0,
                _ => {
                    let k = if j >= 2 { j - 1 } else { -j } as f64;
                    0.5 / (k * (k + 1.0))
                }
            };
            let w = kernel(d, m_points);
            debug_assert!(w <= envelope + 1e-9);
            if rng.gen::<f64>() * envelope <= w {
                let y = (base as i64 + j).rem_euclid(m_points as i64);
                return y as u64;
            }
        }
    }
}

/// Signed bin distance wrapped into [−M/2, M/2).
fn wrap_bins(d: f64, m: f64) -> f64 {
    let mut d = d % m;
    if d >= m / 2.0 {
        d -= m;
    }
    if d < -m / 2.0 {
        d += m;
    }
    d
}

impl EstAmpBackend for PhaseEstimationBackend {
    fn draw(&self, epsilon: f64, m_points: u64, rng: &mut dyn RngCore) -> f64 {
        assert!(m_points >= 1);
        let epsilon = epsilon.clamp(0.0, 1.0);
        if epsilon == 0.0 {
            // Both branches sit on phase 0; the outcome is y = 0.
            return 0.0;
        }
        let theta = epsilon.sqrt().asin();
        let m = m_points as f64;
        let z = theta / PI * m;
        let z = if rng.gen::<bool>() { z } else { m - z };
        let y = self.sample_branch(z, m_points, rng);
        (PI * y as f64 / m).sin().powi(2)
    }
}

/// Adversarial backend: with probability exactly 8/π² it returns the
/// farthest grid point still satisfying the error bound, otherwise the
/// farthest grid point outright. ε = 0 still yields 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct WorstCaseBackend;

impl EstAmpBackend for WorstCaseBackend {
    fn draw(&self, epsilon: f64, m_points: u64, rng: &mut dyn RngCore) -> f64 {
        let epsilon = epsilon.clamp(0.0, 1.0);
        if epsilon == 0.0 {
            return 0.0;
        }
        let m = m_points as f64;
        let mut worst_within: Option<(f64, f64)> = None;
        let mut worst_any: (f64, f64) = (0.0, -1.0);
        let mut nearest: (f64, f64) = (0.0, f64::INFINITY);
        for y in 0..=m_points / 2 {
            let v = (PI * y as f64 / m).sin().powi(2);
            let gap = (epsilon - v).abs();
            if gap > worst_any.1 {
                worst_any = (v, gap);
            }
            if gap < nearest.1 {
                nearest = (v, gap);
            }
            if gap <= est_amp_bound(epsilon, v, m_points) && worst_within.map_or(true, |(_, g)| gap > g)
            {
                worst_within = Some((v, gap));
            }
        }
        // The grid point nearest θ always satisfies the bound.
        let within = worst_within.unwrap_or(nearest).0;
        if rng.gen::<f64>() < 8.0 / (PI * PI) {
            within
        } else {
            worst_any.0
        }
    }
}

/// Median of `reps` independent Est-Amp draws; `reps` must be odd.
pub fn median_est_amp(
    backend: &dyn EstAmpBackend,
    epsilon: f64,
    m_points: u64,
    reps: u64,
    rng: &mut dyn RngCore,
) -> Result<f64, EstimationError> {
    if reps % 2 == 0 {
        return Err(EstimationError::EvenReps(reps));
    }
    let mut draws: Vec<f64> = (0..reps)
        .map(|_| backend.draw(epsilon, m_points, rng))
        .collect();
    draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(draws[draws.len() / 2])
}

/// Parameters of the doubling estimate: target relative error c,
/// promise floor p, confidence exponent k, and the derived odd median
/// repetition count t = 2k + 2⌈log₂ log₂ (1/p)⌉ + 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateParams {
    pub c: f64,
    pub p_floor: f64,
    pub k: u32,
}

impl EstimateParams {
    pub fn new(c: f64, p_floor: f64, k: u32) -> Result<Self, EstimationError> {
        if !(c > 0.0 && c < 1.0) {
            return Err(EstimationError::BadAccuracy(c));
        }
        if !(p_floor > 0.0 && p_floor <= 1.0) {
            return Err(EstimationError::BadFloor(p_floor));
        }
        if k == 0 {
            return Err(EstimationError::BadConfidence);
        }
        Ok(EstimateParams { c, p_floor, k })
    }

    /// Median repetitions per round.
    pub fn reps(&self) -> u64 {
        let loglog = (1.0 / self.p_floor).log2().log2().ceil().max(0.0) as u64;
        2 * self.k as u64 + 2 * loglog + 1
    }

    /// Round cap: the loop exits once M exceeds this.
    pub fn m_max(&self) -> f64 {
        8.0 * PI / (self.c * ((1.0 - self.c) * self.p_floor).sqrt())
    }
}

/// Result of one run of the doubling estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOutcome {
    /// ε̃; zero means the loop exhausted without stopping.
    pub estimate: f64,
    /// Total Est-Amp evaluations charged (Σ over rounds of M·reps).
    pub evaluations: u64,
    pub rounds: u32,
    /// Set when 0 < ε < p: the promise is violated and the behavior is
    /// outside the contract.
    pub promise_violated: bool,
}

/// Stop test of the doubling loop for a candidate estimate at M points.
pub fn stop_condition(estimate: f64, c: f64, m_points: u64) -> bool {
    let m = m_points as f64;
    2.0 * PI * (estimate * (1.0 - estimate)).sqrt() / m + PI * PI / (m * m) <= c * estimate
}

/// The doubling estimate: M starts at 2 and doubles after every round
/// that fails the stop test; the loop exits (returning 0) once the
/// doubled M exceeds M_max. With probability ≥ 1 − 2^{−k}: the result
/// has relative error < c when ε ≥ p, and is exactly 0 when ε = 0.
pub fn estimate(
    backend: &dyn EstAmpBackend,
    epsilon: f64,
    params: EstimateParams,
    meter: &mut CostMeter,
    rng: &mut dyn RngCore,
) -> EstimateOutcome {
    let promise_violated = epsilon > 0.0 && epsilon < params.p_floor;
    let reps = params.reps();
    let m_max = params.m_max();
    let mut m_points: u64 = 2;
    let mut evaluations: u64 = 0;
    let mut rounds = 0;
    loop {
        let med = median_est_amp(backend, epsilon, m_points, reps, rng)
            .expect("reps is odd by construction");
        evaluations += m_points * reps;
        meter.charge(m_points * reps);
        rounds += 1;
        if stop_condition(med, params.c, m_points) {
            return EstimateOutcome {
                estimate: med.clamp(0.0, 1.0),
                evaluations,
                rounds,
                promise_violated,
            };
        }
        m_points *= 2;
        if m_points as f64 > m_max {
            return EstimateOutcome {
                estimate: 0.0,
                evaluations,
                rounds,
                promise_violated,
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trial_rng;

    const EXACT: PhaseEstimationBackend = PhaseEstimationBackend;

    #[test]
    fn zero_amplitude_is_deterministic() {
        let mut rng = trial_rng(1, 0);
        for m in [1, 2, 8, 64] {
            for _ in 0..50 {
                assert_eq!(EXACT.draw(0.0, m, &mut rng), 0.0);
            }
        }
    }

    #[test]
    fn representable_phase_is_exact() {
        // θ = π/8 sits exactly on the M = 8 grid.
        let eps = (PI / 8.0).sin().powi(2);
        let mut rng = trial_rng(2, 0);
        for _ in 0..200 {
            let draw = EXACT.draw(eps, 8, &mut rng);
            assert!((draw - eps).abs() < 1e-12);
        }
    }

    #[test]
    fn full_amplitude_exact_at_m4() {
        let mut rng = trial_rng(3, 0);
        for _ in 0..100 {
            assert!((EXACT.draw(1.0, 4, &mut rng) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pmf_is_normalized() {
        for &eps in &[0.01, 0.1, 0.33, 0.5, 0.9] {
            for &m in &[2u64, 8, 32, 128] {
                let total: f64 = EXACT.pmf(eps, m).iter().sum();
                assert!((total - 1.0).abs() < 1e-9, "eps={eps} M={m} sum={total}");
            }
        }
    }

    #[test]
    fn sampler_matches_pmf() {
        // Compare the O(1) rejection sampler against the analytic pmf.
        let mut rng = trial_rng(4, 0);
        for &(eps, m) in &[(0.1f64, 16u64), (0.37, 32), (0.75, 8)] {
            let pmf = EXACT.pmf(eps, m);
            let draws = 60_000;
            let mut counts = vec![0u64; m as usize];
            for _ in 0..draws {
                let v = EXACT.draw(eps, m, &mut rng);
                // Map the folded estimate back to the matching bins.
                let y = ((v.sqrt().asin()) * m as f64 / PI).round() as usize;
                counts[y] += 1;
            }
            // Folded comparison: bins y and M−y carry the same estimate.
            for y in 0..=(m as usize) / 2 {
                let p_fold = if y == 0 || 2 * y == m as usize {
                    pmf[y]
                } else {
                    pmf[y] + pmf[m as usize - y]
                };
                let observed = counts[y] as f64 / draws as f64;
                let sigma = (p_fold * (1.0 - p_fold) / draws as f64).sqrt();
                assert!(
                    (observed - p_fold).abs() < 5.0 * sigma + 2e-3,
                    "eps={eps} M={m} y={y}: {observed} vs {p_fold}"
                );
            }
        }
    }

    #[test]
    fn median_of_constants() {
        let mut rng = trial_rng(5, 0);
        let eps = (PI / 8.0).sin().powi(2);
        let med = median_est_amp(&EXACT, eps, 8, 15, &mut rng).unwrap();
        assert!((med - eps).abs() < 1e-12);
        assert_eq!(median_est_amp(&EXACT, 0.0, 32, 7, &mut rng).unwrap(), 0.0);
        assert!(median_est_amp(&EXACT, 0.1, 8, 4, &mut rng).is_err());
    }

    #[test]
    fn median_obeys_bound_with_margin() {
        // ε = 0.25, M = 64, reps = 15: the stated bound should hold in
        // at least 99% of seeded trials.
        let mut ok = 0;
        let trials = 10_000;
        for seed in 0..trials {
            let mut rng = trial_rng(6, seed);
            let med = median_est_amp(&EXACT, 0.25, 64, 15, &mut rng).unwrap();
            if (0.25 - med).abs() <= est_amp_bound(0.25, med, 64) {
                ok += 1;
            }
        }
        assert!(ok as f64 / trials as f64 >= 0.99, "ok = {ok}");
    }

    #[test]
    fn stop_condition_example() {
        // 2π√(0.1875)/64 + π²/4096 ≈ 0.0449 ≤ 0.125.
        assert!(stop_condition(0.25, 0.5, 64));
        assert!(!stop_condition(0.25, 0.5, 8));
    }

    #[test]
    fn params_validation_and_reps() {
        assert!(EstimateParams::new(1.0, 0.5, 3).is_err());
        assert!(EstimateParams::new(0.5, 0.0, 3).is_err());
        assert!(EstimateParams::new(0.5, 0.5, 0).is_err());
        let p = EstimateParams::new(0.5, 1.0 / 64.0, 3).unwrap();
        // 2k + 2·⌈log₂ log₂ 64⌉ + 1 = 6 + 2·3 + 1.
        assert_eq!(p.reps(), 13);
        assert_eq!(p.reps() % 2, 1);
    }

    #[test]
    fn zero_epsilon_exhausts_within_budget() {
        let params = EstimateParams::new(0.5, 1.0 / 64.0, 3).unwrap();
        let mut meter = CostMeter::new();
        let mut rng = trial_rng(7, 0);
        let out = estimate(&EXACT, 0.0, params, &mut meter, &mut rng);
        assert_eq!(out.estimate, 0.0);
        assert!(!out.promise_violated);
        let cap = (2.0 * params.m_max() * params.reps() as f64).ceil() as u64;
        assert!(out.evaluations <= cap, "{} > {cap}", out.evaluations);
        assert_eq!(meter.total(), out.evaluations);
    }

    #[test]
    fn estimate_within_relative_error_mostly() {
        let params = EstimateParams::new(0.5, 1.0 / 64.0, 5).unwrap();
        let mut ok = 0;
        let trials = 2_000;
        for seed in 0..trials {
            let mut meter = CostMeter::new();
            let mut rng = trial_rng(8, seed);
            let out = estimate(&EXACT, 0.25, params, &mut meter, &mut rng);
            if (0.25 - out.estimate).abs() < params.c * out.estimate {
                ok += 1;
            }
        }
        let target = 1.0 - 1.0 / 32.0 - 3.0 * (0.03 / trials as f64).sqrt();
        assert!(ok as f64 / trials as f64 >= target, "ok = {ok}");
    }

    #[test]
    fn estimate_flags_promise_violation() {
        let params = EstimateParams::new(0.5, 0.25, 3).unwrap();
        let mut meter = CostMeter::new();
        let mut rng = trial_rng(9, 0);
        let out = estimate(&EXACT, 0.01, params, &mut meter, &mut rng);
        assert!(out.promise_violated);
    }

    #[test]
    fn geometric_sum_property() {
        // Total evaluations < 2·M_final·reps.
        let params = EstimateParams::new(0.3, 1.0 / 256.0, 4).unwrap();
        for seed in 0..200 {
            let mut meter = CostMeter::new();
            let mut rng = trial_rng(10, seed);
            let out = estimate(&EXACT, 0.4, params, &mut meter, &mut rng);
            if out.estimate > 0.0 {
                let m_final = 2u64 << (out.rounds - 1);
                assert!(out.evaluations < 2 * m_final * params.reps());
            }
        }
    }

    #[test]
    fn worst_case_backend_respects_zero_and_grid() {
        let adv = WorstCaseBackend;
        let mut rng = trial_rng(11, 0);
        assert_eq!(adv.draw(0.0, 32, &mut rng), 0.0);
        for _ in 0..100 {
            let v = adv.draw(0.3, 16, &mut rng);
            let y = (v.sqrt().asin() * 16.0 / PI).round();
            assert!((v - (PI * y / 16.0).sin().powi(2)).abs() < 1e-9);
        }
    }

    #[test]
    fn estimate_works_under_adversary() {
        let adv = WorstCaseBackend;
        let params = EstimateParams::new(0.5, 1.0 / 64.0, 5).unwrap();
        let mut ok = 0;
        let trials = 2_000;
        for seed in 0..trials {
            let mut meter = CostMeter::new();
            let mut rng = trial_rng(12, seed);
            let out = estimate(&adv, 0.25, params, &mut meter, &mut rng);
            if (0.25 - out.estimate).abs() < params.c * out.estimate {
                ok += 1;
            }
        }
        let target = 1.0 - 1.0 / 32.0 - 3.0 * (0.03 / trials as f64).sqrt();
        assert!(ok as f64 / trials as f64 >= target, "ok = {ok}");
    }
}
