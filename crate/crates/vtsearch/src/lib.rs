//! Quantum search over items whose oracle evaluations take different
//! numbers of time steps.
//!
//! The crate simulates, at desk scale, search schedulers whose cost is
//! measured in oracle steps: evaluating item `i` takes `t_i` steps, and
//! only time spent inside item evaluators is charged. All amplitude
//! arithmetic is done exactly in the 2-D invariant subspace spanned by
//! the marked and unmarked components, so success probabilities of
//! composed schedules are closed-form rather than sampled.
//!
//! Modules:
//! - [`model`] — instances, the step-metered oracle, random subset chains
//! - [`calculus`] — exact amplitude-amplification arithmetic
//! - [`estimation`] — amplitude estimation and the doubling `estimate`
//! - [`known`] — the scheduler for known evaluation times
//! - [`unknown`] — the adaptive chain for unknown evaluation times
//! - [`readonce`] — read-once AND/OR/NOT formula evaluation
//! - [`lowerbound`] — the group-oracle reduction forcing the sqrt(sum t_i^2) cost

pub mod calculus;
pub mod estimation;
pub mod known;
pub mod lowerbound;
pub mod model;
pub mod readonce;
pub mod unknown;

use rand_chacha::rand_core::SeedableRng;

/// Deterministic RNG used throughout: one base seed, one independent
/// stream per trial.
pub type TrialRng = rand_chacha::ChaCha12Rng;

/// RNG stream for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> TrialRng {
    let mut rng = TrialRng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Base-2 logarithm clamped below at 1, the `log n` used by every
/// scheduler threshold in the crate. The clamp keeps thresholds finite
/// for n = 1 and n = 2, where the geometric grids degenerate.
pub fn log2n(n: usize) -> f64 {
    (n as f64).log2().max(1.0)
}
