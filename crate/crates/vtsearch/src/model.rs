//! The variable-time oracle model: instances, cost metering, partial
//! evaluation, and the random subset chain that reduces many marked
//! items to exactly one.

use rand::seq::index::sample;
use rand::Rng;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("item index {index} out of range for instance of {len} items")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("instance parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// One searchable item: a hidden evaluation time (in oracle steps) and a
/// hidden bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ItemSpec {
    pub t: u64,
    pub x: bool,
}

/// An immutable collection of items; the search target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    items: Vec<ItemSpec>,
}

impl Instance {
    pub fn new(items: Vec<ItemSpec>) -> Self {
        assert!(!items.is_empty(), "instance must be non-empty");
        assert!(items.iter().all(|it| it.t >= 1), "every t_i must be >= 1");
        Instance { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn items(&self) -> &[ItemSpec] {
        &self.items
    }

    pub fn item(&self, i: usize) -> ItemSpec {
        self.items[i]
    }

    pub fn sum_t_squared(&self) -> f64 {
        self.items.iter().map(|it| (it.t as f64).powi(2)).sum()
    }

    pub fn marked_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.items[i].x).collect()
    }

    /// Text format: first line `n`, then n lines `t_i x_i`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.len());
        for it in &self.items {
            let _ = writeln!(out, "{} {}", it.t, u8::from(it.x));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ModelError> {
        let mut lines = text.lines().enumerate();
        let (_, first) = lines.next().ok_or(ModelError::Parse {
            line: 1,
            reason: "empty input".into(),
        })?;
        let n: usize = first.trim().parse().map_err(|_| ModelError::Parse {
            line: 1,
            reason: format!("expected item count, got {first:?}"),
        })?;
        if n == 0 {
            return Err(ModelError::Parse {
                line: 1,
                reason: "instance must have at least one item".into(),
            });
        }
        let mut items = Vec::with_capacity(n);
        for _ in 0..n {
            let (idx, line) = lines.next().ok_or(ModelError::Parse {
                line: items.len() + 2,
                reason: "missing item line".into(),
            })?;
            let mut parts = line.split_whitespace();
            let t: u64 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .filter(|&t| t >= 1)
                .ok_or(ModelError::Parse {
                    line: idx + 1,
                    reason: format!("expected `t x` with t >= 1, got {line:?}"),
                })?;
            let x: u8 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .filter(|&x| x <= 1)
                .ok_or(ModelError::Parse {
                    line: idx + 1,
                    reason: format!("expected bit after time, got {line:?}"),
                })?;
            items.push(ItemSpec { t, x: x == 1 });
        }
        Ok(Instance::new(items))
    }
}

/// Result of running an item evaluator for a bounded number of steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryOutcome {
    Complete(bool),
    Incomplete,
}

/// How the meter charges a bounded run.
///
/// The model is consistent with either choice (the evaluator idles after
/// finishing), so both are exposed and the bounds hold in both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChargeMode {
    /// Charge `min(steps, t_i)`: the evaluator halts when done.
    #[default]
    EarlyStop,
    /// Charge the full requested step count.
    Strict,
}

/// Monotone accumulator of oracle steps. Non-query transformations are
/// free and never touch it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CostMeter {
    total: u64,
}

impl CostMeter {
    pub fn new() -> Self {
        CostMeter::default()
    }

    pub fn charge(&mut self, steps: u64) {
        self.total += steps;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Sum of two meters, for merging per-trial meters after a fan-out.
    pub fn merged(self, other: CostMeter) -> CostMeter {
        CostMeter {
            total: self.total + other.total,
        }
    }
}

/// Runs item `i` for `steps` steps: `Complete(x_i)` iff `steps >= t_i`.
pub fn run_item(
    instance: &Instance,
    i: usize,
    steps: u64,
    mode: ChargeMode,
    meter: &mut CostMeter,
) -> Result<QueryOutcome, ModelError> {
    if i >= instance.len() {
        return Err(ModelError::IndexOutOfRange {
            index: i,
            len: instance.len(),
        });
    }
    assert!(steps >= 1, "a run takes at least one step");
    let item = instance.item(i);
    let charged = match mode {
        ChargeMode::EarlyStop => steps.min(item.t),
        ChargeMode::Strict => steps,
    };
    meter.charge(charged);
    if steps >= item.t {
        Ok(QueryOutcome::Complete(item.x))
    } else {
        Ok(QueryOutcome::Incomplete)
    }
}

/// Uniformly random subsets of sizes n, ⌈n/2⌉, ⌈n/4⌉, …, 1, drawn
/// independently. Element 0 is always the full index set.
pub fn random_subset_chain<R: Rng>(instance: &Instance, rng: &mut R) -> Vec<Vec<usize>> {
    let n = instance.len();
    let mut chain = Vec::new();
    let mut size = n;
    loop {
        if size == n {
            chain.push((0..n).collect());
        } else {
            let mut subset = sample(rng, n, size).into_vec();
            subset.sort_unstable();
            chain.push(subset);
        }
        if size == 1 {
            break;
        }
        size = size.div_ceil(2);
    }
    chain
}

/// Monte-Carlo estimate of `E[√(Σ_{i∈S} t_i²)]` over uniformly random
/// subsets S of size ⌊n/2^j⌋, together with the bound
/// `(1/2^{j/2})·√(Σ_i t_i²)`. The floor keeps the expectation bound
/// valid for every instance size.
pub fn subset_energy_bound_check<R: Rng>(
    instance: &Instance,
    j: u32,
    trials: u64,
    rng: &mut R,
) -> (f64, f64) {
    let n = instance.len();
    assert!(trials >= 1);
    assert!(1u64 << j <= n as u64, "2^j must not exceed n");
    let size = (n >> j).max(1);
    let mut acc = 0.0;
    for _ in 0..trials {
        let subset = sample(rng, n, size);
        let energy: f64 = subset
            .iter()
            .map(|i| (instance.item(i).t as f64).powi(2))
            .sum();
        acc += energy.sqrt();
    }
    let bound = instance.sum_t_squared().sqrt() / 2f64.powf(j as f64 / 2.0);
    (acc / trials as f64, bound)
}
