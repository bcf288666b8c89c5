//! Run reports, the squared-skew telescoping check and an arrival replay.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::array::{Category, CostLedger, Key};
use crate::error::Result;
use crate::seesaw::{LeafKind, SeeSaw, SeeSawConfig, SkewHistory};
use crate::workloads::Op;

/// One row of benchmark output. Field names double as CSV column names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub algo: String,
    pub n: usize,
    pub m: usize,
    pub workload: String,
    pub seed: u64,
    pub ops: u64,
    pub total_moves: u64,
    pub moves_per_op: f64,
    pub rebuild_moves: u64,
    pub reset_moves: u64,
    pub leaf_moves: u64,
    pub expensive_leaf_moves: u64,
    pub exp_leaf_frac: f64,
    pub max_depth: u32,
    pub wall_ms: f64,
}

/// What a run was, as opposed to what it cost.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunMeta {
    pub algo: String,
    pub n: usize,
    pub m: usize,
    pub workload: String,
    pub seed: u64,
}

/// Builds a report from the moves and operations a run added to its ledger.
pub fn summarize(
    ledger: &CostLedger,
    max_depth: u32,
    meta: RunMeta,
    elapsed: Duration,
) -> RunReport {
    let ops = ledger.inserts + ledger.deletes;
    let per_op = |x: u64| if ops == 0 { 0.0 } else { x as f64 / ops as f64 };
    RunReport {
        algo: meta.algo,
        n: meta.n,
        m: meta.m,
        workload: meta.workload,
        seed: meta.seed,
        ops,
        total_moves: ledger.total(),
        moves_per_op: per_op(ledger.total()),
        rebuild_moves: ledger.moves(Category::Rebuild),
        reset_moves: ledger.moves(Category::Reset),
        leaf_moves: ledger.moves(Category::LeafLocal),
        expensive_leaf_moves: ledger.moves(Category::ExpensiveLeafLocal),
        exp_leaf_frac: per_op(ledger.expensive_leaf_arrivals).min(1.0),
        max_depth,
        wall_ms: elapsed.as_micros() as f64 / 1000.0,
    }
}

impl RunReport {
    /// Category totals add up and the fraction is a fraction.
    pub fn is_consistent(&self) -> bool {
        self.rebuild_moves + self.reset_moves + self.leaf_moves + self.expensive_leaf_moves
            == self.total_moves
            && (0.0..=1.0).contains(&self.exp_leaf_frac)
    }
}

/// Squared sums and pair products relating one granularity of windows to
/// the next coarser one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LevelCheck {
    /// Number of windows at the finer level.
    pub windows: usize,
    /// Sum of squared skews at the finer level.
    pub fine: i128,
    /// Sum of squared skews at the coarser level.
    pub coarse: i128,
    /// Sum of products of each merged pair.
    pub pairs: i128,
}

impl LevelCheck {
    /// `coarse - fine - 2 * pairs`; zero whenever the arithmetic is right.
    pub fn residual(&self) -> i128 {
        self.coarse - self.fine - 2 * self.pairs
    }
}

/// Merges adjacent pairs of window skews. An odd last window is paired
/// with an empty one.
pub fn merge_level(skews: &[i64]) -> (Vec<i64>, LevelCheck) {
    let sq = |d: i64| i128::from(d) * i128::from(d);
    let mut coarse = Vec::with_capacity(skews.len().div_ceil(2));
    let mut pairs = 0i128;
    for pair in skews.chunks(2) {
        let (a, b) = (pair[0], pair.get(1).copied().unwrap_or(0));
        pairs += i128::from(a) * i128::from(b);
        coarse.push(a + b);
    }
    let check = LevelCheck {
        windows: skews.len(),
        fine: skews.iter().map(|&d| sq(d)).sum(),
        coarse: coarse.iter().map(|&d| sq(d)).sum(),
        pairs,
    };
    (coarse, check)
}

/// Checks every level from the given finest windows up to a single window.
pub fn verify_telescoping(skews: &[i64]) -> Vec<LevelCheck> {
    let mut level = skews.to_vec();
    let mut checks = Vec::new();
    while level.len() > 1 {
        let (coarse, check) = merge_level(&level);
        checks.push(check);
        level = coarse;
    }
    checks
}

/// Telescoping totals over every record of a history with at least
/// `min_windows` windows.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TelescopingSummary {
    pub subproblems: usize,
    pub levels: usize,
    pub nonzero_residuals: usize,
}

pub fn check_history(history: &SkewHistory, min_windows: usize) -> TelescopingSummary {
    let mut summary = TelescopingSummary::default();
    for record in history.with_min_windows(min_windows) {
        summary.subproblems += 1;
        for check in verify_telescoping(&record.skews()) {
            summary.levels += 1;
            if check.residual() != 0 {
                summary.nonzero_residuals += 1;
            }
        }
    }
    summary
}

/// Replays `ops` on a fresh See-Saw and counts insertions that ended in an
/// expensive leaf, read from each insert's outcome.
pub fn replay_arrivals(config: SeeSawConfig, initial: &[Key], ops: &[Op]) -> Result<u64> {
    let mut s = SeeSaw::new(config, initial)?;
    let mut arrivals = 0;
    for op in ops {
        if let Op::Insert(k) = *op {
            if s.insert(k)?.leaf == LeafKind::Expensive {
                arrivals += 1;
            }
        }
    }
    Ok(arrivals)
}
