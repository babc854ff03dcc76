//! Decision procedures for each level of the hierarchy.
//!
//! Every checker takes a complete single-object [`History`] and returns a
//! [`Verdict`] whose witness can be replayed with the functions in
//! [`replay`]. Searches explore candidates in ascending
//! `(invocation_time, op_id)` order, so witnesses are reproducible.

mod hierarchy;
mod interval;
mod lin;
mod mp;
mod naive;
mod schneider;
pub mod replay;
mod set;

pub use hierarchy::{
    check_hierarchy, check_level, ContainmentViolation, HierarchyReport, CONTAINMENTS,
};
pub use interval::{check_interval_linearizable, checking_order};
pub use lin::check_linearizable;
pub use mp::check_mp_linearizable;
pub use naive::{check_linearizable_naive, NAIVE_MAX_OPS};
pub use schneider::check_schneider_properties;
pub use set::check_set_linearizable;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::{History, Operation};
use crate::verdict::{Level, Verdict};

/// Largest history any checker accepts; precedence sets are `u128` masks.
pub const MAX_OPS_LIMIT: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OnExhaustion {
    /// Return a rejecting verdict marked unknown.
    Unknown,
    /// Fail with [`Error::BudgetExhausted`].
    Error,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub max_ops: usize,
    pub max_nodes: u64,
    pub on_exhaustion: OnExhaustion,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self { max_ops: 64, max_nodes: 2_000_000, on_exhaustion: OnExhaustion::Unknown }
    }
}

impl SearchBudget {
    pub fn new(max_ops: usize, max_nodes: u64, on_exhaustion: OnExhaustion) -> Result<Self> {
        if max_ops == 0 || max_ops > MAX_OPS_LIMIT {
            return Err(Error::MalformedInput(format!(
                "max_ops must be in 1..={MAX_OPS_LIMIT}, got {max_ops}"
            )));
        }
        Ok(Self { max_ops, max_nodes, on_exhaustion })
    }

    pub fn with_nodes(max_nodes: u64) -> Self {
        Self { max_nodes, ..Self::default() }
    }

    fn exhausted(&self, level: Level, nodes: u64) -> Result<Verdict> {
        match self.on_exhaustion {
            OnExhaustion::Unknown => Ok(Verdict::unknown(level, nodes)),
            OnExhaustion::Error => Err(Error::BudgetExhausted { nodes }),
        }
    }
}

/// Node counter shared by the searches.
struct Meter {
    nodes: u64,
    limit: u64,
}

impl Meter {
    fn new(b: &SearchBudget) -> Self {
        Self { nodes: 0, limit: b.max_nodes }
    }

    /// Count one node; `false` once the limit is passed.
    fn tick(&mut self) -> bool {
        self.nodes += 1;
        self.nodes <= self.limit
    }
}

/// Validates the input and returns the real-time predecessor mask of each
/// operation, indexed like `h.operations()`. `Ok(None)` means the history is
/// over the op budget.
fn precedence_masks(h: &History, b: &SearchBudget) -> Result<Option<Vec<u128>>> {
    h.require_checkable()?;
    if h.len() > b.max_ops.min(MAX_OPS_LIMIT) {
        return Ok(None);
    }
    let ops = h.operations();
    Ok(Some(
        ops.iter()
            .map(|o| {
                ops.iter()
                    .enumerate()
                    .filter(|(_, p)| p.precedes(o))
                    .fold(0u128, |m, (j, _)| m | (1 << j))
            })
            .collect(),
    ))
}

fn recorded(op: &Operation) -> &crate::value::Value {
    op.ret.as_ref().expect("checkable histories are complete")
}
