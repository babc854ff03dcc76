use std::fmt;

use serde::{Deserialize, Serialize};

use crate::history::OpId;
use crate::value::Value;

/// Level of the linearizability hierarchy a verdict refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Lin,
    Set,
    Mp,
    Interval,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::Lin, Level::Set, Level::Mp, Level::Interval];

    pub fn name(self) -> &'static str {
        match self {
            Level::Lin => "lin",
            Level::Set => "set",
            Level::Mp => "mp",
            Level::Interval => "interval",
        }
    }

    pub fn parse(s: &str) -> Option<Level> {
        Self::ALL.into_iter().find(|l| l.name() == s)
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One effect step of one operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StepRef {
    pub op: OpId,
    pub step: usize,
}

impl fmt::Display for StepRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.op, self.step)
    }
}

/// One interaction point of an interval run.
///
/// The point sits between the last processed event (at `after_time`) and the
/// next one in checking order (at `before_time`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RunPoint {
    /// Number of events (in checking order) processed before this point.
    pub after_events: usize,
    pub consumed: Vec<OpId>,
    pub action: Option<String>,
    pub responses: Vec<(OpId, Value)>,
    pub after_time: Option<i64>,
    pub before_time: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    /// Linearization order.
    Order(Vec<OpId>),
    /// Global order of effect steps.
    Steps(Vec<StepRef>),
    /// Ordered simultaneity sets.
    Sets(Vec<Vec<OpId>>),
    /// Interval-sequential run.
    Run(Vec<RunPoint>),
}

impl Witness {
    /// Flat list of ids, as printed by the CLI.
    pub fn ids(&self) -> Vec<String> {
        match self {
            Witness::Order(o) => o.iter().map(|id| id.to_string()).collect(),
            Witness::Steps(s) => s.iter().map(|s| s.to_string()).collect(),
            Witness::Sets(sets) => sets
                .iter()
                .map(|s| {
                    let ids: Vec<String> = s.iter().map(|id| id.to_string()).collect();
                    format!("{{{}}}", ids.join(","))
                })
                .collect(),
            Witness::Run(points) => points
                .iter()
                .map(|p| {
                    let mut parts = Vec::new();
                    if !p.consumed.is_empty() {
                        let c: Vec<String> = p.consumed.iter().map(|id| id.to_string()).collect();
                        parts.push(format!("inv[{}]", c.join(",")));
                    }
                    if let Some(a) = &p.action {
                        parts.push(a.clone());
                    }
                    if !p.responses.is_empty() {
                        let r: Vec<String> =
                            p.responses.iter().map(|(id, v)| format!("{id}={v}")).collect();
                        parts.push(format!("resp[{}]", r.join(",")));
                    }
                    parts.join(" ")
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Explanation {
    /// Search exhausted without a placement. `longest_prefix` is the deepest
    /// partial placement reached and `blocked` the operations none of which
    /// could extend it.
    NoPlacement { longest_prefix: Vec<String>, blocked: Vec<OpId> },
    /// The budget ran out; the verdict is unknown.
    BudgetExhausted { nodes: u64 },
}

/// Outcome of one checker run. Serialized as-is into verdict files.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub level: Level,
    pub accepted: bool,
    pub witness: Option<Witness>,
    pub explanation: Option<Explanation>,
    pub nodes: u64,
}

pub type VerdictRecord = Verdict;

impl Verdict {
    pub fn accept(level: Level, witness: Witness, nodes: u64) -> Self {
        Self { level, accepted: true, witness: Some(witness), explanation: None, nodes }
    }

    pub fn reject(level: Level, explanation: Explanation, nodes: u64) -> Self {
        Self { level, accepted: false, witness: None, explanation: Some(explanation), nodes }
    }

    pub fn unknown(level: Level, nodes: u64) -> Self {
        Self::reject(level, Explanation::BudgetExhausted { nodes }, nodes)
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self.explanation, Some(Explanation::BudgetExhausted { .. }))
    }

    pub fn is_rejected(&self) -> bool {
        !self.accepted && !self.is_unknown()
    }

    pub fn status(&self) -> &'static str {
        if self.accepted {
            "accepted"
        } else if self.is_unknown() {
            "unknown"
        } else {
            "rejected"
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<8} {}", self.level.name(), self.status())?;
        if let Some(w) = &self.witness {
            write!(f, "  witness: {}", w.ids().join(" < "))?;
        }
        match &self.explanation {
            Some(Explanation::NoPlacement { longest_prefix, blocked }) => {
                let b: Vec<String> = blocked.iter().map(|id| id.to_string()).collect();
                write!(
                    f,
                    "  no placement; deepest prefix [{}], cannot extend with [{}]",
                    longest_prefix.join(" "),
                    b.join(" ")
                )
            }
            Some(Explanation::BudgetExhausted { nodes }) => {
                write!(f, "  budget exhausted after {nodes} nodes")
            }
            None => Ok(()),
        }
    }
}
