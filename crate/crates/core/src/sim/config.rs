use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureModel {
    Crash,
    Byzantine,
}

/// Pairs of operation names whose requests may be executed in either order.
/// Everything else conflicts.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictRelation {
    pub commuting: BTreeSet<(String, String)>,
}

impl ConflictRelation {
    pub fn commuting<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let mut commuting = BTreeSet::new();
        for (a, b) in pairs {
            commuting.insert((a.to_string(), b.to_string()));
            commuting.insert((b.to_string(), a.to_string()));
        }
        Self { commuting }
    }

    pub fn conflicts(&self, a: &str, b: &str) -> bool {
        !self.commuting.contains(&(a.to_string(), b.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ordering {
    TotalOrder,
    /// Replicas may locally swap adjacent non-conflicting requests that are
    /// delivered in the same tick.
    PartialOrder(ConflictRelation),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulerKind {
    /// One request at a time, each run to completion.
    Sequential,
    /// Round-based deterministic lock scheduling.
    LockLevel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ByzantineBehavior {
    /// Negate integer responses; other values become `0`.
    ResponseFlip,
    /// Never reply.
    ResponseDrop,
    /// Reply `v + 1` for integers and a forged symbol otherwise.
    WrongValue,
}

impl ByzantineBehavior {
    pub const ALL: [ByzantineBehavior; 3] =
        [Self::ResponseFlip, Self::ResponseDrop, Self::WrongValue];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultKind {
    /// The replica stops at the start of tick `at`.
    Crash { at: u64 },
    Byzantine(ByzantineBehavior),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fault {
    pub replica: usize,
    pub kind: FaultKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub f: usize,
    pub failure_model: FailureModel,
    pub ordering: Ordering,
    pub scheduler: SchedulerKind,
    pub seed: u64,
    #[serde(default)]
    pub faults: Vec<Fault>,
    /// Permit more than `f` faulty replicas.
    #[serde(default)]
    pub allow_out_of_spec: bool,
    /// Ticks between issuing a request and its delivery.
    #[serde(default = "default_latency")]
    pub order_latency: u64,
}

fn default_latency() -> u64 {
    1
}

impl SimConfig {
    pub fn new(n: usize, f: usize, failure_model: FailureModel) -> Self {
        Self {
            n,
            f,
            failure_model,
            ordering: Ordering::TotalOrder,
            scheduler: SchedulerKind::Sequential,
            seed: 0,
            faults: Vec::new(),
            allow_out_of_spec: false,
            order_latency: 1,
        }
    }

    pub fn scheduler(mut self, s: SchedulerKind) -> Self {
        self.scheduler = s;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn ordering(mut self, o: Ordering) -> Self {
        self.ordering = o;
        self
    }

    pub fn fault(mut self, replica: usize, kind: FaultKind) -> Self {
        self.faults.push(Fault { replica, kind });
        self
    }

    /// Replicas named in the fault plan.
    pub fn faulty(&self) -> BTreeSet<usize> {
        self.faults.iter().map(|f| f.replica).collect()
    }

    pub fn is_correct(&self, replica: usize) -> bool {
        !self.faults.iter().any(|f| f.replica == replica)
    }

    pub fn behavior(&self, replica: usize) -> Option<ByzantineBehavior> {
        self.faults.iter().find_map(|f| match f.kind {
            FaultKind::Byzantine(b) if f.replica == replica => Some(b),
            _ => None,
        })
    }

    pub fn crash_tick(&self, replica: usize) -> Option<u64> {
        self.faults.iter().find_map(|f| match f.kind {
            FaultKind::Crash { at } if f.replica == replica => Some(at),
            _ => None,
        })
    }

    /// Matching responses a correct client waits for.
    pub fn quorum(&self) -> usize {
        match self.failure_model {
            FailureModel::Crash => 1,
            FailureModel::Byzantine => self.f + 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(Error::ConfigInvalid(m));
        if self.n == 0 {
            return invalid("n must be positive".into());
        }
        let needed = match self.failure_model {
            FailureModel::Crash => 2 * self.f + 1,
            FailureModel::Byzantine => 3 * self.f + 1,
        };
        if self.n < needed {
            return invalid(format!(
                "{:?} model with f={} needs n >= {needed}, got n={}",
                self.failure_model, self.f, self.n
            ));
        }
        if self.order_latency == 0 {
            return invalid("order_latency must be at least 1".into());
        }
        let mut seen = BTreeSet::new();
        for fault in &self.faults {
            if fault.replica >= self.n {
                return invalid(format!("fault names replica {} of {}", fault.replica, self.n));
            }
            if !seen.insert(fault.replica) {
                return invalid(format!("replica {} has two faults", fault.replica));
            }
            if matches!(fault.kind, FaultKind::Byzantine(_))
                && self.failure_model == FailureModel::Crash
            {
                return invalid("byzantine fault in the crash model".into());
            }
        }
        if seen.len() > self.f && !self.allow_out_of_spec {
            return Err(Error::OutOfSpecRun { faulty: seen.len(), f: self.f });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds() {
        assert!(SimConfig::new(3, 1, FailureModel::Crash).validate().is_ok());
        assert!(SimConfig::new(2, 1, FailureModel::Crash).validate().is_err());
        assert!(SimConfig::new(4, 1, FailureModel::Byzantine).validate().is_ok());
        assert!(matches!(
            SimConfig::new(3, 1, FailureModel::Byzantine).validate(),
            Err(Error::ConfigInvalid(_))
        ));
    }

    #[test]
    fn fault_plan_beyond_f_needs_opt_in() {
        let c = SimConfig::new(3, 1, FailureModel::Crash)
            .fault(0, FaultKind::Crash { at: 1 })
            .fault(1, FaultKind::Crash { at: 1 });
        assert!(matches!(c.validate(), Err(Error::OutOfSpecRun { faulty: 2, f: 1 })));
        let c = SimConfig { allow_out_of_spec: true, ..c };
        assert!(c.validate().is_ok());
    }

    #[test]
    fn conflicts_are_symmetric() {
        let r = ConflictRelation::commuting([("inc", "inc"), ("read", "get")]);
        assert!(!r.conflicts("get", "read"));
        assert!(r.conflicts("inc", "get"));
    }
}
