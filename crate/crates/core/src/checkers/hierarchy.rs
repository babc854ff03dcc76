use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::history::History;
use crate::specs::SpecBundle;
use crate::verdict::{Level, Verdict};

use super::{
    check_interval_linearizable, check_linearizable, check_mp_linearizable,
    check_set_linearizable, SearchBudget,
};

/// Known inclusions: `(weaker-or-equal, stronger-or-equal)`.
pub const CONTAINMENTS: [(Level, Level); 4] = [
    (Level::Lin, Level::Set),
    (Level::Lin, Level::Mp),
    (Level::Set, Level::Interval),
    (Level::Mp, Level::Interval),
];

/// A history accepted at `accepted` but rejected at `rejected` although
/// `accepted` is included in `rejected`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContainmentViolation {
    pub accepted: Level,
    pub rejected: Level,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchyReport {
    pub verdicts: BTreeMap<Level, Verdict>,
    pub violations: Vec<ContainmentViolation>,
}

impl HierarchyReport {
    pub fn accepted(&self, level: Level) -> Option<bool> {
        let v = self.verdicts.get(&level)?;
        (!v.is_unknown()).then_some(v.accepted)
    }
}

/// Run one checker.
pub fn check_level(
    h: &History,
    bundle: &SpecBundle,
    level: Level,
    budget: &SearchBudget,
) -> Result<Verdict> {
    match level {
        Level::Lin => check_linearizable(h, bundle.sequential.as_ref(), budget),
        Level::Set => check_set_linearizable(h, bundle.set.as_ref(), budget),
        Level::Mp => check_mp_linearizable(h, bundle.effect.as_ref(), budget),
        Level::Interval => check_interval_linearizable(h, bundle.interval.as_ref(), budget),
    }
}

/// Run all four checkers and report inclusions that do not hold. Unknown
/// verdicts never count as violations.
pub fn check_hierarchy(
    h: &History,
    bundle: &SpecBundle,
    budget: &SearchBudget,
) -> Result<HierarchyReport> {
    let mut verdicts = BTreeMap::new();
    for level in Level::ALL {
        verdicts.insert(level, check_level(h, bundle, level, budget)?);
    }
    let violations = CONTAINMENTS
        .iter()
        .filter(|(a, b)| verdicts[a].accepted && verdicts[b].is_rejected())
        .map(|&(accepted, rejected)| ContainmentViolation { accepted, rejected })
        .collect();
    Ok(HierarchyReport { verdicts, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::HistoryBuilder;
    use crate::specs::spec_bundle;
    use crate::value::Value;

    #[test]
    fn intermediate_read_is_mp_and_interval_only() {
        let b = spec_bundle("lock-object").unwrap();
        let h = HistoryBuilder::new("lock_object")
            .op("D", Value::Nil, "ok", 0, 10)
            .op("E", Value::Nil, 2, 2, 6)
            .build()
            .unwrap();
        let r = check_hierarchy(&h, &b, &SearchBudget::default()).unwrap();
        assert_eq!(r.accepted(Level::Lin), Some(false));
        assert_eq!(r.accepted(Level::Set), Some(false));
        assert_eq!(r.accepted(Level::Mp), Some(true));
        assert_eq!(r.accepted(Level::Interval), Some(true));
        assert!(r.violations.is_empty());
    }
}
