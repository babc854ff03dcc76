//! Named scenarios with their expected verdict per hierarchy level. This
//! table is the single place where expected outcomes are stated.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::checkers::{check_level, SearchBudget};
use crate::error::{Error, Result};
use crate::history::{History, HistoryBuilder};
use crate::sim::quorum::{stale_read_plan, stale_read_workload};
use crate::sim::{
    byzantine_client_duplicate_ids, compile_object, run_conditional_wait_scenario,
    run_nested_scenario, run_quorum_register, run_smr, ByzantineBehavior, ClientRequest,
    ConflictRelation, FailureModel, FaultKind, Ordering, ReplicatedObject, SchedulerKind,
    SimConfig, SimOutput, Workload,
};
use crate::specs::{spec_bundle, LISTING1_OBJECT};
use crate::value::Value;
use crate::verdict::Level;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScenarioOptions {
    pub seed: u64,
    pub read_repair: bool,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self { seed: 0, read_repair: true }
    }
}

/// Result of building one scenario.
#[derive(Clone, Debug)]
pub struct ScenarioRun {
    /// History to check.
    pub history: History,
    /// Specification bundle the history is checked against, if any.
    pub spec: Option<&'static str>,
    /// Expected acceptance per level; levels not listed are not asserted.
    pub expected: BTreeMap<Level, bool>,
    pub sim: Option<SimOutput>,
    /// Additional histories with their spec and expected lin verdict.
    pub extra: Vec<(String, History, &'static str, bool)>,
}

pub struct ScenarioCatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub build: fn(&ScenarioOptions) -> Result<ScenarioRun>,
}

fn matrix(lin: bool, set: bool, mp: bool, interval: bool) -> BTreeMap<Level, bool> {
    BTreeMap::from([
        (Level::Lin, lin),
        (Level::Set, set),
        (Level::Mp, mp),
        (Level::Interval, interval),
    ])
}

fn all(accept: bool) -> BTreeMap<Level, bool> {
    matrix(accept, accept, accept, accept)
}

fn listing1_object() -> Result<ReplicatedObject> {
    Ok(ReplicatedObject::Program(Arc::new(compile_object(LISTING1_OBJECT)?)))
}

fn d_and_e() -> Workload {
    Workload::new(vec![
        ClientRequest::new(0, 0, "D", Value::Nil),
        ClientRequest::new(1, 1, "E", Value::Nil),
    ])
}

fn listing1(o: &ScenarioOptions) -> Result<ScenarioRun> {
    let cfg = SimConfig::new(3, 1, FailureModel::Crash)
        .scheduler(SchedulerKind::LockLevel)
        .seed(o.seed);
    let out = run_smr(&cfg, &d_and_e(), &listing1_object()?)?;
    // even seeds give D the first turn, so E runs between D's critical sections
    let interleaved = o.seed % 2 == 0;
    Ok(ScenarioRun {
        history: out.client_history.clone(),
        spec: Some("lock-object"),
        expected: if interleaved { matrix(false, false, true, true) } else { all(true) },
        sim: Some(out),
        extra: Vec::new(),
    })
}

fn listing1_sequential(o: &ScenarioOptions) -> Result<ScenarioRun> {
    let cfg = SimConfig::new(3, 1, FailureModel::Crash)
        .scheduler(SchedulerKind::Sequential)
        .seed(o.seed);
    let out = run_smr(&cfg, &d_and_e(), &listing1_object()?)?;
    Ok(ScenarioRun {
        history: out.client_history.clone(),
        spec: Some("lock-object"),
        expected: all(true),
        sim: Some(out),
        extra: Vec::new(),
    })
}

fn quorum(o: &ScenarioOptions) -> Result<ScenarioRun> {
    let h = run_quorum_register(o.read_repair, &stale_read_plan(), &stale_read_workload())?;
    Ok(ScenarioRun {
        history: h,
        spec: Some("register"),
        expected: all(o.read_repair),
        sim: None,
        extra: Vec::new(),
    })
}

fn nested(o: &ScenarioOptions) -> Result<ScenarioRun> {
    let out = run_nested_scenario(o.seed)?;
    let between = out.placement == crate::sim::JPlacement::BetweenGAndH;
    Ok(ScenarioRun {
        history: out.composite,
        spec: Some("nested-composite"),
        expected: if between { matrix(false, false, true, true) } else { all(true) },
        sim: None,
        extra: vec![("aggregate".into(), out.aggregate, "nested-aggregate", true)],
    })
}

fn condwait(o: &ScenarioOptions) -> Result<ScenarioRun> {
    let out = run_conditional_wait_scenario(o.seed)?;
    Ok(ScenarioRun {
        history: out.client_history.clone(),
        spec: None,
        expected: BTreeMap::new(),
        sim: Some(out),
        extra: Vec::new(),
    })
}

fn counter_workload() -> Workload {
    Workload::new(vec![
        ClientRequest::new(0, 0, "inc", Value::Nil),
        ClientRequest::new(1, 1, "inc", Value::Nil),
        ClientRequest::new(2, 2, "inc", Value::Nil),
        ClientRequest::new(3, 0, "get", Value::Nil),
        ClientRequest::new(4, 1, "get", Value::Nil).at(3),
    ])
}

fn atomic(name: &str) -> Result<ReplicatedObject> {
    Ok(ReplicatedObject::Atomic(spec_bundle(name)?.sequential))
}

fn byzantine(o: &ScenarioOptions) -> Result<ScenarioRun> {
    let cfg = SimConfig::new(4, 1, FailureModel::Byzantine)
        .scheduler(SchedulerKind::LockLevel)
        .seed(o.seed)
        .fault(3, FaultKind::Byzantine(ByzantineBehavior::ResponseFlip));
    let out = run_smr(&cfg, &counter_workload(), &atomic("counter")?)?;
    Ok(ScenarioRun {
        history: out.client_history.clone(),
        spec: Some("counter"),
        expected: all(true),
        sim: Some(out),
        extra: Vec::new(),
    })
}

fn duplicate_ids(o: &ScenarioOptions) -> Result<ScenarioRun> {
    let cfg = SimConfig::new(4, 1, FailureModel::Byzantine).seed(o.seed);
    let w = Workload::new(vec![
        ClientRequest::new(0, 0, "write", 1),
        ClientRequest::new(0, 0, "write", 2),
        ClientRequest::new(1, 1, "read", Value::Nil).at(4),
    ]);
    let out = byzantine_client_duplicate_ids(&cfg, &w, &atomic("register")?)?;
    Ok(ScenarioRun {
        history: out.client_history.clone(),
        spec: Some("register"),
        expected: all(true),
        sim: Some(out),
        extra: Vec::new(),
    })
}

fn crash(o: &ScenarioOptions) -> Result<ScenarioRun> {
    let cfg = SimConfig::new(3, 1, FailureModel::Crash)
        .scheduler(SchedulerKind::LockLevel)
        .seed(o.seed)
        .fault(0, FaultKind::Crash { at: 2 });
    let w = Workload::new(vec![
        ClientRequest::new(0, 0, "write", 1),
        ClientRequest::new(1, 1, "read", Value::Nil).at(1),
        ClientRequest::new(2, 0, "write", 2),
        ClientRequest::new(3, 1, "read", Value::Nil),
    ]);
    let out = run_smr(&cfg, &w, &atomic("register")?)?;
    Ok(ScenarioRun {
        history: out.client_history.clone(),
        spec: Some("register"),
        expected: all(true),
        sim: Some(out),
        extra: Vec::new(),
    })
}

fn partial_order(o: &ScenarioOptions) -> Result<ScenarioRun> {
    let cfg = SimConfig::new(3, 1, FailureModel::Crash)
        .scheduler(SchedulerKind::LockLevel)
        .seed(o.seed)
        .ordering(Ordering::PartialOrder(ConflictRelation::commuting([("inc", "inc")])));
    let out = run_smr(&cfg, &counter_workload(), &atomic("counter")?)?;
    Ok(ScenarioRun {
        history: out.client_history.clone(),
        spec: Some("counter"),
        expected: all(true),
        sim: Some(out),
        extra: Vec::new(),
    })
}

fn exchanger(_: &ScenarioOptions) -> Result<ScenarioRun> {
    let h = HistoryBuilder::new("exchanger")
        .op("exchange", 1, 2, 0, 4)
        .op("exchange", 2, 1, 1, 5)
        .build()?;
    Ok(ScenarioRun {
        history: h,
        spec: Some("exchanger"),
        expected: matrix(false, true, false, true),
        sim: None,
        extra: Vec::new(),
    })
}

fn overlap_visibility(_: &ScenarioOptions) -> Result<ScenarioRun> {
    // A and B overlap; C starts after both and reads the counter.
    let h = HistoryBuilder::new("counter")
        .op("inc", Value::Nil, "ok", 0, 4)
        .op("inc", Value::Nil, "ok", 1, 5)
        .op("get", Value::Nil, 1, 6, 8)
        .build()?;
    Ok(ScenarioRun {
        history: h,
        spec: Some("counter"),
        expected: all(false),
        sim: None,
        extra: Vec::new(),
    })
}

pub const CATALOG: &[ScenarioCatalogEntry] = &[
    ScenarioCatalogEntry {
        name: "listing1",
        description: "lock-object D and E under the lock-level scheduler; even seeds let E read between D's critical sections",
        build: listing1,
    },
    ScenarioCatalogEntry {
        name: "listing1-sequential",
        description: "lock-object D and E under the sequential scheduler",
        build: listing1_sequential,
    },
    ScenarioCatalogEntry {
        name: "quorum",
        description: "majority-quorum register with a write in progress; stale second read unless read repair is on",
        build: quorum,
    },
    ScenarioCatalogEntry {
        name: "nested",
        description: "composite F calling G and H on an aggregated object while J reads it; seed % 3 places J",
        build: nested,
    },
    ScenarioCatalogEntry {
        name: "condwait",
        description: "consumer waits on a condition that a later producer request signals",
        build: condwait,
    },
    ScenarioCatalogEntry {
        name: "byzantine",
        description: "counter on n=4, f=1 with replica 3 flipping every response",
        build: byzantine,
    },
    ScenarioCatalogEntry {
        name: "duplicate-ids",
        description: "client sends two writes under one invocation id; the first ordered one executes",
        build: duplicate_ids,
    },
    ScenarioCatalogEntry {
        name: "crash",
        description: "register on n=3, f=1 with replica 0 crashing at tick 2",
        build: crash,
    },
    ScenarioCatalogEntry {
        name: "partial-order",
        description: "counter with commuting increments reordered per replica",
        build: partial_order,
    },
    ScenarioCatalogEntry {
        name: "exchanger",
        description: "two overlapping exchanges swapping values",
        build: exchanger,
    },
    ScenarioCatalogEntry {
        name: "overlap-visibility",
        description: "a read after two overlapping increments that misses one of them",
        build: overlap_visibility,
    },
];

pub fn scenario(name: &str) -> Result<&'static ScenarioCatalogEntry> {
    CATALOG.iter().find(|e| e.name == name).ok_or_else(|| Error::UnknownName(name.to_string()))
}

/// Check every entry's expected matrix, and the lin expectation of its
/// extra histories, for the given seeds with read repair on and off.
/// Returns one line per mismatch.
pub fn validate_catalog(seeds: std::ops::Range<u64>) -> Result<Vec<String>> {
    let budget = SearchBudget::default();
    let mut bad = Vec::new();
    for seed in seeds {
        for read_repair in [false, true] {
            let o = ScenarioOptions { seed, read_repair };
            for e in CATALOG {
                let run = (e.build)(&o)?;
                if let Some(spec) = run.spec {
                    let bundle = spec_bundle(spec)?;
                    for (level, want) in &run.expected {
                        let v = check_level(&run.history, &bundle, *level, &budget)?;
                        if v.accepted != *want || v.is_unknown() {
                            bad.push(format!("{} seed {seed} repair {read_repair} {level}: {v}", e.name));
                        }
                    }
                }
                for (label, h, spec, want) in &run.extra {
                    let v = check_level(h, &spec_bundle(spec)?, Level::Lin, &budget)?;
                    if v.accepted != *want || v.is_unknown() {
                        bad.push(format!("{} seed {seed} {label} lin: {v}", e.name));
                    }
                }
            }
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_meets_its_matrix() {
        let bad = validate_catalog(0..3).unwrap();
        assert!(bad.is_empty(), "{bad:#?}");
    }
}
