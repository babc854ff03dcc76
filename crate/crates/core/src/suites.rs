//! Randomized and exhaustive property suites. Each suite returns a
//! [`SuiteReport`]; a failing suite carries its first counterexample.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{scenario, ScenarioOptions};
use crate::checkers::replay::replay_witness;
use crate::checkers::{
    check_hierarchy, check_level, check_linearizable,
    check_linearizable_naive, check_schneider_properties, SearchBudget,
};
use crate::error::{Error, Result};
use crate::gen::{op_menu, random_effect_history, random_history, random_workload, HistoryShape};
use crate::history::{Extension, History, OpId};
use crate::sim::condwait::{run_conditional_wait_with, PRODUCED};
use crate::sim::quorum::{stale_read_plan, stale_read_workload};
use crate::sim::{
    enumerate_delay_plans, run_nested_scenario, run_quorum_register, run_smr,
    ByzantineBehavior, ClientRequest, ConflictRelation, FailureModel, FaultKind, Ordering,
    ReplicatedObject, SchedulerKind, SimConfig, SimOutput, Workload,
};
use crate::specs::{spec_bundle, EffectSpec, ProductSpec, SequentialSpec, SpecBundle};
use crate::trace::to_trace_string;
use crate::value::{State, Value};
use crate::verdict::{Level, Verdict};

pub const SUITE_NAMES: [&str; 12] = [
    "listing1",
    "sequential",
    "lemmas",
    "hierarchy",
    "oracle",
    "quorum",
    "nested",
    "condwait",
    "determinism",
    "voting",
    "schneider",
    "locality",
];

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    /// Overrides the suite's default trial count.
    pub trials: Option<usize>,
    pub seed: u64,
    /// Check generated histories against a deliberately wrong spec.
    pub mutant: bool,
    pub budget: SearchBudget,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { trials: None, seed: 1, mutant: false, budget: SearchBudget::default() }
    }
}

impl SuiteOptions {
    fn trials(&self, default: usize) -> usize {
        self.trials.unwrap_or(default)
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(salt);
        r
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub trials: usize,
    pub failures: usize,
    /// Trials whose verdict ran out of budget.
    pub skipped: usize,
    pub detail: String,
    /// First failing case: a description followed by its trace.
    pub counterexample: Option<String>,
}

impl SuiteReport {
    fn new(name: &str) -> Self {
        Self { name: name.to_string(), ..Self::default() }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.trials > 0
    }

    fn fail(&mut self, what: impl Into<String>, h: Option<&History>) {
        self.failures += 1;
        if self.counterexample.is_none() {
            let mut s = what.into();
            if let Some(h) = h {
                s.push('\n');
                s.push_str(&to_trace_string(h));
            }
            self.counterexample = Some(s);
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String, h: Option<&History>) {
        self.trials += 1;
        if !ok {
            self.fail(what(), h);
        }
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        write!(
            f,
            "{status} {:<12} trials={} failures={} skipped={}",
            self.name, self.trials, self.failures, self.skipped
        )?;
        if !self.detail.is_empty() {
            write!(f, "  {}", self.detail)?;
        }
        Ok(())
    }
}

/// Wraps a spec so that every integer return is off by one.
struct Mutant(Arc<dyn SequentialSpec>);

impl SequentialSpec for Mutant {
    fn name(&self) -> &str {
        "mutant"
    }

    fn initial_state(&self) -> State {
        self.0.initial_state()
    }

    fn apply(&self, state: &State, op: &str, arg: &Value) -> Result<(State, Value)> {
        let (s, v) = self.0.apply(state, op, arg)?;
        Ok((s, v.as_int().map_or(v, |i| Value::Int(i + 1))))
    }
}

fn bundle(name: &str, mutant: bool) -> Result<SpecBundle> {
    let b = spec_bundle(name)?;
    if !mutant {
        return Ok(b);
    }
    Ok(SpecBundle::from_sequential(Arc::new(Mutant(b.sequential))))
}

pub fn run_suite(name: &str, o: &SuiteOptions) -> Result<SuiteReport> {
    match name {
        "listing1" => listing1(o),
        "sequential" => sequential(o),
        "lemmas" => lemmas(o),
        "hierarchy" => hierarchy(o),
        "oracle" => oracle(o),
        "quorum" => quorum(o),
        "nested" => nested(o),
        "condwait" => condwait(o),
        "determinism" => determinism(o),
        "voting" => voting(o),
        "schneider" => schneider(o),
        "locality" => locality(o),
        other => Err(Error::UnknownName(other.to_string())),
    }
}

/// `all` or one suite name.
pub fn run_suites(name: &str, o: &SuiteOptions) -> Result<Vec<SuiteReport>> {
    if name == "all" {
        SUITE_NAMES.iter().map(|n| run_suite(n, o)).collect()
    } else {
        Ok(vec![run_suite(name, o)?])
    }
}

fn accepted(v: &Verdict) -> Option<bool> {
    (!v.is_unknown()).then_some(v.accepted)
}

pub fn listing1(o: &SuiteOptions) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("listing1");
    let run = (scenario("listing1")?.build)(&ScenarioOptions { seed: 0, ..Default::default() })?;
    let h = &run.history;
    let b = bundle("lock-object", o.mutant)?;
    let e = h.op(OpId(1))?.ret.clone();
    r.check(e == Some(Value::Int(2)), || format!("E returned {e:?}, expected 2"), Some(h));
    for (level, want) in [(Level::Lin, false), (Level::Mp, true), (Level::Interval, true)] {
        let v = check_level(h, &b, level, &o.budget)?;
        r.check(accepted(&v) == Some(want), || format!("{level}: {v}"), Some(h));
    }
    let seq = (scenario("listing1-sequential")?.build)(&ScenarioOptions::default())?;
    let sim = seq.sim.as_ref().expect("simulated");
    let ok = seq.history.op(OpId(1))?.ret == Some(Value::Int(4))
        && sim.replica_states.iter().all(|s| *s == State::single(4));
    r.check(ok, || "sequential scheduler: expected E=4 and s=4 everywhere".into(), Some(&seq.history));
    r.detail = "E=2 interleaved; lin rejects, mp and interval accept".into();
    Ok(r)
}

const SEQ_SPECS: [&str; 3] = ["register", "counter", "fifo-queue"];

pub fn sequential(o: &SuiteOptions) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("sequential");
    let mut rng = o.rng(2);
    for _ in 0..o.trials(500) {
        let name = *SEQ_SPECS.choose(&mut rng).expect("specs");
        let b = bundle(name, o.mutant)?;
        let object = ReplicatedObject::Atomic(spec_bundle(name)?.sequential);
        let (reqs, clients) = (rng.gen_range(3..=10), rng.gen_range(1..=3));
        let w = random_workload(&mut rng, op_menu(name)?, reqs, clients);
        let cfg = SimConfig::new(3, 1, FailureModel::Crash)
            .scheduler(SchedulerKind::Sequential)
            .seed(rng.gen());
        let out = run_smr(&cfg, &w, &object)?;
        let h = &out.client_history;
        if !h.is_complete() {
            r.check(false, || "incomplete client history".into(), Some(h));
            continue;
        }
        let v = check_linearizable(h, b.sequential.as_ref(), &o.budget)?;
        if v.is_unknown() {
            r.skipped += 1;
            continue;
        }
        r.check(v.accepted, || format!("{name}: {v}"), Some(h));
    }
    Ok(r)
}

fn random_extension(rng: &mut ChaCha8Rng, h: &History) -> History {
    for attempt in 0..8 {
        let max = if attempt < 4 { 3 } else { 1 };
        let shifts: BTreeMap<OpId, Extension> = h
            .operations()
            .iter()
            .map(|op| {
                let earlier = rng.gen_range(0..=max).min(op.invocation_time);
                (op.op_id, Extension { earlier, later: rng.gen_range(0..=max) })
            })
            .collect();
        if let Ok(ext) = h.extend_timelines(&shifts) {
            return ext;
        }
    }
    h.clone()
}

type Gen = fn(&mut ChaCha8Rng, HistoryShape) -> Result<History>;

fn gen_register(rng: &mut ChaCha8Rng, shape: HistoryShape) -> Result<History> {
    random_history(rng, &crate::specs::RegisterSpec, op_menu("register")?, "register", shape)
}

fn gen_counter(rng: &mut ChaCha8Rng, shape: HistoryShape) -> Result<History> {
    random_history(rng, &crate::specs::CounterSpec, op_menu("counter")?, "counter", shape)
}

fn gen_queue(rng: &mut ChaCha8Rng, shape: HistoryShape) -> Result<History> {
    random_history(rng, &crate::specs::FifoQueueSpec, op_menu("fifo-queue")?, "queue", shape)
}

fn gen_lock_object(rng: &mut ChaCha8Rng, shape: HistoryShape) -> Result<History> {
    let (_, eff) = crate::specs::lock_object_spec();
    random_effect_history(rng, &eff as &dyn EffectSpec, op_menu("lock-object")?, "lock_object", shape)
}

fn gen_for(spec: &str) -> Gen {
    match spec {
        "register" => gen_register,
        "counter" => gen_counter,
        "fifo-queue" => gen_queue,
        _ => gen_lock_object,
    }
}

pub fn lemmas(o: &SuiteOptions) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("lemmas");
    let mut rng = o.rng(3);
    let trials = o.trials(1000);
    let mut held = 0usize;
    for level in [Level::Lin, Level::Mp, Level::Interval] {
        for i in 0..trials {
            let spec = match (level, i % 2) {
                (Level::Lin, 0) => "register",
                (Level::Lin, _) => "fifo-queue",
                (_, 0) => "lock-object",
                _ => "counter",
            };
            let b = bundle(spec, o.mutant)?;
            let corrupt = rng.gen_bool(0.3);
            let shape = HistoryShape { ops: rng.gen_range(2..=6), clients: rng.gen_range(1..=3), corrupt: if corrupt { 1.0 } else { 0.0 } };
            let h = gen_for(spec)(&mut rng, shape)?;
            let ext = random_extension(&mut rng, &h);
            let before = check_level(&h, &b, level, &o.budget)?;
            match accepted(&before) {
                None => {
                    r.skipped += 1;
                    continue;
                }
                Some(false) => {
                    // uncorrupted histories are accepted by construction
                    let sane = corrupt || level == Level::Lin && spec == "lock-object";
                    r.check(sane, || format!("{level}/{spec}: generated history rejected: {before}"), Some(&h));
                    continue;
                }
                Some(true) => {}
            }
            let after = check_level(&ext, &b, level, &o.budget)?;
            match accepted(&after) {
                None => r.skipped += 1,
                Some(ok) => {
                    held += ok as usize;
                    r.check(ok, || format!("{level}/{spec}: extension rejected: {after}\noriginal:\n{}", to_trace_string(&h)), Some(&ext));
                }
            }
        }
    }
    r.detail = format!("{held} accepted (history, extension) pairs over lin, mp, interval");
    Ok(r)
}

const HIERARCHY_SPECS: [&str; 4] = ["register", "counter", "fifo-queue", "lock-object"];

pub fn hierarchy(o: &SuiteOptions) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("hierarchy");
    let mut rng = o.rng(4);
    let mut strict = 0;
    for i in 0..o.trials(500) {
        let spec = HIERARCHY_SPECS[i % HIERARCHY_SPECS.len()];
        let b = bundle(spec, o.mutant)?;
        let shape = HistoryShape { ops: rng.gen_range(1..=7), clients: rng.gen_range(1..=4), corrupt: 0.3 };
        let h = gen_for(spec)(&mut rng, shape)?;
        let rep = check_hierarchy(&h, &b, &o.budget)?;
        if rep.verdicts.values().any(Verdict::is_unknown) {
            r.skipped += 1;
        }
        if rep.accepted(Level::Mp) == Some(true) && rep.accepted(Level::Lin) == Some(false) {
            strict += 1;
        }
        r.check(rep.violations.is_empty(), || format!("{spec}: {:?}", rep.violations), Some(&h));
        for v in rep.verdicts.values().filter(|v| v.accepted) {
            let w = v.witness.as_ref().expect("accepted verdicts carry witnesses");
            let ok = replay_witness(&h, &b, w)?;
            r.check(ok, || format!("{spec}: {} witness does not replay", v.level), Some(&h));
        }
    }
    r.detail = format!("{strict} histories accepted by mp but not lin");
    Ok(r)
}

pub fn oracle(o: &SuiteOptions) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("oracle");
    let mut rng = o.rng(5);
    let (mut yes, mut no) = (0, 0);
    for i in 0..o.trials(1000) {
        let spec = SEQ_SPECS[i % SEQ_SPECS.len()];
        let truth = spec_bundle(spec)?;
        let checked = bundle(spec, o.mutant)?;
        let shape = HistoryShape { ops: rng.gen_range(1..=7), clients: rng.gen_range(1..=4), corrupt: 0.4 };
        let h = gen_for(spec)(&mut rng, shape)?;
        let fast = check_linearizable(&h, checked.sequential.as_ref(), &o.budget)?;
        let naive = check_linearizable_naive(&h, truth.sequential.as_ref())?;
        if fast.is_unknown() {
            r.skipped += 1;
            continue;
        }
        if naive.accepted {
            yes += 1;
        } else {
            no += 1;
        }
        r.check(fast.accepted == naive.accepted, || format!("{spec}: dfs {fast} vs naive {naive}"), Some(&h));
    }
    r.detail = format!("{yes} linearizable, {no} not");
    Ok(r)
}

pub fn quorum(o: &SuiteOptions) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("quorum");
    let b = bundle("register", o.mutant)?;
    let w = stale_read_workload();
    let stale = run_quorum_register(false, &stale_read_plan(), &w)?;
    let v = check_linearizable(&stale, b.sequential.as_ref(), &o.budget)?;
    r.check(v.is_rejected(), || format!("stale read without repair: {v}"), Some(&stale));
    let plans = enumerate_delay_plans();
    let limit = o.trials(plans.len()).min(plans.len());
    let mut without_repair = 0;
    for plan in &plans[..limit] {
        let h = run_quorum_register(true, plan, &w)?;
        let v = check_linearizable(&h, b.sequential.as_ref(), &o.budget)?;
        if v.is_unknown() {
            r.skipped += 1;
            continue;
        }
        r.check(v.accepted, || format!("read repair, plan {:?}: {v}", plan.delays), Some(&h));
        let h = run_quorum_register(false, plan, &w)?;
        if check_linearizable(&h, b.sequential.as_ref(), &o.budget)?.is_rejected() {
            without_repair += 1;
        }
    }
    r.detail = format!("{limit} delay plans with repair; {without_repair} stale without it");
    Ok(r)
}

pub fn nested(o: &SuiteOptions) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("nested");
    let composite = bundle("nested-composite", o.mutant)?;
    let aggregate = bundle("nested-aggregate", o.mutant)?;
    let out = run_nested_scenario(1)?;
    let h = &out.composite;
    for (level, want) in [(Level::Lin, false), (Level::Mp, true), (Level::Interval, true)] {
        let v = check_level(h, &composite, level, &o.budget)?;
        r.check(accepted(&v) == Some(want), || format!("composite {level}: {v}"), Some(h));
    }
    for seed in 0..o.trials(100) as u64 {
        let out = run_nested_scenario(seed)?;
        let v = check_linearizable(&out.aggregate, aggregate.sequential.as_ref(), &o.budget)?;
        r.check(v.accepted, || format!("aggregate, seed {seed}: {v}"), Some(&out.aggregate));
    }
    r.detail = "composite lin-rejected, mp and interval accepted; aggregate always lin".into();
    Ok(r)
}

pub fn condwait(o: &SuiteOptions) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("condwait");
    for seed in 0..o.trials(20) as u64 {
        let out = run_conditional_wait_with(SchedulerKind::LockLevel, false, seed)?;
        let h = &out.client_history;
        let got = h.op(OpId(0)).ok().and_then(|op| op.ret.clone());
        r.check(
            h.is_complete() && got == Some(Value::Int(PRODUCED)),
            || format!("seed {seed}: consumer returned {got:?}"),
            Some(h),
        );
        let seq = run_conditional_wait_with(SchedulerKind::Sequential, false, seed);
        r.check(
            matches!(seq, Err(Error::DeadlockDetected { .. })),
            || format!("seed {seed}: sequential scheduler did not deadlock: {:?}", seq.map(|o| o.client_history)),
            None,
        );
    }
    r.detail = "lock-level delivers the product; sequential deadlocks".into();
    Ok(r)
}

fn atomic(name: &str) -> Result<ReplicatedObject> {
    Ok(ReplicatedObject::Atomic(spec_bundle(name)?.sequential))
}

fn commuting_for(spec: &str) -> ConflictRelation {
    match spec {
        "register" => ConflictRelation::commuting([("read", "read")]),
        "counter" => ConflictRelation::commuting([("inc", "inc"), ("get", "get")]),
        _ => ConflictRelation::commuting([]),
    }
}

fn random_run(rng: &mut ChaCha8Rng) -> Result<(SimConfig, Workload, ReplicatedObject, String)> {
    let spec = *["register", "counter", "fifo-queue", "lock-object"].choose(rng).expect("specs");
    let model = if rng.gen_bool(0.5) { FailureModel::Crash } else { FailureModel::Byzantine };
    let n = rng.gen_range(3..=7);
    let f = match model {
        FailureModel::Crash => (n - 1) / 2,
        FailureModel::Byzantine => (n - 1) / 3,
    }
    .max(if model == FailureModel::Crash { 1 } else { 0 });
    let (n, f) = if model == FailureModel::Byzantine && f == 0 { (4, 1) } else { (n, f) };
    let mut cfg = SimConfig::new(n, f, model).seed(rng.gen()).scheduler(if rng.gen_bool(0.5) {
        SchedulerKind::LockLevel
    } else {
        SchedulerKind::Sequential
    });
    if spec != "lock-object" && rng.gen_bool(0.5) {
        cfg = cfg.ordering(Ordering::PartialOrder(commuting_for(spec)));
    }
    let mut replicas: Vec<usize> = (0..n).collect();
    replicas.shuffle(rng);
    for &replica in replicas.iter().take(rng.gen_range(0..=f)) {
        let kind = match model {
            FailureModel::Crash => FaultKind::Crash { at: rng.gen_range(0..8) },
            FailureModel::Byzantine => FaultKind::Byzantine(*ByzantineBehavior::ALL.choose(rng).expect("behaviours")),
        };
        cfg = cfg.fault(replica, kind);
    }
    let (object, menu) = if spec == "lock-object" {
        (
            ReplicatedObject::Program(Arc::new(crate::sim::compile_object(crate::specs::LISTING1_OBJECT)?)),
            op_menu("lock-object")?,
        )
    } else {
        (atomic(spec)?, op_menu(spec)?)
    };
    let (reqs, clients) = (rng.gen_range(2..=8), rng.gen_range(1..=3));
    let mut w = random_workload(rng, menu, reqs, clients);
    for i in 1..w.requests.len() {
        if rng.gen_bool(0.2) {
            let dep = rng.gen_range(0..i) as u64;
            if w.requests[dep as usize].client != w.requests[i].client {
                w.requests[i] = w.requests[i].clone().after(dep);
            }
        }
    }
    Ok((cfg, w, object, spec.to_string()))
}

fn determinism_problems(out: &SimOutput) -> Vec<String> {
    let mut bad = Vec::new();
    let correct = out.correct_replicas();
    let Some(&first) = correct.first() else { return vec!["no correct replica".into()] };
    for &r in &correct {
        if out.replica_states[r] != out.replica_states[first] {
            bad.push(format!("replica {r} state differs from replica {first}"));
        }
    }
    for (id, by_replica) in &out.responses {
        let answers: Vec<&Value> = correct.iter().filter_map(|r| by_replica.get(r)).collect();
        if answers.windows(2).any(|w| w[0] != w[1]) {
            bad.push(format!("correct replicas disagree on request {id}"));
        }
    }
    let order = |r: usize| -> Vec<u64> { out.delivery_order[r].iter().map(|d| d.id).collect() };
    match &out.config.ordering {
        Ordering::TotalOrder => {
            for &r in &correct {
                if order(r) != order(first) {
                    bad.push(format!("replica {r} delivery order differs"));
                }
            }
        }
        Ordering::PartialOrder(rel) => {
            let pos = |r: usize| -> BTreeMap<u64, usize> {
                order(r).into_iter().enumerate().map(|(i, id)| (id, i)).collect()
            };
            let base = pos(first);
            for &r in &correct {
                let p = pos(r);
                for a in &out.delivery_order[first] {
                    for b in &out.delivery_order[first] {
                        if a.id < b.id && rel.conflicts(&a.op, &b.op) {
                            let same = (base[&a.id] < base[&b.id]) == (p.get(&a.id) < p.get(&b.id));
                            if !same {
                                bad.push(format!("replica {r} reorders conflicting {} and {}", a.id, b.id));
                            }
                        }
                    }
                }
            }
        }
    }
    let h = &out.client_history;
    if !h.is_complete() {
        bad.push("client history has pending operations".into());
    }
    for op in h.operations() {
        let inner: Vec<_> = correct
            .iter()
            .filter_map(|&r| out.inner_histories[r].op(op.op_id).ok().map(|i| (r, i)))
            .collect();
        if inner.iter().any(|(_, i)| i.invocation_time < op.invocation_time) {
            bad.push(format!("an execution of {} starts before its invocation", op.op_id));
        }
        let contained = inner.iter().any(|(_, i)| match (i.response_time, op.response_time) {
            (Some(a), Some(b)) => a <= b,
            _ => false,
        });
        if op.response_time.is_some() && !contained {
            bad.push(format!("no correct execution of {} lies inside its span", op.op_id));
        }
    }
    bad
}

/// Outputs shared by the determinism and order-property suites.
fn determinism_runs(o: &SuiteOptions) -> Result<Vec<(SimOutput, String)>> {
    let mut rng = o.rng(9);
    let mut out = Vec::new();
    for _ in 0..o.trials(100) {
        let (cfg, w, object, spec) = random_run(&mut rng)?;
        out.push((run_smr(&cfg, &w, &object)?, spec));
    }
    Ok(out)
}

pub fn determinism(o: &SuiteOptions) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("determinism");
    let mut rng = o.rng(9);
    for _ in 0..o.trials(100) {
        let (cfg, w, object, spec) = random_run(&mut rng)?;
        let a = run_smr(&cfg, &w, &object)?;
        let b = run_smr(&cfg, &w, &object)?;
        let same = a.to_json() == b.to_json();
        r.check(same, || format!("{spec}: reruns differ for {cfg:?}"), Some(&a.client_history));
        let bad = determinism_problems(&a);
        r.check(bad.is_empty(), || format!("{spec}: {}", bad.join("; ")), Some(&a.client_history));
    }
    r.detail = "bit-identical reruns; correct replicas agree".into();
    Ok(r)
}

fn voting_runs(o: &SuiteOptions, r: &mut SuiteReport) -> Result<Vec<SimOutput>> {
    let mut rng = o.rng(10);
    let mut outs = Vec::new();
    for behavior in ByzantineBehavior::ALL {
        for _ in 0..o.trials(100) {
            let spec = *SEQ_SPECS.choose(&mut rng).expect("specs");
            let cfg = SimConfig::new(4, 1, FailureModel::Byzantine)
                .seed(rng.gen())
                .fault(rng.gen_range(0..4), FaultKind::Byzantine(behavior));
            let (reqs, clients) = (rng.gen_range(1..=8), rng.gen_range(1..=3));
            let w = random_workload(&mut rng, op_menu(spec)?, reqs, clients);
            let out = run_smr(&cfg, &w, &atomic(spec)?)?;
            let correct = out.correct_replicas();
            for op in out.client_history.operations() {
                let ret = op.ret.as_ref();
                let truth = out.responses.get(&op.op_id.0).and_then(|m| correct.iter().find_map(|c| m.get(c)));
                r.check(
                    ret.is_some() && ret == truth,
                    || format!("{behavior:?}/{spec}: {} decided {ret:?}, correct replicas said {truth:?}", op.op_id),
                    Some(&out.client_history),
                );
            }
            outs.push(out);
        }
    }
    Ok(outs)
}

fn duplicate_attack(seed: u64) -> Result<SimOutput> {
    let cfg = SimConfig::new(4, 1, FailureModel::Byzantine).seed(seed);
    let w = Workload::new(vec![
        ClientRequest::new(0, 0, "inc", Value::Nil),
        ClientRequest::new(0, 0, "inc", Value::Nil),
        ClientRequest::new(1, 1, "get", Value::Nil).at(6),
    ]);
    byzantine_dup(&cfg, &w)
}

fn byzantine_dup(cfg: &SimConfig, w: &Workload) -> Result<SimOutput> {
    crate::sim::byzantine_client_duplicate_ids(cfg, w, &atomic("counter")?)
}

pub fn voting(o: &SuiteOptions) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("voting");
    voting_runs(o, &mut r)?;
    for seed in 0..10 {
        let out = duplicate_attack(seed)?;
        for c in out.correct_replicas() {
            let executed = out.delivery_order[c].iter().filter(|d| d.id == 0).count();
            r.check(executed == 1, || format!("replica {c} executed id 0 {executed} times"), Some(&out.client_history));
            r.check(
                out.replica_states[c] == State::single(1),
                || format!("replica {c} counter is {:?}", out.replica_states[c]),
                Some(&out.client_history),
            );
        }
    }
    r.detail = "each behaviour outvoted; reused ids execute once".into();
    Ok(r)
}

pub fn schneider(o: &SuiteOptions) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("schneider");
    let mut scratch = SuiteReport::new("voting");
    let mut outs: Vec<SimOutput> = determinism_runs(o)?.into_iter().map(|(out, _)| out).collect();
    outs.extend(voting_runs(o, &mut scratch)?);
    let mut edges = 0;
    for out in &outs {
        edges += out.causal_edges.len();
        let (o1, o2) = check_schneider_properties(out)?;
        r.check(o1, || "a client's requests were processed out of issue order".into(), Some(&out.client_history));
        r.check(o2, || "a causal edge was processed backwards".into(), Some(&out.client_history));
    }
    r.detail = format!("{} runs, {edges} causal edges", outs.len());
    Ok(r)
}

/// Canonical interval representations of all unlabeled interval orders on
/// `n` elements: sorted multisets of `[l, r]` over `0..m` in which every
/// point is both some left and some right endpoint.
pub fn interval_orders(n: usize) -> Vec<Vec<(usize, usize)>> {
    fn extend(
        n: usize,
        pool: &[(usize, usize)],
        start: usize,
        cur: &mut Vec<(usize, usize)>,
        m: usize,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if cur.len() == n {
            let lefts = (0..m).all(|p| cur.iter().any(|iv| iv.0 == p));
            let rights = (0..m).all(|p| cur.iter().any(|iv| iv.1 == p));
            if lefts && rights {
                out.push(cur.clone());
            }
            return;
        }
        for i in start..pool.len() {
            cur.push(pool[i]);
            extend(n, pool, i, cur, m, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for m in 1..=n {
        let pool: Vec<(usize, usize)> =
            (0..m).flat_map(|l| (l..m).map(move |r| (l, r))).collect();
        extend(n, &pool, 0, &mut Vec::new(), m, &mut out);
    }
    out
}

const LABELS: [(&str, Value, Value); 3] = [
    ("write", Value::Int(1), Value::Sym(String::new())),
    ("read", Value::Nil, Value::Int(0)),
    ("read", Value::Nil, Value::Int(1)),
];

fn label(code: usize) -> (&'static str, Value, Value) {
    let (name, arg, ret) = &LABELS[code % 3];
    let ret = if *name == "write" { Value::ok() } else { ret.clone() };
    (name, arg.clone(), ret)
}

fn locality_history(ivs: &[(usize, usize)], codes: &[usize]) -> Result<History> {
    let records = ivs.iter().zip(codes).enumerate().map(|(i, (&(l, r), &code))| {
        let (name, arg, ret) = label(code);
        crate::history::OpRecord {
            op_id: OpId(i as u64),
            client: crate::history::ClientId(i as u64),
            object: if code < 3 { "x".into() } else { "y".into() },
            op_name: name.into(),
            arg,
            ret: Some(ret),
            invocation_time: 2 * l as i64,
            response_time: Some(2 * r as i64 + 1),
        }
    });
    crate::history::build_history(crate::history::events_from_records(records))
}

/// Key identifying one object's projection up to order-preserving
/// relabelling of times.
fn projection_key(ivs: &[(usize, usize)], codes: &[usize], object: usize) -> Vec<(usize, usize, usize)> {
    let mine: Vec<(usize, usize, usize)> = ivs
        .iter()
        .zip(codes)
        .filter(|(_, &c)| c / 3 == object)
        .map(|(&(l, r), &c)| (2 * l, 2 * r + 1, c % 3))
        .collect();
    let mut points: Vec<usize> = mine.iter().flat_map(|&(a, b, _)| [a, b]).collect();
    points.sort_unstable();
    points.dedup();
    let rank = |p: usize| points.binary_search(&p).expect("own point");
    let mut key: Vec<_> = mine.iter().map(|&(a, b, c)| (rank(a), rank(b), c)).collect();
    key.sort_unstable();
    key
}

/// Label codes `0..6` (object `code / 3`, label `code % 3`) for every
/// operation, with at most `per_object` operations on each object. Runs of
/// identical intervals take non-decreasing codes and the first operation is
/// on `x`; every assignment is equivalent to one of these.
fn labelings(ivs: &[(usize, usize)], per_object: usize) -> Vec<Vec<usize>> {
    fn go(ivs: &[(usize, usize)], per: usize, cur: &mut Vec<usize>, counts: &mut [usize; 2], out: &mut Vec<Vec<usize>>) {
        let i = cur.len();
        if i == ivs.len() {
            out.push(cur.clone());
            return;
        }
        let lo = if i > 0 && ivs[i] == ivs[i - 1] { cur[i - 1] } else { 0 };
        let hi = if i == 0 { 3 } else { 6 };
        for code in lo..hi {
            if counts[code / 3] == per {
                continue;
            }
            counts[code / 3] += 1;
            cur.push(code);
            go(ivs, per, cur, counts, out);
            cur.pop();
            counts[code / 3] -= 1;
        }
    }
    let mut out = Vec::new();
    go(ivs, per_object, &mut Vec::new(), &mut [0, 0], &mut out);
    out
}

/// Largest history size enumerated by [`locality`].
pub const LOCALITY_MAX_OPS: usize = 6;
pub const LOCALITY_PER_OBJECT: usize = 3;

/// Exhaustive locality check: a two-register history is linearizable
/// exactly when both projections are. `trials` overrides the maximum
/// number of operations.
pub fn locality(o: &SuiteOptions) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("locality");
    let max_ops = o.trials(LOCALITY_MAX_OPS);
    let register = bundle("register", o.mutant)?.sequential;
    let product = ProductSpec::new(vec![("x".into(), register.clone()), ("y".into(), register.clone())]);
    let mut cache: HashMap<Vec<(usize, usize, usize)>, bool> = HashMap::new();
    let (mut yes, mut no) = (0usize, 0usize);
    for n in 1..=max_ops {
        for ivs in interval_orders(n) {
            for codes in labelings(&ivs, LOCALITY_PER_OBJECT) {
                let h = locality_history(&ivs, &codes)?;
                let mut parts = true;
                for object in 0..2 {
                    let key = projection_key(&ivs, &codes, object);
                    let ok = match cache.get(&key) {
                        Some(&ok) => ok,
                        None => {
                            let name = if object == 0 { "x" } else { "y" };
                            let v = check_linearizable(&h.project_object(name), register.as_ref(), &o.budget)?;
                            if v.is_unknown() {
                                return Err(Error::BudgetExhausted { nodes: v.nodes });
                            }
                            cache.insert(key, v.accepted);
                            v.accepted
                        }
                    };
                    parts &= ok;
                }
                let whole = check_linearizable(&h.fuse_objects("xy"), &product, &o.budget)?;
                if whole.is_unknown() {
                    r.skipped += 1;
                    continue;
                }
                if whole.accepted {
                    yes += 1;
                } else {
                    no += 1;
                }
                r.check(
                    whole.accepted == parts,
                    || format!("composite {} but projections {}", whole.status(), if parts { "accepted" } else { "rejected" }),
                    Some(&h),
                );
            }
        }
    }
    r.detail = format!(
        "all interval orders up to {max_ops} ops, {LOCALITY_PER_OBJECT} per object: {yes} linearizable, {no} not"
    );
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_order_counts() {
        let counts: Vec<usize> = (1..=6).map(|n| interval_orders(n).len()).collect();
        assert_eq!(counts, vec![1, 2, 5, 15, 53, 217]);
    }

    #[test]
    fn small_suites_pass() {
        let o = SuiteOptions { trials: Some(5), ..SuiteOptions::default() };
        for name in SUITE_NAMES {
            let rep = run_suite(name, &o).unwrap();
            assert!(rep.passed(), "{rep}\n{:?}", rep.counterexample);
        }
    }

    #[test]
    fn mutant_is_caught() {
        let o = SuiteOptions { trials: Some(20), mutant: true, ..SuiteOptions::default() };
        let rep = run_suite("sequential", &o).unwrap();
        assert!(!rep.passed());
        assert!(rep.counterexample.is_some());
    }
}
