//! Independent validation of witnesses. Each function re-executes a witness
//! against the history and specification and reports whether it is valid.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::Result;
use crate::history::{EventKind, History, OpId};
use crate::specs::{Call, EffectSpec, IntervalSpec, SequentialSpec, SetSpec};
use crate::value::Value;
use crate::verdict::{RunPoint, StepRef, Witness};

use super::{checking_order, recorded};

fn is_permutation(h: &History, ids: impl IntoIterator<Item = OpId>) -> bool {
    let mut seen = BTreeSet::new();
    for id in ids {
        if h.op(id).is_err() || !seen.insert(id) {
            return false;
        }
    }
    seen.len() == h.len()
}

/// A total order of operations is a linearization.
pub fn replay_order(h: &History, spec: &dyn SequentialSpec, order: &[OpId]) -> Result<bool> {
    if !is_permutation(h, order.iter().copied()) {
        return Ok(false);
    }
    for (i, a) in order.iter().enumerate() {
        for b in &order[i + 1..] {
            if h.real_time_precedes(*b, *a)? {
                return Ok(false);
            }
        }
    }
    let mut state = spec.initial_state();
    for id in order {
        let op = h.op(*id)?;
        let (next, ret) = spec.apply(&state, &op.op_name, &op.arg)?;
        if !recorded(op).admits(&ret) {
            return Ok(false);
        }
        state = next;
    }
    Ok(true)
}

/// A global step order is a multi-point linearization.
pub fn replay_steps(h: &History, spec: &dyn EffectSpec, steps: &[StepRef]) -> Result<bool> {
    let mut progress: BTreeMap<OpId, usize> = BTreeMap::new();
    let mut locals = BTreeMap::new();
    let mut finished: BTreeSet<OpId> = BTreeSet::new();
    let mut state = spec.initial_state();
    for s in steps {
        let Ok(op) = h.op(s.op) else { return Ok(false) };
        let k = progress.entry(s.op).or_insert(0);
        if *k != s.step {
            return Ok(false);
        }
        for p in h.operations() {
            if p.precedes(op) && !finished.contains(&p.op_id) {
                return Ok(false);
            }
        }
        let l = match locals.remove(&s.op) {
            Some(l) => l,
            None => spec.initial_locals(&op.op_name, &op.arg)?,
        };
        let Some((next, l)) = spec.step(&op.op_name, &op.arg, s.step, &state, &l)? else {
            return Ok(false);
        };
        state = next;
        *k += 1;
        if *k == spec.step_count(&op.op_name, &op.arg)? {
            if !recorded(op).admits(&spec.finish(&op.op_name, &op.arg, &l)?) {
                return Ok(false);
            }
            finished.insert(s.op);
        } else {
            locals.insert(s.op, l);
        }
    }
    Ok(finished.len() == h.len())
}

/// An ordered partition into concurrency classes is a set-linearization.
pub fn replay_sets(h: &History, spec: &dyn SetSpec, sets: &[Vec<OpId>]) -> Result<bool> {
    if !is_permutation(h, sets.iter().flatten().copied()) {
        return Ok(false);
    }
    let class: BTreeMap<OpId, usize> =
        sets.iter().enumerate().flat_map(|(i, s)| s.iter().map(move |id| (*id, i))).collect();
    for a in h.operations() {
        for b in h.operations() {
            if a.precedes(b) && class[&a.op_id] >= class[&b.op_id] {
                return Ok(false);
            }
        }
    }
    let mut state = spec.initial_state();
    for set in sets {
        if set.is_empty() || set.len() > spec.max_class_size() {
            return Ok(false);
        }
        let ops: Vec<_> = set.iter().map(|id| h.op(*id)).collect::<Result<_>>()?;
        let max_inv = ops.iter().map(|o| o.invocation_time).max().unwrap();
        let min_resp = ops.iter().filter_map(|o| o.response_time).min().unwrap();
        if max_inv > min_resp {
            return Ok(false);
        }
        let calls: Vec<(&str, &Value)> = ops.iter().map(|o| (o.op_name.as_str(), &o.arg)).collect();
        let Some((next, rets)) = spec.apply_set(&state, &calls)? else {
            return Ok(false);
        };
        if !ops.iter().zip(&rets).all(|(o, r)| recorded(o).admits(r)) {
            return Ok(false);
        }
        state = next;
    }
    Ok(true)
}

/// A run of interaction points is an interval-linearization.
pub fn replay_run(h: &History, spec: &dyn IntervalSpec, run: &[RunPoint]) -> Result<bool> {
    let events = checking_order(h);
    let mut state = spec.initial();
    let mut waiting: Vec<Call> = Vec::new();
    let mut emitted: BTreeMap<OpId, Value> = BTreeMap::new();
    let mut idx = 0;
    let mut points = run.iter().peekable();
    loop {
        while let Some(p) = points.peek() {
            if p.after_events != idx {
                break;
            }
            let offered = spec.points(&state, &waiting)?;
            let Some(m) = offered.into_iter().find(|o| {
                o.consumed == p.consumed && o.action == p.action && o.responses == p.responses
            }) else {
                return Ok(false);
            };
            for (id, v) in &m.responses {
                if emitted.insert(*id, v.clone()).is_some() || !recorded(h.op(*id)?).admits(v) {
                    return Ok(false);
                }
            }
            waiting.retain(|c| !m.consumed.contains(&c.op));
            state = m.next;
            points.next();
        }
        let Some(e) = events.get(idx) else { break };
        match e.kind {
            EventKind::Invocation => {
                let op = h.op(e.op_id)?;
                waiting.push(Call { op: op.op_id, name: op.op_name.clone(), arg: op.arg.clone() });
            }
            EventKind::Response => {
                if emitted.remove(&e.op_id).is_none() {
                    return Ok(false);
                }
            }
        }
        idx += 1;
    }
    Ok(points.next().is_none() && emitted.is_empty())
}

/// Replay any witness against the matching form of a specification bundle.
pub fn replay_witness(
    h: &History,
    bundle: &crate::specs::SpecBundle,
    witness: &Witness,
) -> Result<bool> {
    match witness {
        Witness::Order(o) => replay_order(h, bundle.sequential.as_ref(), o),
        Witness::Steps(s) => replay_steps(h, bundle.effect.as_ref(), s),
        Witness::Sets(s) => replay_sets(h, bundle.set.as_ref(), s),
        Witness::Run(r) => replay_run(h, bundle.interval.as_ref(), r),
    }
}
