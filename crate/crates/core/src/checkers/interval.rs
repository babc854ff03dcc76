use std::collections::{BTreeMap, HashSet};

use crate::error::Result;
use crate::history::{EventKind, EventRecord, History, OpId};
use crate::specs::{Call, IState, IntervalSpec};
use crate::value::Value;
use crate::verdict::{Explanation, Level, RunPoint, Verdict, Witness};

use super::{precedence_masks, recorded, Meter, SearchBudget};

/// Events sorted by time, invocations before responses at equal times, then
/// by event id. Equal times are therefore concurrent.
pub fn checking_order(h: &History) -> Vec<&EventRecord> {
    let mut evs: Vec<&EventRecord> = h.events().iter().collect();
    evs.sort_by_key(|e| (e.time, e.kind == EventKind::Response, e.event_id));
    evs
}

/// Decide interval-linearizability against an explicit automaton.
///
/// Invocations are handed to the automaton as they occur; a response event
/// is matched only after the automaton emitted that response with an
/// admitted value. Interaction points are placed right before response
/// events, which is complete for automata where consuming an invocation
/// never disables a point.
pub fn check_interval_linearizable(
    h: &History,
    spec: &dyn IntervalSpec,
    budget: &SearchBudget,
) -> Result<Verdict> {
    if precedence_masks(h, budget)?.is_none() {
        return budget.exhausted(Level::Interval, 0);
    }
    let events = checking_order(h);
    let mut s = Search {
        h,
        spec,
        events,
        meter: Meter::new(budget),
        seen: HashSet::new(),
        path: Vec::new(),
        best: None,
        blocked: Vec::new(),
        out_of_budget: false,
    };
    let found = s.dfs(0, spec.initial(), Vec::new(), BTreeMap::new())?;
    let nodes = s.meter.nodes;
    if found {
        return Ok(Verdict::accept(Level::Interval, Witness::Run(s.path), nodes));
    }
    if s.out_of_budget {
        return budget.exhausted(Level::Interval, nodes);
    }
    let prefix = s.best.map(|(_, p)| Witness::Run(p).ids()).unwrap_or_default();
    Ok(Verdict::reject(
        Level::Interval,
        Explanation::NoPlacement { longest_prefix: prefix, blocked: s.blocked },
        nodes,
    ))
}

type Emitted = BTreeMap<OpId, Value>;

struct Search<'a> {
    h: &'a History,
    spec: &'a dyn IntervalSpec,
    events: Vec<&'a EventRecord>,
    meter: Meter,
    seen: HashSet<(usize, IState, Vec<Call>, Vec<(OpId, Value)>)>,
    path: Vec<RunPoint>,
    best: Option<(usize, Vec<RunPoint>)>,
    blocked: Vec<OpId>,
    out_of_budget: bool,
}

impl Search<'_> {
    fn dfs(
        &mut self,
        mut idx: usize,
        state: IState,
        mut waiting: Vec<Call>,
        mut emitted: Emitted,
    ) -> Result<bool> {
        while let Some(e) = self.events.get(idx) {
            match e.kind {
                EventKind::Invocation => {
                    let op = self.h.op(e.op_id)?;
                    waiting.push(Call { op: op.op_id, name: op.op_name.clone(), arg: op.arg.clone() });
                }
                EventKind::Response => {
                    if emitted.remove(&e.op_id).is_none() {
                        break;
                    }
                }
            }
            idx += 1;
        }
        if idx == self.events.len() {
            return Ok(true);
        }
        if !self.meter.tick() {
            self.out_of_budget = true;
            return Ok(false);
        }
        let key = (
            idx,
            state.clone(),
            waiting.clone(),
            emitted.iter().map(|(k, v)| (*k, v.clone())).collect(),
        );
        if !self.seen.insert(key) {
            return Ok(false);
        }
        for p in self.spec.points(&state, &waiting)? {
            let mut ok = true;
            for (id, v) in &p.responses {
                let op = self.h.op(*id)?;
                if emitted.contains_key(id) || !recorded(op).admits(v) {
                    ok = false;
                }
            }
            if !ok {
                continue;
            }
            let next_waiting: Vec<Call> =
                waiting.iter().filter(|c| !p.consumed.contains(&c.op)).cloned().collect();
            let mut next_emitted = emitted.clone();
            next_emitted.extend(p.responses.iter().cloned());
            self.path.push(RunPoint {
                after_events: idx,
                consumed: p.consumed.clone(),
                action: p.action.clone(),
                responses: p.responses.clone(),
                after_time: idx.checked_sub(1).map(|i| self.events[i].time),
                before_time: Some(self.events[idx].time),
            });
            if self.dfs(idx, p.next, next_waiting, next_emitted)? {
                return Ok(true);
            }
            self.path.pop();
            if self.out_of_budget {
                return Ok(false);
            }
        }
        if self.best.as_ref().map_or(true, |(i, _)| idx > *i) {
            self.best = Some((idx, self.path.clone()));
            self.blocked = vec![self.events[idx].op_id];
        }
        Ok(false)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::history::HistoryBuilder;
    use crate::specs::{lock_object_spec, EffectAutomaton, ExchangerSpec, SetAutomaton};

    #[test]
    fn effect_automaton_accepts_intermediate_read() {
        let (_, eff) = lock_object_spec();
        let a = EffectAutomaton::new(Arc::new(eff));
        let b = SearchBudget::default();
        let h = |e: i64| {
            HistoryBuilder::new("lock_object")
                .op("D", Value::Nil, "ok", 0, 10)
                .op("E", Value::Nil, e, 2, 6)
                .build()
                .unwrap()
        };
        assert!(check_interval_linearizable(&h(2), &a, &b).unwrap().accepted);
        assert!(check_interval_linearizable(&h(7), &a, &b).unwrap().is_rejected());
    }

    #[test]
    fn set_automaton_matches_exchanger_semantics() {
        let a = SetAutomaton::new(Arc::new(ExchangerSpec));
        let b = SearchBudget::default();
        let ok = HistoryBuilder::new("ex")
            .op("exchange", 1, 2, 0, 5)
            .op("exchange", 2, 1, 1, 6)
            .build()
            .unwrap();
        let v = check_interval_linearizable(&ok, &a, &b).unwrap();
        assert!(v.accepted);
        let Some(Witness::Run(points)) = v.witness else { panic!() };
        assert_eq!(points.last().unwrap().responses.len(), 2);
        let bad = HistoryBuilder::new("ex")
            .op("exchange", 1, 2, 0, 1)
            .op("exchange", 2, 1, 2, 3)
            .build()
            .unwrap();
        assert!(check_interval_linearizable(&bad, &a, &b).unwrap().is_rejected());
    }
}
