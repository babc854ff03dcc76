//! Interval specifications as explicit automata.
//!
//! An automaton state ([`IState`]) holds the object state and the calls that
//! have been consumed but not yet answered. From a state, the automaton
//! offers interaction [`Point`]s; each may consume waiting invocations,
//! perform an internal action and emit responses for consumed calls.

use std::sync::Arc;

use crate::error::Result;
use crate::history::OpId;
use crate::value::{Locals, State, Value};

use super::{EffectSpec, SetSpec};

/// An invocation the history has issued but the automaton has not consumed.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Call {
    pub op: OpId,
    pub name: String,
    pub arg: Value,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActiveCall {
    pub op: OpId,
    pub name: String,
    pub arg: Value,
    pub progress: usize,
    pub locals: Locals,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct IState {
    pub object: State,
    /// Consumed, unanswered calls ordered by op id.
    pub active: Vec<ActiveCall>,
}

impl IState {
    fn with_consumed(&self, calls: &[Call]) -> IState {
        let mut next = self.clone();
        for c in calls {
            next.active.push(ActiveCall {
                op: c.op,
                name: c.name.clone(),
                arg: c.arg.clone(),
                progress: 0,
                locals: Locals::default(),
            });
        }
        next.active.sort();
        next
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Point {
    pub consumed: Vec<OpId>,
    pub action: Option<String>,
    pub responses: Vec<(OpId, Value)>,
    pub next: IState,
}

pub trait IntervalSpec: Send + Sync {
    fn name(&self) -> &str;
    fn initial(&self) -> IState;
    /// Interaction points enabled in `state` given the waiting invocations.
    fn points(&self, state: &IState, waiting: &[Call]) -> Result<Vec<Point>>;
}

fn consume_all(state: &IState, waiting: &[Call]) -> Point {
    Point {
        consumed: waiting.iter().map(|c| c.op).collect(),
        action: None,
        responses: Vec::new(),
        next: state.with_consumed(waiting),
    }
}

/// Automaton derived from an [`EffectSpec`]: one internal action per effect
/// step; the response is emitted together with the final step.
///
/// Waiting invocations are consumed eagerly since an earlier consumption
/// never disables a later point.
#[derive(Clone)]
pub struct EffectAutomaton {
    effects: Arc<dyn EffectSpec>,
}

impl EffectAutomaton {
    pub fn new(effects: Arc<dyn EffectSpec>) -> Self {
        Self { effects }
    }
}

impl IntervalSpec for EffectAutomaton {
    fn name(&self) -> &str {
        self.effects.name()
    }

    fn initial(&self) -> IState {
        IState { object: self.effects.initial_state(), active: Vec::new() }
    }

    fn points(&self, state: &IState, waiting: &[Call]) -> Result<Vec<Point>> {
        if !waiting.is_empty() {
            let mut p = consume_all(state, waiting);
            for a in p.next.active.iter_mut().filter(|a| waiting.iter().any(|w| w.op == a.op)) {
                a.locals = self.effects.initial_locals(&a.name, &a.arg)?;
            }
            return Ok(vec![p]);
        }
        let mut out = Vec::new();
        for (i, a) in state.active.iter().enumerate() {
            let steps = self.effects.step_count(&a.name, &a.arg)?;
            let Some((object, locals)) =
                self.effects.step(&a.name, &a.arg, a.progress, &state.object, &a.locals)?
            else {
                continue;
            };
            let mut next = IState { object, active: state.active.clone() };
            let action = Some(format!("{}.{}", a.op, a.progress));
            let mut responses = Vec::new();
            if a.progress + 1 == steps {
                responses.push((a.op, self.effects.finish(&a.name, &a.arg, &locals)?));
                next.active.remove(i);
            } else {
                next.active[i].progress += 1;
                next.active[i].locals = locals;
            }
            out.push(Point { consumed: Vec::new(), action, responses, next });
        }
        Ok(out)
    }
}

/// Automaton derived from a [`SetSpec`]: an admissible set of consumed calls
/// takes effect jointly and all its members respond at that point.
#[derive(Clone)]
pub struct SetAutomaton {
    sets: Arc<dyn SetSpec>,
}

impl SetAutomaton {
    pub fn new(sets: Arc<dyn SetSpec>) -> Self {
        Self { sets }
    }
}

impl IntervalSpec for SetAutomaton {
    fn name(&self) -> &str {
        self.sets.name()
    }

    fn initial(&self) -> IState {
        IState { object: self.sets.initial_state(), active: Vec::new() }
    }

    fn points(&self, state: &IState, waiting: &[Call]) -> Result<Vec<Point>> {
        if !waiting.is_empty() {
            return Ok(vec![consume_all(state, waiting)]);
        }
        let n = state.active.len();
        let mut out = Vec::new();
        for subset in super::subsets(n, self.sets.max_class_size()) {
            let members: Vec<&ActiveCall> = subset.iter().map(|&i| &state.active[i]).collect();
            let calls: Vec<(&str, &Value)> =
                members.iter().map(|a| (a.name.as_str(), &a.arg)).collect();
            let Some((object, rets)) = self.sets.apply_set(&state.object, &calls)? else {
                continue;
            };
            let active = (0..n)
                .filter(|i| !subset.contains(i))
                .map(|i| state.active[i].clone())
                .collect();
            let ids: Vec<String> = members.iter().map(|a| a.op.to_string()).collect();
            out.push(Point {
                consumed: Vec::new(),
                action: Some(format!("{{{}}}", ids.join(","))),
                responses: members.iter().map(|a| a.op).zip(rets).collect(),
                next: IState { object, active },
            });
        }
        Ok(out)
    }
}
