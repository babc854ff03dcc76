use std::collections::HashSet;

use crate::error::Result;
use crate::history::{History, OpId};
use crate::specs::EffectSpec;
use crate::value::{Locals, State};
use crate::verdict::{Explanation, Level, StepRef, Verdict, Witness};

use super::{precedence_masks, recorded, Meter, SearchBudget};

/// Decide multi-point linearizability: every effect step of every operation
/// is placed inside the operation's interval in one global order, and the
/// recorded return equals the value assembled after the last step.
pub fn check_mp_linearizable(
    h: &History,
    spec: &dyn EffectSpec,
    budget: &SearchBudget,
) -> Result<Verdict> {
    let Some(preds) = precedence_masks(h, budget)? else {
        return budget.exhausted(Level::Mp, 0);
    };
    let ops = h.operations();
    let mut counts = Vec::with_capacity(ops.len());
    let mut locals = Vec::with_capacity(ops.len());
    for o in ops {
        counts.push(spec.step_count(&o.op_name, &o.arg)?);
        locals.push(spec.initial_locals(&o.op_name, &o.arg)?);
    }
    let total = counts.iter().sum();
    let mut s = Search {
        h,
        spec,
        preds,
        counts,
        total,
        meter: Meter::new(budget),
        seen: HashSet::new(),
        path: Vec::new(),
        best: None,
        blocked: Vec::new(),
        out_of_budget: false,
    };
    let progress = vec![0; ops.len()];
    let found = s.dfs(0, progress, locals, spec.initial_state())?;
    let nodes = s.meter.nodes;
    if found {
        return Ok(Verdict::accept(Level::Mp, Witness::Steps(s.path), nodes));
    }
    if s.out_of_budget {
        return budget.exhausted(Level::Mp, nodes);
    }
    Ok(Verdict::reject(
        Level::Mp,
        Explanation::NoPlacement {
            longest_prefix: s.best.unwrap_or_default().iter().map(|r| r.to_string()).collect(),
            blocked: s.blocked,
        },
        nodes,
    ))
}

type Key = (Vec<usize>, Vec<Locals>, State);

struct Search<'a> {
    h: &'a History,
    spec: &'a dyn EffectSpec,
    preds: Vec<u128>,
    counts: Vec<usize>,
    total: usize,
    meter: Meter,
    seen: HashSet<Key>,
    path: Vec<StepRef>,
    best: Option<Vec<StepRef>>,
    blocked: Vec<OpId>,
    out_of_budget: bool,
}

impl Search<'_> {
    fn dfs(
        &mut self,
        done: u128,
        progress: Vec<usize>,
        locals: Vec<Locals>,
        state: State,
    ) -> Result<bool> {
        if self.path.len() == self.total {
            return Ok(true);
        }
        if !self.meter.tick() {
            self.out_of_budget = true;
            return Ok(false);
        }
        let key = (progress, locals, state);
        if self.seen.contains(&key) {
            return Ok(false);
        }
        self.seen.insert(key.clone());
        let (progress, locals, state) = key;
        let ops = self.h.operations();
        let candidates: Vec<usize> = (0..ops.len())
            .filter(|&i| done & (1 << i) == 0 && self.preds[i] & !done == 0)
            .collect();
        for &i in &candidates {
            let op = &ops[i];
            let k = progress[i];
            let Some((next_state, l)) =
                self.spec.step(&op.op_name, &op.arg, k, &state, &locals[i])?
            else {
                continue;
            };
            let mut next_done = done;
            let mut next_locals = locals.clone();
            if k + 1 == self.counts[i] {
                let ret = self.spec.finish(&op.op_name, &op.arg, &l)?;
                if !recorded(op).admits(&ret) {
                    continue;
                }
                next_done |= 1 << i;
                next_locals[i] = Locals::default();
            } else {
                next_locals[i] = l;
            }
            let mut next_progress = progress.clone();
            next_progress[i] += 1;
            self.path.push(StepRef { op: op.op_id, step: k });
            if self.dfs(next_done, next_progress, next_locals, next_state)? {
                return Ok(true);
            }
            self.path.pop();
            if self.out_of_budget {
                return Ok(false);
            }
        }
        if self.best.as_ref().map_or(true, |b| self.path.len() > b.len()) {
            self.best = Some(self.path.clone());
            self.blocked = candidates.iter().map(|&i| ops[i].op_id).collect();
        }
        Ok(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checkers::check_linearizable;
    use crate::history::HistoryBuilder;
    use crate::specs::lock_object_spec;
    use crate::value::Value;

    fn d_and_e(e_ret: i64) -> History {
        HistoryBuilder::new("lock_object")
            .op("D", Value::Nil, "ok", 0, 10)
            .op("E", Value::Nil, e_ret, 2, 6)
            .build()
            .unwrap()
    }

    #[test]
    fn read_between_effect_steps_separates_levels() {
        let (seq, eff) = lock_object_spec();
        let b = SearchBudget::default();
        let h = d_and_e(2);
        assert!(check_linearizable(&h, &seq, &b).unwrap().is_rejected());
        let v = check_mp_linearizable(&h, &eff, &b).unwrap();
        assert!(v.accepted);
        assert_eq!(
            v.witness,
            Some(Witness::Steps(vec![
                StepRef { op: OpId(0), step: 0 },
                StepRef { op: OpId(1), step: 0 },
                StepRef { op: OpId(0), step: 1 },
            ]))
        );
    }

    #[test]
    fn endpoint_values_are_accepted_everywhere() {
        let (seq, eff) = lock_object_spec();
        let b = SearchBudget::default();
        for e in [1, 4] {
            let h = d_and_e(e);
            assert!(check_linearizable(&h, &seq, &b).unwrap().accepted);
            assert!(check_mp_linearizable(&h, &eff, &b).unwrap().accepted);
        }
    }

    #[test]
    fn impossible_value_is_rejected() {
        let (_, eff) = lock_object_spec();
        let v = check_mp_linearizable(&d_and_e(7), &eff, &SearchBudget::default()).unwrap();
        assert!(v.is_rejected());
    }
}
