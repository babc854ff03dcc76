use std::collections::HashSet;

use crate::error::Result;
use crate::history::{History, OpId};
use crate::specs::SequentialSpec;
use crate::value::State;
use crate::verdict::{Explanation, Level, Verdict, Witness};

use super::{precedence_masks, recorded, Meter, SearchBudget};

/// Decide linearizability of a complete single-object history.
pub fn check_linearizable(
    h: &History,
    spec: &dyn SequentialSpec,
    budget: &SearchBudget,
) -> Result<Verdict> {
    let Some(preds) = precedence_masks(h, budget)? else {
        return budget.exhausted(Level::Lin, 0);
    };
    let mut s = Search {
        h,
        spec,
        preds,
        meter: Meter::new(budget),
        seen: HashSet::new(),
        path: Vec::new(),
        best: Vec::new(),
        blocked: Vec::new(),
        out_of_budget: false,
    };
    let found = s.dfs(0, spec.initial_state())?;
    let nodes = s.meter.nodes;
    if found {
        let order = s.path.iter().map(|&i| h.operations()[i].op_id).collect();
        return Ok(Verdict::accept(Level::Lin, Witness::Order(order), nodes));
    }
    if s.out_of_budget {
        return budget.exhausted(Level::Lin, nodes);
    }
    Ok(Verdict::reject(
        Level::Lin,
        Explanation::NoPlacement {
            longest_prefix: s.best.iter().map(|&i| h.operations()[i].op_id.to_string()).collect(),
            blocked: s.blocked,
        },
        nodes,
    ))
}

struct Search<'a> {
    h: &'a History,
    spec: &'a dyn SequentialSpec,
    preds: Vec<u128>,
    meter: Meter,
    seen: HashSet<(u128, State)>,
    path: Vec<usize>,
    best: Vec<usize>,
    blocked: Vec<OpId>,
    out_of_budget: bool,
}

impl Search<'_> {
    fn dfs(&mut self, done: u128, state: State) -> Result<bool> {
        let ops = self.h.operations();
        if self.path.len() == ops.len() {
            return Ok(true);
        }
        if !self.meter.tick() {
            self.out_of_budget = true;
            return Ok(false);
        }
        if !self.seen.insert((done, state.clone())) {
            return Ok(false);
        }
        let candidates: Vec<usize> = (0..ops.len())
            .filter(|&i| done & (1 << i) == 0 && self.preds[i] & !done == 0)
            .collect();
        for &i in &candidates {
            let op = &ops[i];
            let (next, ret) = self.spec.apply(&state, &op.op_name, &op.arg)?;
            if !recorded(op).admits(&ret) {
                continue;
            }
            self.path.push(i);
            if self.dfs(done | (1 << i), next)? {
                return Ok(true);
            }
            self.path.pop();
            if self.out_of_budget {
                return Ok(false);
            }
        }
        if self.blocked.is_empty() || self.path.len() > self.best.len() {
            self.best = self.path.clone();
            self.blocked = candidates.iter().map(|&i| ops[i].op_id).collect();
        }
        Ok(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::HistoryBuilder;
    use crate::specs::RegisterSpec;
    use crate::value::Value;

    fn check(h: &History) -> Verdict {
        check_linearizable(h, &RegisterSpec, &SearchBudget::default()).unwrap()
    }

    #[test]
    fn stale_read_after_completed_write_is_rejected() {
        let h = HistoryBuilder::new("x")
            .op("write", 1, "ok", 0, 2)
            .op("read", Value::Nil, 1, 3, 4)
            .op("read", Value::Nil, 0, 5, 6)
            .build()
            .unwrap();
        let v = check(&h);
        assert!(v.is_rejected());
        match v.explanation.unwrap() {
            Explanation::NoPlacement { longest_prefix, blocked } => {
                assert_eq!(longest_prefix, vec!["#0", "#1"]);
                assert_eq!(blocked, vec![OpId(2)]);
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn concurrent_read_may_see_either_value() {
        for seen in [0, 1] {
            let h = HistoryBuilder::new("x")
                .op("write", 1, "ok", 0, 4)
                .op("read", Value::Nil, seen, 1, 3)
                .build()
                .unwrap();
            let v = check(&h);
            assert!(v.accepted, "{v}");
        }
    }

    #[test]
    fn witness_respects_real_time() {
        let h = HistoryBuilder::new("x")
            .op("read", Value::Nil, 1, 0, 5)
            .op("write", 1, "ok", 1, 2)
            .build()
            .unwrap();
        let v = check(&h);
        assert_eq!(v.witness, Some(Witness::Order(vec![OpId(1), OpId(0)])));
    }

    #[test]
    fn budget_exhaustion_is_unknown() {
        let h = HistoryBuilder::new("x")
            .op("write", 1, "ok", 0, 9)
            .op("write", 2, "ok", 0, 9)
            .op("read", Value::Nil, 3, 0, 9)
            .build()
            .unwrap();
        let b = SearchBudget::with_nodes(2);
        let v = check_linearizable(&h, &RegisterSpec, &b).unwrap();
        assert!(v.is_unknown());
    }
}
