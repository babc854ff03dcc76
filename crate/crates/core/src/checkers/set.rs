use std::collections::HashSet;

use crate::error::Result;
use crate::history::{History, OpId};
use crate::specs::{subsets, SetSpec};
use crate::value::{State, Value};
use crate::verdict::{Explanation, Level, Verdict, Witness};

use super::{precedence_masks, recorded, Meter, SearchBudget};

/// Decide set-linearizability: the history is partitioned into ordered
/// classes of pairwise concurrent operations, each applied with
/// [`SetSpec::apply_set`].
pub fn check_set_linearizable(
    h: &History,
    spec: &dyn SetSpec,
    budget: &SearchBudget,
) -> Result<Verdict> {
    let Some(preds) = precedence_masks(h, budget)? else {
        return budget.exhausted(Level::Set, 0);
    };
    let mut s = Search {
        h,
        spec,
        preds,
        meter: Meter::new(budget),
        seen: HashSet::new(),
        path: Vec::new(),
        placed: 0,
        best: None,
        blocked: Vec::new(),
        out_of_budget: false,
    };
    let found = s.dfs(0, spec.initial_state())?;
    let nodes = s.meter.nodes;
    if found {
        return Ok(Verdict::accept(Level::Set, Witness::Sets(s.path), nodes));
    }
    if s.out_of_budget {
        return budget.exhausted(Level::Set, nodes);
    }
    let prefix = s
        .best
        .unwrap_or_default()
        .iter()
        .map(|set| {
            let ids: Vec<String> = set.iter().map(|id| id.to_string()).collect();
            format!("{{{}}}", ids.join(","))
        })
        .collect();
    Ok(Verdict::reject(
        Level::Set,
        Explanation::NoPlacement { longest_prefix: prefix, blocked: s.blocked },
        nodes,
    ))
}

struct Search<'a> {
    h: &'a History,
    spec: &'a dyn SetSpec,
    preds: Vec<u128>,
    meter: Meter,
    seen: HashSet<(u128, State)>,
    path: Vec<Vec<OpId>>,
    placed: usize,
    best: Option<Vec<Vec<OpId>>>,
    blocked: Vec<OpId>,
    out_of_budget: bool,
}

impl Search<'_> {
    fn dfs(&mut self, done: u128, state: State) -> Result<bool> {
        let ops = self.h.operations();
        if self.placed == ops.len() {
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
        for subset in subsets(candidates.len(), self.spec.max_class_size()) {
            let members: Vec<usize> = subset.iter().map(|&k| candidates[k]).collect();
            let max_inv = members.iter().map(|&i| ops[i].invocation_time).max().unwrap();
            let min_resp = members.iter().filter_map(|&i| ops[i].response_time).min().unwrap();
            if max_inv > min_resp {
                continue;
            }
            let calls: Vec<(&str, &Value)> =
                members.iter().map(|&i| (ops[i].op_name.as_str(), &ops[i].arg)).collect();
            let Some((next, rets)) = self.spec.apply_set(&state, &calls)? else {
                continue;
            };
            if !members.iter().zip(&rets).all(|(&i, r)| recorded(&ops[i]).admits(r)) {
                continue;
            }
            let mask = members.iter().fold(0u128, |m, &i| m | (1 << i));
            self.path.push(members.iter().map(|&i| ops[i].op_id).collect());
            self.placed += members.len();
            if self.dfs(done | mask, next)? {
                return Ok(true);
            }
            self.placed -= members.len();
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
    use crate::specs::ExchangerSpec;

    fn exchange(a: (i64, i64, i64, i64), b: (i64, i64, i64, i64)) -> History {
        HistoryBuilder::new("ex")
            .op("exchange", a.0, a.1, a.2, a.3)
            .op("exchange", b.0, b.1, b.2, b.3)
            .build()
            .unwrap()
    }

    #[test]
    fn concurrent_swap_is_set_linearizable_only() {
        let h = exchange((1, 2, 0, 5), (2, 1, 1, 6));
        let b = SearchBudget::default();
        assert!(check_linearizable(&h, &ExchangerSpec, &b).unwrap().is_rejected());
        let v = check_set_linearizable(&h, &ExchangerSpec, &b).unwrap();
        assert_eq!(v.witness, Some(Witness::Sets(vec![vec![OpId(0), OpId(1)]])));
    }

    #[test]
    fn sequential_swap_is_rejected() {
        let h = exchange((1, 2, 0, 1), (2, 1, 2, 3));
        let v = check_set_linearizable(&h, &ExchangerSpec, &SearchBudget::default()).unwrap();
        assert!(v.is_rejected());
    }
}
