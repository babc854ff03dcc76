use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::sim::SimOutput;

/// Processing-order obligations on a replicated run, evaluated on every
/// correct replica: requests of one client are processed in issue order
/// (first result), and every recorded causal edge `r -> r'` has `r`
/// processed before `r'` (second result).
pub fn check_schneider_properties(out: &SimOutput) -> Result<(bool, bool)> {
    let known: BTreeMap<u64, ()> =
        out.issue_order.values().flatten().map(|id| (*id, ())).collect();
    for (a, b) in &out.causal_edges {
        if !known.contains_key(a) && !known.contains_key(b) {
            return Err(Error::MalformedInput(format!("causal edge {a} -> {b} names no issued request")));
        }
    }
    let mut o1 = true;
    let mut o2 = true;
    for r in out.correct_replicas() {
        let order = &out.delivery_order[r];
        let pos: BTreeMap<u64, usize> = order.iter().enumerate().map(|(i, d)| (d.id, i)).collect();
        for (client, issued) in &out.issue_order {
            let processed: Vec<u64> =
                order.iter().filter(|d| d.client == *client).map(|d| d.id).collect();
            if !issued.starts_with(&processed) {
                o1 = false;
            }
        }
        for (a, b) in &out.causal_edges {
            if let Some(pb) = pos.get(b) {
                if pos.get(a).map_or(true, |pa| pa > pb) {
                    o2 = false;
                }
            }
        }
    }
    Ok((o1, o2))
}
