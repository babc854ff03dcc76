use crate::error::{Error, Result};
use crate::history::History;
use crate::specs::SequentialSpec;
use crate::verdict::{Explanation, Level, Verdict, Witness};

use super::recorded;

/// Largest history the permutation oracle accepts.
pub const NAIVE_MAX_OPS: usize = 10;

/// Reference oracle: tries every permutation without pruning or memoization.
pub fn check_linearizable_naive(h: &History, spec: &dyn SequentialSpec) -> Result<Verdict> {
    h.require_checkable()?;
    let ops = h.operations();
    if ops.len() > NAIVE_MAX_OPS {
        return Err(Error::MalformedInput(format!(
            "naive oracle is limited to {NAIVE_MAX_OPS} operations"
        )));
    }
    let mut perm: Vec<usize> = (0..ops.len()).collect();
    let mut nodes = 0u64;
    loop {
        nodes += 1;
        if admissible(h, spec, &perm)? {
            let order = perm.iter().map(|&i| ops[i].op_id).collect();
            return Ok(Verdict::accept(Level::Lin, Witness::Order(order), nodes));
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(Verdict::reject(
        Level::Lin,
        Explanation::NoPlacement { longest_prefix: Vec::new(), blocked: Vec::new() },
        nodes,
    ))
}

fn admissible(h: &History, spec: &dyn SequentialSpec, perm: &[usize]) -> Result<bool> {
    let ops = h.operations();
    for (a, &i) in perm.iter().enumerate() {
        if perm[a + 1..].iter().any(|&j| ops[j].precedes(&ops[i])) {
            return Ok(false);
        }
    }
    let mut state = spec.initial_state();
    for &i in perm {
        let (next, ret) = spec.apply(&state, &ops[i].op_name, &ops[i].arg)?;
        if !recorded(&ops[i]).admits(&ret) {
            return Ok(false);
        }
        state = next;
    }
    Ok(true)
}

fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).unwrap();
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutations_are_exhaustive() {
        let mut v = vec![0, 1, 2, 3];
        let mut n = 1;
        while next_permutation(&mut v) {
            n += 1;
        }
        assert_eq!(n, 24);
    }
}
