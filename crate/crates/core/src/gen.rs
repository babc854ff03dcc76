//! Seeded random histories and workloads for property suites.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::history::{build_history, events_from_records, ClientId, History, OpId, OpRecord};
use crate::sim::{ClientRequest, Workload};
use crate::specs::{EffectSpec, SequentialSpec};
use crate::value::{Locals, State, Value};

/// Operation names and whether they take an argument in `1..=3`.
pub fn op_menu(spec: &str) -> Result<&'static [(&'static str, bool)]> {
    Ok(match spec {
        "register" => &[("write", true), ("read", false)],
        "counter" => &[("inc", false), ("get", false)],
        "fifo-queue" => &[("enq", true), ("deq", false)],
        "lock-object" => &[("D", false), ("E", false)],
        "nested-aggregate" => &[("G", false), ("H", false), ("J", false)],
        "nested-composite" => &[("F", false), ("J", false)],
        other => return Err(Error::UnknownName(other.to_string())),
    })
}

fn pick_op<R: Rng>(rng: &mut R, menu: &[(&'static str, bool)]) -> (String, Value) {
    let (name, takes_arg) = *menu.choose(rng).expect("non-empty menu");
    let arg = if takes_arg { Value::Int(rng.gen_range(1..=3)) } else { Value::Nil };
    (name.to_string(), arg)
}

/// Shape of a generated history.
#[derive(Clone, Copy, Debug)]
pub struct HistoryShape {
    pub ops: usize,
    pub clients: usize,
    /// Probability of replacing one return with a wrong value.
    pub corrupt: f64,
}

struct Span {
    client: u64,
    name: String,
    arg: Value,
    inv: i64,
    resp: i64,
}

/// Sequential spans per client with random lengths and gaps.
fn spans<R: Rng>(rng: &mut R, shape: HistoryShape, menu: &[(&'static str, bool)]) -> Vec<Span> {
    let clients = shape.clients.max(1);
    let mut next_free = vec![0i64; clients];
    for t in next_free.iter_mut() {
        *t = rng.gen_range(0..3);
    }
    let mut out = Vec::with_capacity(shape.ops);
    for _ in 0..shape.ops {
        let c = rng.gen_range(0..clients);
        let inv = next_free[c] + rng.gen_range(0..3);
        let resp = inv + rng.gen_range(1..=5);
        next_free[c] = resp + 1;
        let (name, arg) = pick_op(rng, menu);
        out.push(Span { client: c as u64, name, arg, inv, resp });
    }
    out
}

fn records(spans: &[Span], object: &str, rets: Vec<Value>) -> Vec<OpRecord> {
    spans
        .iter()
        .zip(rets)
        .enumerate()
        .map(|(i, (s, r))| OpRecord {
            op_id: OpId(i as u64),
            client: ClientId(s.client),
            object: object.to_string(),
            op_name: s.name.clone(),
            arg: s.arg.clone(),
            ret: Some(r),
            invocation_time: s.inv,
            response_time: Some(s.resp),
        })
        .collect()
}

fn corrupt_one<R: Rng>(rng: &mut R, rets: &mut [Value], p: f64) {
    if !rets.is_empty() && rng.gen_bool(p) {
        let i = rng.gen_range(0..rets.len());
        rets[i] = match &rets[i] {
            Value::Int(v) => Value::Int(v + rng.gen_range(1..=2)),
            _ => Value::Int(rng.gen_range(0..=3)),
        };
    }
}

/// Random history whose returns come from replaying the sequential spec in
/// the order of points chosen inside the spans; with probability
/// `shape.corrupt` one return is then altered.
pub fn random_history<R: Rng>(
    rng: &mut R,
    spec: &dyn SequentialSpec,
    menu: &[(&'static str, bool)],
    object: &str,
    shape: HistoryShape,
) -> Result<History> {
    let spans = spans(rng, shape, menu);
    let mut points: Vec<(i64, usize)> =
        spans.iter().enumerate().map(|(i, s)| (rng.gen_range(2 * s.inv..=2 * s.resp), i)).collect();
    points.sort();
    let mut rets = vec![Value::Nil; spans.len()];
    let mut state = spec.initial_state();
    for (_, i) in points {
        let (next, r) = spec.apply(&state, &spans[i].name, &spans[i].arg)?;
        state = next;
        rets[i] = r;
    }
    corrupt_one(rng, &mut rets, shape.corrupt);
    build_history(events_from_records(records(&spans, object, rets)))
}

/// Random history whose returns come from placing every effect step at a
/// random point inside its span. Steps that are not enabled are retried
/// later; an operation still blocked at the end returns `0`.
pub fn random_effect_history<R: Rng>(
    rng: &mut R,
    spec: &dyn EffectSpec,
    menu: &[(&'static str, bool)],
    object: &str,
    shape: HistoryShape,
) -> Result<History> {
    let spans = spans(rng, shape, menu);
    let mut points: Vec<(i64, usize, usize)> = Vec::new();
    for (i, s) in spans.iter().enumerate() {
        let k = spec.step_count(&s.name, &s.arg)?;
        let mut ts: Vec<i64> = (0..k).map(|_| rng.gen_range(2 * s.inv..=2 * s.resp)).collect();
        ts.sort();
        points.extend(ts.into_iter().enumerate().map(|(j, t)| (t, i, j)));
    }
    points.sort();
    let mut locals: Vec<Locals> =
        spans.iter().map(|s| spec.initial_locals(&s.name, &s.arg)).collect::<Result<_>>()?;
    let mut state: State = spec.initial_state();
    let mut rets = vec![Value::Int(0); spans.len()];
    for (_, i, j) in points {
        let s = &spans[i];
        if let Some((next, l)) = spec.step(&s.name, &s.arg, j, &state, &locals[i])? {
            state = next;
            locals[i] = l;
            if j + 1 == spec.step_count(&s.name, &s.arg)? {
                rets[i] = spec.finish(&s.name, &s.arg, &locals[i])?;
            }
        }
    }
    corrupt_one(rng, &mut rets, shape.corrupt);
    build_history(events_from_records(records(&spans, object, rets)))
}

/// Random workload over `menu`; request ids are `0..requests`.
pub fn random_workload<R: Rng>(
    rng: &mut R,
    menu: &[(&'static str, bool)],
    requests: usize,
    clients: usize,
) -> Workload {
    let reqs = (0..requests)
        .map(|id| {
            let (name, arg) = pick_op(rng, menu);
            ClientRequest::new(id as u64, rng.gen_range(0..clients.max(1)) as u64, &name, arg)
                .at(rng.gen_range(0..6))
        })
        .collect();
    Workload::new(reqs)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::checkers::{check_linearizable, SearchBudget};
    use crate::specs::RegisterSpec;

    #[test]
    fn uncorrupted_histories_are_linearizable() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let shape = HistoryShape { ops: 6, clients: 3, corrupt: 0.0 };
        for _ in 0..50 {
            let h = random_history(&mut rng, &RegisterSpec, op_menu("register").unwrap(), "x", shape)
                .unwrap();
            assert!(check_linearizable(&h, &RegisterSpec, &SearchBudget::default()).unwrap().accepted);
        }
    }
}
