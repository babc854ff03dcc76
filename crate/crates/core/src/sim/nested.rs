//! A composite operation implemented by nested calls to an aggregated
//! object, with an independent client accessing the aggregated object.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::{build_history, events_from_records, ClientId, History, OpId, OpRecord};
use crate::specs::{AggregateSpec, SequentialSpec};
use crate::value::Value;

use super::program::{compile_object, eval_return, Instr};

/// `F` adds two to the composite by incrementing the aggregated object twice.
pub const COMPOSITE_OBJECT: &str = "object composite {
  op F {
    call(aggregate, G, 0, x);
    call(aggregate, H, 0, y);
    return(ok);
  }
}
";

/// Where the independent read `J` lands relative to `F`'s nested calls.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JPlacement {
    BeforeG,
    BetweenGAndH,
    AfterH,
}

impl JPlacement {
    pub fn from_seed(seed: u64) -> Self {
        match seed % 3 {
            0 => JPlacement::BeforeG,
            1 => JPlacement::BetweenGAndH,
            _ => JPlacement::AfterH,
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NestedOutput {
    pub placement: JPlacement,
    /// `G`, `H` and `J` at the aggregated object.
    pub aggregate: History,
    /// `F` and `J` as seen by clients of the composite.
    pub composite: History,
}

/// Run `F` (client 0) and `J` (client 1); the seed picks where the
/// aggregated object serves `J`.
pub fn run_nested_scenario(seed: u64) -> Result<NestedOutput> {
    let placement = JPlacement::from_seed(seed);
    let object = compile_object(COMPOSITE_OBJECT)?;
    let f = object.op("F")?;
    let agg = AggregateSpec;
    let mut state = agg.initial_state();
    let mut locals = f.initial_locals(&Value::Nil);
    let mut inner: Vec<OpRecord> = Vec::new();
    let mut outer: Vec<OpRecord> = Vec::new();
    let mut now = 0i64;
    let mut calls = 0usize;
    let rec = |id: u64, client: u64, object: &str, op: &str, ret: Value, inv: i64, resp: i64| OpRecord {
        op_id: OpId(id),
        client: ClientId(client),
        object: object.into(),
        op_name: op.into(),
        arg: Value::Nil,
        ret: Some(ret),
        invocation_time: inv,
        response_time: Some(resp),
    };
    let serve_j = |state: &mut crate::value::State, now: &mut i64, inner: &mut Vec<OpRecord>, outer: &mut Vec<OpRecord>| -> Result<()> {
        let (_, v) = agg.apply(state, "J", &Value::Nil)?;
        inner.push(rec(1, 1, "aggregate", "J", v.clone(), *now + 1, *now + 2));
        outer.push(rec(1, 1, "composite", "J", v, *now + 1, *now + 2));
        *now += 2;
        Ok(())
    };
    let mut ret = None;
    for ins in &f.instructions {
        match ins {
            Instr::Call { object, op, into, .. } => {
                if object != "aggregate" {
                    return Err(Error::UnknownName(object.clone()));
                }
                if calls == placement.slot() {
                    serve_j(&mut state, &mut now, &mut inner, &mut outer)?;
                }
                let (next, v) = agg.apply(&state, op, &Value::Nil)?;
                state = next;
                inner.push(rec(2 + calls as u64, 0, "aggregate", op, v.clone(), now + 1, now + 2));
                locals[*into] = v.int_or_zero();
                now += 2;
                calls += 1;
            }
            Instr::Return(r) => {
                if calls == placement.slot() {
                    serve_j(&mut state, &mut now, &mut inner, &mut outer)?;
                }
                ret = Some(eval_return(r, &locals));
                break;
            }
            other => {
                return Err(Error::UnsupportedProgram(format!("composite runs only calls, got {other:?}")))
            }
        }
    }
    let ret = ret.ok_or_else(|| Error::UnsupportedProgram("F never returns".into()))?;
    outer.push(rec(0, 0, "composite", "F", ret, 0, now + 1));
    Ok(NestedOutput {
        placement,
        aggregate: build_history(events_from_records(inner))?,
        composite: build_history(events_from_records(outer))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j_between_calls_reads_one() {
        let out = run_nested_scenario(1).unwrap();
        assert_eq!(out.placement, JPlacement::BetweenGAndH);
        assert_eq!(out.composite.op(OpId(1)).unwrap().ret, Some(Value::Int(1)));
        let f = out.composite.op(OpId(0)).unwrap();
        let j = out.composite.op(OpId(1)).unwrap();
        assert!(f.overlaps(j));
    }

    #[test]
    fn j_outside_reads_endpoint_values() {
        assert_eq!(run_nested_scenario(0).unwrap().composite.op(OpId(1)).unwrap().ret, Some(Value::Int(0)));
        assert_eq!(run_nested_scenario(2).unwrap().composite.op(OpId(1)).unwrap().ret, Some(Value::Int(2)));
    }
}
