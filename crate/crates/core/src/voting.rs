//! Client-side voting over replica responses and assembly of the
//! client-visible history.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::{build_history, events_from_records, ClientId, History, OpId, OpRecord};
use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arrival {
    pub replica: usize,
    pub value: Value,
    pub time: i64,
}

/// Responses to one request in arrival order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseSet {
    pub request: OpId,
    responses: Vec<Arrival>,
}

impl ResponseSet {
    pub fn new(request: OpId) -> Self {
        Self { request, responses: Vec::new() }
    }

    pub fn push(&mut self, replica: usize, value: Value, time: i64) -> Result<()> {
        if self.responses.iter().any(|a| a.replica == replica) {
            return Err(Error::DuplicateReplicaResponse { request: self.request, replica });
        }
        self.responses.push(Arrival { replica, value, time });
        Ok(())
    }

    pub fn responses(&self) -> &[Arrival] {
        &self.responses
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoteOutcome {
    /// `arrivals` responses were consumed to reach the decision.
    Decided { value: Value, time: i64, arrivals: usize },
    Undecided,
}

impl VoteOutcome {
    pub fn value(&self) -> Option<&Value> {
        match self {
            VoteOutcome::Decided { value, .. } => Some(value),
            VoteOutcome::Undecided => None,
        }
    }
}

/// First value, in arrival order, reported identically by `f + 1` replicas.
pub fn vote(rs: &ResponseSet, f: usize) -> VoteOutcome {
    let key = |v: &Value| serde_json::to_string(v).expect("values serialize");
    let mut counts: Vec<(String, usize)> = Vec::new();
    for (i, a) in rs.responses.iter().enumerate() {
        let k = key(&a.value);
        let n = match counts.iter_mut().find(|(v, _)| *v == k) {
            Some((_, n)) => {
                *n += 1;
                *n
            }
            None => {
                counts.push((k, 1));
                1
            }
        };
        if n > f {
            return VoteOutcome::Decided { value: a.value.clone(), time: a.time, arrivals: i + 1 };
        }
    }
    VoteOutcome::Undecided
}

/// One request as seen by its client.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub request: OpId,
    pub client: ClientId,
    pub object: String,
    pub op_name: String,
    pub arg: Value,
    pub issued_at: i64,
    /// Decided value and decision time; `None` leaves the operation pending.
    pub decided: Option<(Value, i64)>,
}

/// Outer history: each request spans from issue to vote completion.
pub fn assemble_outer_history(completions: &[Completion]) -> Result<History> {
    let mut records = Vec::with_capacity(completions.len());
    for c in completions {
        if let Some((_, t)) = &c.decided {
            if *t <= c.issued_at {
                return Err(Error::MalformedInput(format!(
                    "request {} decided at {t}, not after its issue at {}",
                    c.request, c.issued_at
                )));
            }
        }
        records.push(OpRecord {
            op_id: c.request,
            client: c.client,
            object: c.object.clone(),
            op_name: c.op_name.clone(),
            arg: c.arg.clone(),
            ret: c.decided.as_ref().map(|(v, _)| v.clone()),
            invocation_time: c.issued_at,
            response_time: c.decided.as_ref().map(|(_, t)| *t),
        });
    }
    build_history(events_from_records(records))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(values: &[i64]) -> ResponseSet {
        let mut rs = ResponseSet::new(OpId(0));
        for (i, v) in values.iter().enumerate() {
            rs.push(i, Value::Int(*v), i as i64 + 1).unwrap();
        }
        rs
    }

    #[test]
    fn f_plus_one_matching() {
        assert_eq!(vote(&set(&[5, 5]), 1).value(), Some(&Value::Int(5)));
        assert_eq!(
            vote(&set(&[5, 6, 6]), 1),
            VoteOutcome::Decided { value: Value::Int(6), time: 3, arrivals: 3 }
        );
        assert_eq!(vote(&set(&[5]), 0).value(), Some(&Value::Int(5)));
        assert_eq!(vote(&set(&[5, 6]), 1), VoteOutcome::Undecided);
    }

    #[test]
    fn duplicate_replica_is_rejected() {
        let mut rs = set(&[1]);
        assert!(matches!(rs.push(0, Value::Int(1), 9), Err(Error::DuplicateReplicaResponse { .. })));
    }

    #[test]
    fn outer_spans() {
        let c = |decided| Completion {
            request: OpId(0),
            client: ClientId(0),
            object: "x".into(),
            op_name: "read".into(),
            arg: Value::Nil,
            issued_at: 1,
            decided,
        };
        let h = assemble_outer_history(&[c(Some((Value::Int(0), 9)))]).unwrap();
        let op = &h.operations()[0];
        assert_eq!((op.invocation_time, op.response_time), (1, Some(9)));
        let h = assemble_outer_history(&[c(None)]).unwrap();
        assert!(!h.is_complete());
        assert!(assemble_outer_history(&[c(Some((Value::Int(0), 1)))]).is_err());
    }
}
