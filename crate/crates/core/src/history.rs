//! Events, histories, real-time precedence, per-object projection and the
//! timeline-extension transform.
//!
//! Time is a logical integer tick. Two events at the same tick are concurrent:
//! [`History::real_time_precedes`] only holds for a strict `<` between a
//! response and a later invocation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::value::Value;

macro_rules! id_newtype {
    ($(#[$m:meta])* $name:ident, $prefix:literal) => {
        $(#[$m])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u64);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_newtype!(
    /// Unique identifier of one event record.
    EventId, "e"
);
id_newtype!(
    /// Identifier of one operation instance (a matched invocation/response pair).
    OpId, "#"
);
id_newtype!(
    /// Identifier of a client process.
    ClientId, "c"
);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Invocation,
    Response,
}

/// One line of a trace: an invocation or a response.
///
/// `payload` holds the argument on invocations and the return value on
/// responses.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EventRecord {
    pub event_id: EventId,
    pub kind: EventKind,
    pub op_id: OpId,
    pub client: ClientId,
    pub object: String,
    pub op_name: String,
    pub payload: Value,
    pub time: i64,
}

/// Matched view of one operation inside a [`History`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Operation {
    pub op_id: OpId,
    pub client: ClientId,
    pub object: String,
    pub op_name: String,
    pub arg: Value,
    pub ret: Option<Value>,
    pub invocation_time: i64,
    pub response_time: Option<i64>,
    pub invocation_event: EventId,
    pub response_event: Option<EventId>,
}

impl Operation {
    pub fn is_complete(&self) -> bool {
        self.response_time.is_some()
    }

    pub fn span(&self) -> OperationSpan {
        OperationSpan {
            op_id: self.op_id,
            invocation_time: self.invocation_time,
            response_time: self.response_time,
        }
    }

    /// `self` responded strictly before `other` was invoked.
    pub fn precedes(&self, other: &Operation) -> bool {
        matches!(self.response_time, Some(r) if r < other.invocation_time)
    }

    /// Spans intersect as closed intervals (pending spans are open-ended).
    pub fn overlaps(&self, other: &Operation) -> bool {
        !self.precedes(other) && !other.precedes(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationSpan {
    pub op_id: OpId,
    pub invocation_time: i64,
    pub response_time: Option<i64>,
}

/// A validated, time-sorted sequence of events.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<EventRecord>", into = "Vec<EventRecord>")]
pub struct History {
    events: Vec<EventRecord>,
    ops: Vec<Operation>,
    index: HashMap<OpId, usize>,
}

impl TryFrom<Vec<EventRecord>> for History {
    type Error = Error;

    fn try_from(events: Vec<EventRecord>) -> Result<Self> {
        build_history(events)
    }
}

impl From<History> for Vec<EventRecord> {
    fn from(h: History) -> Self {
        h.events
    }
}

/// Validate and sort raw events into a [`History`].
pub fn build_history(mut events: Vec<EventRecord>) -> Result<History> {
    events.sort_by_key(|e| (e.time, e.event_id));

    let mut seen_events = BTreeSet::new();
    let mut invocations: HashMap<OpId, usize> = HashMap::new();
    for (i, e) in events.iter().enumerate() {
        if !seen_events.insert(e.event_id) {
            return Err(malformed(e, "duplicate event_id"));
        }
        if e.kind == EventKind::Invocation && invocations.insert(e.op_id, i).is_some() {
            return Err(malformed(e, format!("duplicate invocation of op {}", e.op_id)));
        }
    }

    let mut ops: Vec<Operation> = Vec::new();
    let mut index = HashMap::new();
    let mut pending_by_client: HashMap<ClientId, OpId> = HashMap::new();
    for e in &events {
        match e.kind {
            EventKind::Invocation => {
                if let Some(other) = pending_by_client.get(&e.client) {
                    return Err(malformed(
                        e,
                        format!("client {} invokes while op {other} is pending", e.client),
                    ));
                }
                pending_by_client.insert(e.client, e.op_id);
                index.insert(e.op_id, ops.len());
                ops.push(Operation {
                    op_id: e.op_id,
                    client: e.client,
                    object: e.object.clone(),
                    op_name: e.op_name.clone(),
                    arg: e.payload.clone(),
                    ret: None,
                    invocation_time: e.time,
                    response_time: None,
                    invocation_event: e.event_id,
                    response_event: None,
                });
            }
            EventKind::Response => {
                let Some(&slot) = index.get(&e.op_id) else {
                    let reason = if invocations.contains_key(&e.op_id) {
                        "response before invocation"
                    } else {
                        "orphan response"
                    };
                    return Err(malformed(e, reason));
                };
                let op = &mut ops[slot];
                if op.response_event.is_some() {
                    return Err(malformed(e, format!("duplicate response for op {}", e.op_id)));
                }
                if op.client != e.client || op.object != e.object || op.op_name != e.op_name {
                    return Err(malformed(e, "response does not match its invocation"));
                }
                if e.time <= op.invocation_time {
                    return Err(malformed(e, "response not after invocation"));
                }
                op.ret = Some(e.payload.clone());
                op.response_time = Some(e.time);
                op.response_event = Some(e.event_id);
                pending_by_client.remove(&e.client);
            }
        }
    }

    ops.sort_by_key(|o| (o.invocation_time, o.op_id));
    let index = ops.iter().enumerate().map(|(i, o)| (o.op_id, i)).collect();
    Ok(History { events, ops, index })
}

fn malformed(e: &EventRecord, reason: impl Into<String>) -> Error {
    Error::MalformedHistory { event_id: e.event_id, reason: reason.into() }
}

/// Shift applied by [`History::extend_timelines`] to one operation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extension {
    /// Ticks the invocation moves earlier.
    pub earlier: i64,
    /// Ticks the response moves later.
    pub later: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PendingPolicy {
    DropPending,
    CloseAtHorizon,
}

impl History {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn events(&self) -> &[EventRecord] {
        &self.events
    }

    pub fn into_events(self) -> Vec<EventRecord> {
        self.events
    }

    /// Operations ordered by `(invocation_time, op_id)`.
    pub fn operations(&self) -> &[Operation] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn op(&self, id: OpId) -> Result<&Operation> {
        self.index.get(&id).map(|&i| &self.ops[i]).ok_or(Error::UnknownOp(id))
    }

    pub fn spans(&self) -> Vec<OperationSpan> {
        self.ops.iter().map(Operation::span).collect()
    }

    pub fn pending(&self) -> BTreeSet<OpId> {
        self.ops.iter().filter(|o| !o.is_complete()).map(|o| o.op_id).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.ops.iter().all(Operation::is_complete)
    }

    pub fn objects(&self) -> BTreeSet<String> {
        self.ops.iter().map(|o| o.object.clone()).collect()
    }

    pub fn max_time(&self) -> Option<i64> {
        self.events.last().map(|e| e.time)
    }

    /// `a` responded strictly before `b` was invoked. Both must be complete.
    pub fn real_time_precedes(&self, a: OpId, b: OpId) -> Result<bool> {
        let (oa, ob) = (self.op(a)?, self.op(b)?);
        if !oa.is_complete() || !ob.is_complete() {
            return Err(Error::MalformedInput(format!("{a} and {b} must both be complete")));
        }
        Ok(oa.precedes(ob))
    }

    /// Sub-history of one object; unknown objects yield the empty history.
    pub fn project_object(&self, object: &str) -> History {
        let events = self.events.iter().filter(|e| e.object == object).cloned().collect();
        build_history(events).expect("projection of a well-formed history is well-formed")
    }

    /// Single-object view of a multi-object history: every event moves to
    /// `object` and its operation name becomes `original_object.op`.
    pub fn fuse_objects(&self, object: &str) -> History {
        let events = self
            .events
            .iter()
            .map(|e| EventRecord {
                object: object.to_string(),
                op_name: format!("{}.{}", e.object, e.op_name),
                ..e.clone()
            })
            .collect();
        build_history(events).expect("renaming keeps the history well-formed")
    }

    /// Move every invocation earlier and every response later by the given
    /// per-operation shifts. Operations missing from `shifts` are unchanged.
    pub fn extend_timelines(&self, shifts: &BTreeMap<OpId, Extension>) -> Result<History> {
        for (&id, s) in shifts {
            let op = self.op(id)?;
            if s.earlier < 0 || s.later < 0 {
                return Err(Error::MalformedInput(format!("negative shift for {id}")));
            }
            if op.invocation_time - s.earlier < 0 {
                return Err(Error::MalformedInput(format!(
                    "shift moves invocation of {id} before time 0"
                )));
            }
        }
        let shift = |id: OpId| shifts.get(&id).copied().unwrap_or_default();

        let mut by_client: BTreeMap<ClientId, Vec<&Operation>> = BTreeMap::new();
        for op in &self.ops {
            by_client.entry(op.client).or_default().push(op);
        }
        for ops in by_client.values() {
            for pair in ops.windows(2) {
                let (a, b) = (pair[0], pair[1]);
                let (Some(resp), Some(resp_event)) = (a.response_time, a.response_event) else {
                    continue;
                };
                let resp_key = (resp + shift(a.op_id).later, resp_event);
                let inv_key = (b.invocation_time - shift(b.op_id).earlier, b.invocation_event);
                if resp_key >= inv_key {
                    return Err(Error::ClientOverlapViolation { earlier: a.op_id, later: b.op_id });
                }
            }
        }

        let events = self
            .events
            .iter()
            .map(|e| {
                let s = shift(e.op_id);
                let time = match e.kind {
                    EventKind::Invocation => e.time - s.earlier,
                    EventKind::Response => e.time + s.later,
                };
                EventRecord { time, ..e.clone() }
            })
            .collect();
        build_history(events)
    }

    /// Turn the history into a complete one.
    ///
    /// `CloseAtHorizon` gives each pending operation a response at
    /// `max_time + 1` carrying [`Value::unknown`].
    pub fn complete(&self, policy: PendingPolicy) -> History {
        let pending = self.pending();
        if pending.is_empty() {
            return self.clone();
        }
        let mut events: Vec<EventRecord> = match policy {
            PendingPolicy::DropPending => {
                self.events.iter().filter(|e| !pending.contains(&e.op_id)).cloned().collect()
            }
            PendingPolicy::CloseAtHorizon => {
                let horizon = self.max_time().unwrap_or(0) + 1;
                let mut next_id =
                    self.events.iter().map(|e| e.event_id.0).max().map_or(0, |m| m + 1);
                let mut events = self.events.clone();
                for op in self.ops.iter().filter(|o| !o.is_complete()) {
                    events.push(EventRecord {
                        event_id: EventId(next_id),
                        kind: EventKind::Response,
                        op_id: op.op_id,
                        client: op.client,
                        object: op.object.clone(),
                        op_name: op.op_name.clone(),
                        payload: Value::unknown(),
                        time: horizon,
                    });
                    next_id += 1;
                }
                events
            }
        };
        events.sort_by_key(|e| (e.time, e.event_id));
        build_history(events).expect("completing a well-formed history keeps it well-formed")
    }

    /// All operations target one object and none is pending.
    pub fn require_checkable(&self) -> Result<()> {
        if !self.is_complete() {
            return Err(Error::MalformedInput("history has pending operations".into()));
        }
        if self.objects().len() > 1 {
            return Err(Error::MalformedInput(format!(
                "history spans several objects: {:?}",
                self.objects()
            )));
        }
        Ok(())
    }
}

/// Free-function form of [`History::complete`].
pub fn complete_history(h: &History, policy: PendingPolicy) -> History {
    h.complete(policy)
}

/// One operation given to [`HistoryBuilder`].
#[derive(Clone, Debug)]
pub struct OpRecord {
    pub op_id: OpId,
    pub client: ClientId,
    pub object: String,
    pub op_name: String,
    pub arg: Value,
    pub ret: Option<Value>,
    pub invocation_time: i64,
    pub response_time: Option<i64>,
}

/// Convenience builder: collects whole operations and assigns event ids so
/// that at equal ticks responses come before invocations.
#[derive(Clone, Debug, Default)]
pub struct HistoryBuilder {
    records: Vec<OpRecord>,
    object: String,
}

impl HistoryBuilder {
    pub fn new(object: impl Into<String>) -> Self {
        Self { records: Vec::new(), object: object.into() }
    }

    /// Complete operation; op id is the insertion index, client is the op id.
    pub fn op(
        mut self,
        name: &str,
        arg: impl Into<Value>,
        ret: impl Into<Value>,
        inv: i64,
        resp: i64,
    ) -> Self {
        let id = self.records.len() as u64;
        self.records.push(OpRecord {
            op_id: OpId(id),
            client: ClientId(id),
            object: self.object.clone(),
            op_name: name.into(),
            arg: arg.into(),
            ret: Some(ret.into()),
            invocation_time: inv,
            response_time: Some(resp),
        });
        self
    }

    pub fn record(mut self, rec: OpRecord) -> Self {
        self.records.push(rec);
        self
    }

    pub fn build(self) -> Result<History> {
        build_history(events_from_records(self.records))
    }
}

/// Expand whole operations into events with deterministic event ids.
pub fn events_from_records(records: impl IntoIterator<Item = OpRecord>) -> Vec<EventRecord> {
    let mut raw: Vec<EventRecord> = Vec::new();
    for r in records {
        raw.push(EventRecord {
            event_id: EventId(0),
            kind: EventKind::Invocation,
            op_id: r.op_id,
            client: r.client,
            object: r.object.clone(),
            op_name: r.op_name.clone(),
            payload: r.arg,
            time: r.invocation_time,
        });
        if let Some(t) = r.response_time {
            raw.push(EventRecord {
                event_id: EventId(0),
                kind: EventKind::Response,
                op_id: r.op_id,
                client: r.client,
                object: r.object,
                op_name: r.op_name,
                payload: r.ret.unwrap_or_default(),
                time: t,
            });
        }
    }
    let rank = |k: EventKind| match k {
        EventKind::Response => 0,
        EventKind::Invocation => 1,
    };
    raw.sort_by_key(|e| (e.time, rank(e.kind), e.op_id));
    for (i, e) in raw.iter_mut().enumerate() {
        e.event_id = EventId(i as u64);
    }
    raw
}

impl From<i32> for Value {
    fn from(v: i32) -> Self {
        Value::Int(v as i64)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Sym(s.to_string())
    }
}

impl From<()> for Value {
    fn from(_: ()) -> Self {
        Value::Nil
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(id: u64, kind: EventKind, op: u64, time: i64) -> EventRecord {
        EventRecord {
            event_id: EventId(id),
            kind,
            op_id: OpId(op),
            client: ClientId(op),
            object: "x".into(),
            op_name: "op".into(),
            payload: Value::Nil,
            time,
        }
    }

    fn fig1a() -> History {
        HistoryBuilder::new("x")
            .op("a", (), (), 1, 4)
            .op("b", (), (), 2, 6)
            .op("c", (), (), 7, 9)
            .build()
            .unwrap()
    }

    #[test]
    fn empty_events_build_empty_history() {
        let h = build_history(vec![]).unwrap();
        assert!(h.is_empty());
        assert!(h.events().is_empty());
    }

    #[test]
    fn sequential_two_ops() {
        use EventKind::*;
        let h = build_history(vec![
            ev(0, Invocation, 0, 1),
            ev(1, Response, 0, 3),
            ev(2, Invocation, 2, 5),
            ev(3, Response, 2, 7),
        ])
        .unwrap();
        let spans = h.spans();
        assert_eq!(spans.len(), 2);
        assert_eq!((spans[0].invocation_time, spans[0].response_time), (1, Some(3)));
        assert_eq!((spans[1].invocation_time, spans[1].response_time), (5, Some(7)));
    }

    #[test]
    fn inverted_span_is_malformed() {
        use EventKind::*;
        let err = build_history(vec![ev(0, Invocation, 0, 1), ev(1, Response, 0, 0)]);
        assert!(matches!(err, Err(Error::MalformedHistory { event_id: EventId(1), .. })));
    }

    #[test]
    fn malformed_cases() {
        use EventKind::*;
        let orphan = build_history(vec![ev(0, Response, 9, 1)]);
        assert!(matches!(orphan, Err(Error::MalformedHistory { .. })));
        let dup = build_history(vec![ev(0, Invocation, 0, 1), ev(1, Invocation, 0, 2)]);
        assert!(matches!(dup, Err(Error::MalformedHistory { .. })));
        let mut a = ev(0, Invocation, 0, 1);
        let mut b = ev(1, Invocation, 1, 2);
        a.client = ClientId(7);
        b.client = ClientId(7);
        let concurrent = build_history(vec![a, b]);
        assert!(matches!(concurrent, Err(Error::MalformedHistory { event_id: EventId(1), .. })));
        let equal = build_history(vec![ev(0, Invocation, 0, 1), ev(1, Response, 0, 1)]);
        assert!(equal.is_err());
    }

    #[test]
    fn precedence_on_fig1a_shape() {
        let h = fig1a();
        assert!(h.real_time_precedes(OpId(0), OpId(2)).unwrap());
        assert!(h.real_time_precedes(OpId(1), OpId(2)).unwrap());
        assert!(!h.real_time_precedes(OpId(0), OpId(1)).unwrap());
        assert!(!h.real_time_precedes(OpId(1), OpId(0)).unwrap());
        assert!(!h.real_time_precedes(OpId(0), OpId(0)).unwrap());
        assert!(matches!(h.real_time_precedes(OpId(0), OpId(42)), Err(Error::UnknownOp(_))));
    }

    #[test]
    fn equal_ticks_are_concurrent() {
        let h = HistoryBuilder::new("x").op("a", (), (), 1, 3).op("b", (), (), 3, 5).build().unwrap();
        assert!(!h.real_time_precedes(OpId(0), OpId(1)).unwrap());
    }

    #[test]
    fn projection() {
        let h = build_history(events_from_records(vec![
            OpRecord {
                op_id: OpId(0),
                client: ClientId(0),
                object: "x".into(),
                op_name: "w".into(),
                arg: 1.into(),
                ret: Some(Value::ok()),
                invocation_time: 0,
                response_time: Some(2),
            },
            OpRecord {
                op_id: OpId(1),
                client: ClientId(1),
                object: "y".into(),
                op_name: "w".into(),
                arg: 2.into(),
                ret: Some(Value::ok()),
                invocation_time: 1,
                response_time: Some(3),
            },
        ]))
        .unwrap();
        let px = h.project_object("x");
        assert_eq!(px.len(), 1);
        assert!(px.events().iter().all(|e| e.object == "x"));
        assert!(h.project_object("z").is_empty());
        assert!(History::empty().project_object("x").is_empty());
    }

    #[test]
    fn zero_extension_is_identity() {
        let h = fig1a();
        assert_eq!(h.extend_timelines(&BTreeMap::new()).unwrap(), h);
        let zeros = h.operations().iter().map(|o| (o.op_id, Extension::default())).collect();
        assert_eq!(h.extend_timelines(&zeros).unwrap(), h);
    }

    #[test]
    fn fig8_extension_creates_overlap() {
        let h = HistoryBuilder::new("x")
            .op("a", (), (), 2, 4)
            .op("b", (), (), 3, 7)
            .op("c", (), (), 8, 10)
            .build()
            .unwrap();
        assert!(h.real_time_precedes(OpId(1), OpId(2)).unwrap());
        let d = [(0, 1, 1), (1, 1, 1), (2, 1, 1)]
            .into_iter()
            .map(|(id, e, l)| (OpId(id), Extension { earlier: e, later: l }))
            .collect();
        let x = h.extend_timelines(&d).unwrap();
        let spans: Vec<_> =
            x.spans().iter().map(|s| (s.invocation_time, s.response_time.unwrap())).collect();
        assert_eq!(spans, vec![(1, 5), (2, 8), (7, 11)]);
        assert!(!x.real_time_precedes(OpId(1), OpId(2)).unwrap());
    }

    #[test]
    fn extension_cannot_overlap_one_client() {
        let h = build_history(events_from_records(vec![
            OpRecord {
                op_id: OpId(0),
                client: ClientId(0),
                object: "x".into(),
                op_name: "a".into(),
                arg: Value::Nil,
                ret: Some(Value::Nil),
                invocation_time: 1,
                response_time: Some(3),
            },
            OpRecord {
                op_id: OpId(1),
                client: ClientId(0),
                object: "x".into(),
                op_name: "a".into(),
                arg: Value::Nil,
                ret: Some(Value::Nil),
                invocation_time: 5,
                response_time: Some(6),
            },
        ]))
        .unwrap();
        let d = BTreeMap::from([(OpId(0), Extension { earlier: 0, later: 3 })]);
        assert!(matches!(
            h.extend_timelines(&d),
            Err(Error::ClientOverlapViolation { earlier: OpId(0), later: OpId(1) })
        ));
    }

    #[test]
    fn complete_policies() {
        use EventKind::*;
        let h = build_history(vec![ev(0, Invocation, 0, 1), ev(1, Response, 0, 3), ev(2, Invocation, 1, 9)])
            .unwrap();
        assert_eq!(h.pending(), BTreeSet::from([OpId(1)]));
        let dropped = h.complete(PendingPolicy::DropPending);
        assert_eq!(dropped.len(), 1);
        let closed = h.complete(PendingPolicy::CloseAtHorizon);
        let op = closed.op(OpId(1)).unwrap();
        assert_eq!(op.response_time, Some(10));
        assert!(op.ret.as_ref().unwrap().is_unknown());
        let done = dropped.complete(PendingPolicy::CloseAtHorizon);
        assert_eq!(done, dropped);
    }
}
