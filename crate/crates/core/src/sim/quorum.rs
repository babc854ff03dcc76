//! Majority-quorum register over three replicas with a single writer, with
//! optional read repair.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::{build_history, events_from_records, ClientId, History, OpId, OpRecord};
use crate::value::Value;

use super::smr::ClientRequest;

pub const QUORUM_REPLICAS: usize = 3;
pub const QUORUM_SIZE: usize = 2;

/// Message delays per (request id, replica), applied in both directions;
/// unlisted pairs take `default`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayPlan {
    pub default: u64,
    pub delays: BTreeMap<u64, [u64; QUORUM_REPLICAS]>,
}

impl Default for DelayPlan {
    fn default() -> Self {
        Self { default: 1, delays: BTreeMap::new() }
    }
}

impl DelayPlan {
    pub fn with(mut self, request: u64, legs: [u64; QUORUM_REPLICAS]) -> Self {
        self.delays.insert(request, legs);
        self
    }

    pub fn delay(&self, request: u64, replica: usize) -> u64 {
        self.delays.get(&request).map_or(self.default, |d| d[replica])
    }
}

/// `w(1)` by client 0 at time 0, a read by client 1 at time 2 and a second
/// read by client 2 issued once the first returns.
pub fn stale_read_workload() -> Vec<ClientRequest> {
    vec![
        ClientRequest::new(0, 0, "write", 1),
        ClientRequest::new(1, 1, "read", Value::Nil).at(2),
        ClientRequest::new(2, 2, "read", Value::Nil).after(1),
    ]
}

/// The write reaches replica 0 quickly and the others late; the first read
/// queries replicas 0 and 1, the second replicas 1 and 2.
pub fn stale_read_plan() -> DelayPlan {
    DelayPlan::default().with(0, [1, 8, 8]).with(1, [1, 1, 8]).with(2, [8, 1, 1])
}

#[derive(Clone, Debug)]
enum Msg {
    Query { req: u64, phase: u8 },
    Store { req: u64, phase: u8, ts: u64, value: i64 },
    QueryReply { req: u64, phase: u8, ts: u64, value: i64 },
    Ack { req: u64, phase: u8 },
}

enum Stage {
    Writing,
    Querying(Vec<(u64, i64)>),
    Repairing(i64),
}

struct Active {
    rec: OpRecord,
    stage: Stage,
    phase: u8,
    acks: BTreeSet<usize>,
}

fn req_of(m: &Msg) -> u64 {
    match m {
        Msg::Query { req, .. }
        | Msg::Store { req, .. }
        | Msg::QueryReply { req, .. }
        | Msg::Ack { req, .. } => *req,
    }
}

#[allow(clippy::too_many_arguments)]
fn deliver_reply(
    active: &mut BTreeMap<u64, Active>,
    done: &mut BTreeMap<u64, OpRecord>,
    busy: &mut BTreeSet<u64>,
    k: usize,
    msg: Msg,
    now: u64,
    read_repair: bool,
    send: &mut dyn FnMut(u64, usize, Msg),
) {
    let (req, phase) = match &msg {
        Msg::QueryReply { req, phase, .. } | Msg::Ack { req, phase } => (*req, *phase),
        _ => unreachable!("clients only receive replies"),
    };
    let Some(a) = active.get_mut(&req) else { return };
    if a.phase != phase || !a.acks.insert(k) {
        return;
    }
    let mut finished = None;
    match (&mut a.stage, msg) {
        (Stage::Writing | Stage::Repairing(_), Msg::Ack { .. }) => {
            if a.acks.len() == QUORUM_SIZE {
                finished = Some(match a.stage {
                    Stage::Repairing(v) => Value::Int(v),
                    _ => Value::ok(),
                });
            }
        }
        (Stage::Querying(seen), Msg::QueryReply { ts, value, .. }) => {
            seen.push((ts, value));
            if seen.len() == QUORUM_SIZE {
                let (ts, value) = *seen.iter().max_by_key(|(ts, _)| *ts).expect("quorum");
                if read_repair {
                    a.stage = Stage::Repairing(value);
                    a.phase += 1;
                    a.acks.clear();
                    for j in 0..QUORUM_REPLICAS {
                        send(now, j, Msg::Store { req, phase: a.phase, ts, value });
                    }
                } else {
                    finished = Some(Value::Int(value));
                }
            }
        }
        _ => {}
    }
    if let Some(v) = finished {
        let mut a = active.remove(&req).expect("active");
        a.rec.ret = Some(v);
        a.rec.response_time = Some(now as i64);
        busy.remove(&a.rec.client.0);
        done.insert(req, a.rec);
    }
}

/// Simulate the quorum register and return the client-visible history.
pub fn run_quorum_register(
    read_repair: bool,
    plan: &DelayPlan,
    workload: &[ClientRequest],
) -> Result<History> {
    let mut writers = BTreeSet::new();
    for r in workload {
        match r.op.as_str() {
            "write" => {
                writers.insert(r.client);
                if r.arg.as_int().is_none() {
                    return Err(Error::ConfigInvalid(format!("write {} needs an integer", r.id)));
                }
            }
            "read" => {}
            other => return Err(Error::ConfigInvalid(format!("quorum register has no `{other}`"))),
        }
    }
    if writers.len() > 1 {
        return Err(Error::ConfigInvalid("the quorum register has a single writer".into()));
    }
    if plan.default == 0 || plan.delays.values().flatten().any(|d| *d == 0) {
        return Err(Error::ConfigInvalid("message delays must be at least 1".into()));
    }
    let ids: BTreeSet<u64> = workload.iter().map(|r| r.id).collect();
    if ids.len() != workload.len() {
        return Err(Error::ConfigInvalid("request ids must be unique".into()));
    }

    let mut stores = [(0u64, 0i64); QUORUM_REPLICAS];
    let mut next_ts = 0u64;
    // (time, seq) -> (to client?, replica, message)
    let mut queue: BTreeMap<(u64, u64), (bool, usize, Msg)> = BTreeMap::new();
    let mut seq = 0u64;
    let mut send = |queue: &mut BTreeMap<(u64, u64), (bool, usize, Msg)>, at: u64, to_client, r, m| {
        queue.insert((at, seq), (to_client, r, m));
        seq += 1;
    };
    let mut active: BTreeMap<u64, Active> = BTreeMap::new();
    let mut done: BTreeMap<u64, OpRecord> = BTreeMap::new();
    let mut waiting: Vec<&ClientRequest> = workload.iter().collect();
    let mut busy: BTreeSet<u64> = BTreeSet::new();
    let mut now = 0u64;

    loop {
        // issue everything that is ready at `now`
        let mut i = 0;
        while i < waiting.len() {
            let r = waiting[i];
            let dep_done = r.after.iter().all(|d| {
                done.get(d).and_then(|o| o.response_time).is_some_and(|t| (t as u64) < now)
            });
            if r.issue_at <= now && dep_done && !busy.contains(&r.client) {
                waiting.remove(i);
                busy.insert(r.client);
                let stage = if r.op == "write" {
                    next_ts += 1;
                    let value = r.arg.int_or_zero();
                    for k in 0..QUORUM_REPLICAS {
                        let m = Msg::Store { req: r.id, phase: 0, ts: next_ts, value };
                        send(&mut queue, now + plan.delay(r.id, k), false, k, m);
                    }
                    Stage::Writing
                } else {
                    for k in 0..QUORUM_REPLICAS {
                        send(&mut queue, now + plan.delay(r.id, k), false, k, Msg::Query { req: r.id, phase: 0 });
                    }
                    Stage::Querying(Vec::new())
                };
                let rec = OpRecord {
                    op_id: OpId(r.id),
                    client: ClientId(r.client),
                    object: "register".into(),
                    op_name: r.op.clone(),
                    arg: r.arg.clone(),
                    ret: None,
                    invocation_time: now as i64,
                    response_time: None,
                };
                active.insert(r.id, Active { rec, stage, phase: 0, acks: BTreeSet::new() });
            } else {
                i += 1;
            }
        }

        while let Some((&(t, s), _)) = queue.iter().next() {
            if t != now {
                break;
            }
            let (to_client, k, msg) = queue.remove(&(t, s)).expect("head");
            if to_client {
                deliver_reply(&mut active, &mut done, &mut busy, k, msg, now, read_repair, &mut |at, r, m| {
                    send(&mut queue, at + plan.delay(req_of(&m), r), false, r, m)
                });
                continue;
            }
            let reply = match msg {
                Msg::Query { req, phase } => {
                    Msg::QueryReply { req, phase, ts: stores[k].0, value: stores[k].1 }
                }
                Msg::Store { req, phase, ts, value } => {
                    if ts > stores[k].0 {
                        stores[k] = (ts, value);
                    }
                    Msg::Ack { req, phase }
                }
                _ => unreachable!("replicas only receive requests"),
            };
            send(&mut queue, now + plan.delay(req_of(&reply), k), true, k, reply);
        }
        let issuable = waiting.iter().any(|r| r.after.iter().all(|d| done.contains_key(d) || active.contains_key(d)));
        if queue.is_empty() && !issuable {
            break;
        }
        now += 1;
    }
    let records = done.into_values().chain(active.into_values().map(|a| a.rec));
    build_history(events_from_records(records))
}

/// Delay plans of the bounded enumeration: the write and the first read
/// range over `{1, 3, 8}` per replica, the second read over `{1, 8}`.
pub fn enumerate_delay_plans() -> Vec<DelayPlan> {
    fn legs(choices: &[u64]) -> Vec<[u64; 3]> {
        let mut out = Vec::new();
        for &a in choices {
            for &b in choices {
                for &c in choices {
                    out.push([a, b, c]);
                }
            }
        }
        out
    }
    let wide = legs(&[1, 3, 8]);
    let narrow = legs(&[1, 8]);
    let mut plans = Vec::with_capacity(wide.len() * wide.len() * narrow.len());
    for w in &wide {
        for r1 in &wide {
            for r2 in &narrow {
                plans.push(DelayPlan::default().with(0, *w).with(1, *r1).with(2, *r2));
            }
        }
    }
    plans
}

#[cfg(test)]
mod tests {
    use super::*;

    fn returns(h: &History) -> Vec<Option<Value>> {
        (0..3).map(|i| h.op(OpId(i)).unwrap().ret.clone()).collect()
    }

    #[test]
    fn stale_read_without_repair() {
        let h = run_quorum_register(false, &stale_read_plan(), &stale_read_workload()).unwrap();
        assert_eq!(returns(&h), vec![Some(Value::ok()), Some(Value::Int(1)), Some(Value::Int(0))]);
        let r1 = h.op(OpId(1)).unwrap();
        let r2 = h.op(OpId(2)).unwrap();
        assert!(r1.precedes(r2));
    }

    #[test]
    fn repair_makes_second_read_see_the_write() {
        let h = run_quorum_register(true, &stale_read_plan(), &stale_read_workload()).unwrap();
        assert_eq!(returns(&h)[2], Some(Value::Int(1)));
    }

    #[test]
    fn plan_count() {
        assert_eq!(enumerate_delay_plans().len(), 5832);
    }

    #[test]
    fn lone_writer() {
        let h = run_quorum_register(false, &DelayPlan::default(), &[ClientRequest::new(0, 0, "write", 3)])
            .unwrap();
        assert!(h.is_complete());
    }
}
