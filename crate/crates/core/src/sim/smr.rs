//! Replicated execution: clients, a sequencer, replicas and voting.
//!
//! Time runs in ticks. Within tick `t`, clients issue at `4t`, replicas
//! start requests at `4t + 1` and finish them at `4t + 2`, and clients
//! decide at `4t + 3`, so every outer span strictly contains the inner
//! spans of the same request.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::{build_history, events_from_records, ClientId, History, OpId, OpRecord};
use crate::value::{State, Value};
use crate::voting::{assemble_outer_history, vote, Completion, ResponseSet, VoteOutcome};

use super::config::{ByzantineBehavior, FailureModel, Ordering, SimConfig};
use super::machine::{Machine, ReplicatedObject};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClientRequest {
    pub id: u64,
    pub client: u64,
    pub op: String,
    #[serde(default)]
    pub arg: Value,
    /// Earliest tick at which the client issues the request.
    #[serde(default)]
    pub issue_at: u64,
    /// Requests that must be decided before this one is issued.
    #[serde(default)]
    pub after: Vec<u64>,
}

impl ClientRequest {
    pub fn new(id: u64, client: u64, op: &str, arg: impl Into<Value>) -> Self {
        Self { id, client, op: op.into(), arg: arg.into(), issue_at: 0, after: Vec::new() }
    }

    pub fn at(mut self, tick: u64) -> Self {
        self.issue_at = tick;
        self
    }

    pub fn after(mut self, id: u64) -> Self {
        self.after.push(id);
        self
    }
}

/// Requests in per-client issue order. A repeated id is a second payload
/// sent under the same invocation id together with the first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Workload {
    pub requests: Vec<ClientRequest>,
    /// Clients that accept the first response they receive.
    #[serde(default)]
    pub malicious_voters: BTreeSet<u64>,
}

impl Workload {
    pub fn new(requests: Vec<ClientRequest>) -> Self {
        Self { requests, malicious_voters: BTreeSet::new() }
    }

    pub fn has_duplicate_ids(&self) -> bool {
        let mut seen = BTreeSet::new();
        !self.requests.iter().all(|r| seen.insert(r.id))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeliveredRequest {
    pub id: u64,
    pub client: u64,
    pub op: String,
    pub arg: Value,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimOutput {
    pub config: SimConfig,
    pub client_history: History,
    pub inner_histories: Vec<History>,
    /// Per replica, requests in processing order.
    pub delivery_order: Vec<Vec<DeliveredRequest>>,
    pub replica_states: Vec<State>,
    /// Per client, request ids in issue order.
    pub issue_order: BTreeMap<u64, Vec<u64>>,
    pub causal_edges: Vec<(u64, u64)>,
    /// Per request, the value each replica sent.
    pub responses: BTreeMap<u64, BTreeMap<usize, Value>>,
    pub malicious_voters: BTreeSet<u64>,
}

impl SimOutput {
    pub fn correct_replicas(&self) -> Vec<usize> {
        (0..self.config.n).filter(|r| self.config.is_correct(*r)).collect()
    }

    /// Client history in which the returns accepted by malicious voters
    /// are replaced by [`Value::unknown`]; their operations still count.
    pub fn system_history(&self) -> Result<History> {
        let events = self
            .client_history
            .events()
            .iter()
            .map(|e| {
                let mut e = e.clone();
                if self.malicious_voters.contains(&e.client.0)
                    && e.kind == crate::history::EventKind::Response
                {
                    e.payload = Value::unknown();
                }
                e
            })
            .collect();
        build_history(events)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("outputs serialize")
    }
}

fn rng(seed: u64, replica: usize, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(((replica as u64) << 8) | stream);
    r
}

fn corrupt(b: ByzantineBehavior, v: Value) -> Option<Value> {
    match b {
        ByzantineBehavior::ResponseDrop => None,
        ByzantineBehavior::ResponseFlip => Some(match v {
            Value::Int(i) => Value::Int(!i),
            Value::Sym(s) => Value::Sym(format!("!{s}")),
            Value::Nil => Value::Int(-1),
        }),
        ByzantineBehavior::WrongValue => Some(match v {
            Value::Int(i) => Value::Int(i.wrapping_add(1)),
            _ => Value::Sym("forged".into()),
        }),
    }
}

struct Client {
    queue: Vec<u64>,
    next: usize,
    outstanding: Option<(u64, ResponseSet)>,
}

struct Replica {
    machine: Machine,
    crashed: bool,
    inner: BTreeMap<u64, OpRecord>,
    delivered: Vec<DeliveredRequest>,
    partial: ChaCha8Rng,
    latency: ChaCha8Rng,
}

/// Simulate the replicated object under `cfg`.
pub fn run_smr(cfg: &SimConfig, workload: &Workload, object: &ReplicatedObject) -> Result<SimOutput> {
    cfg.validate()?;
    // first instance of each id, and every payload sent under it
    let mut first: BTreeMap<u64, usize> = BTreeMap::new();
    let mut payloads: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    let mut clients: BTreeMap<u64, Client> = BTreeMap::new();
    for (i, r) in workload.requests.iter().enumerate() {
        object.check_op(&r.op)?;
        if let Some(&j) = first.get(&r.id) {
            if workload.requests[j].client != r.client {
                return Err(Error::ConfigInvalid(format!(
                    "request id {} used by clients {} and {}",
                    r.id, workload.requests[j].client, r.client
                )));
            }
        } else {
            for dep in &r.after {
                if !first.contains_key(dep) {
                    return Err(Error::ConfigInvalid(format!(
                        "request {} depends on {dep}, which does not precede it",
                        r.id
                    )));
                }
            }
            first.insert(r.id, i);
            clients
                .entry(r.client)
                .or_insert_with(|| Client { queue: Vec::new(), next: 0, outstanding: None })
                .queue
                .push(r.id);
        }
        payloads.entry(r.id).or_default().push(i);
    }
    let causal_edges: Vec<(u64, u64)> = first
        .values()
        .flat_map(|&i| {
            let r = &workload.requests[i];
            r.after.iter().map(move |d| (*d, r.id))
        })
        .collect();

    let mut replicas: Vec<Replica> = (0..cfg.n)
        .map(|r| Replica {
            machine: Machine::new(object.clone(), cfg.scheduler, cfg.seed),
            crashed: false,
            inner: BTreeMap::new(),
            delivered: Vec::new(),
            partial: rng(cfg.seed, r, 1),
            latency: rng(cfg.seed, r, 2),
        })
        .collect();

    let mut ordered: BTreeSet<u64> = BTreeSet::new();
    let mut deliveries: BTreeMap<u64, Vec<DeliveredRequest>> = BTreeMap::new();
    let mut replies: BTreeMap<u64, Vec<(usize, u64, Value)>> = BTreeMap::new();
    let mut responses: BTreeMap<u64, BTreeMap<usize, Value>> = BTreeMap::new();
    let mut completions: BTreeMap<u64, Completion> = BTreeMap::new();
    let mut decided: BTreeMap<u64, u64> = BTreeMap::new();
    let mut issue_order: BTreeMap<u64, Vec<u64>> = BTreeMap::new();

    let mut tick: u64 = 0;
    loop {
        // issue
        let mut batch: Vec<(u64, u64, usize)> = Vec::new();
        for (cid, c) in clients.iter_mut() {
            if c.outstanding.is_some() || c.next >= c.queue.len() {
                continue;
            }
            let id = c.queue[c.next];
            let r = &workload.requests[first[&id]];
            let ready = r.issue_at <= tick
                && r.after.iter().all(|d| decided.get(d).is_some_and(|t| *t < tick));
            if !ready {
                continue;
            }
            c.outstanding = Some((id, ResponseSet::new(OpId(id))));
            issue_order.entry(*cid).or_default().push(id);
            completions.insert(
                id,
                Completion {
                    request: OpId(id),
                    client: ClientId(*cid),
                    object: object.name().to_string(),
                    op_name: r.op.clone(),
                    arg: r.arg.clone(),
                    issued_at: 4 * tick as i64,
                    decided: None,
                },
            );
            batch.extend(payloads[&id].iter().map(|&i| (*cid, id, i)));
        }
        batch.sort();
        for (_, id, i) in batch {
            if ordered.insert(id) {
                let r = &workload.requests[i];
                deliveries.entry(tick + cfg.order_latency).or_default().push(DeliveredRequest {
                    id,
                    client: r.client,
                    op: r.op.clone(),
                    arg: r.arg.clone(),
                });
            }
        }

        // deliver and execute
        let arriving = deliveries.remove(&tick).unwrap_or_default();
        for (ri, rep) in replicas.iter_mut().enumerate() {
            if cfg.crash_tick(ri).is_some_and(|at| tick >= at) {
                rep.crashed = true;
            }
            if rep.crashed {
                continue;
            }
            let mut batch = arriving.clone();
            if let Ordering::PartialOrder(rel) = &cfg.ordering {
                let mut i = 0;
                while i + 1 < batch.len() {
                    if !rel.conflicts(&batch[i].op, &batch[i + 1].op) && rep.partial.gen_bool(0.5) {
                        batch.swap(i, i + 1);
                        i += 2;
                    } else {
                        i += 1;
                    }
                }
            }
            for d in batch {
                rep.machine.deliver(d.id, d.client, &d.op, &d.arg);
                rep.delivered.push(d);
            }
            let out = rep.machine.round(ri)?;
            for id in out.started {
                let d = rep.delivered.iter().find(|d| d.id == id).expect("delivered");
                rep.inner.insert(
                    id,
                    OpRecord {
                        op_id: OpId(id),
                        client: ClientId(d.client),
                        object: object.name().to_string(),
                        op_name: d.op.clone(),
                        arg: d.arg.clone(),
                        ret: None,
                        invocation_time: 4 * tick as i64 + 1,
                        response_time: None,
                    },
                );
            }
            for (id, v) in out.finished {
                let rec = rep.inner.get_mut(&id).expect("started");
                rec.ret = Some(v.clone());
                rec.response_time = Some(4 * tick as i64 + 2);
                let sent = match cfg.behavior(ri) {
                    Some(b) => corrupt(b, v),
                    None => Some(v),
                };
                if let Some(v) = sent {
                    responses.entry(id).or_default().insert(ri, v.clone());
                    let at = tick + 1 + rep.latency.gen_range(0..=2u64);
                    replies.entry(at).or_default().push((ri, id, v));
                }
            }
        }

        // replies and votes
        let mut arrivals = replies.remove(&tick).unwrap_or_default();
        arrivals.sort();
        for (ri, id, v) in arrivals {
            let client_id = workload.requests[first[&id]].client;
            let c = clients.get_mut(&client_id).expect("client");
            let Some((oid, rs)) = c.outstanding.as_mut() else { continue };
            if *oid != id {
                continue;
            }
            rs.push(ri, v, 4 * tick as i64 + 3)?;
            let f = if workload.malicious_voters.contains(&client_id) {
                0
            } else {
                match cfg.failure_model {
                    FailureModel::Crash => 0,
                    FailureModel::Byzantine => cfg.f,
                }
            };
            if let VoteOutcome::Decided { value, time, .. } = vote(rs, f) {
                completions.get_mut(&id).expect("issued").decided = Some((value, time));
                decided.insert(id, tick);
                c.outstanding = None;
                c.next += 1;
            }
        }

        // stop once nothing can happen any more
        let in_flight = !deliveries.is_empty() || !replies.is_empty();
        let running = replicas.iter().any(|r| !r.crashed && r.machine.has_runnable());
        let can_issue = clients.values().any(|c| {
            c.outstanding.is_none()
                && c.queue.get(c.next).is_some_and(|id| {
                    workload.requests[first[id]].after.iter().all(|d| decided.contains_key(d))
                })
        });
        if !in_flight && !running && !can_issue {
            break;
        }
        tick += 1;
    }

    for (ri, rep) in replicas.iter().enumerate() {
        if !rep.crashed && !rep.machine.is_idle() {
            return Err(Error::DeadlockDetected { replica: ri, blocked: rep.machine.blocked() });
        }
    }

    let completions: Vec<Completion> = completions.into_values().collect();
    let mut inner_histories = Vec::with_capacity(cfg.n);
    let mut delivery_order = Vec::with_capacity(cfg.n);
    let mut replica_states = Vec::with_capacity(cfg.n);
    for rep in replicas {
        inner_histories.push(build_history(events_from_records(rep.inner.into_values()))?);
        delivery_order.push(rep.delivered);
        replica_states.push(rep.machine.shared);
    }
    Ok(SimOutput {
        config: cfg.clone(),
        client_history: assemble_outer_history(&completions)?,
        inner_histories,
        delivery_order,
        replica_states,
        issue_order,
        causal_edges,
        responses,
        malicious_voters: workload.malicious_voters.clone(),
    })
}

/// Run a workload in which a client reuses invocation ids. The sequencer
/// keeps the first ordered instance of each id.
pub fn byzantine_client_duplicate_ids(cfg: &SimConfig, workload: &Workload, object: &ReplicatedObject) -> Result<SimOutput> {
    if cfg.failure_model != FailureModel::Byzantine {
        return Err(Error::ConfigInvalid("duplicate-id clients need the byzantine model".into()));
    }
    run_smr(cfg, workload, object)
}
