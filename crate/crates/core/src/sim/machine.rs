//! Per-replica execution of requests as threads under a deterministic
//! scheduler.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::OpId;
use crate::specs::SequentialSpec;
use crate::value::{State, Value};

use super::config::SchedulerKind;
use super::program::{eval_return, exec_data, Instr, ObjectDef, Program};

/// The object a replica hosts.
#[derive(Clone)]
pub enum ReplicatedObject {
    /// Lock-structured program object.
    Program(Arc<ObjectDef>),
    /// Each request is applied atomically in a single turn.
    Atomic(Arc<dyn SequentialSpec>),
}

impl ReplicatedObject {
    pub fn name(&self) -> &str {
        match self {
            ReplicatedObject::Program(o) => &o.name,
            ReplicatedObject::Atomic(s) => s.name(),
        }
    }

    pub fn initial_state(&self) -> State {
        match self {
            ReplicatedObject::Program(o) => o.initial_state(),
            ReplicatedObject::Atomic(s) => s.initial_state(),
        }
    }

    /// Checks that `op` exists and can be run by the simulator.
    pub fn check_op(&self, op: &str) -> Result<()> {
        match self {
            ReplicatedObject::Program(o) => {
                let p = o.op(op)?;
                if p.has_nested_calls() {
                    return Err(Error::UnsupportedProgram(format!(
                        "`{}.{op}` makes nested calls",
                        o.name
                    )));
                }
                Ok(())
            }
            ReplicatedObject::Atomic(_) => Ok(()),
        }
    }

    fn program(&self, op: &str) -> Option<&Program> {
        match self {
            ReplicatedObject::Program(o) => o.ops.get(op),
            ReplicatedObject::Atomic(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThreadStatus {
    Runnable,
    BlockedOnLock(usize),
    BlockedOnCond(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thread {
    pub request: u64,
    pub client: u64,
    pub op: String,
    pub arg: Value,
    pub status: ThreadStatus,
    pub started: bool,
    pc: usize,
    locals: Vec<i64>,
    held: Vec<usize>,
}

/// Scheduler bookkeeping of one replica.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchedulerState {
    pub lock_holder: Vec<Option<u64>>,
    pub lock_queue: Vec<VecDeque<u64>>,
    pub cond_queue: Vec<VecDeque<u64>>,
    pub round: u64,
    /// Live threads in delivery order.
    pub threads: Vec<Thread>,
}

/// What happened in one round.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RoundOutcome {
    pub started: Vec<u64>,
    pub finished: Vec<(u64, Value)>,
}

enum TurnEnd {
    Yield,
    Blocked,
    Returned(Value),
}

pub struct Machine {
    object: ReplicatedObject,
    kind: SchedulerKind,
    seed: u64,
    pub shared: State,
    pub sched: SchedulerState,
}

impl Machine {
    pub fn new(object: ReplicatedObject, kind: SchedulerKind, seed: u64) -> Self {
        let (locks, conds) = match &object {
            ReplicatedObject::Program(o) => (o.decls.locks.len(), o.decls.conds.len()),
            ReplicatedObject::Atomic(_) => (0, 0),
        };
        let sched = SchedulerState {
            lock_holder: vec![None; locks],
            lock_queue: vec![VecDeque::new(); locks],
            cond_queue: vec![VecDeque::new(); conds],
            ..SchedulerState::default()
        };
        Self { shared: object.initial_state(), object, kind, seed, sched }
    }

    pub fn deliver(&mut self, request: u64, client: u64, op: &str, arg: &Value) {
        let locals = self.object.program(op).map(|p| p.initial_locals(arg)).unwrap_or_default();
        self.sched.threads.push(Thread {
            request,
            client,
            op: op.to_string(),
            arg: arg.clone(),
            status: ThreadStatus::Runnable,
            started: false,
            pc: 0,
            locals,
            held: Vec::new(),
        });
    }

    pub fn is_idle(&self) -> bool {
        self.sched.threads.is_empty()
    }

    pub fn has_runnable(&self) -> bool {
        match self.kind {
            SchedulerKind::Sequential => !self.sched.threads.is_empty(),
            SchedulerKind::LockLevel => {
                self.sched.threads.iter().any(|t| t.status == ThreadStatus::Runnable)
            }
        }
    }

    pub fn blocked(&self) -> Vec<OpId> {
        self.sched.threads.iter().map(|t| OpId(t.request)).collect()
    }

    /// Run one scheduling round. `replica` only labels errors.
    pub fn round(&mut self, replica: usize) -> Result<RoundOutcome> {
        let mut out = RoundOutcome::default();
        if self.sched.threads.is_empty() {
            return Ok(out);
        }
        match self.kind {
            SchedulerKind::Sequential => {
                let id = self.sched.threads[0].request;
                match self.turn(id, false, &mut out)? {
                    TurnEnd::Returned(_) => {}
                    TurnEnd::Blocked => {
                        return Err(Error::DeadlockDetected { replica, blocked: self.blocked() })
                    }
                    TurnEnd::Yield => unreachable!("sequential turns never yield"),
                }
            }
            SchedulerKind::LockLevel => {
                let ids: Vec<u64> = self.sched.threads.iter().map(|t| t.request).collect();
                let shift = (self.sched.round.wrapping_add(self.seed) % ids.len() as u64) as usize;
                for k in 0..ids.len() {
                    let id = ids[(k + shift) % ids.len()];
                    let runnable = self
                        .thread(id)
                        .is_some_and(|t| t.status == ThreadStatus::Runnable);
                    if runnable {
                        self.turn(id, true, &mut out)?;
                    }
                }
            }
        }
        self.sched.round += 1;
        Ok(out)
    }

    fn thread(&self, id: u64) -> Option<&Thread> {
        self.sched.threads.iter().find(|t| t.request == id)
    }

    fn index(&self, id: u64) -> usize {
        self.sched.threads.iter().position(|t| t.request == id).expect("live thread")
    }

    fn turn(&mut self, id: u64, yields: bool, out: &mut RoundOutcome) -> Result<TurnEnd> {
        let ti = self.index(id);
        if !self.sched.threads[ti].started {
            self.sched.threads[ti].started = true;
            out.started.push(id);
        }
        let end = match self.object.clone() {
            ReplicatedObject::Atomic(spec) => {
                let t = &self.sched.threads[ti];
                let (next, ret) = spec.apply(&self.shared, &t.op, &t.arg)?;
                self.shared = next;
                TurnEnd::Returned(ret)
            }
            ReplicatedObject::Program(obj) => {
                let program = obj.op(&self.sched.threads[ti].op)?;
                self.run_program(ti, program, yields)?
            }
        };
        if let TurnEnd::Returned(v) = &end {
            out.finished.push((id, v.clone()));
            self.sched.threads.remove(self.index(id));
        }
        Ok(end)
    }

    fn run_program(&mut self, ti: usize, program: &Program, yields: bool) -> Result<TurnEnd> {
        let id = self.sched.threads[ti].request;
        let mut took_lock = !self.sched.threads[ti].held.is_empty();
        loop {
            let t = &mut self.sched.threads[ti];
            match &program.instructions[t.pc] {
                Instr::Lock(l) => {
                    if yields && took_lock && t.held.is_empty() {
                        return Ok(TurnEnd::Yield);
                    }
                    if self.sched.lock_holder[*l].is_none() {
                        self.sched.lock_holder[*l] = Some(id);
                        took_lock |= t.held.is_empty();
                        t.held.push(*l);
                        t.pc += 1;
                    } else {
                        self.sched.lock_queue[*l].push_back(id);
                        t.status = ThreadStatus::BlockedOnLock(*l);
                        return Ok(TurnEnd::Blocked);
                    }
                }
                Instr::Unlock(l) => {
                    let l = *l;
                    t.held.retain(|h| *h != l);
                    t.pc += 1;
                    self.release(l);
                }
                Instr::Wait { cond, lock, guard } => {
                    if self.shared.0[*guard] != 0 {
                        t.pc += 1;
                    } else {
                        let (cond, lock) = (*cond, *lock);
                        t.held.retain(|h| *h != lock);
                        t.status = ThreadStatus::BlockedOnCond(cond);
                        self.sched.cond_queue[cond].push_back(id);
                        self.release(lock);
                        return Ok(TurnEnd::Blocked);
                    }
                }
                Instr::Signal(c) => {
                    t.pc += 1;
                    if let Some(w) = self.sched.cond_queue[*c].pop_front() {
                        let wi = self.index(w);
                        let Instr::Wait { lock, .. } = program_of(&self.object, &self.sched.threads[wi].op)
                            .instructions[self.sched.threads[wi].pc]
                        else {
                            unreachable!("condition waiters sit on a wait");
                        };
                        self.sched.threads[wi].status = ThreadStatus::BlockedOnLock(lock);
                        if self.sched.lock_holder[lock].is_none() {
                            self.grant(lock, w);
                        } else {
                            self.sched.lock_queue[lock].push_back(w);
                        }
                    }
                }
                ins @ (Instr::Read { .. } | Instr::Write { .. } | Instr::Compute { .. }) => {
                    exec_data(ins, &mut self.shared, &mut t.locals);
                    t.pc += 1;
                }
                Instr::Call { object, op, .. } => {
                    return Err(Error::UnsupportedProgram(format!(
                        "nested call to `{object}.{op}` inside a replica"
                    )));
                }
                Instr::Return(r) => return Ok(TurnEnd::Returned(eval_return(r, &t.locals))),
            }
        }
    }

    fn release(&mut self, lock: usize) {
        self.sched.lock_holder[lock] = None;
        if let Some(next) = self.sched.lock_queue[lock].pop_front() {
            self.grant(lock, next);
        }
    }

    /// Hand `lock` to a queued thread. A thread blocked on `lock(l)` moves
    /// past it; a woken waiter stays on its `wait` to re-check the guard.
    fn grant(&mut self, lock: usize, id: u64) {
        self.sched.lock_holder[lock] = Some(id);
        let ti = self.index(id);
        let on_lock = matches!(
            program_of(&self.object, &self.sched.threads[ti].op).instructions[self.sched.threads[ti].pc],
            Instr::Lock(_)
        );
        let t = &mut self.sched.threads[ti];
        t.held.push(lock);
        t.status = ThreadStatus::Runnable;
        if on_lock {
            t.pc += 1;
        }
    }

    /// Scheduler safety: lock holders agree with the threads' held locks and
    /// no thread waits on a condition while holding a lock.
    pub fn invariants_hold(&self) -> bool {
        for (l, holder) in self.sched.lock_holder.iter().enumerate() {
            let holders: Vec<u64> = self
                .sched
                .threads
                .iter()
                .filter(|t| t.held.contains(&l))
                .map(|t| t.request)
                .collect();
            if holders.len() > 1 || holders.first() != holder.as_ref() {
                return false;
            }
        }
        self.sched
            .threads
            .iter()
            .all(|t| !matches!(t.status, ThreadStatus::BlockedOnCond(_)) || t.held.is_empty())
    }
}

fn program_of<'a>(object: &'a ReplicatedObject, op: &str) -> &'a Program {
    object.program(op).expect("thread runs a program op")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::program::compile_object;
    use crate::specs::LISTING1_OBJECT;

    fn listing1(kind: SchedulerKind, seed: u64) -> Machine {
        let obj = compile_object(LISTING1_OBJECT).unwrap();
        let mut m = Machine::new(ReplicatedObject::Program(Arc::new(obj)), kind, seed);
        m.deliver(0, 0, "D", &Value::Nil);
        m.deliver(1, 1, "E", &Value::Nil);
        m
    }

    fn drain(m: &mut Machine) -> Vec<(u64, Value)> {
        let mut done = Vec::new();
        while !m.is_idle() {
            done.extend(m.round(0).unwrap().finished);
            assert!(m.invariants_hold());
        }
        done
    }

    #[test]
    fn sequential_runs_d_then_e() {
        let mut m = listing1(SchedulerKind::Sequential, 0);
        let done = drain(&mut m);
        assert_eq!(done, vec![(0, Value::ok()), (1, Value::Int(4))]);
        assert_eq!(m.shared, State::single(4));
    }

    #[test]
    fn lock_level_interleaves_e_between_critical_sections() {
        let mut m = listing1(SchedulerKind::LockLevel, 0);
        let done = drain(&mut m);
        assert!(done.contains(&(1, Value::Int(2))));
        assert_eq!(m.shared, State::single(4));
        let mut m = listing1(SchedulerKind::LockLevel, 1);
        assert!(drain(&mut m).contains(&(1, Value::Int(1))));
    }
}
