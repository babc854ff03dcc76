use std::sync::Arc;

use crate::error::{Error, Result};
use crate::sim::program::compile_object;
use crate::value::{Locals, State, Value};

use super::effect::ProgramEffects;
use super::{EffectSpec, SequentialSpec, SetSpec};

fn undefined(object: &str, op: &str) -> Error {
    Error::UndefinedOperation { object: object.into(), op: op.into() }
}

fn first(state: &State) -> i64 {
    state.0.first().copied().unwrap_or(0)
}

/// Read/write register holding an integer, initially 0.
#[derive(Clone, Copy, Debug, Default)]
pub struct RegisterSpec;

impl SequentialSpec for RegisterSpec {
    fn name(&self) -> &str {
        "register"
    }

    fn initial_state(&self) -> State {
        State::single(0)
    }

    fn apply(&self, state: &State, op: &str, arg: &Value) -> Result<(State, Value)> {
        match op {
            "write" => Ok((State::single(arg.int_or_zero()), Value::ok())),
            "read" => Ok((state.clone(), Value::Int(first(state)))),
            _ => Err(undefined(self.name(), op)),
        }
    }
}

pub fn register_spec() -> RegisterSpec {
    RegisterSpec
}

/// `inc` / `get` counter starting at 0.
#[derive(Clone, Copy, Debug, Default)]
pub struct CounterSpec;

impl SequentialSpec for CounterSpec {
    fn name(&self) -> &str {
        "counter"
    }

    fn initial_state(&self) -> State {
        State::single(0)
    }

    fn apply(&self, state: &State, op: &str, _arg: &Value) -> Result<(State, Value)> {
        match op {
            "inc" => Ok((State::single(first(state) + 1), Value::ok())),
            "get" => Ok((state.clone(), Value::Int(first(state)))),
            _ => Err(undefined(self.name(), op)),
        }
    }
}

pub fn counter_spec() -> CounterSpec {
    CounterSpec
}

/// FIFO queue of integers; `deq` on an empty queue returns `"empty"`.
#[derive(Clone, Copy, Debug, Default)]
pub struct FifoQueueSpec;

impl SequentialSpec for FifoQueueSpec {
    fn name(&self) -> &str {
        "fifo-queue"
    }

    fn initial_state(&self) -> State {
        State::default()
    }

    fn apply(&self, state: &State, op: &str, arg: &Value) -> Result<(State, Value)> {
        match op {
            "enq" => {
                let mut s = state.clone();
                s.0.push(arg.int_or_zero());
                Ok((s, Value::ok()))
            }
            "deq" => match state.0.split_first() {
                Some((head, rest)) => Ok((State(rest.to_vec()), Value::Int(*head))),
                None => Ok((state.clone(), Value::empty())),
            },
            _ => Err(undefined(self.name(), op)),
        }
    }
}

pub fn fifo_queue_spec() -> FifoQueueSpec {
    FifoQueueSpec
}

/// The lock-based object of the deterministic-multithreading example, with
/// each request run atomically: `D` maps `s` to `(s + 1) * 2`, `E` returns
/// `s`; initially `s = 1`.
#[derive(Clone, Copy, Debug, Default)]
pub struct LockObjectSpec;

impl SequentialSpec for LockObjectSpec {
    fn name(&self) -> &str {
        "lock-object"
    }

    fn initial_state(&self) -> State {
        State::single(1)
    }

    fn apply(&self, state: &State, op: &str, _arg: &Value) -> Result<(State, Value)> {
        match op {
            "D" => Ok((State::single((first(state) + 1) * 2), Value::ok())),
            "E" => Ok((state.clone(), Value::Int(first(state)))),
            _ => Err(undefined(self.name(), op)),
        }
    }
}

/// Source of the lock-based object: `D` has two critical sections with an
/// unlocked computation in between, `E` one.
pub const LISTING1_OBJECT: &str = "object lock_object {
  var s = 1;
  lock m;
  op D {
    lock(m);
      read(s, t);
      compute(t, t + 1);  // access
      write(s, t);
    unlock(m);
    compute(t, t * 2);    // compute
    lock(m);
      write(s, t);        // access
    unlock(m);
    return(ok);
  }
  op E {
    lock(m);
      read(s, t);         // access
    unlock(m);
    return(t);
  }
}
";

/// Sequential and effect-step forms of the lock-based object. The effect
/// form is compiled from [`LISTING1_OBJECT`].
pub fn lock_object_spec() -> (LockObjectSpec, ProgramEffects) {
    let obj = compile_object(LISTING1_OBJECT).expect("built-in object compiles");
    let effects = ProgramEffects::from_object("lock-object", obj)
        .expect("built-in object has no nested calls");
    (LockObjectSpec, effects)
}

/// Exchanger: a lone `exchange(v)` returns nil; two `exchange` calls taking
/// effect together swap their arguments.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExchangerSpec;

impl SequentialSpec for ExchangerSpec {
    fn name(&self) -> &str {
        "exchanger"
    }

    fn initial_state(&self) -> State {
        State::default()
    }

    fn apply(&self, state: &State, op: &str, _arg: &Value) -> Result<(State, Value)> {
        match op {
            "exchange" => Ok((state.clone(), Value::Nil)),
            _ => Err(undefined("exchanger", op)),
        }
    }
}

impl SetSpec for ExchangerSpec {
    fn name(&self) -> &str {
        "exchanger"
    }

    fn sequential(&self) -> &dyn SequentialSpec {
        self
    }

    fn max_class_size(&self) -> usize {
        2
    }

    fn apply_set(
        &self,
        state: &State,
        calls: &[(&str, &Value)],
    ) -> Result<Option<(State, Vec<Value>)>> {
        for (op, _) in calls {
            if *op != "exchange" {
                return Err(undefined("exchanger", op));
            }
        }
        match calls {
            [(op, arg)] => {
                let (s, r) = SequentialSpec::apply(self, state, op, arg)?;
                Ok(Some((s, vec![r])))
            }
            [(_, a), (_, b)] => Ok(Some((state.clone(), vec![(*b).clone(), (*a).clone()]))),
            _ => Ok(None),
        }
    }
}

/// Composite object seen by clients when `F` is implemented by two nested
/// increments of an aggregated counter: `F` adds 2, `J` reads.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompositeSpec;

impl SequentialSpec for CompositeSpec {
    fn name(&self) -> &str {
        "nested-composite"
    }

    fn initial_state(&self) -> State {
        State::single(0)
    }

    fn apply(&self, state: &State, op: &str, _arg: &Value) -> Result<(State, Value)> {
        match op {
            "F" => Ok((State::single(first(state) + 2), Value::ok())),
            "J" => Ok((state.clone(), Value::Int(first(state)))),
            _ => Err(undefined(self.name(), op)),
        }
    }
}

/// Effect form of [`CompositeSpec`]: `F` takes effect in two steps, one per
/// nested call, `J` in one.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompositeEffects;

impl EffectSpec for CompositeEffects {
    fn name(&self) -> &str {
        "nested-composite"
    }

    fn initial_state(&self) -> State {
        State::single(0)
    }

    fn step_count(&self, op: &str, _arg: &Value) -> Result<usize> {
        match op {
            "F" => Ok(2),
            "J" => Ok(1),
            _ => Err(undefined("nested-composite", op)),
        }
    }

    fn initial_locals(&self, op: &str, arg: &Value) -> Result<Locals> {
        self.step_count(op, arg)?;
        Ok(Locals(vec![Value::Nil]))
    }

    fn step(
        &self,
        op: &str,
        _arg: &Value,
        _index: usize,
        state: &State,
        _locals: &Locals,
    ) -> Result<Option<(State, Locals)>> {
        match op {
            "F" => Ok(Some((State::single(first(state) + 1), Locals(vec![Value::ok()])))),
            "J" => Ok(Some((state.clone(), Locals(vec![Value::Int(first(state))])))),
            _ => Err(undefined("nested-composite", op)),
        }
    }

    fn finish(&self, _op: &str, _arg: &Value, locals: &Locals) -> Result<Value> {
        Ok(locals.0[0].clone())
    }
}

/// Several independent objects as one: operation `obj.op` is routed to the
/// part named `obj`. The state stores each part's state prefixed by its
/// length.
#[derive(Clone)]
pub struct ProductSpec {
    name: String,
    parts: Vec<(String, Arc<dyn SequentialSpec>)>,
}

impl ProductSpec {
    pub fn new(parts: Vec<(String, Arc<dyn SequentialSpec>)>) -> Self {
        let names: Vec<&str> = parts.iter().map(|(n, _)| n.as_str()).collect();
        Self { name: names.join("*"), parts }
    }

    fn split(&self, state: &State) -> Vec<State> {
        let mut out = Vec::with_capacity(self.parts.len());
        let mut i = 0;
        for _ in &self.parts {
            let len = state.0[i] as usize;
            out.push(State(state.0[i + 1..i + 1 + len].to_vec()));
            i += 1 + len;
        }
        out
    }

    fn join(parts: &[State]) -> State {
        let mut v = Vec::new();
        for p in parts {
            v.push(p.0.len() as i64);
            v.extend_from_slice(&p.0);
        }
        State(v)
    }
}

impl SequentialSpec for ProductSpec {
    fn name(&self) -> &str {
        &self.name
    }

    fn initial_state(&self) -> State {
        let parts: Vec<State> = self.parts.iter().map(|(_, s)| s.initial_state()).collect();
        Self::join(&parts)
    }

    fn apply(&self, state: &State, op: &str, arg: &Value) -> Result<(State, Value)> {
        let (object, inner) = op.split_once('.').ok_or_else(|| undefined(&self.name, op))?;
        let k = self
            .parts
            .iter()
            .position(|(n, _)| n == object)
            .ok_or_else(|| undefined(&self.name, op))?;
        let mut parts = self.split(state);
        let (next, ret) = self.parts[k].1.apply(&parts[k], inner, arg)?;
        parts[k] = next;
        Ok((Self::join(&parts), ret))
    }
}

/// The aggregated object called by `F`: `G` and `H` increment, `J` reads.
#[derive(Clone, Copy, Debug, Default)]
pub struct AggregateSpec;

impl SequentialSpec for AggregateSpec {
    fn name(&self) -> &str {
        "nested-aggregate"
    }

    fn initial_state(&self) -> State {
        State::single(0)
    }

    fn apply(&self, state: &State, op: &str, _arg: &Value) -> Result<(State, Value)> {
        match op {
            "G" | "H" => Ok((State::single(first(state) + 1), Value::ok())),
            "J" => Ok((state.clone(), Value::Int(first(state)))),
            _ => Err(undefined(self.name(), op)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specs::{run_to_completion, EffectSpec};

    #[test]
    fn register() {
        let r = register_spec();
        assert_eq!(r.apply(&State::single(0), "write", &5.into()).unwrap(), (State::single(5), Value::ok()));
        assert_eq!(r.apply(&State::single(5), "read", &Value::Nil).unwrap(), (State::single(5), 5.into()));
        assert!(r.apply(&State::single(5), "cas", &Value::Nil).is_err());
    }

    #[test]
    fn counter_and_queue() {
        let c = counter_spec();
        let mut s = c.initial_state();
        for _ in 0..2 {
            s = c.apply(&s, "inc", &Value::Nil).unwrap().0;
        }
        assert_eq!(c.apply(&s, "get", &Value::Nil).unwrap().1, 2.into());

        let q = fifo_queue_spec();
        let s = q.apply(&q.initial_state(), "enq", &1.into()).unwrap().0;
        let s = q.apply(&s, "enq", &2.into()).unwrap().0;
        assert_eq!(q.apply(&s, "deq", &Value::Nil).unwrap().1, 1.into());
        assert_eq!(q.apply(&q.initial_state(), "deq", &Value::Nil).unwrap().1, Value::empty());
    }

    #[test]
    fn lock_object_sequential_d_then_e() {
        let (seq, _) = lock_object_spec();
        let s = seq.apply(&seq.initial_state(), "D", &Value::Nil).unwrap().0;
        assert_eq!(seq.apply(&s, "E", &Value::Nil).unwrap().1, 4.into());
    }

    #[test]
    fn lock_object_effect_steps() {
        let (_, eff) = lock_object_spec();
        let s0 = eff.initial_state();
        assert_eq!(s0, State::single(1));
        assert_eq!(eff.step_count("D", &Value::Nil).unwrap(), 2);
        assert_eq!(eff.step_count("E", &Value::Nil).unwrap(), 1);

        let l0 = eff.initial_locals("D", &Value::Nil).unwrap();
        let (s1, l1) = eff.step("D", &Value::Nil, 0, &s0, &l0).unwrap().unwrap();
        assert_eq!(s1, State::single(2));
        // E interleaved between the two critical sections of D observes 2.
        let (s_e, v_e) = run_to_completion(&eff, &s1, "E", &Value::Nil).unwrap().unwrap();
        assert_eq!(v_e, 2.into());
        let (s2, l2) = eff.step("D", &Value::Nil, 1, &s_e, &l1).unwrap().unwrap();
        assert_eq!(s2, State::single(4));
        assert_eq!(eff.finish("D", &Value::Nil, &l2).unwrap(), Value::ok());

        let (s, _) = run_to_completion(&eff, &s0, "D", &Value::Nil).unwrap().unwrap();
        assert_eq!(s, State::single(4));
    }

    #[test]
    fn exchanger_pairs() {
        let x = ExchangerSpec;
        let (a, b) = (Value::Int(1), Value::Int(2));
        let out = x.apply_set(&State::default(), &[("exchange", &a), ("exchange", &b)]).unwrap();
        assert_eq!(out.unwrap().1, vec![b.clone(), a.clone()]);
        let out = x.apply_set(&State::default(), &[("exchange", &a)]).unwrap().unwrap();
        assert_eq!(out.1, vec![Value::Nil]);
        assert!(x.apply_set(&State::default(), &[("exchange", &a); 3]).unwrap().is_none());
    }
}
