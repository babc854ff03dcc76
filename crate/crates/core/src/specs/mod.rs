//! The four specification forms, one per hierarchy level, and the built-in
//! objects.
//!
//! - [`SequentialSpec`]: atomic state transitions (linearizability).
//! - [`EffectSpec`]: each operation is a sequence of atomic effect steps
//!   (multi-point linearizability).
//! - [`SetSpec`]: admissible sets of operations take effect jointly
//!   (set linearizability).
//! - [`IntervalSpec`]: an explicit automaton over interaction points
//!   (interval linearizability).

mod builtin;
mod effect;
mod interval;
mod registry;
mod set;

pub use builtin::{
    counter_spec, fifo_queue_spec, lock_object_spec, register_spec, AggregateSpec, CompositeEffects,
    CompositeSpec,
    CounterSpec, ExchangerSpec, ProductSpec, FifoQueueSpec, LockObjectSpec, RegisterSpec, LISTING1_OBJECT,
};
pub use effect::{effect_spec_of_object, effect_spec_of_program, AtomicEffects, ProgramEffects};
pub use interval::{
    ActiveCall, Call, EffectAutomaton, IState, IntervalSpec, Point, SetAutomaton,
};
pub use registry::{spec_bundle, SpecBundle, SPEC_NAMES};
pub use set::SingletonSets;

use crate::error::Result;
use crate::value::{Locals, State, Value};

/// Sequential specification: a pure, deterministic transition function.
pub trait SequentialSpec: Send + Sync {
    fn name(&self) -> &str;
    fn initial_state(&self) -> State;
    fn apply(&self, state: &State, op: &str, arg: &Value) -> Result<(State, Value)>;
}

/// Operations decomposed into one or more atomic effect steps.
///
/// Step `i` of an operation runs against the object state and the
/// operation's [`Locals`]; `None` means the step is not enabled in that state
/// (a conditional wait whose guard is false).
pub trait EffectSpec: Send + Sync {
    fn name(&self) -> &str;
    fn initial_state(&self) -> State;
    fn step_count(&self, op: &str, arg: &Value) -> Result<usize>;
    fn initial_locals(&self, op: &str, arg: &Value) -> Result<Locals>;
    fn step(
        &self,
        op: &str,
        arg: &Value,
        index: usize,
        state: &State,
        locals: &Locals,
    ) -> Result<Option<(State, Locals)>>;
    /// Assemble the return value once every step has run.
    fn finish(&self, op: &str, arg: &Value, locals: &Locals) -> Result<Value>;
}

/// Set-sequential specification: `apply_set` returns `None` when the calls
/// do not form an admissible simultaneity class.
pub trait SetSpec: Send + Sync {
    fn name(&self) -> &str;
    fn sequential(&self) -> &dyn SequentialSpec;
    fn initial_state(&self) -> State {
        self.sequential().initial_state()
    }
    /// Largest admissible class; bounds the subsets a checker enumerates.
    fn max_class_size(&self) -> usize {
        1
    }
    fn apply_set(&self, state: &State, calls: &[(&str, &Value)])
        -> Result<Option<(State, Vec<Value>)>>;
}

/// Run every step of one operation back to back. `None` if a step is not
/// enabled along the way.
pub fn run_to_completion(
    spec: &dyn EffectSpec,
    state: &State,
    op: &str,
    arg: &Value,
) -> Result<Option<(State, Value)>> {
    let mut locals = spec.initial_locals(op, arg)?;
    let mut state = state.clone();
    for i in 0..spec.step_count(op, arg)? {
        match spec.step(op, arg, i, &state, &locals)? {
            Some((s, l)) => {
                state = s;
                locals = l;
            }
            None => return Ok(None),
        }
    }
    let ret = spec.finish(op, arg, &locals)?;
    Ok(Some((state, ret)))
}

/// Index subsets of `0..n` with `1..=max` elements, smaller sets first and
/// lexicographic within a size.
pub(crate) fn subsets(n: usize, max: usize) -> Vec<Vec<usize>> {
    fn extend(n: usize, size: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            extend(n, size, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for size in 1..=max.min(n) {
        extend(n, size, 0, &mut Vec::new(), &mut out);
    }
    out
}
