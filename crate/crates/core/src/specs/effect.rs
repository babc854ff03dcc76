use std::collections::BTreeMap;
use std::ops::Range;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::sim::program::{eval_return, exec_data, Instr, ObjectDef, Program};
use crate::value::{Locals, State, Value};

use super::{EffectSpec, SequentialSpec};

/// One effect step per operation: the sequential transition itself.
#[derive(Clone)]
pub struct AtomicEffects {
    inner: Arc<dyn SequentialSpec>,
}

impl AtomicEffects {
    pub fn new(inner: Arc<dyn SequentialSpec>) -> Self {
        Self { inner }
    }
}

impl EffectSpec for AtomicEffects {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn initial_state(&self) -> State {
        self.inner.initial_state()
    }

    fn step_count(&self, _op: &str, _arg: &Value) -> Result<usize> {
        Ok(1)
    }

    fn initial_locals(&self, _op: &str, _arg: &Value) -> Result<Locals> {
        Ok(Locals::default())
    }

    fn step(
        &self,
        op: &str,
        arg: &Value,
        _index: usize,
        state: &State,
        _locals: &Locals,
    ) -> Result<Option<(State, Locals)>> {
        let (s, ret) = self.inner.apply(state, op, arg)?;
        Ok(Some((s, Locals(vec![ret]))))
    }

    fn finish(&self, _op: &str, _arg: &Value, locals: &Locals) -> Result<Value> {
        Ok(locals.0.first().cloned().unwrap_or_default())
    }
}

#[derive(Clone, Debug)]
struct Segments {
    steps: Vec<Range<usize>>,
    trailing: Range<usize>,
}

/// Effect specification derived from a lock-structured object: each
/// top-level critical section is one effect step.
///
/// Unlocked computation before a critical section belongs to that step;
/// trailing computation after the last one goes into the return assembly
/// unless it touches shared state, in which case it joins the last step. A
/// `wait` starts a new step that is only enabled once its guard holds.
#[derive(Clone, Debug)]
pub struct ProgramEffects {
    name: String,
    object: ObjectDef,
    segments: BTreeMap<String, Segments>,
}

fn segment(p: &Program) -> Result<Segments> {
    if p.has_nested_calls() {
        return Err(Error::UnsupportedProgram(p.name.clone()));
    }
    let body_end = p.instructions.len() - 1;
    let mut steps = Vec::new();
    let mut start = 0;
    let mut depth = 0usize;
    for (i, ins) in p.instructions[..body_end].iter().enumerate() {
        match ins {
            Instr::Lock(_) => depth += 1,
            Instr::Unlock(_) => {
                depth -= 1;
                if depth == 0 {
                    steps.push(start..i + 1);
                    start = i + 1;
                }
            }
            Instr::Wait { .. } if i > start => {
                steps.push(start..i);
                start = i;
            }
            _ => {}
        }
    }
    let touches_shared = p.instructions[start..body_end].iter().any(|i| {
        !matches!(i, Instr::Compute { .. })
    });
    let trailing = if steps.is_empty() {
        steps.push(start..body_end);
        body_end..body_end
    } else if touches_shared {
        steps.last_mut().expect("non-empty").end = body_end;
        body_end..body_end
    } else {
        start..body_end
    };
    Ok(Segments { steps, trailing })
}

fn to_ints(locals: &Locals) -> Vec<i64> {
    locals.0.iter().map(Value::int_or_zero).collect()
}

fn to_values(ints: Vec<i64>) -> Locals {
    Locals(ints.into_iter().map(Value::Int).collect())
}

impl ProgramEffects {
    pub fn from_object(name: impl Into<String>, object: ObjectDef) -> Result<Self> {
        let segments = object
            .ops
            .iter()
            .map(|(n, p)| Ok((n.clone(), segment(p)?)))
            .collect::<Result<_>>()?;
        Ok(Self { name: name.into(), object, segments })
    }

    pub fn object(&self) -> &ObjectDef {
        &self.object
    }

    fn lookup(&self, op: &str) -> Result<(&Program, &Segments)> {
        let p = self.object.op(op)?;
        Ok((p, &self.segments[op]))
    }
}

impl EffectSpec for ProgramEffects {
    fn name(&self) -> &str {
        &self.name
    }

    fn initial_state(&self) -> State {
        self.object.initial_state()
    }

    fn step_count(&self, op: &str, _arg: &Value) -> Result<usize> {
        Ok(self.lookup(op)?.1.steps.len())
    }

    fn initial_locals(&self, op: &str, arg: &Value) -> Result<Locals> {
        Ok(to_values(self.lookup(op)?.0.initial_locals(arg)))
    }

    fn step(
        &self,
        op: &str,
        _arg: &Value,
        index: usize,
        state: &State,
        locals: &Locals,
    ) -> Result<Option<(State, Locals)>> {
        let (p, seg) = self.lookup(op)?;
        let range = seg
            .steps
            .get(index)
            .ok_or_else(|| Error::MalformedInput(format!("`{op}` has no step {index}")))?;
        let mut shared = state.clone();
        let mut regs = to_ints(locals);
        for ins in &p.instructions[range.clone()] {
            match ins {
                Instr::Lock(_) | Instr::Unlock(_) | Instr::Signal(_) => {}
                Instr::Wait { guard, .. } => {
                    if shared.0[*guard] == 0 {
                        return Ok(None);
                    }
                }
                Instr::Read { .. } | Instr::Write { .. } | Instr::Compute { .. } => {
                    exec_data(ins, &mut shared, &mut regs)
                }
                Instr::Call { .. } | Instr::Return(_) => {
                    unreachable!("segments exclude calls and the return")
                }
            }
        }
        Ok(Some((shared, to_values(regs))))
    }

    fn finish(&self, op: &str, _arg: &Value, locals: &Locals) -> Result<Value> {
        let (p, seg) = self.lookup(op)?;
        let mut regs = to_ints(locals);
        let mut scratch = State::default();
        for ins in &p.instructions[seg.trailing.clone()] {
            exec_data(ins, &mut scratch, &mut regs);
        }
        match p.instructions.last() {
            Some(Instr::Return(r)) => Ok(eval_return(r, &regs)),
            _ => unreachable!("validated programs end in return"),
        }
    }
}

/// Effect specification of a single program, shared variables starting at
/// their declared values.
pub fn effect_spec_of_program(p: &Program) -> Result<ProgramEffects> {
    let object = ObjectDef {
        name: p.name.clone(),
        decls: p.decls.clone(),
        ops: BTreeMap::from([(p.name.clone(), p.clone())]),
    };
    ProgramEffects::from_object(p.name.clone(), object)
}

pub fn effect_spec_of_object(object: &ObjectDef) -> Result<ProgramEffects> {
    ProgramEffects::from_object(object.name.clone(), object.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::program::compile_program;
    use crate::specs::builtin::{LISTING1_OBJECT, LockObjectSpec};
    use crate::specs::run_to_completion;
    use crate::sim::program::compile_object;

    #[test]
    fn listing1_step_counts() {
        let obj = compile_object(LISTING1_OBJECT).unwrap();
        let d = effect_spec_of_program(obj.op("D").unwrap()).unwrap();
        assert_eq!(d.step_count("D", &Value::Nil).unwrap(), 2);
        let e = effect_spec_of_program(obj.op("E").unwrap()).unwrap();
        assert_eq!(e.step_count("E", &Value::Nil).unwrap(), 1);
    }

    #[test]
    fn lock_free_program_is_one_step() {
        let p = compile_program("op P { compute(a, arg * 3); return(a); }").unwrap();
        let eff = effect_spec_of_program(&p).unwrap();
        assert_eq!(eff.step_count("P", &Value::Nil).unwrap(), 1);
        let (_, v) = run_to_completion(&eff, &eff.initial_state(), "P", &Value::Int(7)).unwrap().unwrap();
        assert_eq!(v, Value::Int(21));
    }

    #[test]
    fn nested_call_is_unsupported() {
        let p = compile_program("op F { call(agg, G, 0, a); return(ok); }").unwrap();
        assert!(matches!(effect_spec_of_program(&p), Err(Error::UnsupportedProgram(_))));
    }

    #[test]
    fn trailing_computation_goes_to_return() {
        let p = compile_program("op P { lock(m); read(x, a); unlock(m); compute(b, a + 10); return(b); }")
            .unwrap();
        let eff = effect_spec_of_program(&p).unwrap();
        assert_eq!(eff.step_count("P", &Value::Nil).unwrap(), 1);
        let (_, v) = run_to_completion(&eff, &State(vec![5]), "P", &Value::Nil).unwrap().unwrap();
        assert_eq!(v, Value::Int(15));
    }

    #[test]
    fn wait_step_blocks_on_guard() {
        let p = compile_program(
            "op C { lock(m); wait(c, m, ready); read(item, v); unlock(m); return(v); }",
        )
        .unwrap();
        let eff = effect_spec_of_program(&p).unwrap();
        assert_eq!(eff.step_count("C", &Value::Nil).unwrap(), 2);
        // vars: ready, item
        assert!(run_to_completion(&eff, &State(vec![0, 9]), "C", &Value::Nil).unwrap().is_none());
        let (_, v) = run_to_completion(&eff, &State(vec![1, 9]), "C", &Value::Nil).unwrap().unwrap();
        assert_eq!(v, Value::Int(9));
    }

    #[test]
    fn consecutive_steps_match_sequential_spec() {
        let obj = compile_object(LISTING1_OBJECT).unwrap();
        let eff = effect_spec_of_object(&obj).unwrap();
        let seq = LockObjectSpec;
        for s in -5..20 {
            let state = State::single(s);
            for op in ["D", "E"] {
                let expected = seq.apply(&state, op, &Value::Nil).unwrap();
                let got = run_to_completion(&eff, &state, op, &Value::Nil).unwrap().unwrap();
                assert_eq!(got, expected, "op {op} from s={s}");
            }
        }
    }
}
