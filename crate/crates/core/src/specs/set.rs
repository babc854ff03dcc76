use std::sync::Arc;

use crate::error::Result;
use crate::value::{State, Value};

use super::{SequentialSpec, SetSpec};

/// Set specification whose only admissible classes are singletons; it
/// accepts exactly what the wrapped sequential specification accepts.
#[derive(Clone)]
pub struct SingletonSets {
    inner: Arc<dyn SequentialSpec>,
}

impl SingletonSets {
    pub fn new(inner: Arc<dyn SequentialSpec>) -> Self {
        Self { inner }
    }
}

impl SetSpec for SingletonSets {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn sequential(&self) -> &dyn SequentialSpec {
        self.inner.as_ref()
    }

    fn apply_set(
        &self,
        state: &State,
        calls: &[(&str, &Value)],
    ) -> Result<Option<(State, Vec<Value>)>> {
        match calls {
            [(op, arg)] => {
                let (s, r) = self.inner.apply(state, op, arg)?;
                Ok(Some((s, vec![r])))
            }
            _ => Ok(None),
        }
    }
}
