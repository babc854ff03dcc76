use std::sync::Arc;

use crate::error::{Error, Result};

use super::builtin::{
    lock_object_spec, AggregateSpec, CompositeEffects, CompositeSpec, CounterSpec, ExchangerSpec, FifoQueueSpec,
    RegisterSpec,
};
use super::{
    AtomicEffects, EffectAutomaton, EffectSpec, IntervalSpec, SequentialSpec, SetAutomaton,
    SetSpec, SingletonSets,
};

/// Names accepted by [`spec_bundle`].
pub const SPEC_NAMES: [&str; 7] = [
    "register",
    "lock-object",
    "counter",
    "fifo-queue",
    "exchanger",
    "nested-composite",
    "nested-aggregate",
];

/// Compatible specifications of one object at every hierarchy level.
#[derive(Clone)]
pub struct SpecBundle {
    pub name: String,
    pub sequential: Arc<dyn SequentialSpec>,
    pub set: Arc<dyn SetSpec>,
    pub effect: Arc<dyn EffectSpec>,
    pub interval: Arc<dyn IntervalSpec>,
}

impl SpecBundle {
    /// Singleton sets, one-step effects and the automaton derived from them.
    pub fn from_sequential(sequential: Arc<dyn SequentialSpec>) -> Self {
        let effect: Arc<dyn EffectSpec> = Arc::new(AtomicEffects::new(sequential.clone()));
        Self::with_effects(sequential, effect)
    }

    /// Singleton sets plus the given effect form; the interval automaton is
    /// derived from the effect form.
    pub fn with_effects(sequential: Arc<dyn SequentialSpec>, effect: Arc<dyn EffectSpec>) -> Self {
        Self {
            name: sequential.name().to_string(),
            set: Arc::new(SingletonSets::new(sequential.clone())),
            interval: Arc::new(EffectAutomaton::new(effect.clone())),
            effect,
            sequential,
        }
    }
}

pub fn spec_bundle(name: &str) -> Result<SpecBundle> {
    let seq = |s: Arc<dyn SequentialSpec>| SpecBundle::from_sequential(s);
    Ok(match name {
        "register" => seq(Arc::new(RegisterSpec)),
        "counter" => seq(Arc::new(CounterSpec)),
        "fifo-queue" => seq(Arc::new(FifoQueueSpec)),
        "nested-composite" => {
            SpecBundle::with_effects(Arc::new(CompositeSpec), Arc::new(CompositeEffects))
        }
        "nested-aggregate" => seq(Arc::new(AggregateSpec)),
        "lock-object" => {
            let (s, e) = lock_object_spec();
            SpecBundle::with_effects(Arc::new(s), Arc::new(e))
        }
        "exchanger" => {
            let x = Arc::new(ExchangerSpec);
            SpecBundle {
                name: name.into(),
                sequential: x.clone(),
                set: x.clone(),
                effect: Arc::new(AtomicEffects::new(x.clone())),
                interval: Arc::new(SetAutomaton::new(x)),
            }
        }
        other => return Err(Error::UnknownName(other.to_string())),
    })
}
