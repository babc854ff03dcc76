//! Scenario definition files (TOML): configuration, hosted object and
//! workload.
//!
//! ```toml
//! spec = "counter"            # or: program = """object ... { ... }"""
//!
//! [config]
//! n = 3
//! f = 1
//! failure_model = "crash"
//! ordering = "total-order"
//! scheduler = "lock-level"
//! seed = 7
//!
//! [[workload.requests]]
//! id = 0
//! client = 0
//! op = "inc"
//! ```

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specs::spec_bundle;

use super::config::SimConfig;
use super::machine::ReplicatedObject;
use super::program::compile_object;
use super::smr::{run_smr, SimOutput, Workload};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub config: SimConfig,
    /// Name of a built-in sequential specification run atomically.
    #[serde(default)]
    pub spec: Option<String>,
    /// Program object source.
    #[serde(default)]
    pub program: Option<String>,
    pub workload: Workload,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::MalformedInput(format!("scenario file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn object(&self) -> Result<ReplicatedObject> {
        match (&self.spec, &self.program) {
            (Some(name), None) => Ok(ReplicatedObject::Atomic(spec_bundle(name)?.sequential)),
            (None, Some(src)) => Ok(ReplicatedObject::Program(Arc::new(compile_object(src)?))),
            _ => Err(Error::MalformedInput("scenario needs exactly one of `spec` and `program`".into())),
        }
    }

    pub fn run(&self) -> Result<SimOutput> {
        run_smr(&self.config, &self.workload, &self.object()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::Value;

    #[test]
    fn counter_scenario_runs() {
        let text = r#"
spec = "counter"

[config]
n = 3
f = 1
failure_model = "crash"
ordering = { partial-order = { commuting = [["inc", "inc"]] } }
scheduler = "lock-level"
seed = 7

[[workload.requests]]
id = 0
client = 0
op = "inc"

[[workload.requests]]
id = 1
client = 1
op = "inc"

[[workload.requests]]
id = 2
client = 0
op = "get"
"#;
        let s = ScenarioFile::parse(text).unwrap();
        let out = s.run().unwrap();
        let get = out.client_history.op(crate::history::OpId(2)).unwrap();
        assert_eq!(get.ret, Some(Value::Int(2)));
    }

    #[test]
    fn both_sources_is_an_error() {
        let text = "spec = \"counter\"\nprogram = \"x\"\n[config]\nn = 1\nf = 0\nfailure_model = \"crash\"\nordering = \"total-order\"\nscheduler = \"sequential\"\nseed = 0\n[workload]\nrequests = []\n";
        assert!(ScenarioFile::parse(text).unwrap().object().is_err());
    }
}
