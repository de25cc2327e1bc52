//! Scripted sessions: schema, compilation, the multi-site runner, built-in
//! scenarios, sweeps and interactive sessions.

mod compile;
pub mod library;
mod live;
mod metrics;
mod runner;
mod script;
mod site;
pub mod sweep;

use std::path::Path;

pub use compile::{compile, straight_frames, Action, Resolver, TimedAction};
pub use live::{LiveSession, UiError};
pub use metrics::{
    Checkpoint, Golden, MoveRecord, QuiescentRecord, RaceRecord, RelayMetrics, RunMetrics, RunReport,
};
pub use runner::{run_script, RunError, Runner};
pub use script::{
    BindingSpec, EventKind, EventSpec, ObjectSpec, Parameters, PoseRef, ProxySpec, ScenarioName,
    ScenarioScript, ScriptError, TouchSurface, UserSpec,
};
pub use site::{DisplayItem, SiteAgent, Target};

pub fn load_script(path: &Path) -> Result<ScenarioScript, ScriptError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScriptError {
        violations: vec![format!("{}: {e}", path.display())],
    })?;
    let script = ScenarioScript::from_json(&text)?;
    script.validate()?;
    Ok(script)
}
