//! Named, reproducible experiment runners over the cqed engines, a parallel
//! sweep engine keyed by grid index, and CSV/JSON persistence.

pub mod config;
pub mod persist;
pub mod presets;
pub mod runners;
pub mod spec;
pub mod summary;
pub mod sweep;
pub mod table;

pub use config::{load_file, parse_json, parse_toml, Overrides, ScenarioHint};
pub use persist::{write, Written};
pub use presets::preset;
pub use spec::{Axis, EngineConfig, EngineKind, Scenario, ScenarioSpec};
pub use sweep::{run, ScenarioResult};
pub use table::{Cell, Table};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("config error: {0}")]
    Config(String),
    #[error("output error: {0}")]
    Io(String),
}
