//! Exit codes, JSON helpers and the run manifest.

use std::fmt;
use std::path::{Path, PathBuf};

use circle_at::{EnergyError, ExampleError, GridError, LiftingError, SolverError, TransportError};
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Param(String),
    Lifting(String),
    Budget(String),
    Internal(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Param(_) => 2,
            CliError::Lifting(_) => 3,
            CliError::Budget(_) => 4,
            CliError::Internal(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m)
            | CliError::Param(m)
            | CliError::Lifting(m)
            | CliError::Budget(m)
            | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<GridError> for CliError {
    fn from(e: GridError) -> Self {
        CliError::Param(e.to_string())
    }
}

impl From<EnergyError> for CliError {
    fn from(e: EnergyError) -> Self {
        CliError::Param(e.to_string())
    }
}

impl From<TransportError> for CliError {
    fn from(e: TransportError) -> Self {
        match e {
            TransportError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            _ => CliError::Param(e.to_string()),
        }
    }
}

impl From<LiftingError> for CliError {
    fn from(e: LiftingError) -> Self {
        match e {
            LiftingError::InconsistentCuts { .. } | LiftingError::InvalidLifting(_) => CliError::Lifting(e.to_string()),
            LiftingError::Transport(t) => t.into(),
            _ => CliError::Param(e.to_string()),
        }
    }
}

impl From<ExampleError> for CliError {
    fn from(e: ExampleError) -> Self {
        match e {
            ExampleError::Lifting(l) => l.into(),
            _ => CliError::Param(e.to_string()),
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::InvalidConfig(_) | SolverError::DomainMismatch => CliError::Param(e.to_string()),
            SolverError::Energy(x) => x.into(),
            SolverError::Lifting(x) => x.into(),
            SolverError::CgNotConverged { .. } | SolverError::EnergyIncrease { .. } => {
                CliError::Internal(e.to_string())
            }
        }
    }
}

/// `path` with `suffix` appended to the full file name.
pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes `value` as pretty JSON with `schema_version` as the first key.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = to_json(value)?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let v = serde_json::to_value(value).map_err(|e| CliError::Internal(e.to_string()))?;
    let mut out = serde_json::Map::new();
    out.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
    match v {
        Value::Object(m) => out.extend(m),
        other => {
            out.insert("data".into(), other);
        }
    }
    serde_json::to_string_pretty(&Value::Object(out)).map_err(|e| CliError::Internal(e.to_string()))
}

pub fn read_json(path: &Path) -> Result<Value, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Param(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Param(format!("{}: {e}", path.display())))
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub wall_time_s: f64,
    pub version: String,
    /// The tool itself draws no random numbers.
    pub seed: Option<u64>,
}

impl RunManifest {
    pub fn new<P: Serialize>(command: &str, params: &P) -> Self {
        Self {
            command: command.to_string(),
            parameters: serde_json::to_value(params).unwrap_or(Value::Null),
            inputs: Vec::new(),
            outputs: Vec::new(),
            wall_time_s: 0.0,
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let budget: CliError = TransportError::BudgetExceeded { got: 9, max: 8 }.into();
        assert_eq!(budget.code(), 4);
        let outside: CliError = TransportError::OutsideDomain(2.0, 0.0).into();
        assert_eq!(outside.code(), 2);
        let cuts: CliError =
            LiftingError::InconsistentCuts { edge: circle_at::Edge::new(0, 0, circle_at::Axis::X), mismatch: 1.0 }
                .into();
        assert_eq!(cuts.code(), 3);
        let cfg: CliError = SolverError::InvalidConfig("x".into()).into();
        assert_eq!((cfg.code(), cfg.to_string().contains('x')), (2, true));
    }

    #[test]
    fn schema_version_leads() {
        let s = to_json(&serde_json::json!({ "b": 1, "a": 2 })).unwrap();
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v.as_object().unwrap().keys().next().unwrap(), "schema_version");
        let wrapped: Value = serde_json::from_str(&to_json(&[1, 2]).unwrap()).unwrap();
        assert_eq!(wrapped["data"], serde_json::json!([1, 2]));
        assert_eq!(with_suffix(Path::new("out/a.csv"), ".json"), PathBuf::from("out/a.csv.json"));
    }
}
