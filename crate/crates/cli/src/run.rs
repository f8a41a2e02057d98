//! Input resolution, output writing and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// Failure of a subcommand, mapped onto an exit code.
#[derive(Debug)]
pub enum CliError {
    Core(bellmark::Error),
    /// Bad command-line or file input; `field` names what to fix.
    Input { field: String, reason: String },
    /// Output could not be written.
    Output(String),
}

impl CliError {
    pub fn input(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Input {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if !e.is_validation() => 1,
            CliError::Core(_) | CliError::Input { .. } => 2,
            CliError::Output(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Input { field, reason } => write!(f, "invalid {field}: {reason}"),
            CliError::Output(msg) => write!(f, "cannot write output: {msg}"),
        }
    }
}

impl From<bellmark::Error> for CliError {
    fn from(e: bellmark::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Clone, Debug, Serialize)]
pub struct InputDigest {
    pub name: String,
    pub source: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub params: Value,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<InputDigest>,
    pub version: String,
    pub wall_time_secs: f64,
    pub outputs: Vec<String>,
    /// Anything derived during the run worth keeping, such as settings found
    /// by the optimizer.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, Value>,
}

/// Bookkeeping for one invocation.
pub struct Run {
    subcommand: String,
    params: Value,
    seeds: BTreeMap<String, u64>,
    inputs: Vec<InputDigest>,
    notes: BTreeMap<String, Value>,
    started: Instant,
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Run {
    pub fn new(subcommand: &str, params: &impl Serialize) -> Self {
        Run {
            subcommand: subcommand.to_string(),
            params: serde_json::to_value(params).unwrap_or(Value::Null),
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            notes: BTreeMap::new(),
            started: Instant::now(),
        }
    }

    pub fn seed(&mut self, name: &str, seed: u64) {
        self.seeds.insert(name.to_string(), seed);
    }

    pub fn note(&mut self, name: &str, value: Value) {
        self.notes.insert(name.to_string(), value);
    }

    /// Text of an argument that is either inline JSON (starting with `{`)
    /// or a path to a JSON file.
    pub fn read_input(&mut self, name: &str, arg: &str) -> CliResult<String> {
        let (text, source) = if arg.trim_start().starts_with('{') {
            (arg.to_string(), "inline".to_string())
        } else {
            let text = fs::read_to_string(arg).map_err(|e| CliError::input(name, format!("cannot read {arg}: {e}")))?;
            (text, format!("file:{arg}"))
        };
        self.inputs.push(InputDigest {
            name: name.to_string(),
            source,
            sha256: hex_digest(text.as_bytes()),
        });
        Ok(text)
    }

    /// Write `output` to `out` and the manifest next to it.
    pub fn finish(self, out: Option<&Path>, output: &Value) -> CliResult<()> {
        let Some(out) = out else {
            return Ok(());
        };
        write_json(out, output)?;
        let manifest = RunManifest {
            subcommand: self.subcommand,
            params: self.params,
            seeds: self.seeds,
            inputs: self.inputs,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_secs: self.started.elapsed().as_secs_f64(),
            outputs: vec![out.display().to_string()],
            notes: self.notes,
        };
        write_json(&manifest_path(out), &json!(manifest))
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}
