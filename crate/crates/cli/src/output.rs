//! Collects a command's files in memory and writes them at the end.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use prime_sphere::formats::{format_float, Cell, Table};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{OutputFormat, RunConfig};
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Default)]
pub struct Outputs {
    files: BTreeMap<String, String>,
}

impl Outputs {
    pub fn table(&mut self, stem: &str, table: &Table, format: OutputFormat) -> Result<(), CliError> {
        match format {
            OutputFormat::Csv => {
                self.files.insert(format!("{stem}.csv"), table.to_csv()?);
            }
            OutputFormat::Json => {
                self.files.insert(format!("{stem}.json"), table_json(table)?);
            }
        }
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let v = serde_json::to_value(value).map_err(|e| CliError::Config(e.to_string()))?;
        check_json_finite(&v, name)?;
        let mut text = serde_json::to_string_pretty(&v).map_err(|e| CliError::Config(e.to_string()))?;
        text.push('\n');
        self.files.insert(name.to_string(), text);
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.files.keys()
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.get(name).map(String::as_str)
    }

    /// Writes the recorded config and every file under `config.out`.
    pub fn write(&self, command: &str, config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
        let dir = &config.out;
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| CliError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let mut written = Vec::new();
        let recorded = format!("# prime-sphere {command}\n{}", config.render());
        for (name, body) in std::iter::once(("config.txt", &recorded)).chain(self.files.iter().map(|(k, v)| (k.as_str(), v))) {
            let path = dir.join(name);
            fs::write(&path, body).map_err(io(&path))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn check_json_finite(v: &Value, name: &str) -> Result<(), CliError> {
    // serde_json writes non-finite floats as null; absent optionals are skipped, so null means NaN or Inf
    match v {
        Value::Null => Err(CliError::Core(prime_sphere::Error::Domain(format!("non-finite or missing value in {name}")))),
        Value::Array(a) => a.iter().try_for_each(|x| check_json_finite(x, name)),
        Value::Object(o) => o.values().try_for_each(|x| check_json_finite(x, name)),
        _ => Ok(()),
    }
}

fn table_json(t: &Table) -> Result<String, CliError> {
    // render through CSV first so ragged rows and non-finite values fail identically
    t.to_csv()?;
    let rows: Vec<Value> = t
        .rows
        .iter()
        .map(|r| {
            Value::Array(
                r.iter()
                    .map(|c| match c {
                        Cell::Int(v) => json!(v),
                        Cell::Float(v) => serde_json::from_str(&format_float(*v)).unwrap_or(Value::Null),
                        Cell::Bool(b) => json!(b),
                        Cell::Text(s) => json!(s),
                    })
                    .collect(),
            )
        })
        .collect();
    let doc = json!({ "comments": t.comments, "columns": t.header, "rows": rows });
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Config(e.to_string()))?;
    text.push('\n');
    Ok(text)
}
