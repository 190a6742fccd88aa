//! Run configuration: defaults, then the `--config` file, then flags.

use crate::error::{CliError, CliResult};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use std::fs;
use std::path::{Path, PathBuf};

/// Keys whose object values merge one level deep instead of being replaced.
const SECTIONS: &[&str] = &["solver"];

fn merge(base: &mut Map<String, Value>, over: Map<String, Value>) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Object(b)), Value::Object(o)) if SECTIONS.contains(&k.as_str()) => {
                b.extend(o);
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn as_object(v: Value, what: &str) -> CliResult<Map<String, Value>> {
    match v {
        Value::Object(m) => Ok(m),
        _ => Err(CliError::Parse(format!("{what} must be a JSON object"))),
    }
}

/// Layers `C::default()`, the config file and the flag values, then
/// deserializes. A `"command"` key in the file must match `command`.
pub fn resolve<C>(command: &str, file: Option<&Path>, flags: Value) -> CliResult<C>
where
    C: Default + Serialize + DeserializeOwned,
{
    let mut base = as_object(serde_json::to_value(C::default())?, "defaults")?;
    if let Some(path) = file {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("config {}: {e}", path.display())))?;
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Parse(format!("config {}: {e}", path.display())))?;
        let mut m = as_object(v, "config file")?;
        if let Some(c) = m.remove("command") {
            if c.as_str() != Some(command) {
                return Err(CliError::Parse(format!(
                    "config file is for command {c}, not \"{command}\""
                )));
            }
        }
        merge(&mut base, m);
    }
    merge(&mut base, as_object(flags, "flags")?);
    serde_json::from_value(Value::Object(base)).map_err(|e| CliError::Parse(format!("config: {e}")))
}

/// Output directory with the fixed file names.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_json(&self, name: &str, v: &Value) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(v)?;
        text.push('\n');
        fs::write(self.path(name), text)?;
        Ok(())
    }

    /// Writes `resolved_config.json` with the command name added.
    pub fn write_resolved<C: Serialize>(&self, command: &str, cfg: &C) -> CliResult<()> {
        let mut m = as_object(serde_json::to_value(cfg)?, "config")?;
        m.insert("command".into(), Value::String(command.into()));
        self.write_json("resolved_config.json", &Value::Object(m))
    }

    pub fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> CliResult<()> {
        let mut s = header.join(",");
        s.push('\n');
        for r in rows {
            let cells: Vec<String> = r.iter().map(|v| format_number(*v)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        fs::write(self.path(name), s)?;
        Ok(())
    }
}

/// Shortest round-trip decimal, with `inf`, `-inf` and `nan` spelled out.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v}")
    }
}

/// JSON number, or the strings `"inf"`, `"-inf"`, `"nan"` that JSON cannot hold.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        Value::from(v)
    } else {
        Value::String(format_number(v))
    }
}

/// Adds the file name to I/O failures of a core reader.
pub fn with_path<T>(path: &Path, r: polyreg_core::Result<T>) -> CliResult<T> {
    r.map_err(|e| match e {
        polyreg_core::Error::Io(io) => CliError::Parse(format!("{}: {io}", path.display())),
        other => CliError::Core(other),
    })
}

/// Parses `"3,-4"` into a vector.
pub fn parse_vector(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Parse(format!("bad vector entry {t:?} in {s:?}")))
        })
        .collect()
}

/// Parses `"8,16,32"` into sizes.
pub fn parse_sizes(s: &str) -> CliResult<Vec<usize>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<usize>()
                .map_err(|_| CliError::Parse(format!("bad size {t:?} in {s:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;
    use serde_json::json;

    #[derive(Default, Serialize, Deserialize, Debug, PartialEq)]
    #[serde(default, deny_unknown_fields)]
    struct Demo {
        a: f64,
        b: String,
        solver: Inner,
    }

    #[derive(Default, Serialize, Deserialize, Debug, PartialEq)]
    #[serde(default, deny_unknown_fields)]
    struct Inner {
        tol: f64,
        max_iter: usize,
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("c.json");
        fs::write(&f, r#"{"command":"demo","a":1.5,"b":"x","solver":{"tol":0.1,"max_iter":7}}"#).unwrap();
        let d: Demo = resolve("demo", Some(&f), json!({"b":"y","solver":{"tol":0.2}})).unwrap();
        assert_eq!(d.a, 1.5);
        assert_eq!(d.b, "y");
        assert_eq!(d.solver, Inner { tol: 0.2, max_iter: 7 });
    }

    #[test]
    fn rejects_unknown_keys_and_wrong_command() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("c.json");
        fs::write(&f, r#"{"zzz":1}"#).unwrap();
        assert!(matches!(resolve::<Demo>("demo", Some(&f), json!({})), Err(CliError::Parse(_))));
        fs::write(&f, r#"{"command":"other"}"#).unwrap();
        assert!(matches!(resolve::<Demo>("demo", Some(&f), json!({})), Err(CliError::Parse(_))));
    }

    #[test]
    fn vectors_and_sentinels() {
        assert_eq!(parse_vector("3, -4").unwrap(), vec![3.0, -4.0]);
        assert!(parse_vector("3,x").is_err());
        assert_eq!(num(f64::INFINITY), json!("inf"));
        assert_eq!(format_number(7.0), "7");
    }
}
