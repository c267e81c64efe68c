use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;

use serde_json::Value;
use thiserror::Error;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_INVARIANT: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, files or values; exit code 3.
    #[error("config error: {0}")]
    Config(String),
    /// A numerical computation broke down; exit code 2.
    #[error("invariant failure: {0}")]
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Invariant(_) => EXIT_INVARIANT,
        }
    }

    pub fn field(name: &str, msg: impl std::fmt::Display) -> Self {
        CliError::Config(format!("{name}: {msg}"))
    }
}

impl From<mdisp::Error> for CliError {
    fn from(e: mdisp::Error) -> Self {
        use mdisp::Error as E;
        match e {
            E::InvalidParameter(_)
            | E::NotAccretive { .. }
            | E::DimensionMismatch { .. }
            | E::NotContraction { .. }
            | E::NotSymmetricNonnegative(_) => CliError::Config(e.to_string()),
            _ => CliError::Invariant(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Replaces `--config FILE` by the flags it holds. The file is an object
/// with a `command` string (`"impedance classify"`) and one key per flag;
/// `true` becomes a bare switch, arrays repeat the flag.
pub fn expand_config(args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let Some(pos) = args.iter().position(|a| a == "--config") else {
        if let Some((i, a)) = args.iter().enumerate().find_map(|(i, a)| {
            a.to_str()
                .and_then(|s| s.strip_prefix("--config="))
                .map(|p| (i, p.to_string()))
        }) {
            let mut rest = args.clone();
            rest.remove(i);
            return splice(rest, i, &a);
        }
        return Ok(args);
    };
    let path = args
        .get(pos + 1)
        .and_then(|p| p.to_str())
        .ok_or_else(|| CliError::field("--config", "expects a file path"))?
        .to_string();
    let mut rest = args;
    rest.drain(pos..pos + 2);
    splice(rest, pos, &path)
}

fn splice(mut rest: Vec<OsString>, at: usize, path: &str) -> CliResult<Vec<OsString>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::field("--config", format!("{path}: {e}")))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::field("--config", format!("{path}: {e}")))?;
    let flags = config_argv(&value)?;
    let tail = rest.split_off(at.min(rest.len()));
    rest.extend(flags.into_iter().map(OsString::from));
    rest.extend(tail);
    Ok(rest)
}

pub fn config_argv(value: &Value) -> CliResult<Vec<String>> {
    let obj = value
        .as_object()
        .ok_or_else(|| CliError::field("--config", "top level must be an object"))?;
    let command = obj
        .get("command")
        .and_then(Value::as_str)
        .ok_or_else(|| CliError::field("--config", "missing string field `command`"))?;
    let mut out: Vec<String> = command.split_whitespace().map(str::to_string).collect();
    for (key, v) in obj {
        if key == "command" {
            continue;
        }
        let flag = if key == "K" {
            "--K".to_string()
        } else {
            format!("--{}", key.replace('_', "-"))
        };
        let items: Vec<&Value> = match v {
            Value::Array(a) => a.iter().collect(),
            other => vec![other],
        };
        for item in items {
            match item {
                Value::Bool(true) => out.push(flag.clone()),
                Value::Bool(false) | Value::Null => {}
                Value::String(s) => {
                    out.push(flag.clone());
                    out.push(s.clone());
                }
                Value::Number(n) => {
                    out.push(flag.clone());
                    out.push(n.to_string());
                }
                _ => {
                    return Err(CliError::field(
                        &format!("--config.{key}"),
                        "values must be strings, numbers, booleans or arrays of those",
                    ))
                }
            }
        }
    }
    Ok(out)
}

/// Applies `NAME=VALUE` overrides to the default tolerance table.
pub fn tolerances(
    defaults: &[(&str, f64)],
    overrides: &[String],
) -> CliResult<BTreeMap<String, f64>> {
    let mut table: BTreeMap<String, f64> =
        defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    for o in overrides {
        let (name, value) = o
            .split_once('=')
            .ok_or_else(|| CliError::field("--tol", format!("`{o}` is not NAME=VALUE")))?;
        let name = name.trim();
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::field("--tol", format!("`{value}` is not a number")))?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(CliError::field(
                "--tol",
                format!("tolerance `{name}` must be positive and finite, got {v}"),
            ));
        }
        match table.get_mut(name) {
            Some(slot) => *slot = v,
            None => {
                let known: Vec<&str> = defaults.iter().map(|(k, _)| *k).collect();
                return Err(CliError::field(
                    "--tol",
                    format!("unknown tolerance `{name}` (known: {})", known.join(", ")),
                ));
            }
        }
    }
    Ok(table)
}

/// Parses `key=value,key=value` into an ordered map.
pub fn key_values(field: &str, s: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    if s.trim().is_empty() {
        return Ok(out);
    }
    for part in s.split(',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| CliError::field(field, format!("`{part}` is not key=value")))?;
        if out
            .insert(k.trim().to_string(), v.trim().to_string())
            .is_some()
        {
            return Err(CliError::field(
                field,
                format!("`{}` given twice", k.trim()),
            ));
        }
    }
    Ok(out)
}

pub fn take_f64(
    field: &str,
    map: &mut BTreeMap<String, String>,
    key: &str,
) -> CliResult<Option<f64>> {
    map.remove(key)
        .map(|v| {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| {
                    CliError::field(field, format!("`{key}={v}` is not a finite number"))
                })
        })
        .transpose()
}

pub fn take_u64(
    field: &str,
    map: &mut BTreeMap<String, String>,
    key: &str,
) -> CliResult<Option<u64>> {
    map.remove(key)
        .map(|v| {
            v.parse::<u64>().map_err(|_| {
                CliError::field(field, format!("`{key}={v}` is not a nonnegative integer"))
            })
        })
        .transpose()
}

pub fn require_f64(field: &str, map: &mut BTreeMap<String, String>, key: &str) -> CliResult<f64> {
    take_f64(field, map, key)?.ok_or_else(|| CliError::field(field, format!("missing `{key}=`")))
}

pub fn reject_rest(field: &str, map: &BTreeMap<String, String>) -> CliResult<()> {
    match map.keys().next() {
        Some(k) => Err(CliError::field(field, format!("unknown key `{k}`"))),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn config_expands_to_flags() {
        let v = json!({
            "command": "impedance classify",
            "surface": "sphere",
            "lmax": 4,
            "z": "const:1.0",
            "timing": true,
            "matrices": false,
            "tol": ["margin=1e-9"]
        });
        let argv = config_argv(&v).unwrap();
        assert_eq!(&argv[..2], ["impedance", "classify"]);
        let joined = argv.join(" ");
        assert!(joined.contains("--lmax 4"));
        assert!(joined.contains("--timing"));
        assert!(!joined.contains("--matrices"));
        assert!(joined.contains("--tol margin=1e-9"));
    }

    #[test]
    fn tolerance_overrides_are_validated() {
        let d = [("margin", 1e-10)];
        assert_eq!(
            tolerances(&d, &["margin=1e-6".into()]).unwrap()["margin"],
            1e-6
        );
        assert!(tolerances(&d, &["margin=0".into()]).is_err());
        assert!(tolerances(&d, &["margin=-1".into()]).is_err());
        assert!(tolerances(&d, &["other=1".into()]).is_err());
        assert!(tolerances(&d, &["margin".into()]).is_err());
    }

    #[test]
    fn key_values_reject_duplicates() {
        assert!(key_values("--z", "s=1,s=2").is_err());
        assert_eq!(key_values("--z", "s=1, seed=3").unwrap()["seed"], "3");
    }
}
