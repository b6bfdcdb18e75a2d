//! `--config` expansion: the file's keys become flags inserted right after the
//! subcommand, ahead of the user's own flags, so explicit flags win.

use std::ffi::OsString;
use std::path::Path;

use serde_json::Value;

use crate::args::SUBCOMMANDS;
use crate::error::CliError;

/// Flags taken from a config file, plus the subcommand a manifest recorded.
#[derive(Debug, Default, PartialEq)]
pub struct ConfigArgs {
    pub command: Option<String>,
    pub flags: Vec<String>,
}

fn flag_value(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Array(items) => {
            Some(items.iter().filter_map(flag_value).collect::<Vec<_>>().join(","))
        }
        _ => None,
    }
}

fn flags_from_map(map: &serde_json::Map<String, Value>) -> Vec<String> {
    let mut flags = Vec::new();
    for (key, value) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            Value::Bool(true) => flags.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) if items.is_empty() => {}
            other => {
                if let Some(v) = flag_value(other) {
                    flags.push(format!("{flag}={v}"));
                }
            }
        }
    }
    flags
}

/// Reads a TOML table or a JSON run manifest (`{"command": ..., "args": {...}}`).
pub fn read_config(path: &Path) -> Result<ConfigArgs, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))?;
    let bad = |e: String| CliError::Usage(format!("--config {}: {e}", path.display()));
    let value: Value = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?
    } else {
        let table: toml::Table = toml::from_str(&text).map_err(|e| bad(e.to_string()))?;
        serde_json::to_value(table).map_err(|e| bad(e.to_string()))?
    };
    let Value::Object(obj) = value else {
        return Err(bad("expected a table of flags".into()));
    };
    match (obj.get("command"), obj.get("args")) {
        (Some(Value::String(cmd)), Some(Value::Object(args))) => {
            Ok(ConfigArgs { command: Some(cmd.clone()), flags: flags_from_map(args) })
        }
        _ => Ok(ConfigArgs { command: None, flags: flags_from_map(&obj) }),
    }
}

/// Removes `--config` from `argv` and splices the file's flags in after the subcommand.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut out: Vec<OsString> = Vec::with_capacity(argv.len());
    let mut config = None;
    let mut it = argv.into_iter();
    if let Some(bin) = it.next() {
        out.push(bin);
    }
    while let Some(arg) = it.next() {
        let s = arg.to_string_lossy();
        if s == "--" {
            out.push(arg);
            out.extend(it.by_ref());
            break;
        }
        if s == "--config" {
            let path = it.next().ok_or_else(|| CliError::Usage("--config needs a file".into()))?;
            config = Some(std::path::PathBuf::from(path));
        } else if let Some(path) = s.strip_prefix("--config=") {
            config = Some(path.into());
        } else {
            out.push(arg);
        }
    }
    let Some(path) = config else {
        return Ok(out);
    };
    let cfg = read_config(&path)?;
    let sub_pos = out.iter().position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()));
    let insert_at = match (sub_pos, &cfg.command) {
        (Some(pos), Some(cmd)) if out[pos].to_string_lossy() != cmd.as_str() => {
            return Err(CliError::Usage(format!(
                "{} records a {cmd:?} run but the command line asks for {:?}",
                path.display(),
                out[pos].to_string_lossy()
            )));
        }
        (Some(pos), _) => pos + 1,
        (None, Some(cmd)) => {
            out.insert(1, cmd.into());
            2
        }
        (None, None) => return Err(CliError::Usage("a subcommand is required".into())),
    };
    for (k, flag) in cfg.flags.into_iter().enumerate() {
        out.insert(insert_at + k, flag.into());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn toml_keys_become_flags() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "p = 0.001\nseed = 7\nno_bias = true\nupdate-mode = \"full-information\"\ngrid = [0, 0.5]\n").unwrap();
        let got = expand(os(&["bin", "train", "--config", p.to_str().unwrap(), "--seed", "9"])).unwrap();
        let got: Vec<String> = got.iter().map(|s| s.to_string_lossy().into_owned()).collect();
        assert_eq!(got[..2], ["bin", "train"]);
        assert!(got.contains(&"--p=0.001".to_string()));
        assert!(got.contains(&"--no-bias".to_string()));
        assert!(got.contains(&"--grid=0,0.5".to_string()));
        assert_eq!(got.last().unwrap(), "9");
    }

    #[test]
    fn manifest_supplies_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.manifest.json");
        std::fs::write(&p, r#"{"command":"hetero","args":{"data":"d.jsonl","out":"h.tsv"},"seed":null}"#).unwrap();
        let got = expand(os(&["bin", &format!("--config={}", p.display())])).unwrap();
        assert_eq!(got, os(&["bin", "hetero", "--data=d.jsonl", "--out=h.tsv"]));
        assert!(expand(os(&["bin", "train", "--config", p.to_str().unwrap()])).is_err());
    }

    #[test]
    fn untouched_without_config() {
        assert_eq!(expand(os(&["bin", "sweep", "--jobs", "2"])).unwrap(), os(&["bin", "sweep", "--jobs", "2"]));
    }
}
