//! `--config cfg.json` support: values from the file are turned into extra
//! command-line flags, inserted only for flags not already given.
//!
//! Top-level keys apply to whichever subcommand accepts them; a nested object
//! keyed by the subcommand name applies to that subcommand only. Keys may use
//! hyphens or underscores.

use std::ffi::OsString;
use std::fs;

use anyhow::{bail, Context, Result};
use clap::Command;
use serde_json::{Map, Value};

/// Returns `args` with config-file values spliced in after the subcommand.
pub fn merge(args: Vec<OsString>, command: &Command) -> Result<Vec<OsString>> {
    let Some(pos) = args.iter().position(|a| a == "--config") else {
        if let Some(pos) = args.iter().position(|a| a.to_string_lossy().starts_with("--config=")) {
            let raw = args[pos].to_string_lossy().into_owned();
            let path = raw.trim_start_matches("--config=").to_string();
            let mut rest = args;
            rest.remove(pos);
            return splice(rest, command, &path);
        }
        return Ok(args);
    };
    let Some(path) = args.get(pos + 1).map(|p| p.to_string_lossy().into_owned()) else {
        bail!("--config needs a file path");
    };
    let mut rest = args;
    rest.drain(pos..pos + 2);
    splice(rest, command, &path)
}

fn splice(args: Vec<OsString>, command: &Command, path: &str) -> Result<Vec<OsString>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {path}"))?;
    let root: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {path}"))?;
    let Value::Object(root) = root else {
        bail!("config {path} must hold a JSON object");
    };

    let Some((sub_pos, sub)) = args
        .iter()
        .enumerate()
        .skip(1)
        .find_map(|(i, a)| command.find_subcommand(a.to_str()?).map(|s| (i, s)))
    else {
        return Ok(args);
    };
    let known: Vec<String> = sub
        .get_arguments()
        .filter_map(|a| a.get_long().map(str::to_string))
        .collect();
    let given: Vec<String> = args[sub_pos + 1..]
        .iter()
        .filter_map(|a| a.to_str()?.strip_prefix("--").map(|s| s.split('=').next().unwrap_or(s).to_string()))
        .collect();

    let mut extra = Vec::new();
    let mut add = |entries: &Map<String, Value>, strict: bool| -> Result<()> {
        for (key, value) in entries {
            if value.is_object() {
                continue;
            }
            let flag = key.replace('_', "-");
            if !known.contains(&flag) {
                if strict {
                    bail!("config key {key:?} is not a flag of `{}`", sub.get_name());
                }
                continue;
            }
            if given.contains(&flag) || extra.iter().any(|a: &OsString| a.to_str() == Some(&format!("--{flag}"))) {
                continue;
            }
            push_flag(&mut extra, &flag, value)?;
        }
        Ok(())
    };
    if let Some(Value::Object(nested)) = root.get(sub.get_name()) {
        add(nested, true)?;
    }
    add(&root, false)?;

    let mut out = args;
    let tail = out.split_off(sub_pos + 1);
    out.extend(extra);
    out.extend(tail);
    Ok(out)
}

fn push_flag(out: &mut Vec<OsString>, flag: &str, value: &Value) -> Result<()> {
    let scalar = |v: &Value| -> Result<String> {
        Ok(match v {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            Value::Bool(b) => b.to_string(),
            other => bail!("unsupported config value for --{flag}: {other}"),
        })
    };
    match value {
        Value::Bool(false) | Value::Null => {}
        Value::Bool(true) => out.push(format!("--{flag}").into()),
        Value::Array(items) => {
            out.push(format!("--{flag}").into());
            for item in items {
                out.push(scalar(item)?.into());
            }
        }
        other => {
            out.push(format!("--{flag}").into());
            out.push(scalar(other)?.into());
        }
    }
    Ok(())
}
