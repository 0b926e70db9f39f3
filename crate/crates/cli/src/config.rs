//! Plain-text `key=value` config files. Each entry becomes a `--key=value`
//! flag placed right after the subcommand, so flags given on the command
//! line (which come later) win.

use std::fs;
use std::path::Path;

const COMMANDS: &[&str] = &["gen", "build", "query", "bench"];
const EXPERIMENTS: &[&str] = &["pruning", "accuracy", "timing", "sweep"];

pub fn parse(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut entries = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value, got '{line}'", no + 1))?;
        let key = key.trim().trim_start_matches("--");
        if key.is_empty() {
            return Err(format!("line {}: empty key", no + 1));
        }
        entries.push((key.to_string(), value.trim().to_string()));
    }
    Ok(entries)
}

/// Removes `--config PATH` / `--config=PATH` from `args` and splices the
/// file's entries in after the (sub)command name.
pub fn expand(mut args: Vec<String>) -> Result<Vec<String>, String> {
    let mut path = None;
    let mut i = 1;
    while i < args.len() {
        if args[i] == "--config" {
            if i + 1 >= args.len() {
                return Err("--config needs a file path".into());
            }
            path = Some(args.remove(i + 1));
            args.remove(i);
        } else if let Some(p) = args[i].strip_prefix("--config=") {
            path = Some(p.to_string());
            args.remove(i);
        } else {
            i += 1;
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let text = fs::read_to_string(Path::new(&path))
        .map_err(|e| format!("cannot read config file {path}: {e}"))?;
    let flags: Vec<String> = parse(&text)
        .map_err(|e| format!("{path}: {e}"))?
        .into_iter()
        .map(|(k, v)| format!("--{k}={v}"))
        .collect();
    let Some(cmd) = args.iter().position(|a| COMMANDS.contains(&a.as_str())) else {
        return Ok(args);
    };
    let mut at = cmd + 1;
    if args[cmd] == "bench" {
        if let Some(off) = args[at..]
            .iter()
            .position(|a| EXPERIMENTS.contains(&a.as_str()))
        {
            at += off + 1;
        }
    }
    args.splice(at..at, flags);
    Ok(args)
}
