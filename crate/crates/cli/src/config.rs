//! Flat `key = value` run files merged into the command line.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::{Arg, Command};

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("config line {}: expected key = value", k + 1);
        };
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            bail!("config line {}: empty key", k + 1);
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

/// Subcommand selected by `args` together with its argument definitions.
fn selected<'a>(root: &'a Command, args: &[OsString]) -> Option<&'a Command> {
    let mut cmd = root;
    let mut found = None;
    for a in args.iter().skip(1) {
        let s = a.to_string_lossy();
        if let Some(sub) = cmd.find_subcommand(s.as_ref()) {
            cmd = sub;
            found = Some(sub);
        }
    }
    found
}

fn present(args: &[OsString], long: &str) -> bool {
    let flag = format!("--{long}");
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&format!("{flag}="))
    })
}

fn takes_value(arg: &Arg) -> bool {
    arg.get_num_args().is_none_or(|n| n.takes_values())
}

/// Appends config entries as flags unless the command line already sets them.
/// Keys that the selected command does not accept are rejected unless some
/// other command accepts them (shared run files).
pub fn merge(root: &Command, args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .with_context(|| format!("reading config {}", Path::new(&path).display()))?;
    let entries = parse(&text)?;
    let Some(cmd) = selected(root, &args) else {
        return Ok(args);
    };
    let known_anywhere = |key: &str| {
        fn walk(c: &Command, key: &str) -> bool {
            c.get_arguments().any(|a| a.get_long() == Some(key)) || c.get_subcommands().any(|s| walk(s, key))
        }
        walk(root, key)
    };

    let mut out = args.clone();
    for (key, value) in entries {
        if key == "config" {
            bail!("config files cannot include other config files");
        }
        let Some(arg) = cmd.get_arguments().chain(root.get_arguments()).find(|a| a.get_long() == Some(&key)) else {
            if known_anywhere(&key) {
                continue;
            }
            bail!("config key '{key}' is not a known option");
        };
        if present(&args, &key) {
            continue;
        }
        if takes_value(arg) {
            out.push(format!("--{key}={value}").into());
        } else if value == "true" {
            out.push(format!("--{key}").into());
        } else if value != "false" {
            bail!("config key '{key}' is a switch; use true or false");
        }
    }
    Ok(out)
}
