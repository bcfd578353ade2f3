//! `key = value` configuration files. Every key names a long flag; a value is
//! used only when the flag is absent from the command line.

use std::ffi::OsString;
use std::path::Path;

use clap::{Command, CommandFactory};
use restoro_core::{Error, Result};

use crate::Cli;

const GLOBAL_VALUED: [&str; 3] = ["--config", "--seed", "--jobs"];

pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(i + 1, "expected `key = value`"))?;
        out.push((k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

fn subcommand_position(args: &[String]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if GLOBAL_VALUED.contains(&a.as_str()) {
            i += 2;
            continue;
        }
        if !a.starts_with('-') {
            return Some(i);
        }
        i += 1;
    }
    None
}

fn has_flag(args: &[String], flag: &str) -> bool {
    args.iter()
        .any(|a| a == flag || a.strip_prefix(flag).is_some_and(|rest| rest.starts_with('=')))
}

/// Returns `args` with config-file values appended for every flag the command
/// line leaves unset.
pub fn merge(args: Vec<OsString>) -> Result<Vec<String>> {
    let mut args: Vec<String> = args.into_iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let entries = parse(&text)?;

    let cmd = Cli::command();
    let sub_pos = subcommand_position(&args);
    let sub: Option<Command> = sub_pos.and_then(|i| cmd.find_subcommand(&args[i]).cloned());
    let mut global = Vec::new();
    for (key, value) in entries {
        let flag = format!("--{key}");
        if key == "seed" || key == "jobs" {
            let env_seed = key == "seed" && std::env::var_os(crate::SEED_ENV).is_some();
            if !has_flag(&args, &flag) && !env_seed {
                global.push(flag);
                global.push(value);
            }
            continue;
        }
        let Some(arg) = sub
            .as_ref()
            .and_then(|s| s.get_arguments().find(|a| a.get_long() == Some(key.as_str())))
        else {
            let known = cmd
                .get_subcommands()
                .any(|s| s.get_arguments().any(|a| a.get_long() == Some(key.as_str())));
            if known {
                continue;
            }
            return Err(Error::InvalidArgument(format!("unknown configuration key `{key}`")));
        };
        if has_flag(&args, &flag) {
            continue;
        }
        if arg.get_action().takes_values() {
            args.push(flag);
            args.push(value);
        } else if value == "true" {
            args.push(flag);
        }
    }
    args.splice(1..1, global);
    Ok(args)
}
