//! Flat `key = value` config files.
//!
//! Keys are long flag names (`-` and `_` are interchangeable). Blank lines
//! and lines starting with `#` are ignored. A key may repeat.

use std::collections::BTreeSet;
use std::path::Path;

use clap::ArgAction;

use crate::error::{CliError, Result};

pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_error(format!("line {}: expected `key = value`, got {raw:?}", i + 1)))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(config_error(format!("line {}: empty key", i + 1)));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

pub fn read_kv(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_kv(&text)
}

fn config_error(msg: String) -> CliError {
    CliError::Core(cpcc_core::Error::Config(msg))
}

/// Position and name of the subcommand in `argv`.
fn find_subcommand(argv: &[String], root: &clap::Command) -> Option<(usize, String)> {
    argv.iter().enumerate().skip(1).find_map(|(i, a)| {
        root.find_subcommand(a).map(|s| (i, s.get_name().to_string()))
    })
}

/// Path given by `--config` anywhere on the command line.
pub fn config_flag(argv: &[String]) -> Option<String> {
    argv.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            argv.get(i + 1).cloned()
        } else {
            a.strip_prefix("--config=").map(str::to_string)
        }
    })
}

/// Append config-file entries as flags of the chosen subcommand unless the
/// command line already sets them. Keys that name no flag become `--set`
/// entries for `synth` and are rejected elsewhere.
pub fn inject(argv: &[String], entries: &[(String, String)], root: &clap::Command) -> Result<Vec<String>> {
    let Some((_, name)) = find_subcommand(argv, root) else {
        return Ok(argv.to_vec());
    };
    let sub = root.find_subcommand(&name).expect("subcommand exists");
    let given: BTreeSet<&str> = argv
        .iter()
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a))
        .collect();

    let mut out = argv.to_vec();
    for (key, value) in entries {
        if key == "config" {
            return Err(config_error("a config file cannot name another config file".into()));
        }
        let arg = sub
            .get_arguments()
            .chain(root.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()) && key != "set");
        match arg {
            Some(arg) => {
                if given.contains(key.as_str()) {
                    continue;
                }
                match arg.get_action() {
                    ArgAction::SetTrue => match value.as_str() {
                        "true" => out.push(format!("--{key}")),
                        "false" => {}
                        other => return Err(config_error(format!("{key}: expected true or false, got {other:?}"))),
                    },
                    _ => {
                        out.push(format!("--{key}"));
                        out.push(value.clone());
                    }
                }
            }
            None if name == "synth" => {
                out.push("--set".into());
                out.push(format!("{}={value}", key.replace('-', "_")));
            }
            None => return Err(CliError::Usage(format!("config key {key:?} is not a flag of {name}"))),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::args::Cli;
    use clap::CommandFactory;

    fn argv(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn kv_grammar() {
        let kv = parse_kv("# c\n\nmin_weeks = 100\nconfig=core\nconfig = core,geo\n").unwrap();
        assert_eq!(
            kv,
            vec![
                ("min-weeks".into(), "100".into()),
                ("config".into(), "core".into()),
                ("config".into(), "core,geo".into())
            ]
        );
        assert!(parse_kv("no equals sign").is_err());
    }

    #[test]
    fn command_line_wins() {
        let root = Cli::command();
        let kv = parse_kv("min-weeks = 100\nwindow = 52").unwrap();
        let out = inject(&argv("cpcc aggregate --events e --out o --window 60"), &kv, &root).unwrap();
        assert_eq!(out, argv("cpcc aggregate --events e --out o --window 60 --min-weeks 100"));
    }

    #[test]
    fn unknown_keys() {
        let root = Cli::command();
        let kv = parse_kv("n_keywords = 50\nseed = 3").unwrap();
        let out = inject(&argv("cpcc synth --out o"), &kv, &root).unwrap();
        assert_eq!(out, argv("cpcc synth --out o --set n_keywords=50 --seed 3"));
        let err = inject(&argv("cpcc aggregate --events e --out o"), &kv, &root).unwrap_err();
        assert_eq!(err.tag(), "E_USAGE");
    }

    #[test]
    fn boolean_flags() {
        let root = Cli::command();
        let kv = parse_kv("no-ablation = true").unwrap();
        let out = inject(&argv("cpcc demo --out d"), &kv, &root).unwrap();
        assert_eq!(out, argv("cpcc demo --out d --no-ablation"));
    }
}
