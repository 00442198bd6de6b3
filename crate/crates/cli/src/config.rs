//! `key=value` config files. Each key is a long flag name without the dashes;
//! the file's settings are spliced in ahead of the command line so that flags
//! given explicitly win.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

/// Keys that are switches rather than valued flags.
const SWITCHES: &[&str] = &["directed", "include-source"];

pub fn read_config(path: &Path) -> Result<Vec<(String, String)>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("{}:{}: expected key=value", path.display(), i + 1))?;
        let (k, v) = (k.trim(), v.trim());
        if k == "config" {
            return Err(format!("{}:{}: config files cannot include others", path.display(), i + 1));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

/// Turns config entries into flags.
pub fn to_args(entries: &[(String, String)]) -> Result<Vec<OsString>, String> {
    let mut args = Vec::new();
    for (k, v) in entries {
        if SWITCHES.contains(&k.as_str()) {
            match v.as_str() {
                "true" | "1" | "yes" => args.push(format!("--{k}").into()),
                "false" | "0" | "no" => {}
                _ => return Err(format!("config key '{k}' expects true or false, got '{v}'")),
            }
        } else {
            args.push(format!("--{k}").into());
            args.push(v.into());
        }
    }
    Ok(args)
}

/// Long flag names present in raw arguments.
pub fn given_flags(args: &[OsString]) -> Vec<String> {
    args.iter()
        .map(|a| a.to_string_lossy().into_owned())
        .take_while(|s| s != "--")
        .filter_map(|s| {
            let name = s.strip_prefix("--")?;
            Some(name.split('=').next().unwrap_or(name).to_string())
        })
        .collect()
}

/// Finds `--config PATH` or `--config=PATH` in raw arguments.
pub fn find_config_flag(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(rest.into());
        }
    }
    None
}
