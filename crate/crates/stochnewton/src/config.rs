//! `--config FILE` support: `key=value` lines that fill in flags missing
//! from the command line.
//!
//! Flags given explicitly always win. When a file entry disagrees with an
//! explicit flag the conflict is reported; nothing is overridden silently.

use std::ffi::OsString;
use std::fs;

#[derive(Debug, Default, PartialEq)]
pub struct Merged {
    pub args: Vec<OsString>,
    /// One message per file entry that lost to an explicit flag.
    pub conflicts: Vec<String>,
}

/// Parses `key=value` lines. Blank lines and `#` comments are skipped; keys
/// may be written with or without the leading `--`.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut entries: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| format!("config line {}: expected key=value", i + 1))?;
        let key = key.trim().trim_start_matches("--").to_string();
        if key.is_empty() {
            return Err(format!("config line {}: empty key", i + 1));
        }
        if entries.iter().any(|(k, _)| *k == key) {
            return Err(format!("config line {}: duplicate key `{key}`", i + 1));
        }
        entries.push((key, value.trim().to_string()));
    }
    Ok(entries)
}

fn config_path(args: &[String]) -> Result<Option<String>, String> {
    let mut found = None;
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let path = if a == "--config" {
            Some(it.next().ok_or("--config needs a file")?.clone())
        } else {
            a.strip_prefix("--config=").map(str::to_string)
        };
        if let Some(p) = path {
            if found.replace(p).is_some() {
                return Err("--config given more than once".into());
            }
        }
    }
    Ok(found)
}

/// Value of `--key` in `args`: `Some(None)` for a bare flag.
fn explicit_value(args: &[String], key: &str) -> Option<Option<String>> {
    let flag = format!("--{key}");
    let prefix = format!("--{key}=");
    let mut it = args.iter().peekable();
    while let Some(a) = it.next() {
        if *a == flag {
            return Some(it.peek().filter(|v| !v.starts_with("--")).map(|v| v.to_string()));
        }
        if let Some(v) = a.strip_prefix(&prefix) {
            return Some(Some(v.to_string()));
        }
    }
    None
}

/// Appends the entries of the `--config` file, if any, for every flag not
/// already present in `args`.
pub fn merge_config(args: Vec<OsString>) -> Result<Merged, String> {
    let text_args: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let Some(path) = config_path(&text_args)? else {
        return Ok(Merged { args, conflicts: Vec::new() });
    };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let mut merged = Merged { args, conflicts: Vec::new() };
    for (key, value) in parse_config(&text).map_err(|e| format!("{path}: {e}"))? {
        if key == "config" {
            return Err(format!("{path}: config files cannot nest"));
        }
        match explicit_value(&text_args, &key) {
            Some(given) => {
                if given.as_deref() != Some(value.as_str()) {
                    let shown = given.unwrap_or_default();
                    merged.conflicts.push(format!("--{key}={shown} on the command line overrides {key}={value} from {path}"));
                }
            }
            None => {
                merged.args.push(format!("--{key}").into());
                merged.args.push(value.into());
            }
        }
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn os(args: &[&str]) -> Vec<OsString> {
        args.iter().map(OsString::from).collect()
    }

    #[test]
    fn parses_lines() {
        let entries = parse_config("# comment\n\nreps = 10\n--seed=3\n").unwrap();
        assert_eq!(entries, vec![("reps".into(), "10".into()), ("seed".into(), "3".into())]);
        assert!(parse_config("reps 10").unwrap_err().contains("line 1"));
        assert!(parse_config("a=1\na=2").unwrap_err().contains("duplicate"));
    }

    #[test]
    fn explicit_flags_win_and_conflicts_are_reported() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "seed=5\nreps=10\nn=200").unwrap();
        let path = file.path().to_str().unwrap();
        let merged = merge_config(os(&["prog", "bench", "--config", path, "--seed", "7", "--n=200"])).unwrap();
        let tail: Vec<_> = merged.args[7..].iter().map(|a| a.to_str().unwrap()).collect();
        assert_eq!(tail, ["--reps", "10"]);
        assert_eq!(merged.conflicts.len(), 1);
        assert!(merged.conflicts[0].contains("--seed=7"), "{:?}", merged.conflicts);
    }

    #[test]
    fn without_config_args_pass_through() {
        let args = os(&["prog", "eigs", "--seed", "1"]);
        assert_eq!(merge_config(args.clone()).unwrap().args, args);
        assert!(merge_config(os(&["prog", "--config"])).is_err());
        assert!(merge_config(os(&["prog", "--config", "/nonexistent/file"])).unwrap_err().contains("/nonexistent/file"));
    }
}
