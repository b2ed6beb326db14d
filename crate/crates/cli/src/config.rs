//! `--config <file>` support: plain `key = value` lines spliced into the
//! argument list as `--key value` unless the same flag was given explicitly.

use std::path::Path;

/// Flags that take no value; `key = true` turns them on.
const SWITCHES: &[&str] = &["strict", "omega", "omega-tilde", "h", "h-tilde", "allow-saturation", "jump"];

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let (k, v) = t.split_once('=').ok_or_else(|| format!("config line {}: expected key = value", i + 1))?;
        let k = k.trim();
        if k.is_empty() || k == "config" {
            return Err(format!("config line {}: bad key `{}`", i + 1, k));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn flag_given(args: &[String], key: &str) -> bool {
    let long = format!("--{}", key);
    let eq = format!("--{}=", key);
    args.iter().any(|a| *a == long || a.starts_with(&eq))
}

/// Removes `--config <path>` from `args` and appends the file's settings.
pub fn expand(mut args: Vec<String>) -> Result<Vec<String>, String> {
    let mut path = None;
    let mut i = 0;
    while i < args.len() {
        if args[i] == "--config" {
            if i + 1 >= args.len() {
                return Err("--config needs a file".into());
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
    let Some(path) = path else { return Ok(args) };
    let text = std::fs::read_to_string(Path::new(&path)).map_err(|e| format!("cannot read config {}: {}", path, e))?;
    for (k, v) in parse_config(&text)? {
        if flag_given(&args, &k) {
            continue;
        }
        if SWITCHES.contains(&k.as_str()) {
            match v.as_str() {
                "true" | "1" | "yes" => args.push(format!("--{}", k)),
                "false" | "0" | "no" => {}
                _ => return Err(format!("config key `{}` expects true or false", k)),
            }
        } else {
            args.push(format!("--{}={}", k, v));
        }
    }
    Ok(args)
}

/// The flags of an expanded argument list as config text, so that
/// `<command> --config <this file>` repeats the run.
pub fn serialize(args: &[String]) -> String {
    let mut lines = Vec::new();
    let mut i = 0;
    while i < args.len() {
        if let Some(flag) = args[i].strip_prefix("--") {
            if let Some((k, v)) = flag.split_once('=') {
                lines.push(format!("{} = {}", k, v));
            } else if SWITCHES.contains(&flag) {
                lines.push(format!("{} = true", flag));
            } else if i + 1 < args.len() {
                lines.push(format!("{} = {}", flag, args[i + 1]));
                i += 1;
            }
        }
        i += 1;
    }
    lines.sort();
    lines.dedup();
    let mut s = lines.join("\n");
    s.push('\n');
    s
}
