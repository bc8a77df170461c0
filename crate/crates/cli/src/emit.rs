//! Output files. CSV numbers use 17 significant digits; JSON numbers use the
//! shortest representation that round-trips. Every file carries the config
//! echo, the tool version and a creation timestamp, the only field that
//! varies between identical runs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use crate::config::RunConfig;

pub const ARTIFACT: &str = "jcm";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `x` in scientific notation with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn complex(z: C64) -> Value {
    json!([z.re, z.im])
}

fn created_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// `#`-prefixed header lines placed before the CSV column header.
pub fn csv_preamble(command: &str, cfg: &RunConfig) -> String {
    let mut out = format!("# {ARTIFACT} {VERSION} {command}\n# created_unix = {}\n", created_unix());
    for line in cfg.echo().lines() {
        out.push_str("# config: ");
        out.push_str(line);
        out.push('\n');
    }
    out
}

/// JSON document wrapping `data` with the run metadata.
pub fn envelope(command: &str, cfg: &RunConfig, data: Value) -> Value {
    json!({
        "artifact": ARTIFACT,
        "version": VERSION,
        "command": command,
        "created_unix": created_unix(),
        "config": cfg.echo(),
        "data": data,
    })
}

pub fn write(dir: &Path, name: &str, contents: &str) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

pub fn write_json(dir: &Path, name: &str, doc: &Value) -> std::io::Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(doc).map_err(std::io::Error::other)?;
    text.push('\n');
    write(dir, name, &text)
}

/// Config echo recovered from a CSV preamble.
pub fn echo_from_csv(text: &str) -> String {
    text.lines().filter_map(|l| l.strip_prefix("# config: ")).map(|l| format!("{l}\n")).collect()
}

/// Copy of `text` with the creation-timestamp line or field removed.
pub fn strip_timestamp(text: &str) -> String {
    text.lines().filter(|l| !l.contains("created_unix")).map(|l| format!("{l}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_carry_seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(-2.0), "-2.0000000000000000e0");
        for x in [0.1, 1.0 / 3.0, -7.25e-11, 6.02e23] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn preamble_echo_parses_back() {
        let cfg = RunConfig::default();
        let pre = csv_preamble("criteria", &cfg);
        assert!(pre.lines().all(|l| l.starts_with("# ")));
        assert_eq!(RunConfig::parse(&echo_from_csv(&pre)).unwrap(), cfg);
    }
}
