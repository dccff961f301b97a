//! Flat `key=value` run configuration mirroring the command-line flags.
//! Files use one pair per line; `#` starts a comment. Values given on the
//! command line override values from the file.

use std::fmt::Write as _;

/// Every tunable across the subcommands. Unset fields fall back to the
/// per-command defaults.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub subcommand: Option<String>,
    pub seq: Option<String>,
    pub kind: Option<String>,
    pub range: Option<String>,
    pub out: Option<String>,
    pub csv: Option<String>,
    pub json: Option<String>,
    pub test: Option<String>,
    pub tests: Option<String>,
    pub eps: Option<f64>,
    pub p: Option<f64>,
    pub threshold: Option<f64>,
    pub burn_in: Option<u64>,
    pub checkpoints: Option<String>,
    pub n: Option<u64>,
    pub set: Option<String>,
    pub event: Option<String>,
    pub x: Option<String>,
    pub y: Option<String>,
    pub z: Option<String>,
    pub depth: Option<u32>,
    pub tol: Option<f64>,
    pub bits: Option<u32>,
    pub seed: Option<u64>,
    pub schedule: Option<String>,
    pub key: Option<String>,
    pub key_out: Option<String>,
    pub n0: Option<u64>,
    pub threads: Option<usize>,
}

macro_rules! config_fields {
    ($macro:ident) => {
        $macro! {
            (subcommand, "subcommand", string),
            (seq, "seq", string),
            (kind, "kind", string),
            (range, "range", string),
            (out, "out", string),
            (csv, "csv", string),
            (json, "json", string),
            (test, "test", string),
            (tests, "tests", string),
            (eps, "eps", parsed),
            (p, "p", parsed),
            (threshold, "threshold", parsed),
            (burn_in, "burn-in", parsed),
            (checkpoints, "checkpoints", string),
            (n, "n", parsed),
            (set, "set", string),
            (event, "event", string),
            (x, "x", string),
            (y, "y", string),
            (z, "z", string),
            (depth, "depth", parsed),
            (tol, "tol", parsed),
            (bits, "bits", parsed),
            (seed, "seed", parsed),
            (schedule, "schedule", string),
            (key, "key", string),
            (key_out, "key-out", string),
            (n0, "n0", parsed),
            (threads, "threads", parsed),
        }
    };
}

impl RunConfig {
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        macro_rules! emit {
            ($(($field:ident, $key:literal, $mode:ident)),* $(,)?) => {
                $(
                    if let Some(v) = &self.$field {
                        writeln!(out, "{}={}", $key, v).unwrap();
                    }
                )*
            };
        }
        config_fields!(emit);
        out
    }

    pub fn from_kv(text: &str) -> Result<RunConfig, String> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value", lineno + 1))?;
            let key = key.trim();
            let value = value.trim();
            cfg.set(key, value).map_err(|e| format!("line {}: {e}", lineno + 1))?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        macro_rules! assign {
            ($(($field:ident, $key:literal, $mode:ident)),* $(,)?) => {
                match key {
                    $(
                        $key => {
                            self.$field = Some(assign!(@parse $mode, value, $key));
                        }
                    )*
                    other => return Err(format!("unknown config key `{other}`")),
                }
            };
            (@parse string, $value:expr, $key:literal) => { $value.to_string() };
            (@parse parsed, $value:expr, $key:literal) => {
                $value.parse().map_err(|_| format!("bad value for `{}`: `{}`", $key, $value))?
            };
        }
        config_fields!(assign);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_through_kv_text() {
        let cfg = RunConfig {
            subcommand: Some("battery".into()),
            seq: Some("lam.prseq".into()),
            threshold: Some(0.05),
            burn_in: Some(10_000),
            checkpoints: Some("pow2".into()),
            n: Some(1_000_000),
            tol: Some(0.02),
            seed: Some(7),
            ..RunConfig::default()
        };
        let text = cfg.to_kv();
        let back = RunConfig::from_kv(&text).unwrap();
        assert_eq!(back, cfg);
        // A second trip is identical text.
        assert_eq!(back.to_kv(), text);
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let cfg = RunConfig::from_kv("# comment\n\neps=0.05\nburn-in=100\n").unwrap();
        assert_eq!(cfg.eps, Some(0.05));
        assert_eq!(cfg.burn_in, Some(100));
    }

    #[test]
    fn errors_are_positioned() {
        let err = RunConfig::from_kv("eps 0.05").unwrap_err();
        assert!(err.contains("line 1"));
        let err = RunConfig::from_kv("frobnicate=3").unwrap_err();
        assert!(err.contains("unknown config key"));
        let err = RunConfig::from_kv("eps=abc").unwrap_err();
        assert!(err.contains("bad value"));
    }
}
