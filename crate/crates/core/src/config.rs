//! Flat `key = value` configuration files mirroring the CLI flags.
//!
//! ```text
//! # end-pair run
//! n = 20
//! initial = bell
//! pair = 19,20
//! t-stop = 150
//! ```
//!
//! Keys are the long flag names without the leading dashes; `_` and `-` are
//! interchangeable. Values given on the command line win over the file.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::runner::{InitialState, OutputFormat, PairSelection};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub n: Option<usize>,
    pub k: Option<f64>,
    pub delta: Option<f64>,
    pub initial: Option<InitialState>,
    pub pair: Option<PairSelection>,
    pub t_start: Option<f64>,
    pub t_stop: Option<f64>,
    pub t_step: Option<f64>,
    pub time: Option<f64>,
    pub format: Option<OutputFormat>,
    pub out: Option<PathBuf>,
    pub matrix: Option<bool>,
    pub trials: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse {key} = {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("cannot parse {key} = {value:?} as a boolean"))),
    }
}

impl Settings {
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut s = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`, got {raw:?}", lineno + 1))
            })?;
            let key = key.trim().to_ascii_lowercase().replace('_', "-");
            let value = value.trim().trim_matches('"');
            match key.as_str() {
                "n" => s.n = Some(parse(&key, value)?),
                "k" => s.k = Some(parse(&key, value)?),
                "delta" => s.delta = Some(parse(&key, value)?),
                "initial" => s.initial = Some(value.parse()?),
                "pair" => s.pair = Some(value.parse()?),
                "t-start" => s.t_start = Some(parse(&key, value)?),
                "t-stop" => s.t_stop = Some(parse(&key, value)?),
                "t-step" => s.t_step = Some(parse(&key, value)?),
                "time" => s.time = Some(parse(&key, value)?),
                "format" => s.format = Some(value.parse()?),
                "out" => s.out = Some(PathBuf::from(value)),
                "matrix" => s.matrix = Some(parse_bool(&key, value)?),
                "trials" => s.trials = Some(parse(&key, value)?),
                "tol" => s.tol = Some(parse(&key, value)?),
                "seed" => s.seed = Some(parse(&key, value)?),
                other => {
                    return Err(Error::Config(format!("line {}: unknown key {other:?}", lineno + 1)))
                }
            }
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_str(&text)
    }

    /// Fill every unset field of `self` from `fallback`.
    pub fn or(self, fallback: Settings) -> Settings {
        Settings {
            n: self.n.or(fallback.n),
            k: self.k.or(fallback.k),
            delta: self.delta.or(fallback.delta),
            initial: self.initial.or(fallback.initial),
            pair: self.pair.or(fallback.pair),
            t_start: self.t_start.or(fallback.t_start),
            t_stop: self.t_stop.or(fallback.t_stop),
            t_step: self.t_step.or(fallback.t_step),
            time: self.time.or(fallback.time),
            format: self.format.or(fallback.format),
            out: self.out.or(fallback.out),
            matrix: self.matrix.or(fallback.matrix),
            trials: self.trials.or(fallback.trials),
            tol: self.tol.or(fallback.tol),
            seed: self.seed.or(fallback.seed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_file() {
        let s = Settings::parse_str(
            "# comment\n n = 12\nK=2.5\ninitial = bell # trailing\npair = 3,4\nt_stop = 40\nformat = json\nmatrix = yes\n",
        )
        .unwrap();
        assert_eq!(s.n, Some(12));
        assert_eq!(s.k, Some(2.5));
        assert_eq!(s.initial, Some(InitialState::Bell));
        assert_eq!(s.pair, Some(PairSelection::Single(3, 4)));
        assert_eq!(s.t_stop, Some(40.0));
        assert_eq!(s.format, Some(OutputFormat::Json));
        assert_eq!(s.matrix, Some(true));
        assert_eq!(s.t_start, None);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(Settings::parse_str("n 12"), Err(Error::Config(_))));
        assert!(matches!(Settings::parse_str("colour = red"), Err(Error::Config(_))));
        assert!(matches!(Settings::parse_str("n = twelve"), Err(Error::Config(_))));
    }

    #[test]
    fn flags_override_file() {
        let file = Settings::parse_str("n = 12\nk = 3\n").unwrap();
        let flags = Settings {
            n: Some(8),
            ..Settings::default()
        };
        let merged = flags.or(file);
        assert_eq!(merged.n, Some(8));
        assert_eq!(merged.k, Some(3.0));
    }
}
