//! Flat `key=value` configuration merged under the command-line flags.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::One;
use polyavg_core::lattice::parse_rational;
use polyavg_core::{CountOptions, Curve};

use crate::{Cli, CliError, CliResult};

pub const DEFAULT_CURVE: &str = "n, n^2";
const DEFAULT_BUDGET: u128 = 4_000_000_000;

const KNOWN_KEYS: &[&str] = &[
    "curve", "N", "seed", "budget-tuples", "cache", "out", "c-box", "threads", "no-timing", "mode", "s", "k", "z",
    "method", "audit-rate", "suite", "trials", "family", "inv-p", "inv-q", "case", "e", "f", "demo", "y-cap",
    "resolution",
];

/// Parsed configuration file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    /// Lines are `key = value`; `#` starts a comment; blank lines are skipped.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("config line {}: expected key=value", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KNOWN_KEYS.contains(&k) {
                return Err(CliError::usage(format!("config line {}: unknown key '{k}'", i + 1)));
            }
            entries.insert(k.to_string(), v.to_string());
        }
        Ok(Config { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// The flag value if given, else the parsed config value.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::usage(format!("config key {key}: {e}"))))
            .transpose()
    }
}

/// Global settings after merging flags and the configuration file.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub file: Config,
    pub curve_text: String,
    pub ns: Option<Vec<u64>>,
    pub seed: u64,
    pub budget: u128,
    pub cache: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub c_box: BigRational,
    pub threads: usize,
    pub no_timing: bool,
}

impl RunConfig {
    pub fn resolve(cli: &Cli) -> CliResult<Self> {
        let file = match &cli.config {
            Some(p) => Config::parse(
                &std::fs::read_to_string(p).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?,
            )?,
            None => Config::default(),
        };
        let curve_text = file.pick(cli.curve.clone(), "curve")?.unwrap_or_else(|| DEFAULT_CURVE.to_string());
        let ns = file.pick(cli.n.clone(), "N")?.map(|s| parse_n_list(&s)).transpose()?;
        let budget = file.pick(cli.budget_tuples, "budget-tuples")?.unwrap_or(DEFAULT_BUDGET);
        if budget == 0 {
            return Err(CliError::usage("budget must be positive"));
        }
        let c_box = match file.pick(cli.c_box.clone(), "c-box")? {
            Some(t) => parse_rational(&t)?,
            None => BigRational::one(),
        };
        let no_timing = cli.no_timing || matches!(file.get("no-timing"), Some("true" | "1" | "yes"));
        Ok(RunConfig {
            curve_text,
            ns,
            seed: file.pick(cli.seed, "seed")?.unwrap_or(0),
            budget,
            cache: file.pick(cli.cache.clone(), "cache")?,
            out: file.pick(cli.out.clone(), "out")?,
            c_box,
            threads: file.pick(cli.threads, "threads")?.unwrap_or(0),
            no_timing,
            file,
        })
    }

    pub fn curve(&self) -> CliResult<Curve> {
        Ok(Curve::parse(&self.curve_text)?)
    }

    pub fn count_options(&self) -> CountOptions {
        CountOptions { budget: self.budget, ..CountOptions::default() }
    }

    pub fn ns_or(&self, default: &[u64]) -> Vec<u64> {
        self.ns.clone().unwrap_or_else(|| default.to_vec())
    }
}

/// `"32"`, `"8,16,32"` or an inclusive range `"4:9"`; sorted, distinct, positive.
pub fn parse_n_list(text: &str) -> CliResult<Vec<u64>> {
    let bad = |t: &str| CliError::usage(format!("bad N value '{t}'"));
    let mut ns = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once(':') {
            let a: u64 = a.trim().parse().map_err(|_| bad(part))?;
            let b: u64 = b.trim().parse().map_err(|_| bad(part))?;
            if a > b {
                return Err(bad(part));
            }
            ns.extend(a..=b);
        } else {
            ns.push(part.parse().map_err(|_| bad(part))?);
        }
    }
    if ns.is_empty() || ns.contains(&0) {
        return Err(CliError::usage("N values must be positive integers"));
    }
    ns.sort_unstable();
    let len = ns.len();
    ns.dedup();
    if ns.len() != len {
        return Err(CliError::usage("N values must be distinct"));
    }
    Ok(ns)
}
