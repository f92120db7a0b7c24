//! Run configuration: a fixed schema of namespaced keys, filled from
//! defaults, an optional TOML file, `--set key=value` pairs and command flags
//! (later sources win).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config key `{key}`: {reason}")]
    BadValue { key: String, reason: String },
    #[error("cannot read config file {path}: {reason}")]
    File { path: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Float,
    Int,
    Uint,
    Text,
    Flag,
    Floats,
    Uints,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Int(i64),
    Uint(u64),
    Text(String),
    Flag(bool),
    Floats(Vec<f64>),
    Uints(Vec<u64>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join<T: fmt::Display>(v: &[T]) -> String {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        }
        match self {
            Value::Float(v) => write!(f, "{v:?}"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Uint(v) => write!(f, "{v}"),
            Value::Text(v) => write!(f, "{v:?}"),
            Value::Flag(v) => write!(f, "{v}"),
            Value::Floats(v) => write!(f, "[{}]", v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")),
            Value::Uints(v) => write!(f, "[{}]", join(v)),
        }
    }
}

struct Entry {
    key: &'static str,
    kind: Kind,
    default: &'static str,
    help: &'static str,
}

const SCHEMA: &[Entry] = &[
    Entry { key: "experiment", kind: Kind::Text, default: "", help: "experiment name (informational)" },
    Entry { key: "seed", kind: Kind::Uint, default: "1", help: "master seed" },
    Entry { key: "fields.lambda", kind: Kind::Float, default: "16", help: "frequency scale of generated fields" },
    Entry { key: "fields.count", kind: Kind::Uint, default: "8", help: "frequencies per generated field" },
    Entry { key: "fields.annulus", kind: Kind::Int, default: "-1", help: "keep only this dyadic annulus (-1: all)" },
    Entry { key: "fields.file", kind: Kind::Text, default: "", help: "field file to load instead of generating one" },
    Entry { key: "fields.grid", kind: Kind::Uint, default: "128", help: "grid points per axis on [-1,1]^N" },
    Entry { key: "propagator.symbol", kind: Kind::Text, default: "nonelliptic", help: "nonelliptic | nonelliptic3+ | nonelliptic3- | elliptic2 | elliptic3" },
    Entry { key: "propagator.t", kind: Kind::Float, default: "0", help: "evaluation time for propagate" },
    Entry { key: "propagator.interval", kind: Kind::Floats, default: "0,0.0625", help: "time interval [a,b] for maximal" },
    Entry { key: "propagator.sup_samples_min", kind: Kind::Uint, default: "64", help: "minimum samples per interval" },
    Entry { key: "propagator.quad_tol", kind: Kind::Float, default: "1e-10", help: "absolute oracle tolerance relative to the box mass" },
    Entry { key: "sequences.sequence", kind: Kind::Text, default: "power:a=2", help: "power:a=A[,length=N] or csv:PATH" },
    Entry { key: "sequences.r", kind: Kind::Float, default: "0.3333333333333333", help: "Lorentz exponent r" },
    Entry { key: "sequences.depths", kind: Kind::Uints, default: "10,100,1000,10000,100000,1000000", help: "depths for lorentz" },
    Entry { key: "sequences.max_level", kind: Kind::Uint, default: "24", help: "last block level for blocks" },
    Entry { key: "estimates.lambdas", kind: Kind::Floats, default: "16,32,64,128", help: "frequency scales" },
    Entry { key: "estimates.intervals", kind: Kind::Floats, default: "1,2", help: "interval exponents e, |I| = lambda^-e" },
    Entry { key: "estimates.trials", kind: Kind::Uint, default: "20", help: "trials per (lambda, interval) for thm14" },
    Entry { key: "estimates.grid", kind: Kind::Uint, default: "1024", help: "grid points per axis for thm14" },
    Entry { key: "estimates.count", kind: Kind::Uint, default: "8", help: "frequencies per random field" },
    Entry { key: "estimates.slope_max", kind: Kind::Float, default: "0.6", help: "largest accepted log-log slope" },
    Entry { key: "estimates.spread_max", kind: Kind::Float, default: "0.25", help: "largest accepted spread of the median ratio at |I| = lambda^-2" },
    Entry { key: "estimates.global_trials", kind: Kind::Uint, default: "3", help: "trials per lambda for global-max" },
    Entry { key: "estimates.global_grid", kind: Kind::Uint, default: "336", help: "grid points per axis for global-max" },
    Entry { key: "estimates.s", kind: Kind::Float, default: "0.25", help: "smoothness for decompose-trace" },
    Entry { key: "estimates.depth", kind: Kind::Uint, default: "10000", help: "number of times traced" },
    Entry { key: "estimates.tails", kind: Kind::Uints, default: "1,10,100,1000", help: "tail starts m for converge" },
    Entry { key: "counterexample.s", kind: Kind::Float, default: "0.25", help: "smoothness s" },
    Entry { key: "counterexample.sequence", kind: Kind::Text, default: "power:a=2", help: "time sequence" },
    Entry { key: "counterexample.scales", kind: Kind::Floats, default: "1e-6,1e-8,1e-10,1e-12", help: "candidate bad scales b" },
    Entry { key: "counterexample.dim", kind: Kind::Uint, default: "2", help: "dimension (2 or 3)" },
    Entry { key: "counterexample.points", kind: Kind::Uint, default: "32", help: "grid points per axis on U_j" },
    Entry { key: "counterexample.dense", kind: Kind::Flag, default: "false", help: "use 256 points per axis" },
    Entry { key: "counterexample.margin", kind: Kind::Float, default: "0.001", help: "margin constant" },
    Entry { key: "counterexample.sign", kind: Kind::Text, default: "+", help: "sign of the third-axis term (+ or -)" },
    Entry { key: "selftest.semigroup_tol", kind: Kind::Float, default: "1e-12", help: "semigroup check passes when the relative error is strictly below this" },
];

fn entry(key: &str) -> Result<&'static Entry, ConfigError> {
    SCHEMA.iter().find(|e| e.key == key).ok_or_else(|| ConfigError::UnknownKey(key.to_string()))
}

fn bad(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadValue { key: key.to_string(), reason: reason.into() }
}

fn parse_text(key: &str, kind: Kind, raw: &str) -> Result<Value, ConfigError> {
    let raw = raw.trim();
    let float = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(key, format!("expected a number, got `{s}`")));
    let uint = |s: &str| s.trim().parse::<u64>().map_err(|_| bad(key, format!("expected a nonnegative integer, got `{s}`")));
    let list = |s: &str| -> Vec<String> {
        s.trim_start_matches('[').trim_end_matches(']').split(',').map(str::trim).filter(|p| !p.is_empty()).map(String::from).collect()
    };
    Ok(match kind {
        Kind::Float => Value::Float(float(raw)?),
        Kind::Int => Value::Int(raw.parse().map_err(|_| bad(key, format!("expected an integer, got `{raw}`")))?),
        Kind::Uint => Value::Uint(uint(raw)?),
        Kind::Text => Value::Text(raw.trim_matches('"').to_string()),
        Kind::Flag => Value::Flag(raw.parse().map_err(|_| bad(key, format!("expected true or false, got `{raw}`")))?),
        Kind::Floats => Value::Floats(list(raw).iter().map(|s| float(s)).collect::<Result<_, _>>()?),
        Kind::Uints => Value::Uints(list(raw).iter().map(|s| uint(s)).collect::<Result<_, _>>()?),
    })
}

fn from_toml(key: &str, kind: Kind, v: &toml::Value) -> Result<Value, ConfigError> {
    let float = |v: &toml::Value| match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        other => Err(bad(key, format!("expected a number, got {other}"))),
    };
    let uint = |v: &toml::Value| match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        other => Err(bad(key, format!("expected a nonnegative integer, got {other}"))),
    };
    let array = |v: &toml::Value| match v {
        toml::Value::Array(a) => Ok(a.clone()),
        other => Ok(vec![other.clone()]),
    };
    Ok(match kind {
        Kind::Float => Value::Float(float(v)?),
        Kind::Int => match v {
            toml::Value::Integer(i) => Value::Int(*i),
            other => return Err(bad(key, format!("expected an integer, got {other}"))),
        },
        Kind::Uint => Value::Uint(uint(v)?),
        Kind::Text => match v {
            toml::Value::String(s) => Value::Text(s.clone()),
            other => return Err(bad(key, format!("expected a string, got {other}"))),
        },
        Kind::Flag => match v {
            toml::Value::Boolean(b) => Value::Flag(*b),
            other => return Err(bad(key, format!("expected a boolean, got {other}"))),
        },
        Kind::Floats => Value::Floats(array(v)?.iter().map(float).collect::<Result<_, _>>()?),
        Kind::Uints => Value::Uints(array(v)?.iter().map(uint).collect::<Result<_, _>>()?),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<&'static str, Value>,
}

impl RunConfig {
    pub fn defaults() -> Self {
        let values = SCHEMA
            .iter()
            .map(|e| (e.key, parse_text(e.key, e.kind, e.default).expect("schema defaults parse")))
            .collect();
        Self { values }
    }

    pub fn set(&mut self, key: &str, raw: &str) -> Result<(), ConfigError> {
        let e = entry(key)?;
        self.values.insert(e.key, parse_text(key, e.kind, raw)?);
        Ok(())
    }

    /// `key=value`
    pub fn set_pair(&mut self, pair: &str) -> Result<(), ConfigError> {
        let (k, v) = pair.split_once('=').ok_or_else(|| bad(pair, "expected key=value"))?;
        self.set(k.trim(), v)
    }

    pub fn merge_toml_str(&mut self, text: &str) -> Result<(), ConfigError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::File {
            path: "<config>".into(),
            reason: e.to_string(),
        })?;
        self.merge_table("", &table)
    }

    fn merge_table(&mut self, prefix: &str, table: &toml::Table) -> Result<(), ConfigError> {
        for (k, v) in table {
            let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            if let toml::Value::Table(inner) = v {
                self.merge_table(&key, inner)?;
                continue;
            }
            let e = entry(&key)?;
            self.values.insert(e.key, from_toml(&key, e.kind, v)?);
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::File {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        self.merge_toml_str(&text).map_err(|e| match e {
            ConfigError::File { reason, .. } => ConfigError::File { path: path.display().to_string(), reason },
            other => other,
        })
    }

    fn get(&self, key: &str) -> &Value {
        self.values.get(key).unwrap_or_else(|| panic!("config key {key} missing from schema"))
    }

    pub fn float(&self, key: &str) -> f64 {
        match self.get(key) {
            Value::Float(v) => *v,
            other => panic!("{key} is not a float: {other}"),
        }
    }

    pub fn int(&self, key: &str) -> i64 {
        match self.get(key) {
            Value::Int(v) => *v,
            other => panic!("{key} is not an integer: {other}"),
        }
    }

    pub fn uint(&self, key: &str) -> u64 {
        match self.get(key) {
            Value::Uint(v) => *v,
            other => panic!("{key} is not an unsigned integer: {other}"),
        }
    }

    pub fn usize(&self, key: &str) -> usize {
        self.uint(key) as usize
    }

    pub fn text(&self, key: &str) -> &str {
        match self.get(key) {
            Value::Text(v) => v,
            other => panic!("{key} is not text: {other}"),
        }
    }

    pub fn flag(&self, key: &str) -> bool {
        match self.get(key) {
            Value::Flag(v) => *v,
            other => panic!("{key} is not a flag: {other}"),
        }
    }

    pub fn floats(&self, key: &str) -> &[f64] {
        match self.get(key) {
            Value::Floats(v) => v,
            other => panic!("{key} is not a float list: {other}"),
        }
    }

    pub fn uints(&self, key: &str) -> &[u64] {
        match self.get(key) {
            Value::Uints(v) => v,
            other => panic!("{key} is not an integer list: {other}"),
        }
    }

    /// One `key = value` line per entry, in key order.
    pub fn resolved_lines(&self) -> Vec<String> {
        self.values.iter().map(|(k, v)| format!("{k} = {v}")).collect()
    }

    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for line in self.resolved_lines() {
            h.update(line.as_bytes());
            h.update(b"\n");
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Schema listing for `--help` output.
pub fn schema_help() -> String {
    let mut out = String::from("Config keys (TOML file, --set key=value):\n");
    for e in SCHEMA {
        out.push_str(&format!("  {:<30} {} [default: {}]\n", e.key, e.help, e.default));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_rejected() {
        let mut c = RunConfig::defaults();
        let e = c.set_pair("estiamtes.trials=3").unwrap_err();
        assert!(e.to_string().contains("unknown config key `estiamtes.trials`"));
        assert!(c.merge_toml_str("[estiamtes]\ntrials = 3\n").is_err());
    }

    #[test]
    fn toml_and_set_agree() {
        let mut a = RunConfig::defaults();
        a.merge_toml_str("seed = 9\n[estimates]\nlambdas = [16, 32.0]\ntrials = 3\n").unwrap();
        let mut b = RunConfig::defaults();
        b.set_pair("seed=9").unwrap();
        b.set_pair("estimates.lambdas=16,32").unwrap();
        b.set_pair("estimates.trials=3").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.floats("estimates.lambdas"), &[16.0, 32.0]);
    }

    #[test]
    fn dotted_keys_in_toml() {
        let mut a = RunConfig::defaults();
        a.merge_toml_str("counterexample.dim = 3\n").unwrap();
        assert_eq!(a.uint("counterexample.dim"), 3);
    }

    #[test]
    fn type_errors_are_reported() {
        let mut c = RunConfig::defaults();
        assert!(c.set_pair("estimates.trials=-1").is_err());
        assert!(c.set_pair("counterexample.dense=yes").is_err());
        assert!(c.merge_toml_str("seed = \"x\"\n").is_err());
    }

    #[test]
    fn hash_tracks_values() {
        let a = RunConfig::defaults();
        let mut b = RunConfig::defaults();
        b.set_pair("seed=2").unwrap();
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
