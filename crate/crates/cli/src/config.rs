//! Flat `key = value` run configuration with `[section]` headers.
//!
//! ```text
//! [plan]
//! d_grid = 64, 256, 1024, 4096
//! n_rule = power 0.25
//! theta_draws = 8
//! replicates = 196
//! test_points = 512
//! master_seed = 42
//!
//! [family]
//! kind = sphere
//! alpha = 4
//!
//! [classifiers]
//! use = matched_filter, plugin_known, ml_projection, coin_flip
//!
//! [output]
//! csv = impossibility.csv
//! svg = impossibility.svg
//! ```
//!
//! `#` starts a comment. Unknown sections and keys are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use hidim_core::classifiers::ClassifierSpec;
use hidim_core::sweep::{Family, NRule, SweepPlan, TestEval, DEFAULT_REPLICATES, DEFAULT_TEST_POINTS, DEFAULT_THETA_DRAWS};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing required key [{section}] {key}")]
    Missing { section: String, key: String },
    #[error("[{section}] {key}: {msg}")]
    Value { section: String, key: String, msg: String },
    #[error("invalid plan: {0}")]
    Plan(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub plan: SweepPlan,
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub plot: bool,
    pub timing: bool,
    pub curves: Option<PathBuf>,
    /// Decay parameters for `curves`; empty means the family's own.
    pub curve_params: Vec<f64>,
    /// 0 keeps the default pool size.
    pub threads: usize,
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("plan", &["d_grid", "n_rule", "theta_draws", "replicates", "test_points", "master_seed", "eval"]),
    ("family", &["kind", "alpha", "gamma", "beta", "midpoint", "a", "b"]),
    ("classifiers", &["use"]),
    ("output", &["csv", "svg", "plot", "timing", "curves"]),
    ("run", &["threads"]),
    ("curves", &["params"]),
];

type Table = BTreeMap<(String, String), (usize, String)>;

fn parse_table(text: &str) -> Result<Table, ConfigError> {
    let mut table = Table::new();
    let mut section: Option<&str> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |msg: String| ConfigError::Syntax { line: line_no, msg };
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| syntax(format!("malformed section header '{line}'")))?
                .trim();
            let known = SECTIONS
                .iter()
                .find(|(s, _)| *s == name)
                .ok_or_else(|| syntax(format!("unknown section [{name}]")))?;
            section = Some(known.0);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| syntax(format!("expected 'key = value', got '{line}'")))?;
        let key = key.trim();
        let sec = section.ok_or_else(|| syntax(format!("key '{key}' outside of any section")))?;
        let allowed = SECTIONS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key) {
            return Err(syntax(format!("unknown key '{key}' in [{sec}]")));
        }
        if table.insert((sec.to_string(), key.to_string()), (line_no, value.trim().to_string())).is_some() {
            return Err(syntax(format!("duplicate key '{key}' in [{sec}]")));
        }
    }
    Ok(table)
}

struct Reader {
    table: Table,
}

impl Reader {
    fn take(&mut self, section: &str, key: &str) -> Option<String> {
        self.table.remove(&(section.to_string(), key.to_string())).map(|(_, v)| v)
    }

    fn required(&mut self, section: &str, key: &str) -> Result<String, ConfigError> {
        self.take(section, key).ok_or_else(|| ConfigError::Missing {
            section: section.into(),
            key: key.into(),
        })
    }

    fn parse<T: std::str::FromStr>(&mut self, section: &str, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.take(section, key)
            .map(|v| v.parse::<T>().map_err(|e| value_err(section, key, format!("'{v}': {e}"))))
            .transpose()
    }

    fn parse_required<T: std::str::FromStr>(&mut self, section: &str, key: &str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.parse(section, key)?.ok_or_else(|| ConfigError::Missing {
            section: section.into(),
            key: key.into(),
        })
    }
}

fn value_err(section: &str, key: &str, msg: String) -> ConfigError {
    ConfigError::Value {
        section: section.into(),
        key: key.into(),
        msg,
    }
}

fn parse_list<T: std::str::FromStr>(section: &str, key: &str, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| value_err(section, key, format!("'{s}': {e}"))))
        .collect()
}

fn parse_bool(section: &str, key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "yes" | "on" => Ok(true),
        "false" | "no" | "off" => Ok(false),
        other => Err(value_err(section, key, format!("expected true/false, got '{other}'"))),
    }
}

fn parse_n_rule(value: &str) -> Result<NRule, ConfigError> {
    let err = |msg: String| value_err("plan", "n_rule", msg);
    let (kind, rest) = value.split_once(char::is_whitespace).unwrap_or((value, ""));
    let rest = rest.trim();
    match kind {
        "power" => rest
            .parse::<f64>()
            .map(|gamma| NRule::Power { gamma })
            .map_err(|e| err(format!("power exponent '{rest}': {e}"))),
        "fixed" => rest
            .parse::<usize>()
            .map(NRule::Fixed)
            .map_err(|e| err(format!("fixed n '{rest}': {e}"))),
        "explicit" => Ok(NRule::Explicit(parse_list("plan", "n_rule", rest)?)),
        other => Err(err(format!("expected 'power <gamma>', 'fixed <n>' or 'explicit <n,...>', got '{other}'"))),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let mut r = Reader { table: parse_table(text)? };

        let d_grid = parse_list("plan", "d_grid", &r.required("plan", "d_grid")?)?;
        let n_rule = parse_n_rule(&r.required("plan", "n_rule")?)?;
        let master_seed: u64 = r.parse_required("plan", "master_seed")?;
        let theta_draws = r.parse("plan", "theta_draws")?.unwrap_or(DEFAULT_THETA_DRAWS);
        let replicates = r.parse("plan", "replicates")?.unwrap_or(DEFAULT_REPLICATES);
        let test_points = r.parse("plan", "test_points")?.unwrap_or(DEFAULT_TEST_POINTS);
        let eval = match r.take("plan", "eval").as_deref() {
            None | Some("projected") => TestEval::Projected,
            Some("full") => TestEval::Full,
            Some(other) => return Err(value_err("plan", "eval", format!("expected projected/full, got '{other}'"))),
        };

        let kind = r.required("family", "kind")?;
        let alpha: f64 = r.parse_required("family", "alpha")?;
        let family = match kind.as_str() {
            "sphere" => Family::Sphere { alpha },
            "sensing_aware" => Family::SensingAware {
                alpha,
                gamma: r.parse_required("family", "gamma")?,
                beta: r.parse_required("family", "beta")?,
                midpoint: r.parse("family", "midpoint")?.unwrap_or(0.0),
            },
            "sparse_exp" => Family::SparseExp { a: r.parse_required("family", "a")?, alpha },
            "sparse_poly" => Family::SparsePoly { b: r.parse_required("family", "b")?, alpha },
            other => return Err(value_err("family", "kind", format!("unknown family '{other}'"))),
        };
        // Family keys that the chosen kind did not consume are errors.
        for key in ["gamma", "beta", "midpoint", "a", "b"] {
            if r.take("family", key).is_some() {
                return Err(value_err("family", key, format!("not a parameter of family '{kind}'")));
            }
        }

        let classifiers = r
            .required("classifiers", "use")?
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<ClassifierSpec>().map_err(|e| value_err("classifiers", "use", e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;

        let csv = r.take("output", "csv").map(PathBuf::from);
        let svg = r.take("output", "svg").map(PathBuf::from);
        let curves = r.take("output", "curves").map(PathBuf::from);
        let plot = match r.take("output", "plot") {
            Some(v) => parse_bool("output", "plot", &v)?,
            None => svg.is_some(),
        };
        let timing = match r.take("output", "timing") {
            Some(v) => parse_bool("output", "timing", &v)?,
            None => false,
        };
        let threads = r.parse("run", "threads")?.unwrap_or(0);
        let curve_params = match r.take("curves", "params") {
            Some(v) => parse_list("curves", "params", &v)?,
            None => Vec::new(),
        };
        debug_assert!(r.table.is_empty(), "unconsumed keys: {:?}", r.table);

        let plan = SweepPlan {
            d_grid,
            n_rule,
            family,
            classifiers,
            theta_draws,
            replicates_per_theta: replicates,
            test_points_per_replicate: test_points,
            master_seed,
            eval,
        };
        plan.validate().map_err(|e| ConfigError::Plan(e.to_string()))?;
        Ok(RunConfig {
            plan,
            csv,
            svg,
            plot,
            timing,
            curves,
            curve_params,
            threads,
        })
    }

    /// Canonical text form; parsing it yields an equal configuration.
    pub fn to_config_string(&self) -> String {
        let p = &self.plan;
        let join = |xs: Vec<String>| xs.join(", ");
        let mut s = String::new();
        let _ = writeln!(s, "[plan]");
        let _ = writeln!(s, "d_grid = {}", join(p.d_grid.iter().map(|d| d.to_string()).collect()));
        let n_rule = match &p.n_rule {
            NRule::Power { gamma } => format!("power {gamma}"),
            NRule::Fixed(n) => format!("fixed {n}"),
            NRule::Explicit(ns) => format!("explicit {}", join(ns.iter().map(|n| n.to_string()).collect())),
        };
        let _ = writeln!(s, "n_rule = {n_rule}");
        let _ = writeln!(s, "theta_draws = {}", p.theta_draws);
        let _ = writeln!(s, "replicates = {}", p.replicates_per_theta);
        let _ = writeln!(s, "test_points = {}", p.test_points_per_replicate);
        let _ = writeln!(s, "master_seed = {}", p.master_seed);
        let _ = writeln!(s, "eval = {}", if p.eval == TestEval::Full { "full" } else { "projected" });

        let _ = writeln!(s, "\n[family]");
        match &p.family {
            Family::Sphere { alpha } => {
                let _ = writeln!(s, "kind = sphere\nalpha = {alpha}");
            }
            Family::SensingAware { alpha, gamma, beta, midpoint } => {
                let _ = writeln!(
                    s,
                    "kind = sensing_aware\nalpha = {alpha}\ngamma = {gamma}\nbeta = {beta}\nmidpoint = {midpoint}"
                );
            }
            Family::SparseExp { a, alpha } => {
                let _ = writeln!(s, "kind = sparse_exp\nalpha = {alpha}\na = {a}");
            }
            Family::SparsePoly { b, alpha } => {
                let _ = writeln!(s, "kind = sparse_poly\nalpha = {alpha}\nb = {b}");
            }
        }

        let _ = writeln!(s, "\n[classifiers]");
        let _ = writeln!(s, "use = {}", join(p.classifiers.iter().map(|c| c.label()).collect()));

        let _ = writeln!(s, "\n[output]");
        for (key, path) in [("csv", &self.csv), ("svg", &self.svg), ("curves", &self.curves)] {
            if let Some(path) = path {
                let _ = writeln!(s, "{key} = {}", path.display());
            }
        }
        let _ = writeln!(s, "plot = {}\ntiming = {}", self.plot, self.timing);

        let _ = writeln!(s, "\n[run]\nthreads = {}", self.threads);
        if !self.curve_params.is_empty() {
            let _ = writeln!(
                s,
                "\n[curves]\nparams = {}",
                join(self.curve_params.iter().map(|x| x.to_string()).collect())
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
[plan]
d_grid = 64
n_rule = fixed 4
master_seed = 7
[family]
kind = sphere
alpha = 2
[classifiers]
use = matched_filter
";

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.plan.d_grid, vec![64]);
        assert_eq!(cfg.plan.n_rule, NRule::Fixed(4));
        assert_eq!(cfg.plan.theta_draws, DEFAULT_THETA_DRAWS);
        assert_eq!(cfg.plan.family, Family::Sphere { alpha: 2.0 });
        assert!(!cfg.plot && !cfg.timing);
        assert_eq!(cfg.threads, 0);
    }

    #[test]
    fn unknown_keys_and_sections_are_rejected() {
        let bad_key = MINIMAL.replace("alpha = 2", "alpha = 2\nalhpa = 3");
        assert!(matches!(RunConfig::parse(&bad_key), Err(ConfigError::Syntax { .. })));
        let bad_section = format!("{MINIMAL}\n[extras]\nx = 1\n");
        assert!(matches!(RunConfig::parse(&bad_section), Err(ConfigError::Syntax { .. })));
        let foreign = MINIMAL.replace("alpha = 2", "alpha = 2\na = 0.5");
        assert!(matches!(RunConfig::parse(&foreign), Err(ConfigError::Value { .. })));
        let dup = MINIMAL.replace("alpha = 2", "alpha = 2\nalpha = 3");
        assert!(matches!(RunConfig::parse(&dup), Err(ConfigError::Syntax { .. })));
    }

    #[test]
    fn plan_invariants_checked_before_compute() {
        let bad_gamma = MINIMAL.replace("fixed 4", "power 1.5");
        assert!(matches!(RunConfig::parse(&bad_gamma), Err(ConfigError::Plan(_))));
        let tiny = MINIMAL.replace("master_seed = 7", "master_seed = 7\nreplicates = 2\ntest_points = 3");
        assert!(matches!(RunConfig::parse(&tiny), Err(ConfigError::Plan(_))));
        let missing = MINIMAL.replace("master_seed = 7", "");
        assert!(matches!(RunConfig::parse(&missing), Err(ConfigError::Missing { .. })));
        let bad_cls = MINIMAL.replace("matched_filter", "knn");
        assert!(matches!(RunConfig::parse(&bad_cls), Err(ConfigError::Value { .. })));
    }

    #[test]
    fn round_trip_is_semantic_identity() {
        let full = "
[plan]
d_grid = 100, 400, 1600
n_rule = explicit 5, 10, 20
theta_draws = 3
replicates = 50
test_points = 64
master_seed = 18446744073709551615
eval = full
[family]
kind = sensing_aware
alpha = 1.5
gamma = 0.3333333333333333
beta = 2
midpoint = -0.25
[classifiers]
use = soft_threshold:c=0.7, plugin_pooled, coin_flip
[output]
csv = out/a.csv
svg = out/a.svg
curves = out/c.csv
timing = true
[run]
threads = 3
[curves]
params = 0.1, 0.5
";
        let cfg = RunConfig::parse(full).unwrap();
        assert!(cfg.plot);
        let again = RunConfig::parse(&cfg.to_config_string()).unwrap();
        assert_eq!(cfg, again);
        let minimal = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(RunConfig::parse(&minimal.to_config_string()).unwrap(), minimal);
    }
}
