//! Batch front-end: flat key=value instance configurations, the commands
//! behind the `rsverify` binary and the JSON report they write.

use crate::arithmetic_q::field::{build_instance, ArithmeticError, InstanceConfig, Level, Place};
use crate::arithmetic_q::rubin_stark::rs_element_r1;
use crate::arithmetic_q::units::SUnitLattice;
use crate::lseries::{characters, r_chi, stickelberger, x_element, LValueCache};
use crate::multilinear::RubinLattice;
use crate::suites::{algebra_suite, lemma54_suite};
use crate::verifier::{verify_instance, verify_lemmas, warm_cache, CheckResult, InstanceReport, VerifyError};
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

const KEYS: [&str; 9] = ["prime_powers", "S", "T", "V", "v0", "precision", "denominator_bound", "seed", "fix"];
const REQUIRED: [&str; 5] = ["prime_powers", "S", "T", "v0", "denominator_bound"];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("config key {key}: {msg}")]
    Value { key: String, msg: String },
    #[error("missing config key {0}")]
    Missing(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Arithmetic(#[from] ArithmeticError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

/// Process exit status; the numeric values are part of the interface.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Pass = 0,
    CheckFailed = 1,
    ParseError = 2,
    Rejected = 3,
}

impl CliError {
    pub fn exit(&self) -> Exit {
        let rejected = |e: &ArithmeticError| {
            matches!(e, ArithmeticError::Admissibility(_) | ArithmeticError::Hypothesis(_) | ArithmeticError::Unsupported(_))
        };
        match self {
            CliError::Syntax { .. } | CliError::Value { .. } | CliError::Missing(_) | CliError::Io(_) => Exit::ParseError,
            CliError::Arithmetic(e) | CliError::Verify(VerifyError::Arithmetic(e)) if rejected(e) => Exit::Rejected,
            _ => Exit::CheckFailed,
        }
    }
}

/// The parsed key=value pairs, keys checked against the known set.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawConfig {
    pub entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Syntax { line: i + 1, msg: "expected key = value".into() })?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(CliError::Syntax { line: i + 1, msg: format!("unknown key {}", k) });
            }
            if entries.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(CliError::Syntax { line: i + 1, msg: format!("duplicate key {}", k) });
            }
        }
        Ok(RawConfig { entries })
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {}", path.display(), e)))?;
        Self::parse(&text)
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn seed(&self) -> Result<Option<u64>, CliError> {
        self.get("seed").map(|v| parse_int(v, "seed")).transpose()
    }

    /// The instance configuration; every key in `REQUIRED` must be present.
    pub fn instance(&self) -> Result<InstanceConfig, CliError> {
        for k in REQUIRED {
            if self.get(k).is_none() {
                return Err(CliError::Missing(k.into()));
            }
        }
        let prime_powers = list(self.get("prime_powers").unwrap())
            .map(|item| {
                let (p, e) = item.split_once(':').ok_or_else(|| value_err("prime_powers", "expected p:e"))?;
                Ok((parse_int(p, "prime_powers")?, parse_int::<u32>(e, "prime_powers")?))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let places = |key: &str| -> Result<Vec<Place>, CliError> {
            list(self.get(key).unwrap_or("inf")).map(|x| parse_place(x, key)).collect()
        };
        let ints = |key: &str| -> Result<Vec<u64>, CliError> {
            list(self.get(key).unwrap_or("")).map(|x| parse_int(x, key)).collect()
        };
        Ok(InstanceConfig {
            prime_powers,
            s: places("S")?,
            t: ints("T")?,
            v: places("V")?,
            v0: Some(parse_place(self.get("v0").unwrap(), "v0")?),
            precision: self.get("precision").map_or(Ok(128), |v| parse_int(v, "precision"))?,
            denominator_bound: parse_int(self.get("denominator_bound").unwrap(), "denominator_bound")?,
            seed: self.seed()?.unwrap_or(0),
            fix: ints("fix")?,
        })
    }
}

fn list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|x| !x.is_empty())
}

fn value_err(key: &str, msg: &str) -> CliError {
    CliError::Value { key: key.into(), msg: msg.into() }
}

fn parse_int<T: std::str::FromStr>(v: &str, key: &str) -> Result<T, CliError> {
    v.trim().parse().map_err(|_| value_err(key, &format!("{:?} is not a nonnegative integer", v.trim())))
}

fn parse_place(v: &str, key: &str) -> Result<Place, CliError> {
    match v.trim() {
        "inf" | "∞" => Ok(Place::Infinite),
        p => Ok(Place::Finite(parse_int(p, key)?)),
    }
}

/// The normalized configuration as written back into reports.
pub fn config_echo(c: &InstanceConfig) -> BTreeMap<String, String> {
    let join = |xs: Vec<String>| xs.join(", ");
    let mut m = BTreeMap::new();
    m.insert("prime_powers".into(), join(c.prime_powers.iter().map(|(p, e)| format!("{}:{}", p, e)).collect()));
    m.insert("S".into(), join(c.s.iter().map(Place::to_string).collect()));
    m.insert("T".into(), join(c.t.iter().map(u64::to_string).collect()));
    m.insert("V".into(), join(c.v.iter().map(Place::to_string).collect()));
    m.insert("v0".into(), c.v0.map_or(String::new(), |v| v.to_string()));
    m.insert("precision".into(), c.precision.to_string());
    m.insert("denominator_bound".into(), c.denominator_bound.to_string());
    m.insert("seed".into(), c.seed.to_string());
    if !c.fix.is_empty() {
        m.insert("fix".into(), join(c.fix.iter().map(u64::to_string).collect()));
    }
    m
}

#[derive(Clone, Debug, Serialize)]
pub struct Environment {
    pub precision: Option<u32>,
    pub cache_hits: usize,
    pub seed: Option<u64>,
    pub denominators: BTreeMap<String, String>,
}

/// Everything outside `timing` is byte-stable for a fixed config and precision.
#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub generated_at: u64,
    pub elapsed_ms: u128,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportFile {
    pub schema_version: u32,
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub checks: Vec<CheckResult>,
    pub verdict: String,
    pub environment: Environment,
    pub timing: Timing,
}

impl ReportFile {
    fn new(command: &str, config: BTreeMap<String, String>, checks: Vec<CheckResult>, environment: Environment, start: Instant) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        ReportFile {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            config,
            checks,
            verdict: if pass { "pass" } else { "fail" }.into(),
            environment,
            timing: Timing {
                generated_at: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
                elapsed_ms: start.elapsed().as_millis(),
            },
        }
    }

    fn from_instance(command: &str, r: InstanceReport, start: Instant) -> Self {
        let env = Environment {
            precision: Some(r.precision),
            cache_hits: r.cache_hits,
            seed: Some(r.config.seed),
            denominators: r.denominators,
        };
        Self::new(command, config_echo(&r.config), r.checks, env, start)
    }

    pub fn exit(&self) -> Exit {
        if self.verdict == "pass" {
            Exit::Pass
        } else {
            Exit::CheckFailed
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Options shared by all commands; `precision` and `seed` override the config.
#[derive(Clone, Debug, Default)]
pub struct Options {
    pub config: Option<RawConfig>,
    pub cache: Option<std::path::PathBuf>,
    pub precision: Option<u32>,
    pub seed: Option<u64>,
}

impl Options {
    fn instance(&self) -> Result<InstanceConfig, CliError> {
        let raw = self.config.as_ref().ok_or_else(|| CliError::Missing("--config".into()))?;
        let mut c = raw.instance()?;
        if let Some(p) = self.precision {
            c.precision = p;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        Ok(c)
    }

    fn seed(&self) -> Result<u64, CliError> {
        match (self.seed, self.config.as_ref().map(RawConfig::seed).transpose()?.flatten()) {
            (Some(s), _) | (None, Some(s)) => Ok(s),
            (None, None) => Err(CliError::Missing("seed (pass --seed or set it in the config)".into())),
        }
    }

    fn open_cache(&self) -> Result<Option<LValueCache>, CliError> {
        self.cache
            .as_ref()
            .map(|d| LValueCache::open(d).map_err(|e| CliError::Io(format!("{}: {}", d.display(), e))))
            .transpose()
    }
}

fn floats(xs: &[rug::Float]) -> Value {
    json!(xs.iter().map(|x| x.to_string_radix(10, Some(30))).collect::<Vec<_>>())
}

pub fn verify(opts: &Options) -> Result<ReportFile, CliError> {
    let start = Instant::now();
    let inst = build_instance(&opts.instance()?)?;
    Ok(ReportFile::from_instance("verify", verify_instance(inst, opts.open_cache()?)?, start))
}

/// θ^{(r)} for r = |V| on the top level, with the vanishing order of every character.
pub fn stickelberger_cmd(opts: &Options) -> Result<ReportFile, CliError> {
    let start = Instant::now();
    let config = opts.instance()?;
    let inst = build_instance(&config)?;
    let cache = opts.open_cache()?;
    let top = Level::top(&inst);
    let r = inst.v.len();
    let theta = stickelberger(&top, r, cache.as_ref())?;
    let orders: Vec<usize> = characters(top.group()).iter().map(|c| r_chi(&top, c)).collect();
    let check = CheckResult::numeric(
        format!("stickelberger[r={}]", r),
        theta.imag_residual.to_f64(),
        1e-20,
        json!({ "theta": floats(&theta.coeffs), "vanishing_orders": orders }),
    );
    let env = Environment {
        precision: Some(config.precision),
        cache_hits: cache.as_ref().map_or(0, |c| *c.hits.lock().unwrap()),
        seed: None,
        denominators: BTreeMap::new(),
    };
    Ok(ReportFile::new("stickelberger", config_echo(&config), vec![check], env, start))
}

/// The r = 1 Rubin–Stark element of the top level recovered from x_{K,S,T,V}.
pub fn rs_element_cmd(opts: &Options) -> Result<ReportFile, CliError> {
    let start = Instant::now();
    let config = opts.instance()?;
    let inst = build_instance(&config)?;
    if inst.v.len() != 1 {
        return Err(ArithmeticError::Unsupported("rs-element recovers r = 1 elements only".into()).into());
    }
    let cache = opts.open_cache()?;
    let top = Level::top(&inst);
    let units = SUnitLattice::build(&top)?;
    let theta = stickelberger(&top, 1, cache.as_ref())?;
    let v0 = config.v0.expect("v0 is a required key");
    let x = x_element(&top, &units.places, &theta, &inst.v, v0);
    let rubin = RubinLattice::new(&units.module, 1);
    let check = match rs_element_r1(&units, &rubin, &x) {
        Ok(rec) => {
            let coords: Vec<String> = rec.element.wedge.coords().iter().map(|c| c.to_string()).collect();
            let certificate: Vec<String> = rec.element.certificate.iter().map(|c| c.to_string()).collect();
            CheckResult::numeric(
                "rs_element",
                rec.residual.to_f64(),
                1e-9,
                json!({ "coords": coords, "certificate": certificate, "x": floats(&x) }),
            )
        }
        Err(e) => CheckResult::exact("rs_element", false, json!({ "error": e.to_string() })),
    };
    let env = Environment {
        precision: Some(config.precision),
        cache_hits: cache.as_ref().map_or(0, |c| *c.hits.lock().unwrap()),
        seed: None,
        denominators: BTreeMap::new(),
    };
    Ok(ReportFile::new("rs-element", config_echo(&config), vec![check], env, start))
}

/// The seeded inclusion–exclusion suite, plus the instance lemmas when a
/// config with instance keys is given.
pub fn lemma_suite(opts: &Options) -> Result<ReportFile, CliError> {
    let start = Instant::now();
    let seed = opts.seed()?;
    let mut checks = vec![lemma54_suite(seed, 100)];
    let has_instance = opts.config.as_ref().map_or(false, |c| c.entries.contains_key("prime_powers"));
    let mut env = Environment { precision: None, cache_hits: 0, seed: Some(seed), denominators: BTreeMap::new() };
    let mut config = BTreeMap::new();
    if has_instance {
        let inst = build_instance(&opts.instance()?)?;
        let r = verify_lemmas(inst, opts.open_cache()?)?;
        config = config_echo(&r.config);
        env.precision = Some(r.precision);
        env.cache_hits = r.cache_hits;
        env.denominators = r.denominators;
        checks.extend(r.checks);
    } else {
        config.insert("seed".into(), seed.to_string());
    }
    Ok(ReportFile::new("lemma-suite", config, checks, env, start))
}

pub fn algebra_suite_cmd(opts: &Options) -> Result<ReportFile, CliError> {
    let start = Instant::now();
    let seed = opts.seed()?;
    let env = Environment { precision: None, cache_hits: 0, seed: Some(seed), denominators: BTreeMap::new() };
    let config = BTreeMap::from([("seed".to_string(), seed.to_string())]);
    Ok(ReportFile::new("algebra-suite", config, algebra_suite(seed), env, start))
}

/// Cached records sorted by key, as tab-separated lines.
pub fn cache_list(dir: &Path) -> Result<Vec<String>, CliError> {
    let cache = LValueCache::open(dir).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(cache.list().into_iter().map(|(k, re, im)| format!("{}\t{}\t{}", k, re, im)).collect())
}

pub fn cache_clear(dir: &Path) -> Result<(), CliError> {
    LValueCache::open(dir).and_then(|c| c.clear()).map_err(|e| CliError::Io(e.to_string()))
}

/// Computes every leading term `verify` reads; returns the number of lookups.
pub fn cache_warm(opts: &Options) -> Result<usize, CliError> {
    let cache = opts.open_cache()?.ok_or_else(|| CliError::Missing("--cache".into()))?;
    let inst = build_instance(&opts.instance()?)?;
    Ok(warm_cache(inst, &cache)?)
}

pub fn cache_warnings(dir: &Path) -> Vec<String> {
    LValueCache::open(dir).map(|c| c.warnings.lock().unwrap().clone()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    const FLAGSHIP: &str = "\
# K = Q(sqrt 5) Q(zeta_7)^+
prime_powers = 5:1, 7:1
S = inf, 5, 7
T = 3
v0 = 7
denominator_bound = 1000000
";

    #[test]
    fn parses_flat_configs() {
        let raw = RawConfig::parse(FLAGSHIP).unwrap();
        let c = raw.instance().unwrap();
        assert_eq!(c.prime_powers, vec![(5, 1), (7, 1)]);
        assert_eq!(c.s, vec![Place::Infinite, Place::Finite(5), Place::Finite(7)]);
        assert_eq!(c.v, vec![Place::Infinite]);
        assert_eq!(c.precision, 128);
        assert_eq!(c.v0, Some(Place::Finite(7)));
        let echo = config_echo(&c);
        assert_eq!(echo["S"], "inf, 5, 7");
        assert_eq!(RawConfig::parse(&FLAGSHIP.replace("T = 3\n", "")).unwrap().instance().unwrap_err().exit(), Exit::ParseError);
    }

    #[test]
    fn parse_errors_exit_2() {
        for bad in ["prime_powers 5:1", "colour = red", "T = 3\nT = 5", "seed = -1"] {
            let e = RawConfig::parse(bad).and_then(|r| r.seed().map(|_| r)).unwrap_err();
            assert_eq!(e.exit(), Exit::ParseError, "{}", bad);
        }
        let raw = RawConfig::parse(&FLAGSHIP.replace("5:1", "5")).unwrap();
        assert_eq!(raw.instance().unwrap_err().exit(), Exit::ParseError);
    }

    #[test]
    fn torsion_violation_exits_3() {
        let text = "prime_powers = 5:1\nS = inf, 5\nT = 2\nv0 = 5\ndenominator_bound = 1000\n";
        let opts = Options { config: Some(RawConfig::parse(text).unwrap()), ..Default::default() };
        let e = verify(&opts).unwrap_err();
        assert_eq!(e.exit(), Exit::Rejected);
        assert!(e.to_string().contains("torsion-free violation"));
    }

    #[test]
    fn algebra_suite_needs_only_a_seed() {
        let opts = Options { seed: Some(3), ..Default::default() };
        assert!(matches!(algebra_suite_cmd(&Options::default()), Err(CliError::Missing(_))));
        let r = algebra_suite_cmd(&opts).unwrap();
        assert_eq!(r.exit(), Exit::Pass);
        assert_eq!(r.environment.seed, Some(3));
    }
}
