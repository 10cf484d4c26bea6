//! Sectioned `key = value` experiment configuration.
//!
//! Grammar, one construct per line:
//!
//! ```text
//! # comment            (also `;`)
//! [section]
//! key = value          # trailing comment after whitespace
//! ```
//!
//! Keys are case-sensitive and may appear once per section, except
//! `coefficient`, which repeats. List values are comma-separated.
//!
//! | section       | keys |
//! |---------------|------|
//! | `[kernel]`    | `type` (`korobov` or `explicit`), `dim`; korobov: `r`, `K`; explicit: `mean`, `coefficient = k1, …, kd : value` |
//! | `[algorithm]` | `variant` (list of `averaging`, `greedy`), `first_point`, `seed`, `candidate_budget`, `grid_resolution`, `refinement_steps` |
//! | `[sweep]`     | `m` (list) or `m_min`, `m_max`, `factor` |
//! | `[analysis]`  | `grid`, `baselines` (list of `random`, `equispaced`, or `none`) |
//! | `[output]`    | `directory`, `formats` (list of `csv`, `json`) |

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::kernel::{FourierKernel, KernelError};
use crate::search::{SearchConfig, Variant};

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}, `{}`: {}", self.field, self.message),
            None => write!(f, "`{}`: {}", self.field, self.message),
        }
    }
}

impl ConfigError {
    fn at(line: usize, field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            field: field.into(),
            message: message.into(),
        }
    }

    fn missing(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            line: None,
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

impl Section {
    fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a Entry> + 'a {
        self.entries.iter().filter(move |e| e.key == key)
    }

    fn field(&self, key: &str) -> String {
        format!("{}.{}", self.name, key)
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(Some).map_err(|_| {
                ConfigError::at(
                    e.line,
                    self.field(key),
                    format!("cannot parse `{}`", e.value),
                )
            }),
        }
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        self.parse(key)?
            .ok_or_else(|| ConfigError::missing(self.field(key), "required field is missing"))
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        let Some(e) = self.get(key) else {
            return Ok(None);
        };
        split_list(&e.value)
            .map(|tok| {
                tok.parse::<T>().map_err(|err| {
                    ConfigError::at(e.line, self.field(key), format!("`{tok}`: {err}"))
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        for (i, e) in self.entries.iter().enumerate() {
            if !allowed.contains(&e.key.as_str()) {
                return Err(ConfigError::at(e.line, self.field(&e.key), "unknown key"));
            }
            if e.key != "coefficient" && self.entries[..i].iter().any(|p| p.key == e.key) {
                return Err(ConfigError::at(e.line, self.field(&e.key), "duplicate key"));
            }
        }
        Ok(())
    }
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_sections(text: &str) -> Result<Vec<Section>, ConfigError> {
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = strip_trailing_comment(raw).trim();
        if s.is_empty() || s.starts_with('#') || s.starts_with(';') {
            continue;
        }
        if let Some(rest) = s.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::at(line, s, "unterminated section header"))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(ConfigError::at(line, name, "unknown section"));
            }
            if sections.iter().any(|sec| sec.name == name) {
                return Err(ConfigError::at(line, name, "section appears twice"));
            }
            sections.push(Section {
                name: name.to_string(),
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = s
            .split_once('=')
            .ok_or_else(|| ConfigError::at(line, s, "expected `key = value`"))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::at(line, s, "empty key"));
        }
        let section = sections
            .last_mut()
            .ok_or_else(|| ConfigError::at(line, key, "entry before any [section]"))?;
        section.entries.push(Entry {
            key: key.to_string(),
            value: value.trim().to_string(),
            line,
        });
    }
    Ok(sections)
}

/// Drops a ` # …` tail; a `#` not preceded by whitespace is kept.
fn strip_trailing_comment(line: &str) -> &str {
    line.char_indices()
        .find(|&(i, c)| c == '#' && i > 0 && line[..i].ends_with(char::is_whitespace))
        .map_or(line, |(i, _)| &line[..i])
}

const SECTIONS: &[&str] = &["kernel", "algorithm", "sweep", "analysis", "output"];

/// Kernel description as written in a `[kernel]` section.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Korobov {
        dim: usize,
        smoothness: f64,
        limit: u32,
    },
    Explicit {
        dim: usize,
        mean: f64,
        coefficients: Vec<(Vec<i32>, f64)>,
    },
}

impl KernelSpec {
    pub fn dim(&self) -> usize {
        match self {
            KernelSpec::Korobov { dim, .. } | KernelSpec::Explicit { dim, .. } => *dim,
        }
    }

    pub fn build(&self) -> Result<FourierKernel, KernelError> {
        match self {
            KernelSpec::Korobov {
                dim,
                smoothness,
                limit,
            } => FourierKernel::korobov(*dim, *smoothness, *limit),
            KernelSpec::Explicit {
                dim,
                mean,
                coefficients,
            } => FourierKernel::explicit(*dim, *mean, coefficients.iter().cloned()),
        }
    }

    fn from_section(sec: &Section) -> Result<Self, ConfigError> {
        let kind: String = sec.require("type")?;
        let dim: usize = sec.require("dim")?;
        if dim == 0 {
            let line = sec.get("dim").map(|e| e.line).unwrap_or(sec.line);
            return Err(ConfigError::at(line, sec.field("dim"), "must be positive"));
        }
        match kind.as_str() {
            "korobov" => {
                sec.check_keys(&["type", "dim", "r", "K"])?;
                Ok(KernelSpec::Korobov {
                    dim,
                    smoothness: sec.require("r")?,
                    limit: sec.require("K")?,
                })
            }
            "explicit" => {
                sec.check_keys(&["type", "dim", "mean", "coefficient"])?;
                let mean = sec.parse("mean")?.unwrap_or(0.0);
                let mut coefficients = Vec::new();
                for e in sec.all("coefficient") {
                    let bad = |msg: &str| ConfigError::at(e.line, sec.field("coefficient"), msg);
                    let (k, v) = e
                        .value
                        .split_once(':')
                        .ok_or_else(|| bad("expected `k1, …, kd : value`"))?;
                    let k: Vec<i32> = split_list(k)
                        .map(|t| t.parse::<i32>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| bad("frequency components must be integers"))?;
                    let v: f64 = v
                        .trim()
                        .parse()
                        .map_err(|_| bad("coefficient must be a number"))?;
                    coefficients.push((k, v));
                }
                Ok(KernelSpec::Explicit {
                    dim,
                    mean,
                    coefficients,
                })
            }
            other => {
                let line = sec.get("type").map(|e| e.line).unwrap_or(sec.line);
                Err(ConfigError::at(
                    line,
                    sec.field("type"),
                    format!("unknown kernel type `{other}` (expected korobov or explicit)"),
                ))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Baseline {
    Random,
    Equispaced,
}

impl Baseline {
    pub fn name(self) -> &'static str {
        match self {
            Baseline::Random => "random",
            Baseline::Equispaced => "equispaced",
        }
    }
}

impl FromStr for Baseline {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Baseline::Random),
            "equispaced" => Ok(Baseline::Equispaced),
            other => Err(format!("unknown baseline `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

/// Analysis grid resolution used when none is configured.
pub fn default_analysis_grid(dim: usize) -> usize {
    match dim {
        1 => 1024,
        2 => 128,
        3 => 32,
        _ => 8,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kernel: Option<KernelSpec>,
    /// Search parameters; `search.variant` is the first listed variant.
    pub search: SearchConfig,
    pub variants: Vec<Variant>,
    pub sweep: Option<Vec<usize>>,
    pub grid: Option<usize>,
    pub baselines: Vec<Baseline>,
    pub directory: Option<PathBuf>,
    pub formats: Vec<OutputFormat>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kernel: None,
            search: SearchConfig::new(Variant::Averaging),
            variants: vec![Variant::Averaging],
            sweep: None,
            grid: None,
            baselines: Vec::new(),
            directory: None,
            formats: vec![OutputFormat::Csv],
        }
    }
}

impl ExperimentConfig {
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let sections = parse_sections(text)?;
        let mut cfg = ExperimentConfig::default();
        let find = |name: &str| sections.iter().find(|s| s.name == name);

        if let Some(sec) = find("kernel") {
            cfg.kernel = Some(KernelSpec::from_section(sec)?);
        }

        if let Some(sec) = find("algorithm") {
            sec.check_keys(&[
                "variant",
                "first_point",
                "seed",
                "candidate_budget",
                "grid_resolution",
                "refinement_steps",
            ])?;
            if let Some(v) = sec.list::<Variant>("variant")? {
                if v.is_empty() {
                    let line = sec.get("variant").map(|e| e.line).unwrap_or(sec.line);
                    return Err(ConfigError::at(line, sec.field("variant"), "empty list"));
                }
                cfg.variants = dedup_preserving(v);
            }
            cfg.search.variant = cfg.variants[0];
            if let Some(p) = sec.list::<f64>("first_point")? {
                cfg.search.first_point = Some(p);
            }
            if let Some(seed) = sec.parse("seed")? {
                cfg.search.seed = seed;
            }
            if let Some(b) = positive(sec, "candidate_budget")? {
                cfg.search.candidate_budget = b;
            }
            if let Some(g) = positive(sec, "grid_resolution")? {
                cfg.search.grid_resolution = Some(g);
            }
            if let Some(r) = sec.parse("refinement_steps")? {
                cfg.search.refinement_steps = r;
            }
        }

        if let Some(sec) = find("sweep") {
            sec.check_keys(&["m", "m_min", "m_max", "factor"])?;
            let ms = if let Some(list) = sec.list::<usize>("m")? {
                if sec.get("m_min").is_some()
                    || sec.get("m_max").is_some()
                    || sec.get("factor").is_some()
                {
                    return Err(ConfigError::at(
                        sec.get("m").unwrap().line,
                        sec.field("m"),
                        "give either an explicit list or m_min/m_max/factor, not both",
                    ));
                }
                list
            } else {
                let m_min: usize = sec.require("m_min")?;
                let m_max: usize = sec.require("m_max")?;
                let factor: f64 = sec.require("factor")?;
                let line = sec.get("factor").map(|e| e.line).unwrap_or(sec.line);
                if factor.is_nan() || factor <= 1.0 {
                    return Err(ConfigError::at(line, sec.field("factor"), "must exceed 1"));
                }
                geometric_schedule(m_min, m_max, factor)
            };
            let line = sec.entries.first().map(|e| e.line).unwrap_or(sec.line);
            if ms.is_empty() {
                return Err(ConfigError::at(line, sec.field("m"), "sweep is empty"));
            }
            if ms[0] == 0 {
                return Err(ConfigError::at(
                    line,
                    sec.field("m"),
                    "m values must be positive",
                ));
            }
            if ms.windows(2).any(|w| w[1] <= w[0]) {
                return Err(ConfigError::at(
                    line,
                    sec.field("m"),
                    "m values must be strictly increasing",
                ));
            }
            cfg.sweep = Some(ms);
        }

        if let Some(sec) = find("analysis") {
            sec.check_keys(&["grid", "baselines"])?;
            cfg.grid = positive(sec, "grid")?;
            if let Some(e) = sec.get("baselines") {
                if e.value.trim() != "none" {
                    cfg.baselines =
                        dedup_preserving(sec.list::<Baseline>("baselines")?.unwrap_or_default());
                }
                let dim = cfg.kernel.as_ref().map(KernelSpec::dim);
                if cfg.baselines.contains(&Baseline::Equispaced) && dim.is_some_and(|d| d != 1) {
                    return Err(ConfigError::at(
                        e.line,
                        sec.field("baselines"),
                        "equispaced baseline requires dim = 1",
                    ));
                }
            }
        }

        if let Some(sec) = find("output") {
            sec.check_keys(&["directory", "formats"])?;
            if let Some(e) = sec.get("directory") {
                cfg.directory = Some(PathBuf::from(&e.value));
            }
            if let Some(f) = sec.list::<OutputFormat>("formats")? {
                if f.is_empty() {
                    let line = sec.get("formats").unwrap().line;
                    return Err(ConfigError::at(line, sec.field("formats"), "empty list"));
                }
                let mut f = f;
                f.dedup();
                cfg.formats = f;
            }
        }

        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigFileError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigFileError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_text(&text).map_err(|source| ConfigFileError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Analysis grid for dimension `dim`.
    pub fn grid_for(&self, dim: usize) -> usize {
        self.grid.unwrap_or_else(|| default_analysis_grid(dim))
    }
}

#[derive(Debug, Error)]
pub enum ConfigFileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: ConfigError,
    },
}

fn positive(sec: &Section, key: &str) -> Result<Option<usize>, ConfigError> {
    let v: Option<usize> = sec.parse(key)?;
    if v == Some(0) {
        let line = sec.get(key).unwrap().line;
        return Err(ConfigError::at(line, sec.field(key), "must be positive"));
    }
    Ok(v)
}

fn dedup_preserving<T: PartialEq + Copy>(v: Vec<T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(v.len());
    for x in v {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

/// `round(m_min · factorⁱ)` for `i = 0, 1, …` up to `m_max`, duplicates dropped.
pub fn geometric_schedule(m_min: usize, m_max: usize, factor: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 0;
    loop {
        let v = (m_min as f64 * factor.powi(i)).round();
        if v > m_max as f64 {
            break;
        }
        let v = v as usize;
        if out.last() != Some(&v) {
            out.push(v);
        }
        i += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = "\
# sample
[kernel]
type = korobov
dim = 1
r = 2
K = 8

[algorithm]
variant = averaging, greedy
seed = 42
candidate_budget = 500
grid_resolution = 128
refinement_steps = 10
first_point = 0.25

[sweep]
m_min = 4
m_max = 64
factor = 2

[analysis]
grid = 512
baselines = random, equispaced

[output]
directory = out
formats = csv, json
";

    #[test]
    fn parses_full_config() {
        let cfg = ExperimentConfig::from_text(FULL).unwrap();
        assert_eq!(
            cfg.kernel,
            Some(KernelSpec::Korobov {
                dim: 1,
                smoothness: 2.0,
                limit: 8
            })
        );
        assert_eq!(cfg.variants, vec![Variant::Averaging, Variant::Greedy]);
        assert_eq!(cfg.search.seed, 42);
        assert_eq!(cfg.search.candidate_budget, 500);
        assert_eq!(cfg.search.grid_resolution, Some(128));
        assert_eq!(cfg.search.refinement_steps, 10);
        assert_eq!(cfg.search.first_point, Some(vec![0.25]));
        assert_eq!(cfg.sweep, Some(vec![4, 8, 16, 32, 64]));
        assert_eq!(cfg.grid, Some(512));
        assert_eq!(cfg.baselines, vec![Baseline::Random, Baseline::Equispaced]);
        assert_eq!(cfg.directory, Some(PathBuf::from("out")));
        assert_eq!(cfg.formats, vec![OutputFormat::Csv, OutputFormat::Json]);
    }

    #[test]
    fn trailing_comments() {
        let text = "[kernel]\ntype = korobov   # product kernel\ndim = 1\nr = 2\nK = 4\n[output]\ndirectory = run#3\n";
        let cfg = ExperimentConfig::from_text(text).unwrap();
        assert!(matches!(
            cfg.kernel,
            Some(KernelSpec::Korobov { limit: 4, .. })
        ));
        assert_eq!(cfg.directory, Some(PathBuf::from("run#3")));
    }

    #[test]
    fn explicit_kernel_section() {
        let text = "[kernel]\ntype = explicit\ndim = 2\nmean = 1\ncoefficient = 1, 0 : 0.5\ncoefficient = -1, 2 : 0.25\n";
        let cfg = ExperimentConfig::from_text(text).unwrap();
        let spec = cfg.kernel.unwrap();
        assert_eq!(
            spec,
            KernelSpec::Explicit {
                dim: 2,
                mean: 1.0,
                coefficients: vec![(vec![1, 0], 0.5), (vec![-1, 2], 0.25)]
            }
        );
        let k = spec.build().unwrap();
        assert_eq!(k.coefficient(&vec![1, -2].into()), 0.25);
    }

    #[test]
    fn errors_carry_line_and_field() {
        let err = ExperimentConfig::from_text("[kernel]\ntype = korobov\ndim = two\n").unwrap_err();
        assert_eq!(err.line, Some(3));
        assert_eq!(err.field, "kernel.dim");

        let err =
            ExperimentConfig::from_text("[kernel]\ntype = korobov\ndim = 1\nr = 2\nK = 4\nq = 1\n")
                .unwrap_err();
        assert_eq!((err.line, err.message.as_str()), (Some(6), "unknown key"));

        let err =
            ExperimentConfig::from_text("[kernel]\ntype = korobov\ndim = 1\nr = 2\n").unwrap_err();
        assert_eq!(err.field, "kernel.K");
        assert_eq!(err.line, None);

        let err = ExperimentConfig::from_text("seed = 3\n").unwrap_err();
        assert_eq!(err.line, Some(1));

        let err = ExperimentConfig::from_text("[bogus]\n").unwrap_err();
        assert_eq!(err.message, "unknown section");

        let err = ExperimentConfig::from_text("[algorithm]\nvariant = lattice\n").unwrap_err();
        assert_eq!(err.line, Some(2));
        assert!(err.to_string().contains("lattice"));
    }

    #[test]
    fn sweep_must_increase() {
        let err = ExperimentConfig::from_text("[sweep]\nm = 4, 2\n").unwrap_err();
        assert!(err.message.contains("strictly increasing"));
        let err = ExperimentConfig::from_text("[sweep]\nm = 0, 2\n").unwrap_err();
        assert!(err.message.contains("positive"));
        let err =
            ExperimentConfig::from_text("[sweep]\nm_min = 1\nm_max = 8\nfactor = 1\n").unwrap_err();
        assert_eq!(err.field, "sweep.factor");
    }

    #[test]
    fn equispaced_requires_one_dimension() {
        let text =
            "[kernel]\ntype = korobov\ndim = 2\nr = 2\nK = 4\n[analysis]\nbaselines = equispaced\n";
        let err = ExperimentConfig::from_text(text).unwrap_err();
        assert_eq!(err.line, Some(7));
    }

    #[test]
    fn duplicate_keys_rejected() {
        let err = ExperimentConfig::from_text("[algorithm]\nseed = 1\nseed = 2\n").unwrap_err();
        assert_eq!((err.line, err.message.as_str()), (Some(3), "duplicate key"));
    }

    #[test]
    fn geometric_schedules() {
        assert_eq!(
            geometric_schedule(1, 512, 2.0),
            vec![1, 2, 4, 8, 16, 32, 64, 128, 256, 512]
        );
        assert_eq!(geometric_schedule(1, 10, 1.5), vec![1, 2, 3, 5, 8]);
        assert_eq!(geometric_schedule(5, 4, 2.0), Vec::<usize>::new());
    }

    #[test]
    fn defaults() {
        let cfg = ExperimentConfig::from_text("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.grid_for(1), 1024);
        assert_eq!(cfg.grid_for(3), 32);
    }
}
