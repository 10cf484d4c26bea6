//! The four CLI verbs as library functions.
//!
//! Each command writes its primary output to the supplied writer and
//! returns a [`CommandError`] whose [`exit_code`](CommandError::exit_code)
//! follows the CLI convention: 0 success, 1 invariant or certification
//! failure, 2 usage or configuration error, 3 I/O or data-file error.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{self, AnalysisError, ErrorReport};
use crate::config::{
    Baseline, ConfigError, ConfigFileError, ExperimentConfig, KernelSpec, OutputFormat,
};
use crate::kernel::{FourierKernel, KernelError, KernelStructure};
use crate::pointset::{self, PointSet, PointSetError};
use crate::search::{self, SearchConfig, SearchError, SearchTrace, Variant};

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    ConfigFile(#[from] ConfigFileError),
    #[error("kernel: {0}")]
    Kernel(#[from] KernelError),
    #[error("search: {0}")]
    Search(#[from] SearchError),
    #[error("analysis: {0}")]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Points(#[from] PointSetError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("certification failed: {}", .0.join("; "))]
    Certification(Vec<String>),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Usage(_)
            | CommandError::Config(_)
            | CommandError::Kernel(_)
            | CommandError::ConfigFile(ConfigFileError::Parse { .. }) => 2,
            CommandError::ConfigFile(ConfigFileError::Io { .. })
            | CommandError::Io { .. }
            | CommandError::Points(_) => 3,
            CommandError::Analysis(AnalysisError::DimensionMismatch { .. })
            | CommandError::Analysis(AnalysisError::ZeroGrid) => 2,
            CommandError::Search(SearchError::DimensionMismatch { .. })
            | CommandError::Search(SearchError::ZeroParameter(_))
            | CommandError::Search(SearchError::ZeroPoints) => 2,
            CommandError::Search(SearchError::PointSet(_)) => 3,
            CommandError::Search(_)
            | CommandError::Analysis(_)
            | CommandError::Certification(_) => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CommandError + '_ {
    move |source| CommandError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `contents` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CommandError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn out_write(out: &mut dyn Write, text: &str) -> Result<(), CommandError> {
    out.write_all(text.as_bytes())
        .map_err(io_err(Path::new("<stdout>")))
}

fn build_kernel(spec: Option<&KernelSpec>) -> Result<FourierKernel, CommandError> {
    let spec = spec.ok_or_else(|| CommandError::Usage("no [kernel] section given".into()))?;
    Ok(spec.build()?)
}

/// Fails with the violation list when the kernel is not admissible.
fn require_admissible(kernel: &FourierKernel) -> Result<(), CommandError> {
    let violations = kernel.check_admissible();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CommandError::Search(SearchError::Inadmissible(violations)))
    }
}

#[derive(Debug, Clone)]
pub struct GenOptions {
    pub config: ExperimentConfig,
    pub m: usize,
    /// Output file; wins over `out_dir`.
    pub points: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct GenOutcome {
    pub path: PathBuf,
    pub set: PointSet,
    pub trace: SearchTrace,
    pub theorem_bound: f64,
}

/// `gen`: runs one search and writes the point file.
pub fn cmd_gen(opts: &GenOptions, out: &mut dyn Write) -> Result<GenOutcome, CommandError> {
    let cfg = &opts.config;
    if cfg.variants.len() != 1 {
        return Err(CommandError::Usage(
            "gen needs exactly one algorithm variant".into(),
        ));
    }
    if opts.m == 0 {
        return Err(CommandError::Usage("--m must be positive".into()));
    }
    let kernel = build_kernel(cfg.kernel.as_ref())?;
    require_admissible(&kernel)?;
    let (set, trace) = search::run_search(&kernel, opts.m, &cfg.search)?;

    let path = match (&opts.points, &opts.out_dir, &cfg.directory) {
        (Some(p), _, _) => p.clone(),
        (None, Some(dir), _) | (None, None, Some(dir)) => {
            dir.join(default_points_name(&cfg.search, &kernel, opts.m))
        }
        (None, None, None) => PathBuf::from(default_points_name(&cfg.search, &kernel, opts.m)),
    };
    write_atomic(&path, set.to_text().as_bytes())?;

    let theorem_bound = analysis::theorem_bound(&kernel, opts.m);
    let last = trace
        .steps
        .last()
        .and_then(|s| s.objective)
        .map_or_else(|| "n/a (m = 1)".to_string(), |v| v.to_string());
    out_write(
        out,
        &format!(
            "wrote {} ({} points, {})\nS_m = {}\ntheorem_bound = {}\n",
            path.display(),
            set.len(),
            cfg.search.variant,
            last,
            theorem_bound
        ),
    )?;
    Ok(GenOutcome {
        path,
        set,
        trace,
        theorem_bound,
    })
}

fn default_points_name(config: &SearchConfig, kernel: &FourierKernel, m: usize) -> String {
    format!("{}-d{}-m{}.points", config.variant, kernel.dim(), m)
}

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub kernel: KernelSpec,
    pub points: PathBuf,
    pub grid: Option<usize>,
    pub format: OutputFormat,
    pub out_dir: Option<PathBuf>,
}

/// `analyze`: computes the [`ErrorReport`] and certifies the bound chain.
///
/// `wce_grid ≤ cs_bound` is required of every set; `cs_bound ≤
/// theorem_bound` additionally when the file's provenance names one of the
/// search algorithms.
pub fn cmd_analyze(
    opts: &AnalyzeOptions,
    out: &mut dyn Write,
) -> Result<ErrorReport, CommandError> {
    let kernel = opts.kernel.build()?;
    require_admissible(&kernel)?;
    let set = pointset::read_points(&opts.points)?;
    if set.dim() != kernel.dim() {
        return Err(CommandError::Usage(format!(
            "points have d={}, kernel has d={}",
            set.dim(),
            kernel.dim()
        )));
    }
    let grid = opts
        .grid
        .unwrap_or_else(|| crate::config::default_analysis_grid(kernel.dim()));
    let report = ErrorReport::compute(&kernel, &set, grid)?;

    let rendered = match opts.format {
        OutputFormat::Csv => format!("{}\n{}\n", analysis::CSV_HEADER, report.csv_row()),
        OutputFormat::Json => format!("{}\n", report.to_json()),
    };
    out_write(out, &rendered)?;
    if let Some(dir) = &opts.out_dir {
        let name = match opts.format {
            OutputFormat::Csv => "report.csv",
            OutputFormat::Json => "report.json",
        };
        write_atomic(&dir.join(name), rendered.as_bytes())?;
    }

    let search_produced = matches!(
        set.provenance().algorithm(),
        Some("averaging") | Some("greedy")
    );
    let violations = report.chain_violations(search_produced);
    if violations.is_empty() {
        Ok(report)
    } else {
        Err(CommandError::Certification(violations))
    }
}

/// One row of a decay table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub series: String,
    #[serde(flatten)]
    pub report: ErrorReport,
}

/// Least-squares slope of `ln wce_grid` against `ln m` for one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub series: String,
    pub slope: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DecayJson {
    fingerprint: String,
    rows: Vec<DecayRow>,
    empirical: Vec<DecayFit>,
}

pub const DECAY_CSV: &str = "decay.csv";
pub const DECAY_JSON: &str = "decay.json";
const FINGERPRINT_PREFIX: &str = "# avgsearch-decay ";

#[derive(Debug, Clone)]
pub struct DecayOptions {
    pub config: ExperimentConfig,
    pub out_dir: Option<PathBuf>,
    pub formats: Option<Vec<OutputFormat>>,
}

#[derive(Debug, Clone)]
pub struct DecayOutcome {
    pub rows: Vec<DecayRow>,
    pub fits: Vec<DecayFit>,
    /// Rows computed in this run (the rest were resumed from disk).
    pub computed: usize,
    pub files: Vec<PathBuf>,
}

/// `decay`: one [`ErrorReport`] per (series, m), flushed after every row.
///
/// Rows already present in the output directory are kept and skipped.
/// Search series are run once up to the largest missing `m` and analysed
/// on prefixes, which is exact because both algorithms are sequential and
/// deterministic.
pub fn cmd_decay(opts: &DecayOptions, out: &mut dyn Write) -> Result<DecayOutcome, CommandError> {
    let cfg = &opts.config;
    let kernel = build_kernel(cfg.kernel.as_ref())?;
    require_admissible(&kernel)?;
    let sweep = cfg
        .sweep
        .clone()
        .ok_or_else(|| CommandError::Usage("no [sweep] section given".into()))?;
    if cfg.baselines.contains(&Baseline::Equispaced) && kernel.dim() != 1 {
        return Err(CommandError::Usage(
            "equispaced baseline requires dim = 1".into(),
        ));
    }
    let dir = opts
        .out_dir
        .clone()
        .or_else(|| cfg.directory.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let formats = opts.formats.clone().unwrap_or_else(|| cfg.formats.clone());
    let grid = cfg.grid_for(kernel.dim());

    let mut series: Vec<(String, Option<Variant>, Option<Baseline>)> = Vec::new();
    for &v in &cfg.variants {
        series.push((v.name().to_string(), Some(v), None));
    }
    for &b in &cfg.baselines {
        series.push((b.name().to_string(), None, Some(b)));
    }
    let order: BTreeMap<String, usize> = series
        .iter()
        .enumerate()
        .map(|(i, (name, _, _))| (name.clone(), i))
        .collect();

    let fingerprint = decay_fingerprint(cfg, &kernel, grid);
    let mut rows = load_existing(&dir, &formats, &fingerprint)?;
    rows.retain(|(name, m), _| order.contains_key(name) && sweep.contains(m));

    let mut computed = 0;
    let mut failures = Vec::new();
    for (name, variant, baseline) in &series {
        let missing: Vec<usize> = sweep
            .iter()
            .copied()
            .filter(|m| !rows.contains_key(&(name.clone(), *m)))
            .collect();
        let Some(&m_top) = missing.last() else {
            continue;
        };
        let searched = match variant {
            Some(v) => {
                let config = SearchConfig {
                    variant: *v,
                    ..cfg.search.clone()
                };
                Some(search::run_search(&kernel, m_top, &config)?.0)
            }
            None => None,
        };
        for m in missing {
            let set = match (&searched, baseline) {
                (Some(full), _) => full.prefix(m)?,
                (None, Some(Baseline::Random)) => {
                    pointset::baseline_random(kernel.dim(), m, cfg.search.seed)?
                }
                (None, Some(Baseline::Equispaced)) => {
                    pointset::baseline_equispaced(kernel.dim(), m)?
                }
                (None, None) => unreachable!("series is either a variant or a baseline"),
            };
            let report = ErrorReport::compute(&kernel, &set, grid)?;
            if variant.is_some() {
                for v in report.chain_violations(true) {
                    failures.push(format!("{name} m={m}: {v}"));
                }
                if report.wce_grid > report.theorem_bound {
                    failures.push(format!(
                        "{name} m={m}: wce_grid {} exceeds theorem_bound {}",
                        report.wce_grid, report.theorem_bound
                    ));
                }
            }
            out_write(
                out,
                &format!(
                    "{name} m={m} wce_grid={} theorem_bound={}\n",
                    report.wce_grid, report.theorem_bound
                ),
            )?;
            rows.insert((name.clone(), m), report);
            computed += 1;
            flush_decay(&dir, &formats, &fingerprint, &rows, &order)?;
        }
    }
    let files = flush_decay(&dir, &formats, &fingerprint, &rows, &order)?;
    let (ordered, fits) = ordered_rows_and_fits(&rows, &order);
    for fit in &fits {
        out_write(
            out,
            &format!(
                "empirical {}: slope {} over {} points\n",
                fit.series, fit.slope, fit.points
            ),
        )?;
    }
    if !failures.is_empty() {
        return Err(CommandError::Certification(failures));
    }
    Ok(DecayOutcome {
        rows: ordered,
        fits,
        computed,
        files,
    })
}

fn kernel_signature(kernel: &FourierKernel) -> String {
    match kernel.structure() {
        KernelStructure::Korobov { .. } => kernel.describe(),
        KernelStructure::Explicit => {
            let terms: Vec<String> = kernel
                .half_spectrum()
                .iter()
                .map(|(k, c)| format!("{k}:{c:?}"))
                .collect();
            format!(
                "{}[mean={:?};{}]",
                kernel.describe(),
                kernel.mean(),
                terms.join(";")
            )
        }
    }
}

fn decay_fingerprint(cfg: &ExperimentConfig, kernel: &FourierKernel, grid: usize) -> String {
    let s = &cfg.search;
    let first = s
        .first_point
        .as_ref()
        .map(|p| {
            p.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(":")
        })
        .unwrap_or_else(|| "origin".into());
    format!(
        "kernel={} seed={} budget={} search_grid={} refine={} first={} grid_G={}",
        kernel_signature(kernel),
        s.seed,
        s.candidate_budget,
        s.resolution_for(kernel.dim()),
        s.refinement_steps,
        first,
        grid
    )
}

type RowMap = BTreeMap<(String, usize), ErrorReport>;

fn ordered_rows_and_fits(
    rows: &RowMap,
    order: &BTreeMap<String, usize>,
) -> (Vec<DecayRow>, Vec<DecayFit>) {
    let mut ordered: Vec<DecayRow> = rows
        .iter()
        .map(|((series, _), r)| DecayRow {
            series: series.clone(),
            report: r.clone(),
        })
        .collect();
    ordered.sort_by_key(|r| {
        (
            order.get(&r.series).copied().unwrap_or(usize::MAX),
            r.report.m,
        )
    });

    let mut names: Vec<(&String, &usize)> = order.iter().collect();
    names.sort_by_key(|(_, &i)| i);
    let mut fits = Vec::new();
    for (name, _) in names {
        let pts: Vec<(f64, f64)> = ordered
            .iter()
            .filter(|r| &r.series == name && r.report.wce_grid > 0.0)
            .map(|r| ((r.report.m as f64).ln(), r.report.wce_grid.ln()))
            .collect();
        if let Some(slope) = least_squares_slope(&pts) {
            fits.push(DecayFit {
                series: name.clone(),
                slope,
                points: pts.len(),
            });
        }
    }
    (ordered, fits)
}

/// Slope of the least-squares line through `pts`; `None` without two distinct abscissae.
pub fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

fn decay_csv_header() -> String {
    format!("series,{}", analysis::CSV_HEADER)
}

fn render_csv(fingerprint: &str, rows: &[DecayRow], fits: &[DecayFit]) -> String {
    let mut s = String::new();
    s.push_str(FINGERPRINT_PREFIX);
    s.push_str(fingerprint);
    s.push('\n');
    s.push_str(&decay_csv_header());
    s.push('\n');
    for r in rows {
        s.push_str(&r.series);
        s.push(',');
        s.push_str(&r.report.csv_row());
        s.push('\n');
    }
    s.push_str("# empirical decay fit: least-squares slope of ln(wce_grid) against ln(m); descriptive only\n");
    s.push_str("# empirical,series,slope,points\n");
    for f in fits {
        s.push_str(&format!(
            "# empirical,{},{:?},{}\n",
            f.series, f.slope, f.points
        ));
    }
    s
}

fn flush_decay(
    dir: &Path,
    formats: &[OutputFormat],
    fingerprint: &str,
    rows: &RowMap,
    order: &BTreeMap<String, usize>,
) -> Result<Vec<PathBuf>, CommandError> {
    let (ordered, fits) = ordered_rows_and_fits(rows, order);
    let mut files = Vec::new();
    for f in formats {
        match f {
            OutputFormat::Csv => {
                let path = dir.join(DECAY_CSV);
                write_atomic(&path, render_csv(fingerprint, &ordered, &fits).as_bytes())?;
                files.push(path);
            }
            OutputFormat::Json => {
                let path = dir.join(DECAY_JSON);
                let doc = DecayJson {
                    fingerprint: fingerprint.to_string(),
                    rows: ordered.clone(),
                    empirical: fits.clone(),
                };
                let mut text = serde_json::to_string_pretty(&doc).expect("decay table serializes");
                text.push('\n');
                write_atomic(&path, text.as_bytes())?;
                files.push(path);
            }
        }
    }
    Ok(files)
}

fn load_existing(
    dir: &Path,
    formats: &[OutputFormat],
    fingerprint: &str,
) -> Result<RowMap, CommandError> {
    let csv = dir.join(DECAY_CSV);
    let json = dir.join(DECAY_JSON);
    if formats.contains(&OutputFormat::Csv) && csv.exists() {
        let text = fs::read_to_string(&csv).map_err(io_err(&csv))?;
        return parse_decay_csv(&text, fingerprint)
            .map_err(|msg| CommandError::Usage(format!("{}: {msg}", csv.display())));
    }
    if formats.contains(&OutputFormat::Json) && json.exists() {
        let text = fs::read_to_string(&json).map_err(io_err(&json))?;
        let doc: DecayJson = serde_json::from_str(&text)
            .map_err(|e| CommandError::Usage(format!("{}: {e}", json.display())))?;
        if doc.fingerprint != fingerprint {
            return Err(CommandError::Usage(format!(
                "{} was produced by a different configuration",
                json.display()
            )));
        }
        return Ok(doc
            .rows
            .into_iter()
            .map(|r| ((r.series, r.report.m), r.report))
            .collect());
    }
    Ok(RowMap::new())
}

fn parse_decay_csv(text: &str, fingerprint: &str) -> Result<RowMap, String> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.strip_prefix(FINGERPRINT_PREFIX) == Some(fingerprint) => {}
        _ => return Err("existing table was produced by a different configuration".into()),
    }
    match lines.next() {
        Some((_, l)) if l == decay_csv_header() => {}
        _ => return Err("line 2: unexpected column header".into()),
    }
    let mut rows = RowMap::new();
    for (line, l) in lines {
        if l.starts_with('#') || l.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = l.split(',').collect();
        if f.len() != 9 {
            return Err(format!("line {line}: expected 9 fields"));
        }
        let num = |i: usize| -> Result<f64, String> {
            f[i].parse::<f64>()
                .map_err(|_| format!("line {line}: bad number `{}`", f[i]))
        };
        let int = |i: usize| -> Result<usize, String> {
            f[i].parse::<usize>()
                .map_err(|_| format!("line {line}: bad integer `{}`", f[i]))
        };
        let report = ErrorReport {
            m: int(1)?,
            d: int(2)?,
            pair_energy: num(3)?,
            spectral_energy: num(4)?,
            wce_grid: num(5)?,
            grid_g: int(6)?,
            cs_bound: num(7)?,
            theorem_bound: num(8)?,
            wce_argmax: Vec::new(),
        };
        rows.insert((f[0].to_string(), report.m), report);
    }
    Ok(rows)
}

/// Outcome of one `verify` check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail(String),
    Skipped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub status: CheckStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySummary {
    pub checks: Vec<CheckResult>,
}

impl VerifySummary {
    pub fn passed(&self) -> bool {
        self.checks
            .iter()
            .all(|c| !matches!(c.status, CheckStatus::Fail(_)))
    }
}

/// Relative tolerance for the two-route energy identity.
pub const ENERGY_IDENTITY_TOL: f64 = 1e-9;
/// Relative tolerance for the equispaced survivor-frequency oracle (absolute below 1).
pub const EQUISPACED_TOL: f64 = 1e-10;

/// `verify`: invariant checks on small built-in cases, or on `kernel` when given.
pub fn cmd_verify(
    kernel: Option<&KernelSpec>,
    out: &mut dyn Write,
) -> Result<VerifySummary, CommandError> {
    let kernels: Vec<FourierKernel> = match kernel {
        Some(spec) => vec![spec.build()?],
        None => vec![
            FourierKernel::korobov(1, 2.0, 8)?,
            FourierKernel::korobov(2, 2.0, 4)?,
            FourierKernel::korobov(3, 3.0, 2)?,
        ],
    };
    let mut checks = Vec::new();
    let mut any_inadmissible = false;
    for k in &kernels {
        let desc = k.describe();
        let violations = k.check_admissible();
        if !violations.is_empty() {
            any_inadmissible = true;
            let msg = violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; ");
            checks.push(CheckResult {
                name: format!("admissibility {desc}"),
                status: CheckStatus::Fail(msg),
            });
            for name in ["energy-identity", "search-trace", "proof-chain"] {
                checks.push(CheckResult {
                    name: format!("{name} {desc}"),
                    status: CheckStatus::Skipped,
                });
            }
            continue;
        }
        checks.push(CheckResult {
            name: format!("admissibility {desc}"),
            status: CheckStatus::Pass,
        });
        checks.push(CheckResult {
            name: format!("energy-identity {desc}"),
            status: check_energy_identity(k),
        });
        let (trace_status, chain_status) = check_search_sets(k);
        checks.push(CheckResult {
            name: format!("search-trace {desc}"),
            status: trace_status,
        });
        checks.push(CheckResult {
            name: format!("proof-chain {desc}"),
            status: chain_status,
        });
    }
    checks.push(CheckResult {
        name: "equispaced-oracle".into(),
        status: if any_inadmissible {
            CheckStatus::Skipped
        } else {
            check_equispaced_oracle()
        },
    });

    for c in &checks {
        let line = match &c.status {
            CheckStatus::Pass => format!("PASS {}\n", c.name),
            CheckStatus::Fail(why) => format!("FAIL {}: {why}\n", c.name),
            CheckStatus::Skipped => format!("SKIP {}\n", c.name),
        };
        out_write(out, &line)?;
    }
    let summary = VerifySummary { checks };
    if summary.passed() {
        out_write(out, "all checks passed\n")?;
        Ok(summary)
    } else {
        let failed = summary
            .checks
            .iter()
            .filter(|c| matches!(c.status, CheckStatus::Fail(_)))
            .map(|c| c.name.clone())
            .collect();
        Err(CommandError::Certification(failed))
    }
}

fn verify_sizes(dim: usize) -> usize {
    match dim {
        1 => 32,
        2 => 16,
        _ => 8,
    }
}

fn check_energy_identity(kernel: &FourierKernel) -> CheckStatus {
    for (i, m) in [1usize, 7, 32].into_iter().enumerate() {
        let set = match pointset::baseline_random(kernel.dim(), m, 1000 + i as u64) {
            Ok(s) => s,
            Err(e) => return CheckStatus::Fail(e.to_string()),
        };
        let (direct, spectral) = match (
            analysis::pair_energy_direct(kernel, &set),
            analysis::pair_energy_spectral(kernel, &set),
        ) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return CheckStatus::Fail(e.to_string()),
        };
        if (direct - spectral).abs() > ENERGY_IDENTITY_TOL * direct.abs().max(1.0) {
            return CheckStatus::Fail(format!("m={m}: direct {direct} vs spectral {spectral}"));
        }
    }
    CheckStatus::Pass
}

fn check_search_sets(kernel: &FourierKernel) -> (CheckStatus, CheckStatus) {
    let m = verify_sizes(kernel.dim());
    let grid = crate::config::default_analysis_grid(kernel.dim());
    let mut trace_problems = Vec::new();
    let mut chain_problems = Vec::new();
    for config in [SearchConfig::averaging(2024), SearchConfig::greedy()] {
        let (set, trace) = match search::run_search(kernel, m, &config) {
            Ok(r) => r,
            Err(e) => {
                let msg = format!("{}: {e}", config.variant);
                return (CheckStatus::Fail(msg.clone()), CheckStatus::Fail(msg));
            }
        };
        if let Some(problem) = trace_problem(kernel, &set, &trace) {
            trace_problems.push(format!("{}: {problem}", config.variant));
        }
        match ErrorReport::compute(kernel, &set, grid) {
            Ok(report) => {
                for v in report.chain_violations(true) {
                    chain_problems.push(format!("{}: {v}", config.variant));
                }
            }
            Err(e) => chain_problems.push(format!("{}: {e}", config.variant)),
        }
    }
    let status = |p: Vec<String>| {
        if p.is_empty() {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail(p.join("; "))
        }
    };
    (status(trace_problems), status(chain_problems))
}

/// Checks `Sₙ ≤ 0`, the recorded values against [`search::partial_sum`], and
/// `E = m·F⁰(0) + 2 Σ Sₙ`.
pub fn trace_problem(
    kernel: &FourierKernel,
    set: &PointSet,
    trace: &SearchTrace,
) -> Option<String> {
    for rec in trace.steps.iter().skip(1) {
        let Some(s) = rec.objective else {
            return Some(format!("step {} has no objective", rec.step));
        };
        if s > 0.0 {
            return Some(format!("S_{} = {s} > 0", rec.step));
        }
        let prefix = set.prefix(rec.step - 1).ok()?;
        let recomputed = search::partial_sum(kernel, &prefix, set.point(rec.step - 1)).ok()?;
        if recomputed.to_bits() != s.to_bits() {
            return Some(format!(
                "S_{} recorded {s}, recomputed {recomputed}",
                rec.step
            ));
        }
    }
    let m = set.len() as f64;
    let energy = analysis::pair_energy_direct(kernel, set).ok()?;
    let diag = m * kernel.sup_norm_centered();
    let defect = -2.0 * crate::sum::compensated_sum(trace.objectives());
    if energy > diag * (1.0 + ENERGY_IDENTITY_TOL) {
        return Some(format!("energy {energy} exceeds m·F⁰(0) = {diag}"));
    }
    if ((diag - energy) - defect).abs() > ENERGY_IDENTITY_TOL * defect.abs().max(diag).max(1.0) {
        return Some(format!(
            "energy defect {} differs from -2ΣS = {defect}",
            diag - energy
        ));
    }
    None
}

/// `m² · 2 Σ_{l ≥ 1, lm ≤ K} (lm)^{-r}`, the spectral energy of `{j/m}` for a
/// one-dimensional korobov kernel.
pub fn equispaced_energy_oracle(m: usize, smoothness: f64, limit: u32) -> f64 {
    let mut s = 0.0;
    let mut l = 1;
    while l * m <= limit as usize {
        s += ((l * m) as f64).powf(-smoothness);
        l += 1;
    }
    (m * m) as f64 * 2.0 * s
}

fn check_equispaced_oracle() -> CheckStatus {
    for limit in [4u32, 8, 16] {
        let kernel = match FourierKernel::korobov(1, 2.0, limit) {
            Ok(k) => k,
            Err(e) => return CheckStatus::Fail(e.to_string()),
        };
        for m in [2usize, 3, 4, 8] {
            let set = match pointset::baseline_equispaced(1, m) {
                Ok(s) => s,
                Err(e) => return CheckStatus::Fail(e.to_string()),
            };
            let expected = equispaced_energy_oracle(m, 2.0, limit);
            let got = match analysis::pair_energy_spectral(&kernel, &set) {
                Ok(v) => v,
                Err(e) => return CheckStatus::Fail(e.to_string()),
            };
            if (got - expected).abs() > EQUISPACED_TOL * expected.abs().max(1.0) {
                return CheckStatus::Fail(format!("K={limit} m={m}: {got} vs {expected}"));
            }
        }
    }
    CheckStatus::Pass
}
