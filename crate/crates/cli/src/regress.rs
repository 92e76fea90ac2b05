use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::commands::{run, RunFlags};
use crate::config::{Command, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::Sink;

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Tolerance {
    #[serde(default)]
    pub abs: f64,
    #[serde(default)]
    pub rel: f64,
}

impl Tolerance {
    const EXACT: Tolerance = Tolerance { abs: 0.0, rel: 0.0 };

    fn accepts(&self, golden: f64, fresh: f64) -> bool {
        if golden.is_nan() || fresh.is_nan() {
            return golden.is_nan() && fresh.is_nan();
        }
        if golden.is_infinite() || fresh.is_infinite() {
            return golden == fresh;
        }
        (golden - fresh).abs() <= self.abs + self.rel * golden.abs()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Case {
    pub name: String,
    pub command: Command,
    /// Config path relative to the golden directory.
    pub config: PathBuf,
    #[serde(default)]
    pub tolerance: Option<Tolerance>,
    /// Per-file overrides keyed by file name.
    #[serde(default)]
    pub files: BTreeMap<String, Tolerance>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub default: Option<Tolerance>,
    #[serde(rename = "case")]
    pub cases: Vec<Case>,
}

impl Manifest {
    pub fn load(dir: &Path) -> CliResult<Self> {
        let path = dir.join("manifest.toml");
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    fn tolerance(&self, case: &Case, file: &str) -> Tolerance {
        case.files
            .get(file)
            .copied()
            .or(case.tolerance)
            .or(self.default)
            .unwrap_or(Tolerance::EXACT)
    }
}

/// One mismatch, located by file, data row (0-based, after the header) and column.
#[derive(Debug, Clone, PartialEq)]
pub struct CellDiff {
    pub row: usize,
    pub column: String,
    pub golden: String,
    pub fresh: String,
}

#[derive(Debug, Default)]
pub struct CaseReport {
    pub name: String,
    pub error: Option<String>,
    pub missing: Vec<String>,
    pub unexpected: Vec<String>,
    /// Structural problems (header, row count, config hash) per file.
    pub structure: Vec<(String, String)>,
    pub cells: Vec<(String, CellDiff)>,
    pub files_compared: usize,
}

impl CaseReport {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.missing.is_empty() && self.unexpected.is_empty() && self.structure.is_empty() && self.cells.is_empty()
    }
}

fn list_files(dir: &Path) -> CliResult<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    if dir.is_dir() {
        for entry in std::fs::read_dir(dir)? {
            let entry = entry?;
            if entry.file_type()?.is_file() {
                out.insert(entry.file_name().to_string_lossy().into_owned());
            }
        }
    }
    Ok(out)
}

struct Parsed {
    hash: Option<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn parse_table(path: &Path) -> CliResult<Parsed> {
    let text = std::fs::read_to_string(path)?;
    let hash = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.strip_prefix("# config-sha256: ").map(str::to_string));
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok(Parsed { hash, header, rows })
}

fn compare_file(golden: &Path, fresh: &Path, tol: Tolerance, file: &str, report: &mut CaseReport) -> CliResult<()> {
    if !file.ends_with(".csv") {
        if std::fs::read(golden)? != std::fs::read(fresh)? {
            report.structure.push((file.into(), "binary contents differ".into()));
        }
        return Ok(());
    }
    let g = parse_table(golden)?;
    let f = parse_table(fresh)?;
    if g.hash != f.hash {
        report.structure.push((file.into(), format!("config hash {:?} != {:?}", g.hash, f.hash)));
    }
    if g.header != f.header {
        report.structure.push((file.into(), format!("columns {:?} != {:?}", g.header, f.header)));
        return Ok(());
    }
    if g.rows.len() != f.rows.len() {
        report.structure.push((file.into(), format!("{} rows != {} rows", g.rows.len(), f.rows.len())));
    }
    for (i, (gr, fr)) in g.rows.iter().zip(&f.rows).enumerate() {
        for (j, (gc, fc)) in gr.iter().zip(fr).enumerate() {
            let ok = match (gc.parse::<f64>(), fc.parse::<f64>()) {
                (Ok(a), Ok(b)) => tol.accepts(a, b),
                _ => gc == fc,
            };
            if !ok {
                let column = g.header.get(j).cloned().unwrap_or_else(|| j.to_string());
                report.cells.push((file.into(), CellDiff { row: i, column, golden: gc.clone(), fresh: fc.clone() }));
            }
        }
    }
    Ok(())
}

/// Regenerate every case into `work` and compare with the goldens; with
/// `bless`, copy the fresh outputs over the goldens instead.
pub fn regress(golden: &Path, work: &Path, bless: bool) -> CliResult<Vec<CaseReport>> {
    let manifest = Manifest::load(golden)?;
    let mut reports = Vec::new();
    for case in &manifest.cases {
        let mut report = CaseReport { name: case.name.clone(), ..CaseReport::default() };
        let fresh_dir = work.join(&case.name);
        if fresh_dir.exists() {
            std::fs::remove_dir_all(&fresh_dir)?;
        }
        let outcome = RunConfig::load(&golden.join(&case.config)).and_then(|config| {
            let mut sink = Sink::new(&fresh_dir, case.command, &config)?;
            run(case.command, &config, &mut sink, RunFlags::default())
        });
        if let Err(e) = outcome {
            report.error = Some(e.to_string());
            reports.push(report);
            continue;
        }
        let golden_dir = golden.join(&case.name);
        let fresh_files = list_files(&fresh_dir)?;
        if bless {
            std::fs::create_dir_all(&golden_dir)?;
            for stale in list_files(&golden_dir)?.difference(&fresh_files) {
                std::fs::remove_file(golden_dir.join(stale))?;
            }
            for f in &fresh_files {
                std::fs::copy(fresh_dir.join(f), golden_dir.join(f))?;
            }
            report.files_compared = fresh_files.len();
            reports.push(report);
            continue;
        }
        let golden_files = list_files(&golden_dir)?;
        report.missing = golden_files.difference(&fresh_files).cloned().collect();
        report.unexpected = fresh_files.difference(&golden_files).cloned().collect();
        for f in golden_files.intersection(&fresh_files) {
            compare_file(&golden_dir.join(f), &fresh_dir.join(f), manifest.tolerance(case, f), f, &mut report)?;
            report.files_compared += 1;
        }
        reports.push(report);
    }
    Ok(reports)
}

pub fn render(reports: &[CaseReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let verdict = if r.passed() { "ok" } else { "FAIL" };
        let _ = writeln!(out, "{verdict:<4} {} ({} files)", r.name, r.files_compared);
        if let Some(e) = &r.error {
            let _ = writeln!(out, "     run failed: {e}");
        }
        for f in &r.missing {
            let _ = writeln!(out, "     missing from fresh output: {f}");
        }
        for f in &r.unexpected {
            let _ = writeln!(out, "     not in goldens: {f}");
        }
        for (f, msg) in &r.structure {
            let _ = writeln!(out, "     {f}: {msg}");
        }
        for (f, c) in &r.cells {
            let _ = writeln!(out, "     {f} row {} column {}: golden {} fresh {}", c.row, c.column, c.golden, c.fresh);
        }
    }
    out
}
