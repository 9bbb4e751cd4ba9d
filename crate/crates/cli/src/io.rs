use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tolpred::fit::SurvivalSample;
use tolpred::intervals::Method;
use tolpred::simlab::{Cell, CoverageReport, CoverageRow};

use crate::error::{config, parse, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| config(format!("cannot read {}: {e}", path.display())))
}

/// Reads a JSON config and checks its `schema_version`.
pub fn read_config<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| parse(format!("{}: {e}", path.display())))?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => return Err(config(format!("{}: unsupported schema_version {v}", path.display()))),
        None => return Err(config(format!("{}: missing schema_version", path.display()))),
    }
    serde_json::from_value(value).map_err(|e| config(format!("{}: {e}", path.display())))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| parse(format!("{}: {e}", path.display())))
}

/// Resolves `path` against the directory of the config that named it.
pub fn relative_to(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.parent().unwrap_or(Path::new(".")).join(path)
    }
}

pub struct Output {
    dir: Option<PathBuf>,
}

impl Output {
    pub fn new(dir: Option<PathBuf>) -> CliResult<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d).map_err(|e| config(format!("cannot create {}: {e}", d.display())))?;
        }
        Ok(Self { dir })
    }

    pub fn has_dir(&self) -> bool {
        self.dir.is_some()
    }

    /// Writes `name` into the output directory; without one the content
    /// goes to stdout when `fallback_stdout` is set and is dropped otherwise.
    pub fn write(&self, name: &str, content: &str, fallback_stdout: bool) -> CliResult<()> {
        match &self.dir {
            Some(d) => {
                let p = d.join(name);
                fs::write(&p, content).map_err(|e| config(format!("cannot write {}: {e}", p.display())))
            }
            None => {
                if fallback_stdout {
                    print!("{content}");
                }
                Ok(())
            }
        }
    }
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes())
}

/// Parses one numeric column (by header name, or the first column).
pub fn numeric_column(text: &str, column: Option<&str>) -> CliResult<Vec<f64>> {
    let mut rdr = csv_reader(text);
    let headers = rdr.headers().map_err(|e| parse(e.to_string()))?.clone();
    let idx = match column {
        Some(c) => headers
            .iter()
            .position(|h| h == c)
            .ok_or_else(|| parse(format!("no column named {c}")))?,
        None => 0,
    };
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse(format!("line {}: {e}", i + 2)))?;
        let field = rec.get(idx).ok_or_else(|| parse(format!("line {}: missing field", i + 2)))?;
        let v: f64 = field
            .parse()
            .map_err(|_| parse(format!("line {}: {field:?} is not a number", i + 2)))?;
        out.push(v);
    }
    if out.is_empty() {
        return Err(parse("input has no data rows"));
    }
    Ok(out)
}

pub fn rows<T: DeserializeOwned>(text: &str) -> CliResult<Vec<T>> {
    let mut out = Vec::new();
    for (i, rec) in csv_reader(text).deserialize().enumerate() {
        out.push(rec.map_err(|e| parse(format!("line {}: {e}", i + 2)))?);
    }
    if out.is_empty() {
        return Err(parse("input has no data rows"));
    }
    Ok(out)
}

#[derive(Deserialize)]
struct SurvivalRow {
    time: f64,
    event: u8,
}

/// Parses `time,event` rows with event ∈ {0, 1}.
pub fn survival_rows(text: &str) -> CliResult<Vec<SurvivalSample>> {
    rows::<SurvivalRow>(text)?
        .into_iter()
        .enumerate()
        .map(|(i, r)| match r.event {
            0 | 1 => Ok(SurvivalSample { time: r.time, event: r.event == 1 }),
            e => Err(parse(format!("line {}: event must be 0 or 1, got {e}", i + 2))),
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct CoverageCsvRow {
    method: String,
    level: f64,
    n: usize,
    #[serde(rename = "N")]
    big_n: usize,
    covered: usize,
    runs: usize,
    failures: usize,
    coverage: f64,
    mc_se: f64,
    reference: f64,
    band_lo: f64,
    band_hi: f64,
    pass: bool,
    flagged: bool,
}

/// Reads a coverage table written in the CSV layout of `emit_table`.
pub fn parse_coverage_csv(text: &str, name: &str) -> CliResult<CoverageReport> {
    let mut report = CoverageReport { name: name.to_string(), cells: vec![], rows: vec![] };
    for (i, rec) in csv_reader(text).deserialize::<CoverageCsvRow>().enumerate() {
        let r = rec.map_err(|e| parse(format!("line {}: {e}", i + 2)))?;
        let method = Method::from_label(&r.method)
            .ok_or_else(|| parse(format!("line {}: unknown method {}", i + 2, r.method)))?;
        let cell = Cell { n: r.n, big_n: r.big_n };
        if !report.cells.contains(&cell) {
            report.cells.push(cell);
        }
        report.rows.push(CoverageRow {
            method,
            level: r.level,
            n: r.n,
            big_n: r.big_n,
            covered: r.covered,
            runs: r.runs,
            failures: r.failures,
            coverage: r.coverage,
            mc_se: r.mc_se,
            reference: r.reference,
            band_lo: r.band_lo,
            band_hi: r.band_hi,
            pass: r.pass,
            flagged: r.flagged,
        });
    }
    Ok(report)
}
