//! File formats: grid CSV, augmented-sample dumps, JSON-lines run logs and
//! comparison reports. Every writer is deterministic given its input.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{ArchRecord, AsnnSample, TrialCountPolicy};
use crate::search::{CompareReport, IterationLog};
use crate::task::{Architecture, TrialResult};
use crate::{Error, Result};

/// Version stamped on every run-log line.
pub const RUN_LOG_SCHEMA_VERSION: u32 = 1;

/// One row of a grid-results file: widths, per-trial accuracies, stored mean.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub arch: Architecture,
    pub accuracies: Vec<f64>,
    pub mean: f64,
}

impl From<&ArchRecord> for GridRow {
    fn from(r: &ArchRecord) -> Self {
        Self {
            arch: r.arch.clone(),
            accuracies: r.accuracies.clone(),
            mean: r.mean,
        }
    }
}

impl From<&TrialResult> for GridRow {
    fn from(t: &TrialResult) -> Self {
        Self {
            arch: t.architecture.clone(),
            accuracies: t.accuracies.clone(),
            mean: t.mean,
        }
    }
}

impl GridRow {
    /// Converts to a 10-accuracy record, resizing under `policy` when needed.
    pub fn into_record(self, policy: TrialCountPolicy) -> Result<ArchRecord> {
        if self.accuracies.len() == crate::dataset::ACCURACIES_PER_RECORD {
            return ArchRecord::new(self.arch, self.accuracies, self.mean);
        }
        let trial = TrialResult::from_accuracies(self.arch, self.accuracies)
            .map_err(|e| Error::Data(e.to_string()))?;
        policy
            .to_record(&trial)
            .map_err(|e| Error::Data(e.to_string()))
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Data(format!("{}: {other:?}", path.display())),
    }
}

/// Writes `contents`, creating parent directories.
pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn csv_string(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for r in rows {
        w.write_record(&r).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flushing to memory")).expect("csv is utf-8")
}

/// Grid CSV text: `L1,L2[,L3],E1..EK,mean`, accuracies to 4 decimals, mean to 5.
pub fn grid_csv(depth: usize, trials: usize, rows: &[GridRow]) -> Result<String> {
    if let Some(r) = rows
        .iter()
        .find(|r| r.arch.depth() != depth || r.accuracies.len() != trials)
    {
        return Err(Error::InvalidArgument(format!(
            "row {} with {} accuracies does not fit a depth-{depth}, K={trials} grid",
            r.arch,
            r.accuracies.len()
        )));
    }
    let header: Vec<String> = (1..=depth)
        .map(|i| format!("L{i}"))
        .chain((1..=trials).map(|i| format!("E{i}")))
        .chain(["mean".to_string()])
        .collect();
    let body = rows.iter().map(|r| {
        r.arch
            .widths()
            .iter()
            .map(|w| w.to_string())
            .chain(r.accuracies.iter().map(|a| format!("{a:.4}")))
            .chain([format!("{:.5}", r.mean)])
            .collect()
    });
    Ok(csv_string(&header, body))
}

pub fn write_grid_csv(path: &Path, depth: usize, trials: usize, rows: &[GridRow]) -> Result<()> {
    write_file(path, grid_csv(depth, trials, rows)?.as_bytes())
}

/// Parses grid CSV text; `origin` names the source in errors.
pub fn parse_grid_csv(text: &str, origin: &Path) -> Result<Vec<GridRow>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| csv_err(origin, e))?.clone();
    let names: Vec<&str> = header.iter().collect();
    let depth = names.iter().take_while(|h| h.starts_with('L')).count();
    let trials = names.len().saturating_sub(depth + 1);
    let expected: Vec<String> = (1..=depth)
        .map(|i| format!("L{i}"))
        .chain((1..=trials).map(|i| format!("E{i}")))
        .chain(["mean".to_string()])
        .collect();
    if !(2..=3).contains(&depth) || trials == 0 || names != expected {
        return Err(Error::Data(format!(
            "{}: header must be L1,L2[,L3],E1..EK,mean, got {}",
            origin.display(),
            names.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(origin, e))?;
        let at = |what: &str| Error::Data(format!("{} row {}: {what}", origin.display(), line + 2));
        let widths = rec
            .iter()
            .take(depth)
            .map(|f| {
                f.trim()
                    .parse::<usize>()
                    .map_err(|_| at(&format!("bad width {f:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let reals = rec
            .iter()
            .skip(depth)
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| at(&format!("bad number {f:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let (mean, accuracies) = reals.split_last().expect("header guarantees a mean column");
        if let Some(a) = accuracies.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(at(&format!("accuracy {a} outside [0, 1]")));
        }
        let arch = Architecture::new(widths).map_err(|e| at(&e.to_string()))?;
        rows.push(GridRow {
            arch,
            accuracies: accuracies.to_vec(),
            mean: *mean,
        });
    }
    Ok(rows)
}

pub fn read_grid_csv(path: &Path) -> Result<Vec<GridRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_grid_csv(&text, path)
}

/// Augmented samples as `in1..in10,t1..tL` with 6 decimals.
pub fn samples_csv(samples: &[AsnnSample]) -> String {
    let depth = samples.first().map_or(0, |s| s.target.len());
    let header: Vec<String> = (1..=samples.first().map_or(10, |s| s.input.len()))
        .map(|i| format!("in{i}"))
        .chain((1..=depth).map(|i| format!("t{i}")))
        .collect();
    let body = samples.iter().map(|s| {
        s.input
            .iter()
            .chain(&s.target)
            .map(|v| format!("{v:.6}"))
            .collect()
    });
    csv_string(&header, body)
}

#[derive(Serialize, Deserialize)]
struct RunLogLine {
    schema_version: u32,
    strategy: String,
    backend: String,
    #[serde(flatten)]
    log: IterationLog,
}

/// JSON-lines run log, one iteration per line.
pub fn run_log_jsonl(strategy: &str, backend: &str, logs: &[IterationLog]) -> String {
    let mut out = String::new();
    for log in logs {
        let line = RunLogLine {
            schema_version: RUN_LOG_SCHEMA_VERSION,
            strategy: strategy.to_string(),
            backend: backend.to_string(),
            log: log.clone(),
        };
        out.push_str(&serde_json::to_string(&line).expect("iteration logs serialize"));
        out.push('\n');
    }
    out
}

/// Reads a run log back, rejecting other schema versions.
pub fn read_run_log(path: &Path) -> Result<Vec<IterationLog>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut logs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: RunLogLine = serde_json::from_str(&line)
            .map_err(|e| Error::Data(format!("{} line {}: {e}", path.display(), i + 1)))?;
        if parsed.schema_version != RUN_LOG_SCHEMA_VERSION {
            return Err(Error::Data(format!(
                "{} line {}: schema version {}, expected {RUN_LOG_SCHEMA_VERSION}",
                path.display(),
                i + 1,
                parsed.schema_version
            )));
        }
        logs.push(parsed.log);
    }
    Ok(logs)
}

/// Per-iteration curves: `strategy,seed,iteration,arch,mean,best_so_far`.
pub fn compare_csv(report: &CompareReport) -> String {
    let header = [
        "strategy",
        "seed",
        "iteration",
        "arch",
        "mean",
        "best_so_far",
    ]
    .map(String::from);
    let body = report.rows.iter().map(|r| {
        vec![
            r.strategy.clone(),
            r.seed.to_string(),
            r.iteration.to_string(),
            r.arch.to_string(),
            format!("{:.6}", r.mean),
            format!("{:.6}", r.best_so_far),
        ]
    });
    csv_string(&header, body)
}

/// One line per strategy: median final best and how often the threshold was reached.
pub fn compare_summary_csv(report: &CompareReport, backend: &str) -> String {
    let header = [
        "strategy",
        "backend",
        "seeds",
        "median_best",
        "threshold",
        "reached",
        "median_evaluations_to_threshold",
    ]
    .map(String::from);
    let body = report.summaries.iter().map(|s| {
        let hits: Vec<f64> = s
            .evaluations_to_threshold
            .iter()
            .flatten()
            .map(|&n| n as f64)
            .collect();
        let median_hits = if hits.is_empty() {
            String::new()
        } else {
            format!("{:.1}", crate::search::median(&hits))
        };
        vec![
            s.strategy.clone(),
            backend.to_string(),
            s.evaluations_to_threshold.len().to_string(),
            format!("{:.6}", s.median_best),
            report
                .threshold
                .map_or(String::new(), |t| format!("{t:.6}")),
            hits.len().to_string(),
            median_hits,
        ]
    });
    csv_string(&header, body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tables;

    fn table1() -> Vec<GridRow> {
        tables::layer2_records().iter().map(GridRow::from).collect()
    }

    #[test]
    fn grid_round_trip_is_exact() {
        let rows = table1();
        let text = grid_csv(2, 10, &rows).unwrap();
        assert_eq!(text.lines().count(), 26);
        assert!(text.starts_with("L1,L2,E1,E2,E3,E4,E5,E6,E7,E8,E9,E10,mean\n256,256,0.9828,"));
        assert_eq!(parse_grid_csv(&text, Path::new("t.csv")).unwrap(), rows);
        let rows3: Vec<GridRow> = tables::layer3_records().iter().map(GridRow::from).collect();
        let text = grid_csv(3, 10, &rows3).unwrap();
        assert_eq!(parse_grid_csv(&text, Path::new("t.csv")).unwrap(), rows3);
    }

    #[test]
    fn empty_grid_is_header_only() {
        assert_eq!(grid_csv(3, 3, &[]).unwrap(), "L1,L2,L3,E1,E2,E3,mean\n");
    }

    #[test]
    fn malformed_grid_rows_are_data_errors() {
        let p = Path::new("bad.csv");
        for text in [
            "L1,E1,mean\n16,0.9,0.9\n",
            "L1,L2,E1,mean\n16,x,0.9,0.9\n",
            "L1,L2,E1,mean\n16,16,1.5,0.9\n",
            "L1,L2,E1,mean\n16,16,0.9\n",
            "L1,L2,E2,mean\n16,16,0.9,0.9\n",
        ] {
            let err = parse_grid_csv(text, p).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text:?}: {err}");
            assert!(err.to_string().contains("bad.csv"));
        }
    }

    #[test]
    fn short_rows_pad_into_records() {
        let row = GridRow {
            arch: Architecture::new(vec![64, 32]).unwrap(),
            accuracies: vec![0.9, 0.8, 0.7],
            mean: 0.8,
        };
        let rec = row
            .clone()
            .into_record(TrialCountPolicy::PadOrTruncate)
            .unwrap();
        assert_eq!(rec.accuracies.len(), 10);
        assert!(row.into_record(TrialCountPolicy::Strict).is_err());
    }

    #[test]
    fn io_errors_name_the_path() {
        let err = read_grid_csv(Path::new("/nonexistent/grid.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/grid.csv"));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn samples_dump_has_six_decimals() {
        let s = AsnnSample {
            input: [98.28; 10],
            target: vec![256.0, 16.0],
            source: 0,
        };
        let text = samples_csv(&[s]);
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "in1,in2,in3,in4,in5,in6,in7,in8,in9,in10,t1,t2"
        );
        assert!(lines
            .next()
            .unwrap()
            .ends_with("98.280000,256.000000,16.000000"));
    }
}
