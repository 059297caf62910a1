//! Cumulative accuracy, checkpoint tables, curves and run manifests.
//!
//! `A(i) = 100 * correct / scored` where `scored` counts the verdicts up to
//! instance `i` (so the neural baseline, which starts at `N + 1`, divides by
//! `i - N`). Values are kept as integer counts and rounded half-up to two
//! decimals only when rendered.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::csann::{run_prequential, CsannConfig, Method, RunTrace};
use crate::error::{Error, Result};
use crate::features::{FeatureSelector, WindowedInstance};

pub const CHECKPOINTS: [u64; 7] = [1000, 2000, 3000, 4000, 5000, 6000, 8000];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccuracyPoint {
    pub i: u64,
    pub correct: u64,
    pub scored: u64,
}

impl AccuracyPoint {
    pub fn percent(&self) -> f64 {
        100.0 * self.correct as f64 / self.scored as f64
    }

    pub fn render(&self) -> String {
        format_percent(self.correct, self.scored)
    }
}

/// `100 * correct / total` rounded half-up to two decimals.
pub fn format_percent(correct: u64, total: u64) -> String {
    assert!(total > 0 && correct <= total, "invalid ratio {correct}/{total}");
    let (c, t) = (correct as u128, total as u128);
    let hundredths = (20_000 * c + t) / (2 * t);
    format!("{}.{:02}", hundredths / 100, hundredths % 100)
}

pub fn cumulative_accuracy(trace: &RunTrace) -> Result<Vec<AccuracyPoint>> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut correct = 0;
    Ok(trace
        .verdicts()
        .iter()
        .enumerate()
        .map(|(k, v)| {
            correct += v.is_correct() as u64;
            AccuracyPoint {
                i: v.i,
                correct,
                scored: k as u64 + 1,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunMeta {
    pub stream_id: String,
    pub method: String,
    pub selector: String,
    pub seed: Option<u64>,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub i: u64,
    pub value: Option<AccuracyPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub meta: RunMeta,
    pub series: Vec<AccuracyPoint>,
    pub checkpoints: Vec<Checkpoint>,
    /// Source model `c(i)` of every verdict, in trace order.
    pub sources: Vec<u8>,
    /// `confusion[truth][prediction]`.
    pub confusion: [[u64; 3]; 3],
}

impl Report {
    pub fn from_trace(trace: &RunTrace, meta: RunMeta) -> Result<Self> {
        Self::with_grid(trace, meta, &CHECKPOINTS)
    }

    pub fn with_grid(trace: &RunTrace, meta: RunMeta, grid: &[u64]) -> Result<Self> {
        let series = cumulative_accuracy(trace)?;
        let checkpoints = grid
            .iter()
            .map(|&i| Checkpoint {
                i,
                value: i
                    .checked_sub(trace.start)
                    .and_then(|k| series.get(k as usize))
                    .copied(),
            })
            .collect();
        let mut confusion = [[0; 3]; 3];
        for v in trace.verdicts() {
            confusion[v.truth.index()][v.prediction.index()] += 1;
        }
        Ok(Self {
            meta,
            series,
            checkpoints,
            sources: trace.verdicts().iter().map(|v| u8::from(v.source)).collect(),
            confusion,
        })
    }

    pub fn final_accuracy(&self) -> AccuracyPoint {
        *self.series.last().expect("reports are built from non-empty traces")
    }

    /// Number of instances where `c` differs from the previous instance.
    pub fn switches(&self) -> usize {
        self.sources.windows(2).filter(|w| w[0] != w[1]).count()
    }

    /// CSV with columns `i,A,c`.
    pub fn write_curve_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "i,A,c")?;
        for (p, c) in self.series.iter().zip(&self.sources) {
            writeln!(out, "{},{},{}", p.i, p.render(), c)?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for row in std::iter::once(&self.header).chain(&self.rows) {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    /// Columns padded to a common width; the first two left-aligned, the
    /// rest right-aligned.
    pub fn to_text(&self) -> String {
        let widths: Vec<usize> = (0..self.header.len())
            .map(|c| {
                std::iter::once(&self.header)
                    .chain(&self.rows)
                    .map(|r| r[c].chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut s = String::new();
        for row in std::iter::once(&self.header).chain(&self.rows) {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (cell, w))| if c < 2 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
                .collect();
            s.push_str(cells.join("  ").trim_end());
            s.push('\n');
        }
        s
    }
}

/// One row per report, one column per checkpoint; `-` where the trace is too short.
pub fn checkpoint_table(reports: &[Report]) -> Result<Table> {
    let grid: Vec<u64> = reports.first().map(|r| r.checkpoints.iter().map(|c| c.i).collect()).unwrap_or_default();
    if reports.iter().any(|r| !r.checkpoints.iter().map(|c| c.i).eq(grid.iter().copied())) {
        return Err(Error::MismatchedGrid);
    }
    let mut header = vec!["stream".to_string(), "method".to_string()];
    header.extend(grid.iter().map(|i| i.to_string()));
    let rows = reports
        .iter()
        .map(|r| {
            let mut row = vec![r.meta.stream_id.clone(), r.meta.method.clone()];
            row.extend(r.checkpoints.iter().map(|c| c.value.map_or("-".to_string(), |p| p.render())));
            row
        })
        .collect();
    Ok(Table { header, rows })
}

/// Runs the Hoeffding tree alone once per selector on the same stream.
pub fn feature_comparison(
    stream: &[WindowedInstance],
    selectors: &[FeatureSelector],
    cfg: &CsannConfig,
    stream_id: &str,
) -> Result<Vec<Report>> {
    selectors
        .par_iter()
        .map(|&selector| {
            let run_cfg = CsannConfig {
                selector,
                ..cfg.clone()
            };
            let trace = run_prequential(stream, &run_cfg, Method::Ht)?;
            let meta = RunMeta {
                stream_id: stream_id.to_string(),
                method: format!("ht/{selector}"),
                selector: selector.to_string(),
                seed: None,
                config_hash: config_hash(&run_cfg)?,
            };
            Report::from_trace(&trace, meta)
        })
        .collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 of the compact JSON encoding of `config`.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    Ok(sha256_hex(&serde_json::to_vec(config)?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self> {
        let data = std::fs::read(path)?;
        Ok(Self {
            path: path.display().to_string(),
            sha256: sha256_hex(&data),
            bytes: data.len() as u64,
        })
    }
}

/// Everything needed to repeat a command bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub config_sha256: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl Manifest {
    pub fn new<T: Serialize>(command: &str, seed: Option<u64>, config: &T) -> Result<Self> {
        Ok(Self {
            tool: "delaystream".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            config: serde_json::to_value(config)?,
            config_sha256: config_hash(config)?,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn input(mut self, path: &Path) -> Result<Self> {
        self.inputs.push(FileDigest::of(path)?);
        Ok(self)
    }

    pub fn output(mut self, path: &Path) -> Result<Self> {
        self.outputs.push(FileDigest::of(path)?);
        Ok(self)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csann::{ModelSource, ModelVerdict};
    use crate::features::DelayLabel;

    fn trace(start: u64, outcomes: &[bool]) -> RunTrace {
        let mut t = RunTrace::new(start);
        for (k, &ok) in outcomes.iter().enumerate() {
            t.push(ModelVerdict {
                i: start + k as u64,
                prediction: DelayLabel::OnTime,
                source: ModelSource::Stream,
                omega_h: None,
                omega_p: None,
                shadow_h: DelayLabel::OnTime,
                shadow_p: None,
                truth: if ok { DelayLabel::OnTime } else { DelayLabel::Delayed },
            })
            .unwrap();
        }
        t
    }

    fn meta(method: &str) -> RunMeta {
        RunMeta {
            stream_id: "S".into(),
            method: method.into(),
            ..RunMeta::default()
        }
    }

    #[test]
    fn all_correct_is_one_hundred() {
        let s = cumulative_accuracy(&trace(1, &[true; 50])).unwrap();
        assert!(s.iter().all(|p| p.render() == "100.00"));
    }

    #[test]
    fn first_right_second_wrong() {
        let s = cumulative_accuracy(&trace(1, &[true, false])).unwrap();
        assert_eq!((s[0].render(), s[1].render()), ("100.00".to_string(), "50.00".to_string()));
        assert_eq!(s[1].percent(), 50.0);
    }

    #[test]
    fn empty_trace_is_an_error() {
        assert!(matches!(cumulative_accuracy(&RunTrace::new(1)), Err(Error::EmptyTrace)));
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(format_percent(4151, 5000), "83.02");
        assert_eq!(format_percent(1, 3), "33.33");
        assert_eq!(format_percent(2, 3), "66.67");
        assert_eq!(format_percent(1, 8), "12.50");
        assert_eq!(format_percent(1, 16), "6.25");
        assert_eq!(format_percent(1, 1600), "0.06");
        assert_eq!(format_percent(0, 7), "0.00");
    }

    #[test]
    fn table_cells_and_missing_checkpoints() {
        let ht = Report::from_trace(&trace(1, &vec![true; 2500]), meta("ht")).unwrap();
        let csann = Report::from_trace(&trace(1, &vec![true; 2500]), meta("csann")).unwrap();
        let table = checkpoint_table(&[ht, csann]).unwrap();
        assert_eq!(table.header[2..], ["1000", "2000", "3000", "4000", "5000", "6000", "8000"]);
        assert_eq!(table.rows[0][2..], table.rows[1][2..]);
        assert_eq!(table.rows[0][2..5], ["100.00", "100.00", "-"]);
        assert!(table.to_csv().starts_with("stream,method,1000,"));
        let text = table.to_text();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().all(|l| l.len() == text.lines().next().unwrap().len()));
    }

    #[test]
    fn checkpoint_reads_the_series_at_that_index() {
        let mut outcomes = vec![true; 5000];
        outcomes[..849].fill(false);
        let r = Report::from_trace(&trace(1, &outcomes), meta("ht")).unwrap();
        let p = r.checkpoints[4].value.unwrap();
        assert_eq!(p, r.series[4999]);
        assert_eq!(p.render(), "83.02");
    }

    #[test]
    fn baseline_starting_late_divides_by_scored() {
        let r = Report::with_grid(&trace(2001, &[true, false, true, true]), meta("mlp"), &[2000, 2002, 2004]).unwrap();
        let cells: Vec<_> = r.checkpoints.iter().map(|c| c.value.map(|p| p.render())).collect();
        assert_eq!(cells, vec![None, Some("50.00".into()), Some("75.00".into())]);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = Report::from_trace(&trace(1, &[true]), meta("a")).unwrap();
        let b = Report::with_grid(&trace(1, &[true]), meta("b"), &[1]).unwrap();
        assert!(matches!(checkpoint_table(&[a, b]), Err(Error::MismatchedGrid)));
    }

    #[test]
    fn curve_csv_layout() {
        let r = Report::from_trace(&trace(1, &[true, false]), meta("ht")).unwrap();
        let mut buf = Vec::new();
        r.write_curve_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "i,A,c\n1,100.00,1\n2,50.00,1\n");
    }

    #[test]
    fn hashes_are_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(config_hash(&CsannConfig::default()).unwrap(), config_hash(&CsannConfig::default()).unwrap());
    }
}
