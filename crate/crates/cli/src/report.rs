//! Summaries of a bench results file.

use std::io::Read;

use crate::bench::{BenchRow, CONFIRMATION_LEVELS, CSV_COLUMNS};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("results file has no rows")]
    Empty,
    /// `line` counts the header as line 1.
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
}

fn malformed(line: u64, message: impl Into<String>) -> ReportError {
    ReportError::Malformed {
        line,
        message: message.into(),
    }
}

/// Parses and checks a results file.
pub fn read_rows<R: Read>(input: R) -> Result<Vec<BenchRow>, ReportError> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(input);
    let headers = match rdr.headers() {
        Ok(h) if h.is_empty() => return Err(ReportError::Empty),
        Ok(h) => h.clone(),
        Err(e) => return Err(malformed(1, e.to_string())),
    };
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(malformed(
            1,
            format!("expected header {}", CSV_COLUMNS.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            malformed(line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let row: BenchRow = rec
            .deserialize(Some(&headers))
            .map_err(|e| malformed(line, e.to_string()))?;
        let times: Vec<u64> = row.times().into_iter().flatten().collect();
        if times.windows(2).any(|w| w[0] > w[1]) {
            return Err(malformed(line, "confirmation times are out of order"));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(ReportError::Empty);
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub stddev: f64,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Option<Stat> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Some(Stat {
            n,
            mean,
            stddev: var.sqrt(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpSummary {
    pub label: String,
    pub rows: usize,
    pub failed: usize,
    /// Seconds to 1, 6 and 12 confirmations.
    pub latency: [Option<Stat>; 3],
    pub gas: Option<Stat>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    /// In order of first appearance.
    pub ops: Vec<OpSummary>,
    /// Every op pooled, per confirmation level.
    pub levels: [Option<Stat>; 3],
    pub replications: usize,
}

fn latency_s(rows: &[&BenchRow], level: usize) -> Vec<f64> {
    rows.iter()
        .filter_map(|r| r.latencies_ms()[level])
        .map(|ms| ms as f64 / 1000.0)
        .collect()
}

pub fn summarize(rows: &[BenchRow]) -> Summary {
    let mut labels: Vec<&str> = Vec::new();
    for r in rows {
        if !labels.contains(&r.op_label.as_str()) {
            labels.push(&r.op_label);
        }
    }
    let all: Vec<&BenchRow> = rows.iter().collect();
    let ops = labels
        .iter()
        .map(|label| {
            let mine: Vec<&BenchRow> = rows.iter().filter(|r| r.op_label == *label).collect();
            let gas: Vec<f64> = mine
                .iter()
                .filter_map(|r| r.gas_used)
                .map(|g| g as f64)
                .collect();
            OpSummary {
                label: label.to_string(),
                rows: mine.len(),
                failed: mine
                    .iter()
                    .filter(|r| r.status.starts_with("failed"))
                    .count(),
                latency: [0, 1, 2].map(|l| Stat::of(&latency_s(&mine, l))),
                gas: Stat::of(&gas),
            }
        })
        .collect();
    let mut reps: Vec<u32> = rows.iter().map(|r| r.replication).collect();
    reps.sort_unstable();
    reps.dedup();
    Summary {
        ops,
        levels: [0, 1, 2].map(|l| Stat::of(&latency_s(&all, l))),
        replications: reps.len(),
    }
}

fn cell(s: &Option<Stat>, digits: usize) -> String {
    match s {
        Some(s) => format!("{:.*} ± {:.*}", digits, s.mean, digits, s.stddev),
        None => "-".into(),
    }
}

/// Markdown tables: latency and gas per op, then latency per level.
pub fn render(summary: &Summary) -> String {
    let mut out = format!(
        "Replications: {}\n\n| op | rows | failed | L@1 (s) | L@6 (s) | L@12 (s) | gas |\n|---|---|---|---|---|---|---|\n",
        summary.replications
    );
    for op in &summary.ops {
        out += &format!(
            "| {} | {} | {} | {} | {} | {} | {} |\n",
            op.label,
            op.rows,
            op.failed,
            cell(&op.latency[0], 2),
            cell(&op.latency[1], 2),
            cell(&op.latency[2], 2),
            cell(&op.gas, 0),
        );
    }
    out += "\n| confirmations | n | mean (s) | stddev (s) |\n|---|---|---|---|\n";
    for (level, stat) in CONFIRMATION_LEVELS.iter().zip(&summary.levels) {
        match stat {
            Some(s) => out += &format!("| {level} | {} | {:.2} | {:.2} |\n", s.n, s.mean, s.stddev),
            None => out += &format!("| {level} | 0 | - | - |\n"),
        }
    }
    out
}
