use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::runtime::StepRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    #[default]
    Csv,
    Jsonl,
}

impl FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "jsonl" | "ndjson" => Ok(ExportFormat::Jsonl),
            other => Err(format!("unknown export format {other:?}, expected csv or jsonl")),
        }
    }
}

impl fmt::Display for ExportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExportFormat::Csv => "csv",
            ExportFormat::Jsonl => "jsonl",
        })
    }
}

/// `v` with 12 significant digits, trailing zeros dropped. Exponent form
/// outside `[1e-5, 1e12)`.
pub fn format_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "NaN".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{v:.11e}");
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-5..12).contains(&exp) {
        trim(&format!("{v:.*}", (11 - exp) as usize))
    } else {
        format!("{}e{exp}", trim(mant))
    }
}

/// CSV header for records shaped like `first`:
///
/// `t, slices, sdg_f, sdg_s, c`, then `c_nav_m_i` and `c_colav_m_i` for
/// each obstacle i (from 1), then `<node>_p<k>` for every state k of every
/// intention node in network order, then `<id>_raw` and `<id>_conf` for
/// every candidate in generation order.
pub fn csv_columns(first: Option<&StepRecord>) -> Vec<String> {
    let mut cols: Vec<String> = ["t", "slices", "sdg_f", "sdg_s", "c"].map(String::from).to_vec();
    let Some(r) = first else { return cols };
    let n = r.nodes.c_nav_m.len();
    cols.extend((1..=n).map(|i| format!("c_nav_m_{i}")));
    cols.extend((1..=n).map(|i| format!("c_colav_m_{i}")));
    for d in &r.intentions {
        cols.extend((0..d.probabilities.len()).map(|k| format!("{}_p{k}", d.name)));
    }
    for c in &r.candidates {
        cols.push(format!("{}_raw", c.id));
        cols.push(format!("{}_conf", c.id));
    }
    cols
}

fn csv_row(r: &StepRecord) -> Vec<String> {
    let mut row = vec![format_sig(r.t), r.slices.to_string()];
    let n = &r.nodes;
    row.extend([n.sdg_f, n.sdg_s, n.c].map(format_sig));
    row.extend(n.c_nav_m.iter().chain(&n.c_colav_m).map(|&v| format_sig(v)));
    row.extend(r.intentions.iter().flat_map(|d| d.probabilities.iter().map(|&v| format_sig(v))));
    row.extend(r.candidates.iter().flat_map(|c| [format_sig(c.raw), format_sig(c.confidence)]));
    row
}

pub fn write_csv<W: Write>(records: &[StepRecord], out: W) -> Result<(), String> {
    let mut w = csv::Writer::from_writer(out);
    let header = csv_columns(records.first());
    w.write_record(&header).map_err(|e| e.to_string())?;
    for r in records {
        let row = csv_row(r);
        if row.len() != header.len() {
            return Err(format!("record at t = {} has {} columns, expected {}", r.t, row.len(), header.len()));
        }
        w.write_record(&row).map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())
}

/// One JSON object per line, full precision.
pub fn write_jsonl<W: Write>(records: &[StepRecord], mut out: W) -> Result<(), String> {
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|e| e.to_string())?;
        out.write_all(b"\n").map_err(|e| e.to_string())?;
    }
    out.flush().map_err(|e| e.to_string())
}

pub fn export_run(records: &[StepRecord], path: &Path, format: ExportFormat) -> Result<(), IoError> {
    let file = File::create(path).map_err(|e| IoError::file(path, e))?;
    let out = BufWriter::new(file);
    match format {
        ExportFormat::Csv => write_csv(records, out),
        ExportFormat::Jsonl => write_jsonl(records, out),
    }
    .map_err(|msg| IoError::format(path, msg))
}
