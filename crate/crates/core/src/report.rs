//! Report serialization shared by the CLI and the model writers.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{Map, Number, Value};

use crate::metrics::EvalReport;

/// Shortest decimal form of `x` rounded to 12 significant digits.
pub fn fmt_real(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Tsv,
    Json,
}

pub const TSV_HEADER: &str = "task\tsplit\tprecision\trecall\tf1\tscore";

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_owned(), fmt_real)
}

fn json_real(x: Option<f64>) -> Value {
    x.map(|v| fmt_real(v).parse::<f64>().expect("finite"))
        .and_then(Number::from_f64)
        .map_or(Value::Null, Value::Number)
}

/// TSV with a header row, or one JSON object per line; fields always in
/// the header's order.
pub fn render_reports(reports: &[EvalReport], format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Tsv => {
            out.push_str(TSV_HEADER);
            out.push('\n');
            for r in reports {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}",
                    r.task,
                    r.split,
                    opt(r.precision),
                    opt(r.recall),
                    opt(r.f1),
                    opt(r.score)
                );
            }
        }
        ReportFormat::Json => {
            for r in reports {
                let mut obj = Map::new();
                obj.insert("task".into(), Value::String(r.task.to_string()));
                obj.insert("split".into(), Value::String(r.split.clone()));
                obj.insert("precision".into(), json_real(r.precision));
                obj.insert("recall".into(), json_real(r.recall));
                obj.insert("f1".into(), json_real(r.f1));
                obj.insert("score".into(), json_real(r.score));
                out.push_str(&Value::Object(obj).to_string());
                out.push('\n');
            }
        }
    }
    out
}

pub fn write_report(reports: &[EvalReport], path: &Path, format: ReportFormat) -> std::io::Result<()> {
    std::fs::write(path, render_reports(reports, format))
}

/// Human-readable block for the terminal.
pub fn summary(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let _ = write!(out, "{:<10} {:<12}", r.task.to_string(), r.split);
        for (name, v) in [("P", r.precision), ("R", r.recall), ("F1", r.f1), ("score", r.score)] {
            if let Some(v) = v {
                let _ = write!(out, " {name}={v:.4}");
            }
        }
        out.push('\n');
    }
    out
}
