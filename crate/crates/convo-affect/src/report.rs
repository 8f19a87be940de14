//! Evaluation reports as JSON and aligned text tables.

use convo_affect_core::metrics::EvalReport;
use convo_affect_core::EMOTIONS;

/// Display order of the per-class columns.
pub const COLUMNS: [&str; 7] = ["Anger", "Disgust", "Fear", "Joy", "Neutral", "Sadness", "Surprise"];
const W_AVG: &str = "w-average F1";

fn column_class(col: &str) -> usize {
    EMOTIONS
        .iter()
        .position(|e| e.eq_ignore_ascii_case(col))
        .expect("every column names an emotion")
}

/// One header row and one row per `(name, report)`, F1 to three decimals.
pub fn f1_table(rows: &[(&str, &EvalReport)]) -> String {
    let name_w = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max("Method".len());
    let mut out = format!("{:<name_w$}", "Method");
    for c in COLUMNS {
        out += &format!("  {c:>8}");
    }
    out += &format!("  {W_AVG:>12}\n");
    for (name, r) in rows {
        out += &format!("{name:<name_w$}");
        for c in COLUMNS {
            let v = r.per_class_f1.get(column_class(c)).copied().unwrap_or(0.0);
            out += &format!("  {v:>8.3}");
        }
        out += &format!("  {:>12.3}\n", r.weighted_f1);
    }
    out
}

/// Two-column table of weighted F1 per configuration; `None` marks a
/// configuration that could not run on the given data.
pub fn ablation_table(rows: &[(String, Option<f64>)]) -> String {
    let name_w = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max("Method".len());
    let mut out = format!("{:<name_w$}  {W_AVG:>12}\n", "Method");
    for (name, v) in rows {
        match v {
            Some(v) => out += &format!("{name:<name_w$}  {v:>12.3}\n"),
            None => out += &format!("{name:<name_w$}  {:>12}\n", "n/a"),
        }
    }
    out
}

pub fn report_json(r: &EvalReport) -> String {
    serde_json::to_string_pretty(r).expect("report serializes")
}
