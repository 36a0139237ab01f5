use std::fmt::Write;

use super::{CellStatus, ConformanceReport, FeatureStatus};
use crate::backend::Registry;

/// ANSI colors unless `NO_COLOR` is set to anything non-empty.
pub fn color_enabled() -> bool {
    std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty())
}

/// One line per registered target: name, extension, display name.
pub fn list_targets_text(registry: &Registry) -> String {
    registry
        .targets()
        .iter()
        .map(|t| format!("{:<10} {:<8} {}\n", t.name(), t.extension(None), t.display_name()))
        .collect()
}

fn paint(text: &str, code: &str, color: bool) -> String {
    if color {
        format!("\x1b[{code}m{text}\x1b[0m")
    } else {
        text.to_string()
    }
}

fn pad(text: &str, width: usize) -> String {
    format!("{text:<width$}")
}

/// The human-readable report: the translation matrix, the feature matrix,
/// then one line per failing cell.
pub fn render_table(report: &ConformanceReport, color: bool) -> String {
    let mut out = String::new();
    if report.programs.is_empty() {
        out.push_str("no corpus programs found\n");
        return out;
    }
    let first = report
        .programs
        .iter()
        .map(String::len)
        .chain(report.features.iter().map(|r| r.feature.label().len()))
        .max()
        .unwrap_or(0)
        + 2;
    let widths: Vec<usize> = report.targets.iter().map(|t| t.display_name().len().max(11) + 2).collect();

    let header = |out: &mut String, label: &str| {
        out.push_str(&pad(label, first));
        for (t, w) in report.targets.iter().zip(&widths) {
            out.push_str(&pad(t.display_name(), *w));
        }
        out.truncate(out.trim_end().len());
        out.push('\n');
    };

    header(&mut out, "program");
    for (i, program) in report.programs.iter().enumerate() {
        out.push_str(&pad(program, first));
        for (j, w) in widths.iter().enumerate() {
            let cell = &report.cells[i * report.targets.len() + j];
            let code = match cell.status {
                CellStatus::Pass => "32",
                CellStatus::Unsupported => "33",
                CellStatus::Fail => "31",
            };
            let label = cell.status.label();
            out.push_str(&paint(label, code, color));
            out.push_str(&" ".repeat(w.saturating_sub(label.len())));
        }
        out.truncate(out.trim_end().len());
        out.push('\n');
    }
    let _ = writeln!(out, "\n{}/{} cells passed", report.passed(), report.cells.len());

    let oracle: Vec<_> = report.cells.iter().filter_map(|c| c.oracle.as_ref()).collect();
    if !oracle.is_empty() {
        let functions: usize = oracle.iter().map(|o| o.functions).sum();
        let samples: usize = oracle.iter().map(|o| o.samples).sum();
        let worst = oracle.iter().map(|o| o.max_rel_error).fold(0.0, f64::max);
        let _ = writeln!(out, "oracle: {functions} functions, {samples} samples, max relative error {worst:e}");
    }

    out.push('\n');
    header(&mut out, "feature");
    let mut notes = Vec::new();
    for row in &report.features {
        out.push_str(&pad(row.feature.label(), first));
        for (j, (status, w)) in row.cells.iter().zip(&widths).enumerate() {
            let (label, code) = match status {
                FeatureStatus::Pass => ("yes", "32"),
                FeatureStatus::Degraded(note) => {
                    notes.push(format!("{} / {}: {note}", report.targets[j].display_name(), row.feature.label()));
                    ("partial", "33")
                }
                FeatureStatus::Fail(_) => ("no", "31"),
                FeatureStatus::NotExercised => ("-", "0"),
            };
            out.push_str(&paint(label, code, color));
            out.push_str(&" ".repeat(w.saturating_sub(label.len())));
        }
        out.truncate(out.trim_end().len());
        out.push('\n');
    }
    for n in notes {
        let _ = writeln!(out, "  {n}");
    }

    let failures: Vec<_> = report.cells.iter().filter(|c| c.status != CellStatus::Pass).collect();
    if !failures.is_empty() {
        out.push('\n');
        for c in failures {
            let _ = writeln!(out, "{} / {}: {}: {}", c.program, c.target, c.status.label(), c.messages.join("; "));
        }
    }
    out
}

/// One JSON object per cell, in report order.
pub fn to_jsonl(report: &ConformanceReport) -> String {
    report.cells.iter().map(|c| serde_json::to_string(c).expect("cell records serialize") + "\n").collect()
}
