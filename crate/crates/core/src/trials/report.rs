use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TrialOutcome;
use crate::optimize::TrialReport;

/// Aggregate over the successful trials of one engine/backend/strategy row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub label: String,
    /// Successful trials the statistics are computed over.
    pub trials: usize,
    pub failed: Vec<usize>,
    pub mean_best: f64,
    pub std_best: f64,
    pub mean_steps: f64,
    pub std_steps: f64,
}

impl SummaryStats {
    /// With one trial the std is reported as 0 and flagged in the notes.
    pub fn single_trial(&self) -> bool {
        self.trials == 1
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// One row per label, in order of first appearance. Failed trials are
/// listed but excluded from the statistics.
pub fn summarize(outcomes: &[TrialOutcome]) -> Vec<SummaryStats> {
    let mut labels: Vec<String> = Vec::new();
    for o in outcomes {
        let label = match o {
            TrialOutcome::Ok(r) => r.label(),
            TrialOutcome::Failed { label, .. } => label.clone(),
        };
        if !labels.contains(&label) {
            labels.push(label);
        }
    }
    labels
        .into_iter()
        .map(|label| {
            let mut best = Vec::new();
            let mut steps = Vec::new();
            let mut failed = Vec::new();
            for o in outcomes {
                match o {
                    TrialOutcome::Ok(r) if r.label() == label => {
                        best.push(r.best_score);
                        steps.push(r.steps_to_best as f64);
                    }
                    TrialOutcome::Failed { trial, label: l, .. } if *l == label => failed.push(*trial),
                    _ => {}
                }
            }
            if !failed.is_empty() {
                log::warn!("{label}: {} failed trial(s) excluded from statistics", failed.len());
            }
            let (mean_best, std_best) = mean_std(&best);
            let (mean_steps, std_steps) = mean_std(&steps);
            SummaryStats {
                label,
                trials: best.len(),
                failed,
                mean_best,
                std_best,
                mean_steps,
                std_steps,
            }
        })
        .collect()
}

fn fixed2(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

/// `"M.MM ± S.SS"`; `"n/a"` when there is nothing to aggregate.
pub fn format_cell(mean: f64, std: f64) -> String {
    if mean.is_nan() {
        return "n/a".into();
    }
    format!("{} ± {}", fixed2(mean), fixed2(std))
}

/// Best-score and steps-to-best tables plus notes.
pub fn emit_markdown_tables(stats: &[SummaryStats]) -> String {
    let mut out = String::new();
    let common_n = stats.first().map(|s| s.trials).filter(|&n| stats.iter().all(|s| s.trials == n));
    let title = match common_n {
        Some(n) => format!("Best Scores for {n} Optimization Trials"),
        None => "Best Scores for Optimization Trials".into(),
    };
    let marker = |s: &SummaryStats| if s.single_trial() { " †" } else { "" };

    let _ = writeln!(out, "## {title}\n");
    out.push_str("| Method | Best Score |\n| --- | --- |\n");
    for s in stats {
        let _ = writeln!(out, "| {}{} | {} |", s.label, marker(s), format_cell(s.mean_best, s.std_best));
    }
    out.push_str("\n## Steps to Achieve Best Score\n\n");
    out.push_str("| Method | Steps |\n| --- | --- |\n");
    for s in stats {
        let _ = writeln!(out, "| {}{} | {} |", s.label, marker(s), format_cell(s.mean_steps, s.std_steps));
    }

    let mut notes = Vec::new();
    if stats.iter().any(SummaryStats::single_trial) {
        notes.push("† Single trial: standard deviation reported as 0.00 by convention.".to_string());
    }
    for s in stats.iter().filter(|s| !s.failed.is_empty()) {
        let ids: Vec<String> = s.failed.iter().map(usize::to_string).collect();
        notes.push(format!(
            "{}: {} failed trial(s) excluded (trial {}).",
            s.label,
            s.failed.len(),
            ids.join(", ")
        ));
    }
    notes.push("Steps count engine steps (model calls or generations) until the final best score first appears; 0 means an initial solution was never improved.".into());
    out.push('\n');
    for n in notes {
        let _ = writeln!(out, "{n}");
    }
    out
}

/// `step,trial,best_so_far`, one row per completed engine step (1-based).
pub fn progression_csv(reports: &[TrialReport]) -> String {
    let mut out = String::from("step,trial,best_so_far\n");
    for r in reports {
        for s in &r.steps {
            let _ = writeln!(out, "{},{},{}", s.step + 1, r.trial, s.best_so_far);
        }
    }
    out
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

/// Line chart of best-so-far against step, one polyline per trial.
pub fn progression_svg(reports: &[TrialReport]) -> String {
    const W: f64 = 720.0;
    const H: f64 = 440.0;
    const LEFT: f64 = 80.0;
    const RIGHT: f64 = 20.0;
    const TOP: f64 = 40.0;
    const BOTTOM: f64 = 60.0;
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;

    let points = || reports.iter().flat_map(|r| r.steps.iter().map(|s| ((s.step + 1) as f64, s.best_so_far)));
    let x_max = points().map(|p| p.0).fold(1.0, f64::max);
    let (mut y_min, mut y_max) = points()
        .filter(|p| p.1.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    if !y_min.is_finite() {
        y_min = 0.0;
        y_max = 100.0;
    }
    if y_max - y_min < 1e-9 {
        y_min -= 1.0;
        y_max += 1.0;
    }
    let sx = |x: f64| LEFT + (x - 1.0).max(0.0) / (x_max - 1.0).max(1.0) * pw;
    let sy = |y: f64| TOP + (y_max - y) / (y_max - y_min) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">Best score by optimization step</text>"#,
        W / 2.0
    );
    // Axes.
    let _ = writeln!(
        out,
        r#"<line x1="{LEFT}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
        TOP + ph,
        LEFT + pw,
        TOP + ph
    );
    let _ = writeln!(out, r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.2}" stroke="black"/>"#, TOP + ph);
    for value in [y_min, (y_min + y_max) / 2.0, y_max] {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{value:.2}</text>"#,
            LEFT - 6.0,
            sy(value) + 4.0
        );
    }
    for x in [1.0, x_max] {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x}</text>"#,
            sx(x),
            TOP + ph + 18.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">Optimization step</text>"#,
        LEFT + pw / 2.0,
        H - 16.0
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">Best score</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    for (i, r) in reports.iter().enumerate() {
        if r.steps.is_empty() {
            continue;
        }
        let pts: Vec<String> = r
            .steps
            .iter()
            .filter(|s| s.best_so_far.is_finite())
            .map(|s| format!("{:.2},{:.2}", sx((s.step + 1) as f64), sy(s.best_so_far)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline data-trial="{}" fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            r.trial,
            PALETTE[i % PALETTE.len()],
            pts.join(" ")
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Writes `progression.csv` and `progression.svg` into `dir`.
pub fn emit_progression_chart(reports: &[TrialReport], dir: &Path) -> std::io::Result<()> {
    fs::write(dir.join("progression.csv"), progression_csv(reports))?;
    fs::write(dir.join("progression.svg"), progression_svg(reports))
}
