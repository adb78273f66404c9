use std::fmt::Write;

use crate::train::eval::HoldoutReport;
use crate::train::loocv::{LatencyReport, LoocvReport};

/// A published comparison row.
#[derive(Clone, Copy, Debug)]
pub struct Published {
    pub method: &'static str,
    pub med_mean: f64,
    pub med_sd: f64,
}

/// Leave-one-out MED reported for the original KST-Mixer and two
/// baselines, mm.
pub const PUBLISHED_MED: [Published; 3] = [
    Published {
        method: "KST-Mixer (published)",
        med_mean: 11.92,
        med_sd: 1.75,
    },
    Published {
        method: "SEN (published)",
        med_mean: 12.58,
        med_sd: 2.08,
    },
    Published {
        method: "Regression forests (published)",
        med_mean: 13.08,
        med_sd: 1.55,
    },
];

/// Published per-estimate GPU latencies, ms.
pub const PUBLISHED_LATENCY: [(&str, f64); 3] = [
    ("KST-Mixer (published, GPU)", 7.3),
    ("SEN (published, GPU)", 2.9),
    ("Regression forests (published)", 8.9),
];

pub fn render_loocv(report: &LoocvReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Leave-one-insertion-out MED (mm)");
    let _ = writeln!(s, "{:<34} {:>16}", "method", "MED mean ± SD");
    for p in PUBLISHED_MED {
        let _ = writeln!(
            s,
            "{:<34} {:>16}",
            p.method,
            format!("{:.2} ± {:.2}", p.med_mean, p.med_sd)
        );
    }
    let _ = writeln!(s, "{:<34} {:>16}", "KST-Mixer (this run)", report.model.to_string());
    let _ = writeln!(s, "{:<34} {:>16}", "Mean training shape", report.baseline.to_string());
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:>4}  {:<20} {:>7} {:>7} {:>10} {:>10}",
        "fold", "held out", "train", "test", "MED", "baseline"
    );
    for f in &report.folds {
        let _ = writeln!(
            s,
            "{:>4}  {:<20} {:>7} {:>7} {:>10.3} {:>10.3}",
            f.fold, f.test_recording, f.train_samples, f.test_samples, f.med, f.baseline_med
        );
    }
    if let Some(t) = &report.vs_baseline {
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "paired t-test vs mean shape: t = {:.3}, df = {}, p = {:.4}",
            t.t, t.df, t.p
        );
    }
    s
}

pub fn render_latency(latency: &LatencyReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Per-estimate latency (ms)");
    for (method, ms) in PUBLISHED_LATENCY {
        let _ = writeln!(s, "{:<34} {:>10.1}", method, ms);
    }
    let o = &latency.overall;
    let _ = writeln!(
        s,
        "{:<34} {:>10.3}  (p95 {:.3}, {} runs, CPU)",
        "KST-Mixer (this run, median)", o.median_ms, o.p95_ms, o.reps
    );
    for f in &latency.folds {
        let _ = writeln!(
            s,
            "  fold {:>2}: median {:.3}, p95 {:.3}",
            f.fold, f.stats.median_ms, f.stats.p95_ms
        );
    }
    s
}

pub fn render_holdout(report: &HoldoutReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<20} {:>7} {:>10}", "recording", "windows", "MED (mm)");
    for r in &report.recordings {
        let _ = writeln!(s, "{:<20} {:>7} {:>10.3}", r.recording, r.t_c.len(), r.med.med);
    }
    let _ = writeln!(s, "{:<20} {:>7} {:>10}", "all", "", report.summary.to_string());
    s
}
