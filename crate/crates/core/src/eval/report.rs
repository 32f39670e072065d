//! Plain-text renderings of evaluation results: the mode × method
//! precision table and comma-separated curve files.

use std::fmt::Write;

use super::{EvalReport, FrequencyAnalysis, OverlapStudy};
use crate::ranker::CombinationMode;

fn methods_in_order(report: &EvalReport) -> Vec<&str> {
    let mut methods: Vec<&str> = Vec::new();
    for c in report.cells.iter().filter(|c| c.mode.is_some()) {
        if !methods.contains(&c.method.as_str()) {
            methods.push(&c.method);
        }
    }
    methods
}

/// precision@1 table: one row per mode, one column per method, three
/// decimals, blank where a method was not run in that mode. Each ranker
/// without a mode (the network) follows as its own row, labelled with its
/// upper-cased method name and its value in the first column.
pub fn render_precision_table(report: &EvalReport) -> String {
    let methods = methods_in_order(report);
    let mut out = String::from("mode");
    for m in &methods {
        out.push(',');
        out.push_str(m);
    }
    out.push('\n');
    for mode in CombinationMode::ALL {
        if !report.cells.iter().any(|c| c.mode == Some(mode)) {
            continue;
        }
        out.push_str(mode.as_str());
        for m in &methods {
            out.push(',');
            if let Some(c) = report.cell(m, Some(mode)) {
                let _ = write!(out, "{:.3}", c.precision_at_1);
            }
        }
        out.push('\n');
    }
    for c in report.cells.iter().filter(|c| c.mode.is_none()) {
        let _ = write!(out, "{},{:.3}", c.method.to_uppercase(), c.precision_at_1);
        for _ in 1..methods.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out
}

pub fn render_recall_curves(report: &EvalReport) -> String {
    let mut out = String::from("k,method,mode,value\n");
    for c in &report.cells {
        let mode = c.mode.map_or("-", |m| m.as_str());
        for (i, r) in c.recall_at_k.iter().enumerate() {
            let _ = writeln!(out, "{},{},{mode},{r:.6}", i + 1, c.method);
        }
    }
    out
}

pub fn render_frequency(analysis: &FrequencyAnalysis) -> String {
    let mut out = String::from("bucket_lo,bucket_hi,method,mean_rank,ci_lo,ci_hi,n\n");
    for p in &analysis.points {
        let _ = write!(out, "{},{},{},", p.bucket_lo, p.bucket_hi, p.method);
        match p.stats {
            Some(s) => {
                let _ = write!(out, "{:.6},{:.6},{:.6}", s.mean_rank, s.ci_low, s.ci_high);
            }
            None => out.push_str("NA,NA,NA"),
        }
        let _ = writeln!(out, ",{}", p.n);
    }
    out
}

pub fn render_overlap(study: &OverlapStudy) -> String {
    let mut out = String::from("k,method,mean_recall\n");
    for c in &study.curves {
        for (i, r) in c.mean_recall.iter().enumerate() {
            let _ = writeln!(out, "{},{},{r:.6}", i + 1, c.method);
        }
    }
    out
}
