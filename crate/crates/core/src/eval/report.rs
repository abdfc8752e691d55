// SPDX-License-Identifier: Apache-2.0

//! Experiment results and their CSV, Markdown and SVG renderings.
//!
//! Everything except `timings.csv` is a pure function of the experiment
//! inputs, so repeated runs write byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::{Method, SweepParam};
use crate::weights::BetaWeights;

pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_MD: &str = "report.md";
pub const WEIGHTS_CSV: &str = "weights_report.csv";
pub const DIAGNOSTICS_CSV: &str = "diagnostics.csv";
pub const TIMINGS_CSV: &str = "timings.csv";
pub const SWEEP_CSV: &str = "sweep.csv";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub method: Method,
    pub fraction: f64,
    /// 1-based.
    pub repeat: usize,
    /// Percent.
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepeatDiagnostics {
    pub fraction: f64,
    pub repeat: usize,
    pub seeds: usize,
    /// Absent when no graph-based method ran.
    pub beta: Option<BetaWeights>,
    pub spectral_radius: f64,
    pub propagation_iterations: usize,
    pub unreachable: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub paths: Vec<String>,
    pub fractions: Vec<f64>,
    pub methods: Vec<Method>,
    pub records: Vec<RunRecord>,
    pub diagnostics: Vec<RepeatDiagnostics>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn pct(f: f64) -> String {
    format!("{}%", (f * 100.0).round())
}

impl ExperimentReport {
    pub fn new(paths: Vec<String>, fractions: Vec<f64>, methods: Vec<Method>) -> Self {
        ExperimentReport {
            paths,
            fractions,
            methods,
            records: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    /// Per-repeat accuracies of one method at one fraction, in repeat order.
    pub fn accuracies(&self, method: Method, fraction: f64) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.method == method && r.fraction == fraction)
            .map(|r| r.accuracy)
            .collect()
    }

    /// Mean and population standard deviation over repeats.
    pub fn summary(&self, method: Method, fraction: f64) -> (f64, f64) {
        mean_std(&self.accuracies(method, fraction))
    }

    /// Mean normalized weight of each path at one fraction.
    pub fn mean_weights_at(&self, fraction: f64) -> Vec<f64> {
        let betas: Vec<&BetaWeights> = self
            .diagnostics
            .iter()
            .filter(|d| d.fraction == fraction)
            .filter_map(|d| d.beta.as_ref())
            .collect();
        (0..self.paths.len())
            .map(|k| mean_std(&betas.iter().map(|b| b.normalized[k]).collect::<Vec<_>>()).0)
            .collect()
    }

    /// Rows `method,fraction,repeat,accuracy`, then `mean` and `std` rows per
    /// method and fraction.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,fraction,repeat,accuracy\n");
        for r in &self.records {
            let _ = writeln!(out, "{},{},{},{:.4}", r.method, r.fraction, r.repeat, r.accuracy);
        }
        for &m in &self.methods {
            for &f in &self.fractions {
                let (mean, std) = self.summary(m, f);
                let _ = writeln!(out, "{m},{f},mean,{mean:.4}");
                let _ = writeln!(out, "{m},{f},std,{std:.4}");
            }
        }
        out
    }

    /// Methods as rows, seed fractions as columns, mean ± std accuracy.
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| Method |");
        for &f in &self.fractions {
            let _ = write!(out, " {} |", pct(f));
        }
        out.push_str("\n|---|");
        for _ in &self.fractions {
            out.push_str("---|");
        }
        out.push('\n');
        for &m in &self.methods {
            let _ = write!(out, "| {} |", m.title());
            for &f in &self.fractions {
                let (mean, std) = self.summary(m, f);
                let _ = write!(out, " {mean:.2} ± {std:.2} |");
            }
            out.push('\n');
        }
        out
    }

    /// Paths as rows, seed fractions as columns, mean normalized weight.
    pub fn weights_csv(&self) -> String {
        let mut out = String::from("path");
        for &f in &self.fractions {
            let _ = write!(out, ",{f}");
        }
        out.push_str(",mean\n");
        let per_fraction: Vec<Vec<f64>> = self.fractions.iter().map(|&f| self.mean_weights_at(f)).collect();
        for (k, p) in self.paths.iter().enumerate() {
            out.push_str(p);
            let col: Vec<f64> = per_fraction.iter().map(|w| w[k]).collect();
            for v in &col {
                let _ = write!(out, ",{v:.6}");
            }
            let _ = writeln!(out, ",{:.6}", mean_std(&col).0);
        }
        out
    }

    /// One row per `(fraction, repeat)` with raw and normalized weights and
    /// solver diagnostics.
    pub fn diagnostics_csv(&self) -> String {
        let mut out = String::from("fraction,repeat,seeds");
        for p in &self.paths {
            let _ = write!(out, ",raw_{p}");
        }
        for p in &self.paths {
            let _ = write!(out, ",beta_{p}");
        }
        out.push_str(",bias,svr_iterations,kkt_residual,spectral_radius,propagation_iterations,unreachable\n");
        for d in &self.diagnostics {
            let _ = write!(out, "{},{},{}", d.fraction, d.repeat, d.seeds);
            match &d.beta {
                Some(b) => {
                    for v in b.raw.iter().chain(&b.normalized) {
                        let _ = write!(out, ",{v:.9}");
                    }
                    let _ = write!(out, ",{:.9},{},{:.3e}", b.bias, b.iterations, b.kkt_residual);
                }
                None => {
                    for _ in 0..2 * self.paths.len() + 3 {
                        out.push(',');
                    }
                }
            }
            let _ = writeln!(
                out,
                ",{:.12},{},{}",
                d.spectral_radius, d.propagation_iterations, d.unreachable
            );
        }
        out
    }

    pub fn timings_csv(&self) -> String {
        let mut out = String::from("fraction,repeat,seconds\n");
        for d in &self.diagnostics {
            let _ = writeln!(out, "{},{},{:.3}", d.fraction, d.repeat, d.seconds);
        }
        out
    }

    /// Writes every report file into `dir`; returns the paths written.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let files = [
            (REPORT_CSV, self.to_csv()),
            (REPORT_MD, self.to_markdown()),
            (WEIGHTS_CSV, self.weights_csv()),
            (DIAGNOSTICS_CSV, self.diagnostics_csv()),
            (TIMINGS_CSV, self.timings_csv()),
        ];
        write_all(dir, &files)
    }

    /// Accuracy against seed fraction, one line per method.
    pub fn accuracy_plot(&self) -> String {
        let series = self
            .methods
            .iter()
            .map(|&m| {
                let pts = self.fractions.iter().map(|&f| (f * 100.0, self.summary(m, f).0)).collect();
                (m.title().to_string(), pts)
            })
            .collect::<Vec<_>>();
        svg_line_chart("Accuracy vs. seed fraction", "seed fraction (%)", "accuracy (%)", &series)
    }
}

fn write_all(dir: &Path, files: &[(&str, String)]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    files
        .iter()
        .map(|(name, body)| {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub fraction: f64,
    pub method: Method,
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub param: SweepParam,
    pub rows: Vec<SweepRow>,
    /// Full report per swept value, in value order.
    pub reports: Vec<ExperimentReport>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},fraction,method,mean_accuracy\n", self.param.as_str());
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{:.4}", r.value, r.fraction, r.method, r.mean_accuracy);
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        write_all(dir, &[(SWEEP_CSV, self.to_csv())])
    }

    /// Mean accuracy of one method against the swept value, one line per
    /// seed fraction.
    pub fn plot(&self, method: Method) -> String {
        let mut fractions: Vec<f64> = Vec::new();
        for r in &self.rows {
            if !fractions.contains(&r.fraction) {
                fractions.push(r.fraction);
            }
        }
        let series = fractions
            .iter()
            .map(|&f| {
                let pts = self
                    .rows
                    .iter()
                    .filter(|r| r.fraction == f && r.method == method)
                    .map(|r| (r.value, r.mean_accuracy))
                    .collect();
                (pct(f), pts)
            })
            .collect::<Vec<_>>();
        let title = format!("{} accuracy vs. {}", method.title(), self.param.as_str());
        svg_line_chart(&title, self.param.as_str(), "accuracy (%)", &series)
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Minimal SVG line chart with axes, ticks at the data extremes and a legend.
pub fn svg_line_chart(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let (w, h, left, right, top, bottom) = (640.0, 400.0, 70.0, 140.0, 40.0, 50.0);
    let pts = series.iter().flat_map(|(_, p)| p.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    let pw = w - left - right;
    let ph = h - top - bottom;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, left + pw / 2.0, escape(title));
    let _ = writeln!(
        out,
        r#"<path d="M{left} {top} V{} H{}" fill="none" stroke="black"/>"#,
        top + ph,
        left + pw
    );
    for (v, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="{anchor}">{v:.4}</text>"#, sx(v), top + ph + 16.0);
    }
    for v in [y0, y1] {
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.2}</text>"#, left - 6.0, sy(v) + 4.0);
    }
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, left + pw / 2.0, h - 10.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        escape(y_label)
    );
    for (k, (name, p)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let d: Vec<String> = p
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, d.join(" "));
        for pt in &d {
            let (cx, cy) = pt.split_once(',').expect("formatted as x,y");
            let _ = writeln!(out, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>"#);
        }
        let ly = top + 10.0 + 18.0 * k as f64;
        let lx = left + pw + 12.0;
        let _ = writeln!(out, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(name));
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
