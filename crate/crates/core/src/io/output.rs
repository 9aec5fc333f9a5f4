use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::config::Format;
use crate::error::Result;
use crate::experiments::ExperimentResult;
use crate::fit::FitResult;

/// A written file and its checksum.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// CSV with the frozen columns `x,mean,stderr,counts`. `counts` is empty
/// when no shots were sampled.
pub fn csv_bytes(result: &ExperimentResult) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| std::io::Error::other(e.to_string());
    w.write_record(["x", "mean", "stderr", "counts"]).map_err(io)?;
    for i in 0..result.x.len() {
        let counts = result.counts.get(i).map(|c| c.to_string()).unwrap_or_default();
        w.write_record([result.x[i].to_string(), result.mean[i].to_string(), result.stderr[i].to_string(), counts]).map_err(io)?;
    }
    w.into_inner().map_err(|e| std::io::Error::other(e.to_string()).into())
}

/// Fit parameters keyed by name, each with value and one-sigma error.
pub fn fit_block(fit: &FitResult) -> Value {
    let params: serde_json::Map<String, Value> = fit
        .names
        .iter()
        .zip(fit.params.iter().zip(&fit.errors))
        .map(|(n, (v, e))| (n.clone(), json!({ "value": v, "error": e })))
        .collect();
    json!({
        "model": fit.model,
        "parameters": params,
        "chi2": fit.chi2,
        "reducedChi2": fit.reduced_chi2,
        "iterations": fit.iterations,
    })
}

pub fn result_json(result: &ExperimentResult) -> Value {
    json!({
        "name": result.name,
        "xLabel": result.x_label,
        "nTraj": result.n_traj,
        "nReps": result.n_reps,
        "x": result.x,
        "mean": result.mean,
        "stderr": result.stderr,
        "counts": result.counts,
        "fit": result.fit.as_ref().map(fit_block),
    })
}

/// One line on a plot.
pub struct Series<'a> {
    pub label: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub dashed: bool,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

/// A small line plot with axes, ticks and a legend.
pub fn svg_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h) = (640.0, 400.0);
    let (l, r, t, b) = (70.0, 20.0, 40.0, 50.0);
    let finite = |v: &&f64| v.is_finite();
    let xs = series.iter().flat_map(|s| s.x.iter()).filter(finite);
    let ys = series.iter().flat_map(|s| s.y.iter()).filter(finite);
    let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let (mut y0, mut y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if !y0.is_finite() {
        (y0, y1) = (0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        (y0, y1) = (y0 - 0.5, y1 + 0.5);
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let px = |x: f64| l + (x - x0) / (x1 - x0) * (w - l - r);
    let py = |y: f64| h - b - (y - y0) / (y1 - y0) * (h - t - b);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<g stroke="black" stroke-width="1" fill="none"><rect x="{l}" y="{t}" width="{}" height="{}"/></g>"#,
        w - l - r,
        h - t - b
    );
    let _ = writeln!(s, r#"<g font-family="sans-serif" font-size="11" fill="black">"#);
    for v in ticks(x0, x1) {
        let x = px(v);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#, h - b, h - b + 4.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, h - b + 16.0, fmt_tick(v));
    }
    for v in ticks(y0, y1) {
        let y = py(v);
        let _ = writeln!(s, r#"<line x1="{}" y1="{y:.2}" x2="{l}" y2="{y:.2}" stroke="black"/>"#, l - 4.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, l - 6.0, y + 4.0, fmt_tick(v));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (l + w - r) / 2.0, h - 12.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        (t + h - b) / 2.0,
        escape(y_label)
    );
    let _ = writeln!(s, "</g>");
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = ser
            .x
            .iter()
            .zip(ser.y)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let dash = if ser.dashed { r#" stroke-dasharray="5,3""# } else { "" };
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#, pts.join(" "));
        let ly = t + 14.0 + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>"#,
            w - r - 150.0,
            w - r - 130.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
            w - r - 125.0,
            ly + 4.0,
            escape(ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Series for a result curve and, when fitted, the fit sampled densely.
pub fn result_series(result: &ExperimentResult) -> (Vec<f64>, Vec<f64>) {
    match &result.fit {
        Some(fit) if result.x.len() >= 2 => {
            let (a, b) = (result.x[0], *result.x.last().expect("len checked"));
            let xs: Vec<f64> = (0..=400).map(|k| a + (b - a) * k as f64 / 400.0).collect();
            let ys = xs.iter().map(|&x| fit.eval(x)).collect();
            (xs, ys)
        }
        _ => (Vec::new(), Vec::new()),
    }
}

/// Writes artifacts into one directory and remembers their checksums.
pub struct OutputWriter {
    dir: PathBuf,
    formats: Vec<Format>,
    artifacts: Vec<Artifact>,
}

impl OutputWriter {
    pub fn new(dir: &Path, formats: &[Format]) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(OutputWriter { dir: dir.to_path_buf(), formats: formats.to_vec(), artifacts: Vec::new() })
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.artifacts.push(Artifact { file: name.to_string(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn csv(&mut self, stem: &str, result: &ExperimentResult) -> Result<()> {
        if self.wants(Format::Csv) {
            let bytes = csv_bytes(result)?;
            self.write(&format!("{stem}.csv"), &bytes)?;
        }
        Ok(())
    }

    pub fn json(&mut self, stem: &str, value: &Value) -> Result<()> {
        if self.wants(Format::Json) {
            let mut bytes = serde_json::to_vec_pretty(value)?;
            bytes.push(b'\n');
            self.write(&format!("{stem}.json"), &bytes)?;
        }
        Ok(())
    }

    pub fn svg(&mut self, stem: &str, title: &str, x_label: &str, y_label: &str, series: &[Series]) -> Result<()> {
        if self.wants(Format::Svg) {
            let doc = svg_plot(title, x_label, y_label, series);
            self.write(&format!("{stem}.svg"), doc.as_bytes())?;
        }
        Ok(())
    }

    /// A result as CSV, plus an SVG of the data and its fit.
    pub fn result(&mut self, stem: &str, title: &str, y_label: &str, result: &ExperimentResult) -> Result<()> {
        self.csv(stem, result)?;
        let (fx, fy) = result_series(result);
        let mut series = vec![Series { label: "simulated", x: &result.x, y: &result.mean, dashed: false }];
        if !fx.is_empty() {
            series.push(Series { label: "fit", x: &fx, y: &fy, dashed: true });
        }
        self.svg(stem, title, &result.x_label, y_label, &series)
    }

    /// Writes `manifest.json` (config echo, seed, checksums, summary) and
    /// a `SHA256SUMS` file readable by `sha256sum -c`.
    pub fn finish(mut self, config_toml: &str, seed: u64, summary: Value) -> Result<Vec<Artifact>> {
        let sums: String = self.artifacts.iter().map(|a| format!("{}  {}\n", a.sha256, a.file)).collect();
        let manifest = json!({
            "crate": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "seed": seed,
            "config": config_toml,
            "artifacts": self.artifacts,
            "summary": summary,
        });
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        fs::write(self.dir.join("manifest.json"), &bytes)?;
        fs::write(self.dir.join("SHA256SUMS"), sums)?;
        self.artifacts.push(Artifact { file: "manifest.json".into(), sha256: sha256_hex(&bytes) });
        Ok(self.artifacts)
    }
}
