//! CSV, SVG and manifest writers. Numbers are written with 12 significant
//! digits so repeated runs diff cleanly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::IntegratorConfig;
use crate::error::ExperimentError;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Formats `x` with [`SIGNIFICANT_DIGITS`] significant digits, in fixed
/// notation for moderate exponents and scientific otherwise. Trailing zeros
/// are dropped but fixed notation keeps one decimal (`2.0`, `0.0`).
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0.0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".to_string()
        } else if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", mantissa.trim_end_matches('0').trim_end_matches('.'), exp)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        let t = s.trim_end_matches('0');
        if t.ends_with('.') {
            format!("{t}0")
        } else {
            t.to_string()
        }
    } else {
        format!("{s}.0")
    }
}

/// One CSV table: header plus rows of already formatted fields.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_nums(&mut self, values: &[f64]) {
        self.rows.push(values.iter().map(|&v| fmt_num(v)).collect());
    }

    pub fn push(&mut self, fields: Vec<String>) {
        self.rows.push(fields);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Numeric view of one column; non-numeric fields become NaN.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| r.get(idx).and_then(|f| f.parse().ok()).unwrap_or(f64::NAN))
                .collect(),
        )
    }

    pub fn write(&self, path: &Path) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        w.write_record(&self.header).map_err(|e| csv_err(path, e))?;
        for r in &self.rows {
            w.write_record(r).map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| ExperimentError::io(path, e))
    }
}

fn csv_err(path: &Path, e: csv::Error) -> ExperimentError {
    ExperimentError::io(path, std::io::Error::other(e))
}

/// Pass/fail record for one checked claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    pub description: String,
    pub passed: bool,
    /// Measured value in the units of `tolerance`.
    pub measured: f64,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Check {
    /// Passes when `measured <= tolerance`.
    pub fn at_most(id: &str, description: &str, measured: f64, tolerance: f64) -> Self {
        Check {
            id: id.to_string(),
            description: description.to_string(),
            passed: measured <= tolerance,
            measured,
            tolerance,
            detail: String::new(),
        }
    }

    /// Passes when `measured < bound`.
    pub fn below(id: &str, description: &str, measured: f64, bound: f64) -> Self {
        Check {
            passed: measured < bound,
            ..Check::at_most(id, description, measured, bound)
        }
    }

    /// Passes when `measured >= threshold`.
    pub fn at_least(id: &str, description: &str, measured: f64, threshold: f64) -> Self {
        Check {
            passed: measured >= threshold,
            ..Check::at_most(id, description, measured, threshold)
        }
    }

    pub fn flag(id: &str, description: &str, passed: bool) -> Self {
        Check {
            id: id.to_string(),
            description: description.to_string(),
            passed,
            measured: if passed { 1.0 } else { 0.0 },
            tolerance: 1.0,
            detail: String::new(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    /// `PASS <id> measured=<x> tolerance=<t>  <description> [<detail>]`.
    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let mut s = format!(
            "{verdict} {:<28} measured={} tolerance={}  {}",
            self.id,
            fmt_num(self.measured),
            fmt_num(self.tolerance),
            self.description
        );
        if !self.detail.is_empty() {
            let _ = write!(s, " [{}]", self.detail);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub parameters: serde_json::Value,
    pub tolerances: IntegratorConfig,
    pub code_version: String,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub checks: Vec<Check>,
}

impl RunManifest {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Output directory of one experiment, created on demand; records every
/// file written so the manifest can list them.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<String>,
    svg: bool,
}

impl OutputDir {
    pub fn create(root: &Path, experiment: &str, svg: bool) -> Result<Self, ExperimentError> {
        let dir = root.join(experiment);
        fs::create_dir_all(&dir).map_err(|e| ExperimentError::io(&dir, e))?;
        Ok(OutputDir {
            dir,
            files: Vec::new(),
            svg,
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn csv(&mut self, name: &str, table: &Table) -> Result<(), ExperimentError> {
        let file = format!("{name}.csv");
        table.write(&self.dir.join(&file))?;
        self.files.push(file);
        Ok(())
    }

    pub fn svg(&mut self, name: &str, plot: &Plot) -> Result<(), ExperimentError> {
        if !self.svg {
            return Ok(());
        }
        let file = format!("{name}.svg");
        let path = self.dir.join(&file);
        fs::write(&path, plot.render()).map_err(|e| ExperimentError::io(&path, e))?;
        self.files.push(file);
        Ok(())
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), ExperimentError> {
        let file = format!("{name}.json");
        let path = self.dir.join(&file);
        let text = serde_json::to_string_pretty(value)?;
        fs::write(&path, text + "\n").map_err(|e| ExperimentError::io(&path, e))?;
        self.files.push(file);
        Ok(())
    }

    /// Writes `manifest.json` listing everything written so far.
    pub fn finish(
        self,
        experiment: &str,
        parameters: serde_json::Value,
        tolerances: IntegratorConfig,
        wall_time_s: f64,
        checks: Vec<Check>,
    ) -> Result<RunManifest, ExperimentError> {
        let manifest = RunManifest {
            experiment: experiment.to_string(),
            parameters,
            tolerances,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s,
            outputs: self.files,
            checks,
        };
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest)?;
        fs::write(&path, text + "\n").map_err(|e| ExperimentError::io(&path, e))?;
        Ok(manifest)
    }
}

/// Minimal line/scatter plot rendered as SVG.
#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Draw markers instead of a polyline.
    pub scatter: bool,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Plot {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            ..Plot::default()
        }
    }

    pub fn line(mut self, label: &str, points: Vec<(f64, f64)>) -> Self {
        self.series.push(Series {
            label: label.to_string(),
            points,
            scatter: false,
        });
        self
    }

    pub fn scatter(mut self, label: &str, points: Vec<(f64, f64)>) -> Self {
        self.series.push(Series {
            label: label.to_string(),
            points,
            scatter: true,
        });
        self
    }

    pub fn render(&self) -> String {
        let (w, h) = (640.0, 420.0);
        let (left, right, top, bottom) = (70.0, 150.0, 30.0, 50.0);
        let tx = |x: f64| if self.log_x { x.log10() } else { x };
        let pts = || {
            self.series
                .iter()
                .flat_map(|s| s.points.iter())
                .filter(|p| p.0.is_finite() && p.1.is_finite() && (!self.log_x || p.0 > 0.0))
        };
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts() {
            x0 = x0.min(tx(x));
            x1 = x1.max(tx(x));
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 == x0 {
            x1 = x0 + 1.0;
        }
        if y1 == y0 {
            y1 = y0 + 1.0;
        }
        let pw = w - left - right;
        let ph = h - top - bottom;
        let px = |x: f64| left + (tx(x) - x0) / (x1 - x0) * pw;
        let py = |y: f64| top + (y1 - y) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#,
            left + pw / 2.0,
            xml(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            left + pw / 2.0,
            h - 10.0,
            xml(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
            top + ph / 2.0,
            top + ph / 2.0,
            xml(&self.y_label)
        );
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let xv = x0 + f * (x1 - x0);
            let yv = y0 + f * (y1 - y0);
            let xs = left + f * pw;
            let ys = top + (1.0 - f) * ph;
            let xt = if self.log_x { format!("1e{:.1}", xv) } else { short(xv) };
            let _ = writeln!(
                s,
                r#"<text x="{xs}" y="{}" text-anchor="middle">{}</text>"#,
                top + ph + 15.0,
                xt
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
                left - 4.0,
                ys + 4.0,
                short(yv)
            );
        }
        for (i, series) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let visible: Vec<(f64, f64)> = series
                .points
                .iter()
                .copied()
                .filter(|p| p.0.is_finite() && p.1.is_finite() && (!self.log_x || p.0 > 0.0))
                .collect();
            if series.scatter {
                for (x, y) in &visible {
                    let _ = writeln!(
                        s,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="1.6" fill="{color}"/>"#,
                        px(*x),
                        py(*y)
                    );
                }
            } else if !visible.is_empty() {
                let coords: Vec<String> = visible
                    .iter()
                    .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
                    .collect();
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
                    coords.join(" ")
                );
            }
            let ly = top + 14.0 + 16.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/><text x="{}" y="{}">{}</text>"#,
                w - right + 10.0,
                ly - 9.0,
                w - right + 25.0,
                ly,
                xml(&series.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn short(x: f64) -> String {
    if x != 0.0 && (x.abs() < 1e-2 || x.abs() >= 1e4) {
        format!("{x:.1e}")
    } else {
        format!("{x:.3}")
    }
}

fn xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(0.0), "0.0");
        assert_eq!(fmt_num(-0.0), "0.0");
        assert_eq!(fmt_num(1.0), "1.0");
        assert_eq!(fmt_num(-250.0), "-250.0");
        assert_eq!(fmt_num(-0.5), "-0.5");
        assert_eq!(fmt_num(std::f64::consts::PI), "3.14159265359");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(123456.789), "123456.789");
        assert_eq!(fmt_num(2.2711010683240965e-14), "2.27110106832e-14");
        assert_eq!(fmt_num(1e-5), "0.00001");
        assert_eq!(fmt_num(6.02214076e23), "6.02214076e23");
        assert_eq!(fmt_num(1e12), "1e12");
        assert_eq!(fmt_num(f64::NAN), "nan");
    }

    #[test]
    fn table_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new(&["x", "label"]);
        t.push(vec![fmt_num(0.25), "hole".into()]);
        let path = dir.path().join("t.csv");
        t.write(&path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "x,label\n0.25,hole\n");
        assert_eq!(t.column("x").unwrap(), vec![0.25]);
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let svg = Plot::new("t", "x", "y")
            .line("a", vec![(0.0, 1.0), (1.0, 2.0)])
            .render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("polyline"));
    }
}
