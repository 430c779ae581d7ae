//! CSV and static SVG output for sweep tables.
//!
//! Charts are plain SVG 1.1 with a fixed 720x420 canvas, a plot area inset
//! by 70/170/40/50 px (left/right/top/bottom), the legend to the right of
//! the plot, and series colors taken in order from [`PALETTE`].

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};

use crate::experiment::{ExperimentError, SweepTable};

pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Tick step of the form {1, 2, 5}·10^k giving roughly `target` intervals.
fn nice_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let m = if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

struct Axis {
    lo: f64,
    hi: f64,
    step: f64,
}

impl Axis {
    fn covering(lo: f64, hi: f64) -> Self {
        let (mut lo, mut hi) = (lo, hi);
        if !(hi > lo) {
            let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.5 };
            lo -= pad;
            hi += pad;
        }
        let step = nice_step(hi - lo, 5.0);
        Self {
            lo: (lo / step).floor() * step,
            hi: (hi / step).ceil() * step,
            step,
        }
    }

    fn ticks(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step).round() as usize;
        (0..=n).map(|i| self.lo + i as f64 * self.step).collect()
    }
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 { 0 } else { (-step.log10()).ceil() as usize };
    let s = format!("{:.*}", decimals, v);
    if s.starts_with("-0") && s.trim_start_matches(['-', '0', '.']).is_empty() {
        s[1..].to_string()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x: Axis,
    y: Axis,
    svg: String,
}

impl Frame {
    fn new(title: &str, x_label: &str, y_label: &str, x: Axis, y: Axis) -> Self {
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
            escape(title)
        );
        let mut f = Self { x, y, svg };
        f.axes(x_label, y_label);
        f
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.lo) / (self.x.hi - self.x.lo) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.lo) / (self.y.hi - self.y.lo) * (HEIGHT - TOP - BOTTOM)
    }

    fn axes(&mut self, x_label: &str, y_label: &str) {
        let (x0, x1) = (LEFT, WIDTH - RIGHT);
        let (y0, y1) = (HEIGHT - BOTTOM, TOP);
        let mut s = String::new();
        for t in self.y.ticks() {
            let y = self.py(t);
            let _ = writeln!(s, r##"<line x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="#dddddd"/>"##);
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                x0 - 6.0,
                y + 4.0,
                tick_label(t, self.y.step)
            );
        }
        for t in self.x.ticks() {
            let x = self.px(t);
            let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333333"/>"##, y0 + 5.0);
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                y0 + 18.0,
                tick_label(t, self.x.step)
            );
        }
        let _ = writeln!(
            s,
            r##"<polyline points="{x0:.2},{y1:.2} {x0:.2},{y0:.2} {x1:.2},{y0:.2}" fill="none" stroke="#333333"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 12.0,
            escape(x_label)
        );
        let _ = writeln!(
            s,
            r#"<text transform="translate(16,{:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
            (y0 + y1) / 2.0,
            escape(y_label)
        );
        self.svg.push_str(&s);
    }

    fn legend(&mut self, names: &[&str]) {
        let x = WIDTH - RIGHT + 16.0;
        for (i, name) in names.iter().enumerate() {
            let y = TOP + 10.0 + 20.0 * i as f64;
            let _ = writeln!(
                self.svg,
                r#"<rect x="{x:.2}" y="{:.2}" width="12" height="12" fill="{}"/>"#,
                y - 10.0,
                PALETTE[i % PALETTE.len()]
            );
            let _ = writeln!(self.svg, r#"<text x="{:.2}" y="{y:.2}">{}</text>"#, x + 18.0, escape(name));
        }
    }

    fn finish(mut self) -> String {
        self.svg.push_str("</svg>\n");
        self.svg
    }
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Line chart with one polyline and point markers per series.
pub fn line_chart_svg(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let all = || series.iter().flat_map(|s| s.points.iter());
    let (xlo, xhi) = extent(all().map(|p| p.0));
    let (ylo, yhi) = extent(all().map(|p| p.1));
    let (xlo, xhi, ylo, yhi) = if xlo.is_finite() { (xlo, xhi, ylo, yhi) } else { (0.0, 1.0, 0.0, 1.0) };
    let mut f = Frame::new(title, x_label, y_label, Axis::covering(xlo, xhi), Axis::covering(ylo, yhi));
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
            .collect();
        let _ = writeln!(
            f.svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        for &(x, y) in &s.points {
            let _ = writeln!(
                f.svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                f.px(x),
                f.py(y)
            );
        }
    }
    let names: Vec<&str> = series.iter().map(|s| s.name.as_str()).collect();
    f.legend(&names);
    f.finish()
}

/// Stacked area chart: layer `i` fills between the cumulative sums of
/// layers `0..i` and `0..=i`.
pub fn stacked_area_svg(title: &str, x_label: &str, y_label: &str, xs: &[f64], layers: &[(String, Vec<f64>)]) -> String {
    let mut cum = vec![vec![0.0; xs.len()]];
    for (_, vals) in layers {
        let prev = cum.last().unwrap().clone();
        cum.push(prev.iter().zip(vals).map(|(a, b)| a + b).collect());
    }
    let (xlo, xhi) = if xs.is_empty() { (0.0, 1.0) } else { extent(xs.iter().copied()) };
    let (ylo, yhi) = extent(cum.iter().flatten().copied());
    let (ylo, yhi) = if ylo.is_finite() { (ylo, yhi) } else { (0.0, 1.0) };
    let mut f = Frame::new(title, x_label, y_label, Axis::covering(xlo, xhi), Axis::covering(ylo, yhi));
    for i in 0..layers.len() {
        let color = PALETTE[i % PALETTE.len()];
        let mut pts: Vec<String> = xs
            .iter()
            .zip(&cum[i + 1])
            .map(|(&x, &y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
            .collect();
        pts.extend(
            xs.iter()
                .zip(&cum[i])
                .rev()
                .map(|(&x, &y)| format!("{:.2},{:.2}", f.px(x), f.py(y))),
        );
        let _ = writeln!(
            f.svg,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.8" stroke="{color}"/>"#,
            pts.join(" ")
        );
    }
    let names: Vec<&str> = layers.iter().map(|(n, _)| n.as_str()).collect();
    f.legend(&names);
    f.finish()
}

/// Root allocation per optimal grid point of `mode`: `(value, fractions)`
/// with cash first.
pub fn allocation_columns(table: &SweepTable, mode: &str) -> Vec<(f64, Vec<f64>)> {
    table
        .rows_for(mode)
        .filter_map(|r| r.fractions.clone().map(|f| (r.value, f)))
        .collect()
}

fn series(table: &SweepTable, mode: &str, get: impl Fn(&crate::experiment::SweepRow) -> Option<f64>) -> Series {
    Series {
        name: mode.to_string(),
        points: table.rows_for(mode).filter_map(|r| get(r).map(|v| (r.value, v))).collect(),
    }
}

fn write_file(path: &Path, text: &str) -> io::Result<()> {
    std::fs::write(path, text)
}

/// Writes `sweep.csv`, `timings.csv` and the chart set into `dir`, creating
/// it if needed. Returns the paths written, in order.
pub fn emit_outputs(table: &SweepTable, dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let csv_path = dir.join("sweep.csv");
    table.write_csv(BufWriter::new(File::create(&csv_path)?))?;
    written.push(csv_path);
    let timings = dir.join("timings.csv");
    table.write_timings(BufWriter::new(File::create(&timings)?))?;
    written.push(timings);

    let var = table.variable.as_str();
    let mut svg = |name: String, text: String| -> Result<(), ExperimentError> {
        let p = dir.join(name);
        write_file(&p, &text)?;
        written.push(p);
        Ok(())
    };
    let modes = table.modes();
    for mode in &modes {
        svg(
            format!("cr0_{mode}.svg"),
            line_chart_svg(&format!("Initial contribution rate ({mode})"), var, "cr0", &[series(table, mode, |r| r.cr0)]),
        )?;
        let rows: Vec<_> = table.rows_for(mode).filter(|r| r.is_optimal()).collect();
        let xs: Vec<f64> = rows.iter().map(|r| r.value).collect();
        svg(
            format!("cost_split_{mode}.svg"),
            stacked_area_svg(
                &format!("Expected discounted cost ({mode})"),
                var,
                "cost",
                &xs,
                &[
                    ("regular".into(), rows.iter().map(|r| r.regular_cost.unwrap_or(0.0)).collect()),
                    ("remedial".into(), rows.iter().map(|r| r.remedial_cost.unwrap_or(0.0)).collect()),
                ],
            ),
        )?;
        let cols = allocation_columns(table, mode);
        let mut names = vec!["cash".to_string()];
        names.extend(table.asset_names.iter().cloned());
        let layers: Vec<(String, Vec<f64>)> = names
            .into_iter()
            .enumerate()
            .map(|(k, n)| (n, cols.iter().map(|(_, f)| f[k]).collect()))
            .collect();
        let xs: Vec<f64> = cols.iter().map(|c| c.0).collect();
        svg(
            format!("allocation_{mode}.svg"),
            stacked_area_svg(&format!("Initial allocation ({mode})"), var, "fraction of total asset", &xs, &layers),
        )?;
    }
    if modes.len() > 1 {
        let all = |get: fn(&crate::experiment::SweepRow) -> Option<f64>| -> Vec<Series> {
            modes.iter().map(|m| series(table, m, get)).collect()
        };
        svg(
            "cost_compare.svg".into(),
            line_chart_svg("Total expected cost by mode", var, "cost", &all(|r| r.total_cost)),
        )?;
        svg(
            "cr0_compare.svg".into(),
            line_chart_svg("Initial contribution rate by mode", var, "cr0", &all(|r| r.cr0)),
        )?;
    }
    Ok(written)
}
