//! Static SVG learning-curve plots: mean curves with standard-error bands,
//! grouped by the `arm` column of the metrics CSVs. Rendering is a pure
//! function of the parsed rows, so re-plotting identical CSVs is
//! bit-identical.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use losse_core::error::{LosseError, Result};
use losse_core::util::{mean, stderr};

use crate::report::{field_f64, read_csv};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 28.0;
const MARGIN_B: f64 = 52.0;
const CURVE_POINTS: usize = 100;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// What goes on the x axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Environment steps.
    Steps,
    /// Cumulative model-update wall time (joins the timing sidecars).
    WallTime,
}

/// One run's curve: x positions and y values, both monotone in x.
struct RunCurve {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl RunCurve {
    /// Last-value interpolation at `x` (curves are step functions).
    fn value_at(&self, x: f64) -> Option<f64> {
        if self.xs.is_empty() || x < self.xs[0] {
            return None;
        }
        let idx = match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i,
            Err(0) => return None,
            Err(i) => i - 1,
        };
        Some(self.ys[idx])
    }
}

fn column(header: &[String], name: &str, path: &Path) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| LosseError::Config(format!("{}: missing column {name}", path.display())))
}

/// Loads one metrics CSV into (arm, curve over steps).
fn load_metrics(path: &Path) -> Result<(String, RunCurve)> {
    let (header, rows) = read_csv(path)?;
    let arm_i = column(&header, "arm", path)?;
    let step_i = column(&header, "step", path)?;
    let ret_i = column(&header, "normalized_return", path)?;
    let mut arm = String::new();
    let mut xs = Vec::with_capacity(rows.len());
    let mut ys = Vec::with_capacity(rows.len());
    for (n, row) in rows.iter().enumerate() {
        arm = row[arm_i].clone();
        xs.push(field_f64(row, step_i, n + 2)?);
        ys.push(field_f64(row, ret_i, n + 2)?);
    }
    Ok((arm, RunCurve { xs, ys }))
}

/// Maps each metrics curve's steps onto cumulative wall time using the
/// sibling timing CSV (piecewise-linear in step).
fn load_walltime(metrics_path: &Path) -> Result<(String, RunCurve)> {
    let (arm, steps_curve) = load_metrics(metrics_path)?;
    let name = metrics_path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or_default()
        .replace("metrics_", "timing_");
    let timing_path = metrics_path.with_file_name(name);
    let (header, rows) = read_csv(&timing_path)?;
    let step_i = column(&header, "step", &timing_path)?;
    let ms_i = column(&header, "cum_update_ms", &timing_path)?;
    let mut tsteps = Vec::with_capacity(rows.len());
    let mut tms = Vec::with_capacity(rows.len());
    for (n, row) in rows.iter().enumerate() {
        tsteps.push(field_f64(row, step_i, n + 2)?);
        tms.push(field_f64(row, ms_i, n + 2)?);
    }
    let to_ms = |step: f64| -> f64 {
        if tsteps.is_empty() {
            return 0.0;
        }
        match tsteps.binary_search_by(|v| v.partial_cmp(&step).unwrap()) {
            Ok(i) => tms[i],
            Err(0) => 0.0,
            Err(i) if i == tsteps.len() => tms[i - 1],
            Err(i) => {
                let frac = (step - tsteps[i - 1]) / (tsteps[i] - tsteps[i - 1]);
                tms[i - 1] + frac * (tms[i] - tms[i - 1])
            }
        }
    };
    let xs: Vec<f64> = steps_curve.xs.iter().map(|&s| to_ms(s)).collect();
    Ok((
        arm,
        RunCurve {
            xs,
            ys: steps_curve.ys,
        },
    ))
}

/// Aggregated band for one arm.
struct Band {
    arm: String,
    xs: Vec<f64>,
    means: Vec<f64>,
    stderrs: Vec<f64>,
}

fn aggregate(groups: BTreeMap<String, Vec<RunCurve>>) -> Vec<Band> {
    let max_x = groups
        .values()
        .flatten()
        .flat_map(|c| c.xs.last().copied())
        .fold(0.0f64, f64::max);
    let grid: Vec<f64> = (1..=CURVE_POINTS)
        .map(|i| max_x * i as f64 / CURVE_POINTS as f64)
        .collect();
    groups
        .into_iter()
        .map(|(arm, curves)| {
            let mut means = Vec::with_capacity(grid.len());
            let mut errs = Vec::with_capacity(grid.len());
            let mut xs = Vec::with_capacity(grid.len());
            for &x in &grid {
                let vals: Vec<f64> = curves.iter().filter_map(|c| c.value_at(x)).collect();
                if vals.is_empty() {
                    continue;
                }
                xs.push(x);
                means.push(mean(&vals));
                errs.push(stderr(&vals));
            }
            Band {
                arm,
                xs,
                means,
                stderrs: errs,
            }
        })
        .collect()
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 1000.0 {
        format!("{:.0}", v)
    } else if v.abs() >= 10.0 {
        format!("{:.1}", v)
    } else {
        format!("{:.2}", v)
    }
}

fn render_svg(bands: &[Band], x_label: &str, y_label: &str) -> String {
    let (mut x_max, mut y_min, mut y_max) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for b in bands {
        for i in 0..b.xs.len() {
            x_max = x_max.max(b.xs[i]);
            y_min = y_min.min(b.means[i] - b.stderrs[i]);
            y_max = y_max.max(b.means[i] + b.stderrs[i]);
        }
    }
    if !y_min.is_finite() {
        y_min = 0.0;
        y_max = 1.0;
    }
    if (y_max - y_min).abs() < 1e-12 {
        y_max = y_min + 1.0;
    }
    let pad = 0.05 * (y_max - y_min);
    let (y_min, y_max) = (y_min - pad, y_max + pad);
    let x_max = if x_max > 0.0 { x_max } else { 1.0 };

    let px = |x: f64| MARGIN_L + x / x_max * (WIDTH - MARGIN_L - MARGIN_R);
    let py =
        |y: f64| HEIGHT - MARGIN_B - (y - y_min) / (y_max - y_min) * (HEIGHT - MARGIN_T - MARGIN_B);

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    );
    let _ = write!(
        svg,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    );
    // Axes.
    let _ = write!(
        svg,
        "<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>\n",
        l = MARGIN_L,
        r = WIDTH - MARGIN_R,
        t = MARGIN_T,
        b = HEIGHT - MARGIN_B
    );
    // Ticks.
    for i in 0..=5 {
        let xv = x_max * i as f64 / 5.0;
        let x = px(xv);
        let _ = write!(
            svg,
            "<line x1=\"{x:.2}\" y1=\"{b}\" x2=\"{x:.2}\" y2=\"{b2}\" stroke=\"black\"/>\n<text x=\"{x:.2}\" y=\"{ty}\" font-size=\"11\" text-anchor=\"middle\">{label}</text>\n",
            b = HEIGHT - MARGIN_B,
            b2 = HEIGHT - MARGIN_B + 5.0,
            ty = HEIGHT - MARGIN_B + 18.0,
            label = fmt_tick(xv)
        );
        let yv = y_min + (y_max - y_min) * i as f64 / 5.0;
        let y = py(yv);
        let _ = write!(
            svg,
            "<line x1=\"{l2}\" y1=\"{y:.2}\" x2=\"{l}\" y2=\"{y:.2}\" stroke=\"black\"/>\n<text x=\"{tx}\" y=\"{ty:.2}\" font-size=\"11\" text-anchor=\"end\">{label}</text>\n",
            l = MARGIN_L,
            l2 = MARGIN_L - 5.0,
            tx = MARGIN_L - 8.0,
            ty = y + 4.0,
            label = fmt_tick(yv)
        );
    }
    // Axis labels.
    let _ = write!(
        svg,
        "<text x=\"{x}\" y=\"{y}\" font-size=\"13\" text-anchor=\"middle\">{x_label}</text>\n",
        x = MARGIN_L + (WIDTH - MARGIN_L - MARGIN_R) / 2.0,
        y = HEIGHT - 12.0
    );
    let _ = write!(
        svg,
        "<text x=\"16\" y=\"{y}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {y})\">{y_label}</text>\n",
        y = MARGIN_T + (HEIGHT - MARGIN_T - MARGIN_B) / 2.0
    );
    // Bands and curves.
    for (i, band) in bands.iter().enumerate() {
        if band.xs.is_empty() {
            continue;
        }
        let color = COLORS[i % COLORS.len()];
        let mut poly = String::new();
        for k in 0..band.xs.len() {
            let _ = write!(
                poly,
                "{:.2},{:.2} ",
                px(band.xs[k]),
                py(band.means[k] + band.stderrs[k])
            );
        }
        for k in (0..band.xs.len()).rev() {
            let _ = write!(
                poly,
                "{:.2},{:.2} ",
                px(band.xs[k]),
                py(band.means[k] - band.stderrs[k])
            );
        }
        let _ = write!(
            svg,
            "<polygon points=\"{}\" fill=\"{color}\" opacity=\"0.18\"/>\n",
            poly.trim_end()
        );
        let mut line = String::new();
        for k in 0..band.xs.len() {
            let _ = write!(line, "{:.2},{:.2} ", px(band.xs[k]), py(band.means[k]));
        }
        let _ = write!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
            line.trim_end()
        );
        // Legend.
        let ly = MARGIN_T + 16.0 * i as f64 + 6.0;
        let _ = write!(
            svg,
            "<line x1=\"{x}\" y1=\"{ly}\" x2=\"{x2}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n<text x=\"{tx}\" y=\"{ty}\" font-size=\"12\">{arm}</text>\n",
            x = MARGIN_L + 10.0,
            x2 = MARGIN_L + 34.0,
            tx = MARGIN_L + 40.0,
            ty = ly + 4.0,
            arm = band.arm
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Collects the metrics CSVs to plot: explicit files, or `metrics_*.csv`
/// under a directory.
pub fn collect_inputs(dir: Option<&Path>, files: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut inputs: Vec<PathBuf> = files.to_vec();
    if let Some(dir) = dir {
        let mut found: Vec<PathBuf> = fs::read_dir(dir)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("metrics_") && n.ends_with(".csv"))
            })
            .collect();
        found.sort();
        inputs.extend(found);
    }
    if inputs.is_empty() {
        return Err(LosseError::Config(
            "no metrics CSVs to plot; pass files or --dir".into(),
        ));
    }
    Ok(inputs)
}

/// Renders the plot and returns the SVG text.
pub fn plot_curves(inputs: &[PathBuf], kind: PlotKind) -> Result<String> {
    let mut groups: BTreeMap<String, Vec<RunCurve>> = BTreeMap::new();
    for path in inputs {
        let (arm, curve) = match kind {
            PlotKind::Steps => load_metrics(path)?,
            PlotKind::WallTime => load_walltime(path)?,
        };
        groups.entry(arm).or_default().push(curve);
    }
    let bands = aggregate(groups);
    let x_label = match kind {
        PlotKind::Steps => "environment steps",
        PlotKind::WallTime => "model update wall time (ms)",
    };
    Ok(render_svg(&bands, x_label, "normalized return"))
}

pub fn plot_to_file(inputs: &[PathBuf], kind: PlotKind, out: &Path) -> Result<()> {
    let svg = plot_curves(inputs, kind)?;
    if let Some(dir) = out.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(out, svg)?;
    Ok(())
}
