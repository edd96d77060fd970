//! Report rendering: loss-vs-density curves, per-axis distance bars,
//! paired-delta charts, trajectory plots, and an aligned text table, all as
//! self-contained SVG strings.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiment::ExperimentSummary;
use crate::field::{FieldModel, PlantKind};
use crate::kinematics::ToolConfig;
use crate::planner::RowPlan;

const AXIS_COLORS: [&str; 6] = [
    "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#d62728", "#8c564b",
];

fn svg_open(w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\" \
         width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    )
}

fn text_at(x: f64, y: f64, s: &str, anchor: &str) -> String {
    format!("<text x=\"{x:.1}\" y=\"{y:.1}\" text-anchor=\"{anchor}\">{s}</text>\n")
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let span = (self.xmax - self.xmin).max(1e-12);
        self.x0 + (x - self.xmin) / span * self.w
    }

    fn py(&self, y: f64) -> f64 {
        let span = (self.ymax - self.ymin).max(1e-12);
        self.y0 + self.h - (y - self.ymin) / span * self.h
    }

    fn axes(&self, xlabel: &str, ylabel: &str) -> String {
        let mut s = format!(
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" \
             fill=\"none\" stroke=\"#444\"/>\n",
            self.x0, self.y0, self.w, self.h
        );
        for k in 0..=4 {
            let fx = self.xmin + (self.xmax - self.xmin) * k as f64 / 4.0;
            let fy = self.ymin + (self.ymax - self.ymin) * k as f64 / 4.0;
            s += &text_at(
                self.px(fx),
                self.y0 + self.h + 14.0,
                &format!("{fx:.1}"),
                "middle",
            );
            s += &text_at(self.x0 - 6.0, self.py(fy) + 4.0, &format!("{fy:.1}"), "end");
        }
        s += &text_at(
            self.x0 + self.w / 2.0,
            self.y0 + self.h + 30.0,
            xlabel,
            "middle",
        );
        s += &format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" \
             transform=\"rotate(-90 {:.1} {:.1})\">{}</text>\n",
            self.x0 - 34.0,
            self.y0 + self.h / 2.0,
            self.x0 - 34.0,
            self.y0 + self.h / 2.0,
            ylabel
        );
        s
    }
}

/// A mean with spread at one x position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub x: f64,
    pub mean: f64,
    pub std: f64,
}

/// Loss-vs-density curves, one series per planner variant, with error bars.
pub fn loss_vs_density_svg(series: &[(String, Vec<SeriesPoint>)]) -> String {
    let (w, h) = (520.0, 320.0);
    let mut svg = svg_open(w, h);
    let pts: Vec<&SeriesPoint> = series.iter().flat_map(|(_, v)| v.iter()).collect();
    if pts.is_empty() {
        svg += &text_at(w / 2.0, h / 2.0, "no data", "middle");
        return svg + "</svg>\n";
    }
    let xmax = pts.iter().map(|p| p.x).fold(0.0, f64::max);
    let ymax = pts.iter().map(|p| p.mean + p.std).fold(1.0, f64::max);
    let f = Frame {
        x0: 60.0,
        y0: 20.0,
        w: w - 90.0,
        h: h - 80.0,
        xmin: 0.0,
        xmax: xmax * 1.05,
        ymin: 0.0,
        ymax: ymax * 1.1,
    };
    svg += &f.axes("weed density (1/m^2)", "loss (%)");
    for (i, (label, points)) in series.iter().enumerate() {
        let color = AXIS_COLORS[i % AXIS_COLORS.len()];
        let path: Vec<String> = points
            .iter()
            .map(|p| format!("{:.1},{:.1}", f.px(p.x), f.py(p.mean)))
            .collect();
        svg += &format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\"/>\n",
            path.join(" ")
        );
        for p in points {
            svg += &format!(
                "<line x1=\"{0:.1}\" y1=\"{1:.1}\" x2=\"{0:.1}\" y2=\"{2:.1}\" stroke=\"{color}\"/>\n",
                f.px(p.x),
                f.py((p.mean - p.std).max(0.0)),
                f.py(p.mean + p.std)
            );
            svg += &format!(
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"2.5\" fill=\"{color}\"/>\n",
                f.px(p.x),
                f.py(p.mean)
            );
        }
        svg += &format!(
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"10\" height=\"10\" fill=\"{color}\"/>\n",
            f.x0 + 10.0,
            f.y0 + 6.0 + 16.0 * i as f64
        );
        svg += &text_at(f.x0 + 24.0, f.y0 + 15.0 + 16.0 * i as f64, label, "start");
    }
    svg + "</svg>\n"
}

/// Generic line chart over (x, y) series with a shared frame and legend.
pub fn line_chart_svg(series: &[(String, Vec<(f64, f64)>)], xlabel: &str, ylabel: &str) -> String {
    let (w, h) = (520.0, 320.0);
    let mut svg = svg_open(w, h);
    let pts: Vec<(f64, f64)> = series.iter().flat_map(|(_, v)| v.iter().copied()).collect();
    if pts.is_empty() {
        svg += &text_at(w / 2.0, h / 2.0, "no data", "middle");
        return svg + "</svg>\n";
    }
    let xmax = pts.iter().map(|p| p.0).fold(f64::MIN, f64::max);
    let xmin = pts.iter().map(|p| p.0).fold(f64::MAX, f64::min);
    let ymax = pts.iter().map(|p| p.1).fold(f64::MIN, f64::max);
    let ymin = pts.iter().map(|p| p.1).fold(f64::MAX, f64::min).min(0.0);
    let f = Frame {
        x0: 60.0,
        y0: 20.0,
        w: w - 90.0,
        h: h - 80.0,
        xmin,
        xmax: xmax + (xmax - xmin).max(1e-9) * 0.02,
        ymin,
        ymax: ymax + (ymax - ymin).max(1e-9) * 0.08,
    };
    svg += &f.axes(xlabel, ylabel);
    for (i, (label, points)) in series.iter().enumerate() {
        let color = AXIS_COLORS[i % AXIS_COLORS.len()];
        let path: Vec<String> = points
            .iter()
            .map(|p| format!("{:.1},{:.1}", f.px(p.0), f.py(p.1)))
            .collect();
        svg += &format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\"/>\n",
            path.join(" ")
        );
        svg += &format!(
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"10\" height=\"10\" fill=\"{color}\"/>\n",
            f.x0 + 10.0,
            f.y0 + 6.0 + 16.0 * i as f64
        );
        svg += &text_at(f.x0 + 24.0, f.y0 + 15.0 + 16.0 * i as f64, label, "start");
    }
    svg + "</svg>\n"
}

/// Horizontal bars of per-variant mean axis travel with spread whiskers.
pub fn distance_bars_svg(rows: &[(String, f64, f64)]) -> String {
    let (w, h) = (520.0, 60.0 + rows.len() as f64 * 28.0);
    let mut svg = svg_open(w, h);
    if rows.is_empty() {
        svg += &text_at(w / 2.0, h / 2.0, "no data", "middle");
        return svg + "</svg>\n";
    }
    let vmax = rows.iter().map(|(_, m, s)| m + s).fold(1.0, f64::max) * 1.1;
    let x0 = 150.0;
    let bar_w = w - x0 - 40.0;
    for (i, (label, mean, std)) in rows.iter().enumerate() {
        let y = 24.0 + i as f64 * 28.0;
        let len = mean / vmax * bar_w;
        let color = AXIS_COLORS[i % AXIS_COLORS.len()];
        svg += &text_at(x0 - 8.0, y + 12.0, label, "end");
        svg += &format!(
            "<rect x=\"{x0:.1}\" y=\"{y:.1}\" width=\"{len:.1}\" height=\"16\" fill=\"{color}\"/>\n"
        );
        let (w0, w1) = (
            x0 + (mean - std).max(0.0) / vmax * bar_w,
            x0 + (mean + std) / vmax * bar_w,
        );
        svg += &format!(
            "<line x1=\"{w0:.1}\" y1=\"{0:.1}\" x2=\"{w1:.1}\" y2=\"{0:.1}\" stroke=\"#333\"/>\n",
            y + 8.0
        );
        svg += &text_at(x0 + len + 6.0, y + 12.0, &format!("{mean:.2} m"), "start");
    }
    svg + "</svg>\n"
}

/// Per-density paired loss deltas (first variant minus second).
pub fn paired_delta_svg(points: &[(f64, f64)]) -> String {
    let (w, h) = (520.0, 280.0);
    let mut svg = svg_open(w, h);
    if points.is_empty() {
        svg += &text_at(w / 2.0, h / 2.0, "no data", "middle");
        return svg + "</svg>\n";
    }
    let vmax = points.iter().map(|(_, d)| d.abs()).fold(1.0, f64::max) * 1.2;
    let f = Frame {
        x0: 60.0,
        y0: 20.0,
        w: w - 90.0,
        h: h - 80.0,
        xmin: 0.0,
        xmax: points.iter().map(|(x, _)| *x).fold(0.0, f64::max) * 1.05,
        ymin: -vmax,
        ymax: vmax,
    };
    svg += &f.axes("weed density (1/m^2)", "loss delta (points)");
    svg += &format!(
        "<line x1=\"{:.1}\" y1=\"{1:.1}\" x2=\"{2:.1}\" y2=\"{1:.1}\" stroke=\"#999\" \
         stroke-dasharray=\"4 3\"/>\n",
        f.x0,
        f.py(0.0),
        f.x0 + f.w
    );
    let bw = 16.0;
    for (x, d) in points {
        let px = f.px(*x) - bw / 2.0;
        let (top, height) = if *d >= 0.0 {
            (f.py(*d), f.py(0.0) - f.py(*d))
        } else {
            (f.py(0.0), f.py(*d) - f.py(0.0))
        };
        svg += &format!(
            "<rect x=\"{px:.1}\" y=\"{top:.1}\" width=\"{bw}\" height=\"{height:.1}\" \
             fill=\"#1f77b4\"/>\n"
        );
        svg += &text_at(f.px(*x), top - 4.0, &format!("{d:.1}"), "middle");
    }
    svg + "</svg>\n"
}

/// Field scatter with the planned axis routes as colored polylines. Weeds on
/// a route will be treated; weeds off every route will not.
pub fn trajectory_svg(field: &FieldModel, plan: Option<&RowPlan>, tool: &ToolConfig) -> String {
    let length = field.spec().length;
    let width = field.spec().width;
    let scale = (900.0 / length).min(200.0);
    let (w, h) = (length * scale + 80.0, width * scale + 70.0);
    let f = Frame {
        x0: 50.0,
        y0: 20.0,
        w: length * scale,
        h: width * scale,
        xmin: 0.0,
        xmax: length,
        ymin: 0.0,
        ymax: width,
    };
    let mut svg = svg_open(w, h);
    svg += &f.axes("x (m)", "y (m)");
    for axis in 1..tool.heads {
        let y = f.py(tool.band(axis).0);
        svg += &format!(
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>\n",
            f.x0,
            f.x0 + f.w
        );
    }
    if let Some(plan) = plan {
        for axis_plan in &plan.axes {
            if axis_plan.nodes.is_empty() {
                continue;
            }
            let color = AXIS_COLORS[axis_plan.axis % AXIS_COLORS.len()];
            let mut pts = vec![format!(
                "{:.1},{:.1}",
                f.px(axis_plan.start.0),
                f.py(axis_plan.start.1)
            )];
            pts.extend(
                axis_plan
                    .nodes
                    .iter()
                    .map(|n| format!("{:.1},{:.1}", f.px(n.x), f.py(n.y))),
            );
            svg += &format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.4\"/>\n",
                pts.join(" ")
            );
        }
    }
    for p in field.plants() {
        match p.kind {
            PlantKind::Crop => {
                svg += &format!(
                    "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"4\" fill=\"#2ca02c\" \
                     fill-opacity=\"0.5\"/>\n",
                    f.px(p.x),
                    f.py(p.y)
                );
            }
            PlantKind::Weed => {
                svg += &format!(
                    "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"2.5\" fill=\"#d62728\"/>\n",
                    f.px(p.x),
                    f.py(p.y)
                );
            }
        }
    }
    svg + "</svg>\n"
}

/// Aligned text table of an experiment summary.
pub fn summary_table(summary: &ExperimentSummary) -> String {
    let mut out = String::new();
    out += &format!(
        "{:<16} {:<18} {:>6} {:>10} {:>10} {:>10} {:>9} {:>9}\n",
        "field", "variant", "runs", "loss%", "loss-std", "dist(m)", "high%", "low%"
    );
    out += &"-".repeat(94);
    out.push('\n');
    for field in &summary.fields {
        for v in &field.variants {
            out += &format!(
                "{:<16} {:<18} {:>6} {:>10.2} {:>10.2} {:>10.2} {:>9.1} {:>9.1}\n",
                field.label,
                v.variant,
                v.n,
                v.mean_loss_pct,
                v.std_loss_pct,
                v.mean_axis_distance_m,
                v.high_rate_pct,
                v.low_rate_pct
            );
        }
        for p in &field.paired {
            out += &format!(
                "{:<16} {} - {}: mean paired loss delta {:+.2} points\n",
                field.label, p.a, p.b, p.mean_delta_loss_pct
            );
        }
    }
    out
}

/// One parsed metrics CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub run_id: String,
    pub field_model: String,
    pub mode: String,
    pub biodiv: bool,
    pub seed: u64,
    pub lambda: f64,
    pub total_weeds: usize,
    pub accurate: usize,
    pub partial: usize,
    pub missed: usize,
    pub missed_planning: usize,
    pub missed_detection: usize,
    pub crop_false_hits: usize,
    pub loss_pct: f64,
    pub axis_dist_mean_m: f64,
    pub axis_dist_std_m: f64,
}

/// Parses the metrics CSV, reporting the row number on any malformed line
/// and re-checking the conservation invariant.
pub fn parse_metrics_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Csv {
        row: 0,
        message: "empty file, expected a header".to_string(),
    })?;
    if header != crate::experiment::CSV_HEADER {
        return Err(Error::Csv {
            row: 1,
            message: format!("unexpected header: {header}"),
        });
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let row_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 16 {
            return Err(Error::Csv {
                row: row_no,
                message: format!("expected 16 columns, got {}", parts.len()),
            });
        }
        let field = |k: usize| parts[k].trim();
        let num = |k: usize| -> Result<f64> {
            field(k).parse::<f64>().map_err(|e| Error::Csv {
                row: row_no,
                message: format!("column {}: {e}", k + 1),
            })
        };
        let int = |k: usize| -> Result<usize> {
            field(k).parse::<usize>().map_err(|e| Error::Csv {
                row: row_no,
                message: format!("column {}: {e}", k + 1),
            })
        };
        let row = CsvRow {
            run_id: field(0).to_string(),
            field_model: field(1).to_string(),
            mode: field(2).to_string(),
            biodiv: field(3).parse().map_err(|e| Error::Csv {
                row: row_no,
                message: format!("column 4: {e}"),
            })?,
            seed: field(4).parse().map_err(|e| Error::Csv {
                row: row_no,
                message: format!("column 5: {e}"),
            })?,
            lambda: num(5)?,
            total_weeds: int(6)?,
            accurate: int(7)?,
            partial: int(8)?,
            missed: int(9)?,
            missed_planning: int(10)?,
            missed_detection: int(11)?,
            crop_false_hits: int(12)?,
            loss_pct: num(13)?,
            axis_dist_mean_m: num(14)?,
            axis_dist_std_m: num(15)?,
        };
        if row.accurate + row.partial + row.missed != row.total_weeds {
            return Err(Error::Csv {
                row: row_no,
                message: "treatment conservation violated".to_string(),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Files written by [`render_report`] plus recomputed aggregates.
#[derive(Debug, Clone)]
pub struct ReportOutput {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
    /// (variant key, density) -> mean loss, recomputed from the CSV.
    pub mean_loss: BTreeMap<(String, String), f64>,
    /// Paired mean loss delta per density when exactly two variants exist.
    pub paired_delta: Vec<(f64, f64)>,
}

fn variant_key(row: &CsvRow) -> String {
    if row.biodiv {
        format!("{}-biodiv", row.mode)
    } else {
        row.mode.clone()
    }
}

/// Renders the standard report from a metrics CSV: loss curves, distance
/// bars, a paired-delta chart, and a text table. An empty CSV produces
/// empty plots and a warning rather than an error.
pub fn render_report(csv_text: &str, out_dir: &Path) -> Result<ReportOutput> {
    let rows = parse_metrics_csv(csv_text)?;
    std::fs::create_dir_all(out_dir)?;
    let mut warnings = Vec::new();
    if rows.is_empty() {
        warnings.push("metrics CSV holds no data rows; plots will be empty".to_string());
    }

    // Group by variant key, then by density.
    let mut by_variant: BTreeMap<String, BTreeMap<String, Vec<&CsvRow>>> = BTreeMap::new();
    for row in &rows {
        by_variant
            .entry(variant_key(row))
            .or_default()
            .entry(format!("{}", row.lambda))
            .or_default()
            .push(row);
    }

    let mut mean_loss = BTreeMap::new();
    let mut series: Vec<(String, Vec<SeriesPoint>)> = Vec::new();
    let mut dist_rows: Vec<(String, f64, f64)> = Vec::new();
    for (variant, groups) in &by_variant {
        let mut points = Vec::new();
        let mut dists = Vec::new();
        for (lambda_key, group) in groups {
            let losses: Vec<f64> = group.iter().map(|r| r.loss_pct).collect();
            let mean = losses.iter().sum::<f64>() / losses.len() as f64;
            let std = if losses.len() > 1 {
                (losses.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>()
                    / (losses.len() - 1) as f64)
                    .sqrt()
            } else {
                0.0
            };
            let lambda = group[0].lambda;
            points.push(SeriesPoint {
                x: lambda,
                mean,
                std,
            });
            mean_loss.insert((variant.clone(), lambda_key.clone()), mean);
            dists.extend(group.iter().map(|r| r.axis_dist_mean_m));
        }
        points.sort_by(|a, b| a.x.total_cmp(&b.x));
        let dmean = if dists.is_empty() {
            0.0
        } else {
            dists.iter().sum::<f64>() / dists.len() as f64
        };
        let dstd = if dists.len() > 1 {
            (dists.iter().map(|d| (d - dmean) * (d - dmean)).sum::<f64>()
                / (dists.len() - 1) as f64)
                .sqrt()
        } else {
            0.0
        };
        series.push((variant.clone(), points));
        dist_rows.push((variant.clone(), dmean, dstd));
    }

    // Paired per-seed deltas between the first two variants, when present.
    // Variant order follows first appearance in the CSV, not key order.
    let mut appearance: Vec<String> = Vec::new();
    for row in &rows {
        let key = variant_key(row);
        if !appearance.contains(&key) {
            appearance.push(key);
        }
    }
    let mut paired_delta: Vec<(f64, f64)> = Vec::new();
    if appearance.len() == 2 {
        let (a, b) = (&appearance[0], &appearance[1]);
        let mut densities: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
        densities.sort_by(f64::total_cmp);
        densities.dedup();
        for lambda in densities {
            let pick = |key: &str| -> BTreeMap<(String, u64), f64> {
                rows.iter()
                    .filter(|r| variant_key(r) == key && r.lambda == lambda)
                    .map(|r| ((r.field_model.clone(), r.seed), r.loss_pct))
                    .collect()
            };
            let la = pick(a);
            let lb = pick(b);
            let deltas: Vec<f64> = la
                .iter()
                .filter_map(|(k, v)| lb.get(k).map(|w| v - w))
                .collect();
            if !deltas.is_empty() {
                paired_delta.push((lambda, deltas.iter().sum::<f64>() / deltas.len() as f64));
            }
        }
    }

    let mut files = Vec::new();
    let mut write = |name: &str, content: &str| -> Result<()> {
        let path = out_dir.join(name);
        std::fs::write(&path, content)?;
        files.push(path);
        Ok(())
    };
    write("loss_vs_density.svg", &loss_vs_density_svg(&series))?;
    write("axis_distance.svg", &distance_bars_svg(&dist_rows))?;
    write("paired_delta.svg", &paired_delta_svg(&paired_delta))?;

    let mut table = String::new();
    table += &format!(
        "{:<12} {:<18} {:>6} {:>10} {:>12}\n",
        "density", "variant", "runs", "loss%", "dist(m)"
    );
    table += &"-".repeat(64);
    table.push('\n');
    for (variant, groups) in &by_variant {
        let mut ordered: Vec<(&String, &Vec<&CsvRow>)> = groups.iter().collect();
        ordered.sort_by(|a, b| a.1[0].lambda.total_cmp(&b.1[0].lambda));
        for (lambda_key, group) in ordered {
            let mean = mean_loss[&(variant.clone(), lambda_key.clone())];
            let dist = group.iter().map(|r| r.axis_dist_mean_m).sum::<f64>() / group.len() as f64;
            table += &format!(
                "{:<12} {:<18} {:>6} {:>10.2} {:>12.2}\n",
                lambda_key,
                variant,
                group.len(),
                mean,
                dist
            );
        }
    }
    write("report.txt", &table)?;

    Ok(ReportOutput {
        files,
        warnings,
        mean_loss,
        paired_delta,
    })
}
