//! Deterministic SVG renderings of the report: the mAP versus minimum
//! uncertainty error scatter, and the spatial-uncertainty spread of
//! high- versus low-accuracy observations.

use crate::error::{Error, Result};
use crate::grid::GridCell;
use crate::io::ReportRow;
use crate::metrics::{gt_iou, GroundTruthObject};
use crate::model::SampleSet;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

struct Axes {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Axes {
    fn of(points: impl Iterator<Item = (f64, f64)>) -> Axes {
        let mut a = Axes {
            x_min: f64::INFINITY,
            x_max: f64::NEG_INFINITY,
            y_min: f64::INFINITY,
            y_max: f64::NEG_INFINITY,
        };
        for (x, y) in points {
            a.x_min = a.x_min.min(x);
            a.x_max = a.x_max.max(x);
            a.y_min = a.y_min.min(y);
            a.y_max = a.y_max.max(y);
        }
        // pad degenerate ranges so single points render mid-plot
        if !(a.x_min < a.x_max) {
            a.x_min -= 0.5;
            a.x_max += 0.5;
        }
        if !(a.y_min < a.y_max) {
            a.y_min -= 0.5;
            a.y_max += 0.5;
        }
        a
    }

    fn x(&self, v: f64) -> f64 {
        MARGIN + (v - self.x_min) / (self.x_max - self.x_min) * (WIDTH - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN - (v - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn svg_header(title: &str) -> String {
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" ",
            "viewBox=\"0 0 {w} {h}\">\n",
            "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<text x=\"{tx}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" ",
            "text-anchor=\"middle\">{title}</text>\n"
        ),
        w = WIDTH,
        h = HEIGHT,
        tx = WIDTH / 2.0,
        title = title
    )
}

fn axis_frame(out: &mut String, axes: &Axes, x_label: &str, y_label: &str) {
    let (x0, y0) = (MARGIN, HEIGHT - MARGIN);
    let (x1, y1) = (WIDTH - MARGIN, MARGIN);
    write!(
        out,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n\
         <text x=\"{lx}\" y=\"{ly}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{x_label}</text>\n\
         <text x=\"16\" y=\"{cy}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {cy})\">{y_label}</text>\n",
        lx = WIDTH / 2.0,
        ly = HEIGHT - 16.0,
        cy = HEIGHT / 2.0,
    )
    .unwrap();
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let vx = axes.x_min + f * (axes.x_max - axes.x_min);
        let vy = axes.y_min + f * (axes.y_max - axes.y_min);
        let px = axes.x(vx);
        let py = axes.y(vy);
        write!(
            out,
            "<line x1=\"{px:.2}\" y1=\"{y0}\" x2=\"{px:.2}\" y2=\"{y0b}\" stroke=\"black\"/>\n\
             <text x=\"{px:.2}\" y=\"{ty}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">{vx:.3}</text>\n\
             <line x1=\"{x0}\" y1=\"{py:.2}\" x2=\"{x0b}\" y2=\"{py:.2}\" stroke=\"black\"/>\n\
             <text x=\"{tx}\" y=\"{pyt:.2}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{vy:.3}</text>\n",
            y0 = HEIGHT - MARGIN,
            y0b = HEIGHT - MARGIN + 5.0,
            ty = HEIGHT - MARGIN + 18.0,
            x0 = MARGIN,
            x0b = MARGIN - 5.0,
            tx = MARGIN - 8.0,
            pyt = py + 3.0,
        )
        .unwrap();
    }
}

fn method_color(method: &str) -> &'static str {
    match method {
        "standard" => "#444444",
        "bsas-baseline" => "#888888",
        "bsas" => "#d62728",
        "bsas-excl" => "#1f77b4",
        "hungarian" => "#2ca02c",
        "hdbscan" => "#9467bd",
        _ => "#000000",
    }
}

/// Scatter of detection performance against uncertainty effectiveness: one
/// point per report row, minimum uncertainty error on the x-axis and mAP on
/// the y-axis, so the best methods sit in the top-left corner.
pub fn scatter_svg(rows: &[ReportRow]) -> String {
    let axes = Axes::of(rows.iter().map(|r| (r.ue_min, r.map)));
    let mut out = svg_header("Detection performance vs uncertainty effectiveness");
    axis_frame(&mut out, &axes, "minimum uncertainty error", "mAP");
    for row in rows {
        let cx = axes.x(row.ue_min);
        let cy = axes.y(row.map);
        let color = method_color(&row.method);
        let label = match row.theta {
            Some(t) => format!("{} {} {t:.2}", row.method, row.affinity),
            None => format!("{} {}", row.method, row.affinity),
        };
        write!(
            out,
            "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"4\" fill=\"{color}\" fill-opacity=\"0.8\">\
             <title>{label}: ue={ue:.4} map={map:.4}</title></circle>\n",
            ue = row.ue_min,
            map = row.map,
        )
        .unwrap();
    }
    let mut seen: Vec<&str> = Vec::new();
    for row in rows {
        if !seen.contains(&row.method.as_str()) {
            seen.push(row.method.as_str());
        }
    }
    for (i, method) in seen.iter().enumerate() {
        let y = MARGIN + 14.0 * i as f64;
        write!(
            out,
            "<circle cx=\"{x}\" cy=\"{y:.2}\" r=\"4\" fill=\"{c}\"/>\
             <text x=\"{tx}\" y=\"{ty:.2}\" font-family=\"sans-serif\" font-size=\"10\">{method}</text>\n",
            x = WIDTH - MARGIN + 10.0,
            c = method_color(method),
            tx = WIDTH - MARGIN + 18.0,
            ty = y + 3.0,
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

/// Spatial uncertainty samples of one method, split by localization
/// accuracy against the ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialSpread {
    pub method_label: String,
    /// Total variance of observations with GT-IoU >= 0.7.
    pub high_accuracy: Vec<f64>,
    /// Total variance of observations with GT-IoU <= 0.3.
    pub low_accuracy: Vec<f64>,
}

/// Cluster the corpus with each given cell and bucket observation spatial
/// variances by localization accuracy (GT-IoU at least 0.7 versus at most
/// 0.3). Open-set images have no same-class objects, so their observations
/// land in the low-accuracy bucket.
pub fn collect_spatial_spread(
    sets: &[SampleSet],
    gts: &[GroundTruthObject],
    cells: &[GridCell],
) -> Vec<SpatialSpread> {
    let mut gts_by_image: HashMap<&str, Vec<GroundTruthObject>> = HashMap::new();
    for gt in gts {
        gts_by_image.entry(gt.image_id.as_str()).or_default().push(gt.clone());
    }
    cells
        .iter()
        .map(|cell| {
            let mut spread = SpatialSpread {
                method_label: cell.label(),
                high_accuracy: Vec::new(),
                low_accuracy: Vec::new(),
            };
            for set in sets {
                let empty = Vec::new();
                let image_gts = gts_by_image.get(set.image_id.as_str()).unwrap_or(&empty);
                for obs in cell.observations(set) {
                    let Some(variance) = obs.spatial_variance else { continue };
                    let accuracy = gt_iou(&obs, image_gts);
                    if accuracy >= 0.7 {
                        spread.high_accuracy.push(variance);
                    } else if accuracy <= 0.3 {
                        spread.low_accuracy.push(variance);
                    }
                }
            }
            spread
        })
        .collect()
}

/// Strip plot of spatial variances per method: high-accuracy observations
/// on the upper band, low-accuracy on the lower band, with mean markers.
pub fn spatial_svg(spreads: &[SpatialSpread]) -> String {
    let all_values = spreads
        .iter()
        .flat_map(|s| s.high_accuracy.iter().chain(&s.low_accuracy))
        .copied();
    let max_v = all_values.fold(0.0f64, f64::max).max(1e-9);
    let axes = Axes {
        x_min: 0.0,
        x_max: max_v,
        y_min: 0.0,
        y_max: 1.0,
    };
    let mut out = svg_header("Spatial uncertainty vs localization accuracy");
    axis_frame(&mut out, &axes, "total variance (px^2)", "");

    let band_height = (HEIGHT - 2.0 * MARGIN) / spreads.len().max(1) as f64;
    for (i, spread) in spreads.iter().enumerate() {
        let base = MARGIN + band_height * i as f64;
        let y_high = base + band_height * 0.35;
        let y_low = base + band_height * 0.7;
        write!(
            out,
            "<text x=\"{x}\" y=\"{y:.2}\" font-family=\"sans-serif\" font-size=\"10\">{label}</text>\n",
            x = MARGIN + 4.0,
            y = base + 12.0,
            label = spread.method_label,
        )
        .unwrap();
        let mut draw = |values: &[f64], y: f64, color: &str, tag: &str| {
            for &v in values {
                write!(
                    out,
                    "<circle cx=\"{cx:.2}\" cy=\"{y:.2}\" r=\"2\" fill=\"{color}\" fill-opacity=\"0.45\"/>\n",
                    cx = axes.x(v),
                )
                .unwrap();
            }
            if !values.is_empty() {
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                write!(
                    out,
                    "<line x1=\"{mx:.2}\" y1=\"{y1:.2}\" x2=\"{mx:.2}\" y2=\"{y2:.2}\" stroke=\"{color}\" stroke-width=\"2\">\
                     <title>{tag} mean {mean:.2}</title></line>\n",
                    mx = axes.x(mean),
                    y1 = y - 7.0,
                    y2 = y + 7.0,
                )
                .unwrap();
            }
        };
        draw(&spread.high_accuracy, y_high, "#1f77b4", "high accuracy");
        draw(&spread.low_accuracy, y_low, "#d62728", "low accuracy");
    }
    // legend
    write!(
        out,
        "<circle cx=\"{x}\" cy=\"40\" r=\"3\" fill=\"#1f77b4\"/>\
         <text x=\"{tx}\" y=\"43\" font-family=\"sans-serif\" font-size=\"10\">GT-IoU &#8805; 0.7</text>\n\
         <circle cx=\"{x}\" cy=\"54\" r=\"3\" fill=\"#d62728\"/>\
         <text x=\"{tx}\" y=\"57\" font-family=\"sans-serif\" font-size=\"10\">GT-IoU &#8804; 0.3</text>\n",
        x = WIDTH - 150.0,
        tx = WIDTH - 142.0,
    )
    .unwrap();
    out.push_str("</svg>\n");
    out
}

/// Write both figures to `out_dir` and return the created paths.
pub fn emit_plots(
    rows: &[ReportRow],
    spreads: &[SpatialSpread],
    out_dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    let scatter_path = dir.join("map_vs_uncertainty_error.svg");
    std::fs::write(&scatter_path, scatter_svg(rows)).map_err(|e| Error::io(&scatter_path, e))?;
    written.push(scatter_path);

    if !spreads.is_empty() {
        let spread_path = dir.join("spatial_variance_by_accuracy.svg");
        std::fs::write(&spread_path, spatial_svg(spreads)).map_err(|e| Error::io(&spread_path, e))?;
        written.push(spread_path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(ue: f64, map: f64) -> ReportRow {
        ReportRow {
            method: "bsas".into(),
            affinity: "iou".into(),
            theta: Some(0.9),
            dataset_regimes: "all".into(),
            uncertainty_kind: "entropy".into(),
            map,
            ue_min: ue,
            delta_star: 0.5,
            auroc: 0.9,
            aupr_in: 0.9,
            aupr_out: 0.9,
            n_correct: 5,
            n_closed_err: 1,
            n_open_err: 2,
        }
    }

    #[test]
    fn single_point_scatter_is_valid_svg() {
        let svg = scatter_svg(&[row(0.2, 0.8)]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert!(svg.contains("<circle"));
    }

    #[test]
    fn axes_cover_all_points() {
        let rows = vec![row(0.05, 0.3), row(0.45, 0.9)];
        let svg = scatter_svg(&rows);
        // tick labels include the extremes of the data range
        assert!(svg.contains("0.050"));
        assert!(svg.contains("0.450"));
        assert!(svg.contains("0.300"));
        assert!(svg.contains("0.900"));
    }

    #[test]
    fn plots_are_deterministic() {
        let rows = vec![row(0.1, 0.5), row(0.3, 0.7)];
        assert_eq!(scatter_svg(&rows), scatter_svg(&rows));
        let spreads = vec![SpatialSpread {
            method_label: "bsas iou 0.95".into(),
            high_accuracy: vec![1.0, 2.0],
            low_accuracy: vec![8.0, 9.0],
        }];
        assert_eq!(spatial_svg(&spreads), spatial_svg(&spreads));
    }

    #[test]
    fn emit_plots_writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let spreads = vec![SpatialSpread {
            method_label: "bsas iou 0.95".into(),
            high_accuracy: vec![1.0],
            low_accuracy: vec![5.0],
        }];
        let paths = emit_plots(&[row(0.2, 0.6)], &spreads, dir.path()).unwrap();
        assert_eq!(paths.len(), 2);
        for p in paths {
            assert!(p.exists());
            let text = std::fs::read_to_string(p).unwrap();
            assert!(text.contains("</svg>"));
        }
    }
}
