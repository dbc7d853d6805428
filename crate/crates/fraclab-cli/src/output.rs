//! Deterministic emission: CSV with a self-describing header, JSON with
//! floats rounded to 12 significant digits, and native SVG plots.

use std::fs;
use std::io::Write;
use std::path::Path;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Round to 12 significant digits so reports are byte-identical across runs.
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let digits = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(11 - digits);
    (x * scale).round() / scale
}

pub fn json_number(x: f64) -> serde_json::Value {
    let r = sig12(x);
    if r.is_finite() {
        serde_json::json!(r)
    } else {
        serde_json::json!(r.to_string())
    }
}

/// Write a CSV file with a `# fraclab ...` provenance line, a header row and
/// formatted float rows.
pub fn write_csv(
    path: &Path,
    description: &str,
    columns: &[&str],
    rows: impl Iterator<Item = Vec<f64>>,
) -> std::io::Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# fraclab {TOOL_VERSION} | {description}\n"));
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{:.12e}", v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(path, out)
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> std::io::Result<()> {
    let mut file = fs::File::create(path)?;
    let text = serde_json::to_string_pretty(value).expect("serializable");
    file.write_all(text.as_bytes())?;
    file.write_all(b"\n")
}

fn svg_header(width: f64, height: f64, title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"12\" y=\"20\" font-family=\"monospace\" font-size=\"13\">{title}</text>\n"
    )
}

/// Simple multi-series line plot.
pub fn svg_line_plot(
    path: &Path,
    title: &str,
    xs: &[f64],
    series: &[(&str, &[f64])],
) -> std::io::Result<()> {
    let (w, h) = (760.0, 420.0);
    let (ml, mr, mt, mb) = (60.0, 20.0, 40.0, 40.0);
    let mut svg = svg_header(w, h, title);
    let xmin = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let xmax = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for (_, ys) in series {
        for &y in ys.iter() {
            ymin = ymin.min(y);
            ymax = ymax.max(y);
        }
    }
    if !(ymax > ymin) {
        ymax = ymin + 1.0;
    }
    let sx = |x: f64| ml + (x - xmin) / (xmax - xmin) * (w - ml - mr);
    let sy = |y: f64| h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb);
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#888\"/>\n",
        h - mb,
        w - mr,
        h - mb
    ));
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"#888\"/>\n",
        h - mb
    ));
    svg.push_str(&format!(
        "<text x=\"{ml}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\">{:.3} .. {:.3}</text>\n",
        h - 8.0,
        xmin,
        xmax
    ));
    svg.push_str(&format!(
        "<text x=\"4\" y=\"{mt}\" font-family=\"monospace\" font-size=\"11\">{:.3e}</text>\n",
        ymax
    ));
    svg.push_str(&format!(
        "<text x=\"4\" y=\"{}\" font-family=\"monospace\" font-size=\"11\">{:.3e}</text>\n",
        h - mb,
        ymin
    ));
    for (k, (name, ys)) in series.iter().enumerate() {
        let color = colors[k % colors.len()];
        let pts: Vec<String> = xs
            .iter()
            .zip(ys.iter())
            .map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.4\" points=\"{}\"/>\n",
            pts.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" fill=\"{color}\">{name}</text>\n",
            w - mr - 150.0,
            mt + 14.0 * k as f64
        ));
    }
    svg.push_str("</svg>\n");
    fs::write(path, svg)
}

/// Diverging blue-white-red heatmap of a field given row-major values.
pub fn svg_heatmap(
    path: &Path,
    title: &str,
    xs: &[f64],
    ts: &[f64],
    rows: &[Vec<f64>],
) -> std::io::Result<()> {
    let (w, h) = (820.0, 520.0);
    let (ml, mr, mt, mb) = (60.0, 20.0, 40.0, 40.0);
    let mut svg = svg_header(w, h, title);
    let stride_x = (xs.len() / 360).max(1);
    let stride_t = (ts.len() / 240).max(1);
    let mut vmax = 0.0f64;
    for row in rows {
        for v in row {
            vmax = vmax.max(v.abs());
        }
    }
    if vmax == 0.0 {
        vmax = 1.0;
    }
    let nxs = xs.len().div_ceil(stride_x);
    let nts = ts.len().div_ceil(stride_t);
    let cw = (w - ml - mr) / nxs as f64;
    let ch = (h - mt - mb) / nts as f64;
    for (jj, j) in (0..ts.len()).step_by(stride_t).enumerate() {
        for (ii, i) in (0..xs.len()).step_by(stride_x).enumerate() {
            let v = rows[j][i] / vmax;
            let (r, g, b) = if v >= 0.0 {
                let t = v.min(1.0);
                (255.0, 255.0 * (1.0 - t), 255.0 * (1.0 - t))
            } else {
                let t = (-v).min(1.0);
                (255.0 * (1.0 - t), 255.0 * (1.0 - t), 255.0)
            };
            let x = ml + ii as f64 * cw;
            // t increases upward
            let y = h - mb - (jj + 1) as f64 * ch;
            svg.push_str(&format!(
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"rgb({},{},{})\"/>\n",
                cw + 0.5,
                ch + 0.5,
                r as u8,
                g as u8,
                b as u8
            ));
        }
    }
    svg.push_str(&format!(
        "<text x=\"{ml}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\">x: {:.2} .. {:.2}, t: {:.3} .. {:.3}, max |W| = {:.3e}</text>\n",
        h - 8.0,
        xs.first().unwrap_or(&0.0),
        xs.last().unwrap_or(&0.0),
        ts.first().unwrap_or(&0.0),
        ts.last().unwrap_or(&0.0),
        vmax
    ));
    svg.push_str("</svg>\n");
    fs::write(path, svg)
}
