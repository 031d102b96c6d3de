//! Self-contained SVG scatter plots with a companion `x,y,label` CSV.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{Projection2D, ProjectionError};

pub const SCATTER_CSV_HEADER: &str = "x,y,label";

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 540.0;
const MARGIN: f64 = 40.0;
const LEGEND_W: f64 = 110.0;

/// One color per BIRADS category 1..=6.
const PALETTE: [&str; 6] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"];
const UNLABELED: &str = "#4c72b0";

fn color(label: u8) -> &'static str {
    PALETTE.get(usize::from(label).wrapping_sub(1)).copied().unwrap_or("#777777")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn svg(proj: &Projection2D, labels: Option<&[u8]>, title: &str) -> String {
    let plot_w = WIDTH - 2.0 * MARGIN - LEGEND_W;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &[x, y] in &proj.coords {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let span = |lo: f64, hi: f64| if hi > lo { hi - lo } else { 1.0 };
    let (sx, sy) = (plot_w / span(x0, x1), plot_h / span(y0, y1));

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        MARGIN + plot_w / 2.0,
        MARGIN / 2.0 + 5.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#333333"/>"##
    );
    let _ = writeln!(out, r#"<g class="points">"#);
    for (i, &[x, y]) in proj.coords.iter().enumerate() {
        let cx = MARGIN + (x - x0) * sx;
        let cy = MARGIN + plot_h - (y - y0) * sy;
        let fill = labels.map_or(UNLABELED, |l| color(l[i]));
        let _ = writeln!(out, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="3" fill="{fill}" fill-opacity="0.8"/>"#);
    }
    let _ = writeln!(out, "</g>");

    if let Some(labels) = labels {
        let present: BTreeSet<u8> = labels.iter().copied().collect();
        let _ = writeln!(out, r#"<g class="legend">"#);
        let lx = WIDTH - MARGIN - LEGEND_W + 15.0;
        for (row, label) in present.iter().enumerate() {
            let ly = MARGIN + 10.0 + 20.0 * row as f64;
            let _ = writeln!(
                out,
                r#"<rect x="{lx}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}" font-family="sans-serif" font-size="12">BIRADS {label}</text>"#,
                ly - 9.0,
                color(*label),
                lx + 16.0,
                ly
            );
        }
        let _ = writeln!(out, "</g>");
    }
    out.push_str("</svg>\n");
    out
}

/// Writes the SVG scatter and the `x,y,label` CSV (coordinates to 6 decimal
/// places; the label column is empty when `labels` is `None`).
pub fn emit_scatter<W1: Write, W2: Write>(
    proj: &Projection2D,
    labels: Option<&[u8]>,
    title: &str,
    mut svg_sink: W1,
    mut csv_sink: W2,
) -> Result<(), ProjectionError> {
    if let Some(l) = labels {
        if l.len() != proj.len() {
            return Err(ProjectionError::Misaligned { coords: proj.len(), labels: l.len() });
        }
    }
    svg_sink.write_all(svg(proj, labels, title).as_bytes())?;
    svg_sink.flush()?;

    writeln!(csv_sink, "{SCATTER_CSV_HEADER}")?;
    for (i, [x, y]) in proj.coords.iter().enumerate() {
        match labels {
            Some(l) => writeln!(csv_sink, "{x:.6},{y:.6},{}", l[i])?,
            None => writeln!(csv_sink, "{x:.6},{y:.6},")?,
        }
    }
    csv_sink.flush()?;
    Ok(())
}

/// Writes `<dir>/<stem>.svg` and `<dir>/<stem>.csv`, returning both paths.
pub fn write_scatter_files(
    proj: &Projection2D,
    labels: Option<&[u8]>,
    title: &str,
    dir: &Path,
    stem: &str,
) -> Result<(PathBuf, PathBuf), ProjectionError> {
    let svg_path = dir.join(format!("{stem}.svg"));
    let csv_path = dir.join(format!("{stem}.csv"));
    emit_scatter(
        proj,
        labels,
        title,
        BufWriter::new(File::create(&svg_path)?),
        BufWriter::new(File::create(&csv_path)?),
    )?;
    Ok((svg_path, csv_path))
}

/// `iter,kl` rows, one per optimization step.
pub fn write_kl_trace<W: Write>(proj: &Projection2D, mut sink: W) -> Result<(), ProjectionError> {
    writeln!(sink, "iter,kl")?;
    for (i, kl) in proj.kl_trace.iter().enumerate() {
        writeln!(sink, "{i},{kl:.9}")?;
    }
    sink.flush()?;
    Ok(())
}
