//! CSV and SVG writers. Floats are written with 17 significant digits.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::{BBox, Vec2};
use crate::stats::Histogram;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

/// One row per value: its 1-based index `n`, the value, the gap to the next
/// value on the circle and the gap scaled by the number of values. Rows are
/// in circular order.
pub fn write_gaps_csv<W: Write>(out: W, values: &[f64]) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && **v < 1.0)) {
        return Err(Error::pre(format!("value {v} outside [0, 1)")));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let n = values.len() as f64;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "xi", "gap", "scaled_gap"]).map_err(csv_err)?;
    for (k, &i) in order.iter().enumerate() {
        let next = match order.get(k + 1) {
            Some(&j) => values[j],
            None => 1.0 + values[order[0]],
        };
        let gap = next - values[i];
        w.write_record([
            (i + 1).to_string(),
            fmt_f64(values[i]),
            fmt_f64(gap),
            fmt_f64(gap * n),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Rows `replica,region_id,count`.
pub fn write_counts_csv<W: Write>(out: W, rows: &[(u64, usize, u64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["replica", "region_id", "count"]).map_err(csv_err)?;
    for (r, id, c) in rows {
        w.write_record([r.to_string(), id.to_string(), c.to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Rows `replica,x,y`.
pub fn write_points_csv<W: Write>(out: W, rows: &[(u64, Vec2)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["replica", "x", "y"]).map_err(csv_err)?;
    for (r, p) in rows {
        w.write_record([r.to_string(), fmt_f64(p.x), fmt_f64(p.y)])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads one numeric column of a CSV file with a header row.
pub fn read_csv_column<R: std::io::Read>(input: R, column: &str) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(csv_err)?.clone();
    let idx = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Error::Parse(format!("no column `{column}`")))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let field = rec.get(idx).unwrap_or("");
        out.push(
            field
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("`{field}`: {e}")))?,
        );
    }
    Ok(out)
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 50.0;

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="30" font-family="sans-serif" font-size="18" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Bars of the histogram's density over its binned range.
pub fn histogram_svg(h: &Histogram, title: &str) -> String {
    let mut s = svg_open(title);
    let dens = h.density();
    let top = dens.iter().cloned().fold(0.0_f64, f64::max).max(1e-12);
    let (lo, hi) = (h.bin_edges[0], *h.bin_edges.last().expect("edges"));
    let sx = |x: f64| MARGIN + (x - lo) / (hi - lo) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - y / top * (HEIGHT - 2.0 * MARGIN);
    for (d, w) in dens.iter().zip(h.bin_edges.windows(2)) {
        let (x0, x1) = (sx(w[0]), sx(w[1]));
        let _ = writeln!(
            s,
            r##"<rect x="{x0:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#4a78b5" stroke="white" stroke-width="0.5"/>"##,
            sy(*d),
            x1 - x0,
            sy(0.0) - sy(*d)
        );
    }
    axes(&mut s, (lo, hi), (0.0, top));
    s.push_str("</svg>\n");
    s
}

/// Points drawn as dots inside the given window.
pub fn scatter_svg(points: &[Vec2], window: &BBox, title: &str) -> String {
    let mut s = svg_open(title);
    let sx = |x: f64| MARGIN + (x - window.xmin) / (window.xmax - window.xmin) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| {
        HEIGHT - MARGIN - (y - window.ymin) / (window.ymax - window.ymin) * (HEIGHT - 2.0 * MARGIN)
    };
    for p in points {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="black"/>"#, sx(p.x), sy(p.y));
    }
    axes(&mut s, (window.xmin, window.xmax), (window.ymin, window.ymax));
    s.push_str("</svg>\n");
    s
}

fn axes(s: &mut String, (x0, x1): (f64, f64), (y0, y1): (f64, f64)) {
    let (l, r, b, t) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{l} {t} L{l} {b} L{r} {b}" fill="none" stroke="black"/>"#
    );
    for (x, y, anchor, v) in [
        (l, b + 20.0, "start", x0),
        (r, b + 20.0, "end", x1),
        (l - 5.0, b, "end", y0),
        (l - 5.0, t + 5.0, "end", y1),
    ] {
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{y}" font-family="sans-serif" font-size="12" text-anchor="{anchor}">{v:.3}</text>"#
        );
    }
}
