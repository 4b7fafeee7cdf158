//! Minimal SVG line charts from CSV columns.
//!
//! The first column is the x axis. Columns named `min` and `max` are drawn
//! as a shaded band; every other numeric column becomes a line. Empty cells
//! are skipped.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<Option<f64>>>,
}

fn parse(csv: &str) -> Result<Table> {
    let mut lines = csv.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines.next().context("empty CSV")?.split(',').map(|s| s.trim().to_string()).collect();
    if header.len() < 2 {
        bail!("need an x column and at least one y column");
    }
    let rows = lines
        .enumerate()
        .map(|(i, line)| {
            let cells: Vec<Option<f64>> = line.split(',').map(|c| c.trim().parse().ok()).collect();
            if cells.len() != header.len() {
                bail!("line {} has {} cells, expected {}", i + 2, cells.len(), header.len());
            }
            Ok(cells)
        })
        .collect::<Result<_>>()?;
    Ok(Table { header, rows })
}

fn column(t: &Table, i: usize) -> Vec<(f64, f64)> {
    t.rows
        .iter()
        .filter_map(|r| Some((r[0]?, r[i]?)))
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect()
}

pub fn svg_from_csv(csv: &str, title: &str) -> Result<String> {
    let t = parse(csv)?;
    let idx = |name: &str| t.header.iter().position(|h| h == name);
    let band = idx("min").zip(idx("max"));
    let lines: Vec<usize> = (1..t.header.len())
        .filter(|&i| Some(i) != band.map(|b| b.0) && Some(i) != band.map(|b| b.1))
        .filter(|&i| !column(&t, i).is_empty())
        .collect();
    let all: Vec<(f64, f64)> = (1..t.header.len()).flat_map(|i| column(&t, i)).collect();
    if all.is_empty() {
        bail!("no numeric data to plot");
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in &all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#)?;
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#)?;
    writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(title))?;
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    writeln!(out, r#"<path d="M{left} {top} L{left} {bottom} L{right} {bottom}" stroke="black" fill="none"/>"#)?;
    for k in 0..=4 {
        let y = y0 + (y1 - y0) * k as f64 / 4.0;
        writeln!(out, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, left - 6.0, sy(y) + 4.0, tick(y))?;
        let x = x0 + (x1 - x0) * k as f64 / 4.0;
        writeln!(out, r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#, sx(x), bottom + 18.0, tick(x))?;
    }
    writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 12.0, escape(&t.header[0]))?;

    if let Some((lo, hi)) = band {
        let (low, high) = (column(&t, lo), column(&t, hi));
        if !low.is_empty() && !high.is_empty() {
            let mut d = String::new();
            for (i, (x, y)) in high.iter().enumerate() {
                write!(d, "{}{:.1} {:.1} ", if i == 0 { "M" } else { "L" }, sx(*x), sy(*y))?;
            }
            for (x, y) in low.iter().rev() {
                write!(d, "L{:.1} {:.1} ", sx(*x), sy(*y))?;
            }
            writeln!(out, r#"<path d="{}Z" fill="{}" fill-opacity="0.2" stroke="none"/>"#, d, COLOURS[0])?;
        }
    }
    for (n, &i) in lines.iter().enumerate() {
        let colour = COLOURS[n % COLOURS.len()];
        let points: Vec<String> = column(&t, i).iter().map(|(x, y)| format!("{:.1},{:.1}", sx(*x), sy(*y))).collect();
        writeln!(out, r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#, points.join(" "))?;
        let ly = top + 14.0 * n as f64;
        writeln!(out, r#"<text x="{}" y="{ly}" fill="{colour}">{}</text>"#, right - 90.0, escape(&t.header[i]))?;
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn tick(v: f64) -> String {
    if v.abs() >= 1000.0 || v == v.trunc() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_and_lines() {
        let svg = svg_from_csv("episode,mean,min,max\n0,-5,-7,-3\n1,-4,-6,-2\n", "VAM <desk>").unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("fill-opacity"));
        assert!(svg.contains("VAM &lt;desk&gt;"));
    }

    #[test]
    fn skips_empty_cells_and_rejects_garbage() {
        let svg = svg_from_csv("episode,score,epsilon,loss\n0,-1,1,\n1,-2,0.5,0.3\n", "").unwrap();
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg_from_csv("", "").is_err());
        assert!(svg_from_csv("x,y\n1,2,3\n", "").is_err());
        assert!(svg_from_csv("x,y\na,b\n", "").is_err());
    }
}
