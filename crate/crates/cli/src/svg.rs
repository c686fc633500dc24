//! Minimal SVG overlay: free boundary curves of several fields on the unit
//! square against dashed reference polylines.

use std::fmt::Write as _;

use alt_phillips::Field;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 40.0;
const COLORS: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

pub struct Curve {
    pub label: String,
    pub segments: Vec<[[f64; 2]; 2]>,
}

/// Marching squares on the indicator of `{u > 0}` at level ½. Saddle cells
/// are split so that the positive corners are separated.
pub fn free_boundary_segments(u: &Field) -> Vec<[[f64; 2]; 2]> {
    let g = &u.grid;
    if g.dim != 2 {
        return Vec::new();
    }
    let [nx, ny] = g.shape();
    let pos = |i: usize, j: usize| u.values[g.index(i, j)] > 0.0;
    let mut out = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let c = [pos(i, j), pos(i + 1, j), pos(i + 1, j + 1), pos(i, j + 1)];
            let [x0, y0] = g.position(g.index(i, j));
            let h = g.h;
            // Edge midpoints: bottom, right, top, left.
            let m = [[x0 + 0.5 * h, y0], [x0 + h, y0 + 0.5 * h], [x0 + 0.5 * h, y0 + h], [x0, y0 + 0.5 * h]];
            let cut: Vec<usize> = (0..4).filter(|&e| c[e] != c[(e + 1) % 4]).collect();
            match cut.len() {
                2 => out.push([m[cut[0]], m[cut[1]]]),
                4 if c[0] => {
                    out.push([m[3], m[0]]);
                    out.push([m[1], m[2]]);
                }
                4 => {
                    out.push([m[0], m[1]]);
                    out.push([m[2], m[3]]);
                }
                _ => {}
            }
        }
    }
    out
}

fn map(x: [f64; 2]) -> (f64, f64) {
    (MARGIN + x[0] * SIZE, MARGIN + (1.0 - x[1]) * SIZE)
}

pub fn overlay(title: &str, curves: &[Curve], references: &[Vec<[f64; 2]>]) -> String {
    let total = SIZE + 2.0 * MARGIN;
    let legend_h = 18.0 * curves.len() as f64 + 10.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{hh}" viewBox="0 0 {w} {hh}">"#,
        w = total + 160.0,
        hh = total.max(legend_h)
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="24" font-family="sans-serif" font-size="14">{title}</text>"#);
    let (ax, ay) = map([0.0, 0.0]);
    let (bx, by) = map([1.0, 1.0]);
    let _ = writeln!(
        s,
        r#"<polyline points="{ax},{by} {ax},{ay} {bx},{ay}" fill="none" stroke="black" stroke-width="1"/>"#
    );
    for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let (x, y) = map([t, t]);
        let _ = writeln!(s, r#"<line x1="{x}" y1="{ay}" x2="{x}" y2="{}" stroke="black"/>"#, ay + 5.0);
        let _ = writeln!(s, r#"<line x1="{}" y1="{y}" x2="{ax}" y2="{y}" stroke="black"/>"#, ax - 5.0);
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" font-family="sans-serif" font-size="10" text-anchor="middle">{t}</text>"#,
            ay + 17.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10" text-anchor="end">{t}</text>"#,
            ax - 7.0,
            y + 3.0
        );
    }
    for r in references {
        let pts: Vec<String> = r.iter().map(|&x| map(x)).map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="black" stroke-width="1.5" stroke-dasharray="6,4"/>"#,
            pts.join(" ")
        );
    }
    for (k, c) in curves.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut d = String::new();
        for seg in &c.segments {
            let (x0, y0) = map(seg[0]);
            let (x1, y1) = map(seg[1]);
            let _ = write!(d, "M{x0:.2},{y0:.2}L{x1:.2},{y1:.2}");
        }
        let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.2"/>"#);
        let ly = MARGIN + 18.0 * k as f64;
        let lx = total + 10.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            c.label
        );
    }
    let ly = MARGIN + 18.0 * curves.len() as f64;
    let lx = total + 10.0;
    let _ = writeln!(
        s,
        r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="black" stroke-dasharray="6,4"/>"#,
        lx + 20.0
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">reference</text>"#, lx + 26.0, ly + 4.0);
    s.push_str("</svg>\n");
    s
}
