//! Static region plots of the robust and non-robust sets over a 2-D grid.

use std::fmt::Write;

use bnk_core::robust_gmm::TwoStepResult;

const PLOT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const ROBUST_FILL: &str = "#9ecae1";
const NONROBUST_FILL: &str = "#08519c";

/// Grid cells in `keep` as rectangles, merging vertical runs per column.
fn cells(out: &mut String, res: &TwoStepResult, keep: &[bool], fill: &str) {
    let [a0, a1] = &res.grid.axes;
    let (w, h) = (PLOT / a0.count as f64, PLOT / a1.count as f64);
    for i in 0..a0.count {
        let col = &keep[i * a1.count..(i + 1) * a1.count];
        let mut j = 0;
        while j < a1.count {
            if !col[j] {
                j += 1;
                continue;
            }
            let start = j;
            while j < a1.count && col[j] {
                j += 1;
            }
            let x = MARGIN + i as f64 * w;
            let y = MARGIN + PLOT - j as f64 * h;
            let _ = writeln!(
                out,
                r#"<rect x="{x:.3}" y="{y:.3}" width="{w:.3}" height="{:.3}" fill="{fill}"/>"#,
                (j - start) as f64 * h
            );
        }
    }
}

fn axis_pos(v: f64, start: f64, last: f64) -> f64 {
    if last > start {
        (v - start) / (last - start)
    } else {
        0.5
    }
}

/// SVG of `CS_R` (light) with `CS_N` (dark) on top and the point estimate.
pub fn region_plot(res: &TwoStepResult, title: &str) -> String {
    let [a0, a1] = &res.grid.axes;
    let size = PLOT + 2.0 * MARGIN;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{size}" height="{size}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="30" text-anchor="middle" font-size="14">{title}</text>"#, size / 2.0);
    cells(&mut out, res, &res.whole.in_robust, ROBUST_FILL);
    cells(&mut out, res, &res.whole.in_nonrobust, NONROBUST_FILL);
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{PLOT}" height="{PLOT}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let xv = a0.start + f * (a0.last() - a0.start);
        let yv = a1.start + f * (a1.last() - a1.start);
        let x = MARGIN + f * PLOT;
        let y = MARGIN + PLOT - f * PLOT;
        let _ = writeln!(
            out,
            r#"<text x="{x:.3}" y="{:.3}" text-anchor="middle">{xv:.2}</text>"#,
            MARGIN + PLOT + 18.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.3}" y="{y:.3}" text-anchor="end" dominant-baseline="middle">{yv:.2}</text>"#,
            MARGIN - 6.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        size / 2.0,
        size - 12.0,
        res.param_names[0]
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        size / 2.0,
        size / 2.0,
        res.param_names[1]
    );
    let est = &res.estimate.theta;
    let px = MARGIN + axis_pos(est[0], a0.start, a0.last()).clamp(0.0, 1.0) * PLOT;
    let py = MARGIN + PLOT - axis_pos(est[1], a1.start, a1.last()).clamp(0.0, 1.0) * PLOT;
    let _ = writeln!(
        out,
        r#"<path d="M {:.3} {:.3} L {:.3} {:.3} M {:.3} {:.3} L {:.3} {:.3}" stroke="red" stroke-width="2"/>"#,
        px - 6.0,
        py - 6.0,
        px + 6.0,
        py + 6.0,
        px - 6.0,
        py + 6.0,
        px + 6.0,
        py - 6.0
    );
    let ly = MARGIN - 14.0;
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{:.3}" width="10" height="10" fill="{ROBUST_FILL}"/><text x="{}" y="{ly}">CS_R</text>"#,
        ly - 9.0,
        MARGIN + 14.0
    );
    let _ = writeln!(
        out,
        r#"<rect x="{}" y="{:.3}" width="10" height="10" fill="{NONROBUST_FILL}"/><text x="{}" y="{ly}">CS_N</text>"#,
        MARGIN + 70.0,
        ly - 9.0,
        MARGIN + 84.0
    );
    out.push_str("</svg>\n");
    out
}
