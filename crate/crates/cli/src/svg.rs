//! Self-contained SVG bar chart for the word-count histogram.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;

pub fn histogram(bins: &[(usize, usize)], bin_width: usize) -> String {
    let max = bins.iter().map(|b| b.1).max().unwrap_or(0).max(1) as f64;
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let bar_w = plot_w / bins.len().max(1) as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, &(lower, freq)) in bins.iter().enumerate() {
        let h = plot_h * freq as f64 / max;
        let x = MARGIN + i as f64 * bar_w;
        let y = MARGIN + plot_h - h;
        let _ = writeln!(
            s,
            r##"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{h:.2}" fill="#4c72b0"><title>{lower}-{}: {freq}</title></rect>"##,
            (bar_w - 1.0).max(0.5),
            lower + bin_width - 1
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{lower}</text>"#,
            x + bar_w / 2.0,
            MARGIN + plot_h + 14.0
        );
    }
    let axis_y = MARGIN + plot_h;
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{axis_y}" x2="{}" y2="{axis_y}" stroke="black"/>"#,
        WIDTH - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{axis_y}" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="{:.2}" text-anchor="end" dx="-4">{}</text>"#,
        MARGIN + 4.0,
        max as usize
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">words per sentence</text>"#,
        WIDTH / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">sentences</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    s.push_str("</svg>\n");
    s
}
