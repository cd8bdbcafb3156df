//! Static line plot of mean curves with a standard-error band.

use crate::metrics::CurveStats;
use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn line_plot(title: &str, y_label: &str, series: &[(&str, &CurveStats)]) -> String {
    let len = series
        .iter()
        .map(|(_, s)| s.mean.len())
        .max()
        .unwrap_or(0)
        .max(2);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, s) in series {
        for (m, e) in s.mean.iter().zip(&s.stderr) {
            lo = lo.min(m - e);
            hi = hi.max(m + e);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }
    let (w, h) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    let x = |i: usize| MARGIN + w * i as f64 / (len - 1) as f64;
    let y = |v: f64| MARGIN + h * (1.0 - (v - lo) / (hi - lo));

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<path d="M{MARGIN},{MARGIN} V{b} H{r}" fill="none" stroke="black"/>"#,
        b = MARGIN + h,
        r = MARGIN + w
    );
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.3}</text>"#,
            MARGIN - 6.0,
            y(v) + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{len}</text><text x="{MARGIN}" y="{}" text-anchor="middle">1</text>"#,
        MARGIN + w,
        MARGIN + h + 18.0,
        MARGIN + h + 18.0
    );
    let _ = writeln!(
        out,
        r#"<text transform="translate(16,{}) rotate(-90)" text-anchor="middle">{}</text>"#,
        HEIGHT / 2.0,
        escape(y_label)
    );

    for (k, (name, s)) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let mut band = String::new();
        for (i, (m, e)) in s.mean.iter().zip(&s.stderr).enumerate() {
            let _ = write!(
                band,
                "{}{:.2},{:.2} ",
                if i == 0 { "M" } else { "L" },
                x(i),
                y(m + e)
            );
        }
        for (i, (m, e)) in s.mean.iter().zip(&s.stderr).enumerate().rev() {
            let _ = write!(band, "L{:.2},{:.2} ", x(i), y(m - e));
        }
        let _ = writeln!(
            out,
            r#"<path d="{}Z" fill="{colour}" fill-opacity="0.2" stroke="none"/>"#,
            band.trim_end()
        );
        let points: Vec<String> = s
            .mean
            .iter()
            .enumerate()
            .map(|(i, &m)| format!("{:.2},{:.2}", x(i), y(m)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
            points.join(" ")
        );
        let ly = MARGIN + 16.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{a}" y1="{ly}" x2="{b}" y2="{ly}" stroke="{colour}" stroke-width="3"/><text x="{c}" y="{t}">{}</text>"#,
            escape(name),
            a = WIDTH - MARGIN - 150.0,
            b = WIDTH - MARGIN - 130.0,
            c = WIDTH - MARGIN - 124.0,
            t = ly + 4.0
        );
    }
    out.push_str("</svg>\n");
    out
}
