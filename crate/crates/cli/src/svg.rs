//! Minimal SVG quick looks: semi-log error curves and eigenvalue scatter
//! with the unit circle.

use std::fmt::Write as _;

use crate::commands::{sources, ErrorCurves};
use crate::io::Eigenvalue;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 6] = [
    "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];
const LOG_FLOOR: f64 = -16.0;

fn header(out: &mut String, title: &str) {
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">"#
    )
    .expect("string write");
    writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    )
    .expect("string write");
    writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{title}</text>"#,
        WIDTH / 2.0
    )
    .expect("string write");
}

fn axis_labels(out: &mut String, x: (f64, f64), y: (f64, f64), x_name: &str, y_name: &str) {
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    for (px, v) in [(l, x.0), (r, x.1)] {
        writeln!(
            out,
            r#"<text x="{px}" y="{}" text-anchor="middle">{v:.3}</text>"#,
            b + 15.0
        )
        .expect("string write");
    }
    for (py, v) in [(b, y.0), (t, y.1)] {
        writeln!(
            out,
            r#"<text x="{}" y="{py}" text-anchor="end">{v:.3}</text>"#,
            l - 4.0
        )
        .expect("string write");
    }
    writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{x_name}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    )
    .expect("string write");
    writeln!(
        out,
        r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{y_name}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    )
    .expect("string write");
}

/// Maps data ranges onto the plot box.
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(a, b): (f64, f64)| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        Self {
            x: widen(x),
            y: widen(y),
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    })
}

/// `log10` absolute error against time, one polyline per model and state
/// dimension. Non-finite values end a line.
pub fn error_plot(curves: &[ErrorCurves]) -> String {
    let log = |v: f64| v.log10().max(LOG_FLOOR);
    let x = range(curves.iter().flat_map(|c| c.t.iter().copied()));
    let y = range(
        curves
            .iter()
            .flat_map(|c| c.abs_error.iter().flatten().flatten().map(|&v| log(v))),
    );
    let frame = Frame::new(x, y);
    let mut out = String::new();
    header(&mut out, "absolute error");
    axis_labels(&mut out, frame.x, frame.y, "t", "log10 |error|");
    let mut k = 0;
    for c in curves {
        for (label, series) in c.labels.iter().zip(&c.abs_error) {
            let color = PALETTE[k % PALETTE.len()];
            let points: Vec<String> =
                c.t.iter()
                    .zip(series)
                    .map_while(|(&t, v)| {
                        v.map(|v| format!("{:.2},{:.2}", frame.px(t), frame.py(log(v))))
                    })
                    .collect();
            writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1" points="{}"/>"#,
                points.join(" ")
            )
            .expect("string write");
            writeln!(
                out,
                r#"<text x="{}" y="{}" fill="{color}">{} {label}</text>"#,
                WIDTH - MARGIN + 4.0,
                MARGIN + 12.0 * (k + 1) as f64,
                c.model
            )
            .expect("string write");
            k += 1;
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Eigenvalues in the complex plane, colored by source, with the unit circle.
pub fn spectrum_plot(values: &[Eigenvalue]) -> String {
    let r = values
        .iter()
        .map(Eigenvalue::modulus)
        .fold(1.0f64, f64::max)
        * 1.05;
    let frame = Frame::new((-r, r), (-r, r));
    let mut out = String::new();
    header(&mut out, "companion spectrum");
    axis_labels(&mut out, frame.x, frame.y, "Re", "Im");
    let circle: Vec<String> = (0..=180)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / 180.0;
            format!("{:.2},{:.2}", frame.px(th.cos()), frame.py(th.sin()))
        })
        .collect();
    writeln!(
        out,
        r#"<polyline fill="none" stroke="gray" stroke-dasharray="4 3" points="{}"/>"#,
        circle.join(" ")
    )
    .expect("string write");
    for (k, src) in sources(values).into_iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        for e in values.iter().filter(|e| e.source == src) {
            writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{color}"/>"#,
                frame.px(e.re),
                frame.py(e.im)
            )
            .expect("string write");
        }
        writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            MARGIN + 4.0,
            MARGIN + 12.0 * (k + 1) as f64,
            src.as_str()
        )
        .expect("string write");
    }
    out.push_str("</svg>\n");
    out
}
