//! A deliberately small SVG plotter: axes, ticks, bars, polylines, markers
//! and filled rectangles in data coordinates. Output depends only on the
//! inputs, so regenerated figures are byte-identical.

use std::fmt::Write;

pub const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Roughly five round tick positions covering `[lo, hi]`.
pub fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) || !span.is_finite() {
        return vec![lo];
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 {
        "0".into()
    } else if !(1e-3..1e5).contains(&a) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" { "0".into() } else { s.into() }
    }
}

pub struct Chart {
    title: String,
    x_label: String,
    y_label: String,
    x: (f64, f64),
    y: (f64, f64),
    x_ticks: Option<Vec<(f64, String)>>,
    y_ticks: Option<Vec<(f64, String)>>,
    legend: Vec<(String, String)>,
    body: String,
}

impl Chart {
    /// Degenerate ranges are widened so every coordinate stays finite.
    pub fn new(title: &str, x_label: &str, y_label: &str, x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(a, b): (f64, f64)| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x: widen(x),
            y: widen(y),
            x_ticks: None,
            y_ticks: None,
            legend: Vec::new(),
            body: String::new(),
        }
    }

    pub fn set_x_ticks(&mut self, ticks: Vec<(f64, String)>) {
        self.x_ticks = Some(ticks);
    }

    pub fn set_y_ticks(&mut self, ticks: Vec<(f64, String)>) {
        self.y_ticks = Some(ticks);
    }

    pub fn add_legend(&mut self, label: &str, colour: &str) {
        self.legend.push((label.into(), colour.into()));
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], colour: &str) {
        if pts.is_empty() {
            return;
        }
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y))).collect();
        let _ = writeln!(
            self.body,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
    }

    pub fn marker(&mut self, x: f64, y: f64, colour: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{colour}"/>"#,
            self.px(x),
            self.py(y)
        );
    }

    /// Filled rectangle spanning `[x0, x1] × [y0, y1]` in data units.
    pub fn rect(&mut self, x0: f64, x1: f64, y0: f64, y1: f64, colour: &str) {
        let (l, r) = (self.px(x0.min(x1)), self.px(x0.max(x1)));
        let (t, b) = (self.py(y0.max(y1)), self.py(y0.min(y1)));
        let _ = writeln!(
            self.body,
            r#"<rect x="{l:.2}" y="{t:.2}" width="{:.2}" height="{:.2}" fill="{colour}"/>"#,
            r - l,
            b - t
        );
    }

    /// Bar from zero to `value`, centred on `x`.
    pub fn bar(&mut self, x: f64, width: f64, value: f64, colour: &str) {
        self.rect(x - width / 2.0, x + width / 2.0, 0.0, value, colour);
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            (LEFT + WIDTH - RIGHT) / 2.0,
            esc(&self.title)
        );
        let (x_lo, x_hi) = (self.px(self.x.0), self.px(self.x.1));
        let (y_lo, y_hi) = (self.py(self.y.0), self.py(self.y.1));
        let auto = |(a, b): (f64, f64)| nice_ticks(a, b).into_iter().map(|v| (v, tick_label(v))).collect::<Vec<_>>();
        let xt = self.x_ticks.clone().unwrap_or_else(|| auto(self.x));
        let yt = self.y_ticks.clone().unwrap_or_else(|| auto(self.y));
        for (v, label) in &yt {
            let y = self.py(*v);
            let _ = writeln!(s, r##"<line x1="{x_lo:.2}" y1="{y:.2}" x2="{x_hi:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##);
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                x_lo - 6.0,
                y + 4.0,
                esc(label)
            );
        }
        for (v, label) in &xt {
            let x = self.px(*v);
            let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{y_lo:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000"/>"##, y_lo + 4.0);
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                y_lo + 16.0,
                esc(label)
            );
        }
        s.push_str(&self.body);
        if self.y.0 < 0.0 && self.y.1 > 0.0 {
            let z = self.py(0.0);
            let _ = writeln!(s, r##"<line x1="{x_lo:.2}" y1="{z:.2}" x2="{x_hi:.2}" y2="{z:.2}" stroke="#000" stroke-dasharray="4 3"/>"##);
        }
        let _ = writeln!(
            s,
            r##"<path d="M{x_lo:.2},{y_hi:.2} V{y_lo:.2} H{x_hi:.2}" fill="none" stroke="#000"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            (x_lo + x_hi) / 2.0,
            HEIGHT - 18.0,
            esc(&self.x_label)
        );
        let cy = (y_lo + y_hi) / 2.0;
        let _ = writeln!(
            s,
            r#"<text x="18" y="{cy:.2}" text-anchor="middle" transform="rotate(-90 18 {cy:.2})">{}</text>"#,
            esc(&self.y_label)
        );
        for (i, (label, colour)) in self.legend.iter().enumerate() {
            let y = TOP + 16.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{y:.2}" width="10" height="10" fill="{colour}"/>"#,
                x_hi + 12.0
            );
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, x_hi + 26.0, y + 9.0, esc(label));
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round() {
        let t = nice_ticks(0.0, 1.0);
        assert_eq!(t.iter().map(|&v| tick_label(v)).collect::<Vec<_>>(), ["0", "0.2", "0.4", "0.6", "0.8", "1"]);
        assert_eq!(nice_ticks(0.0, 100.0).len(), 6);
        assert_eq!(nice_ticks(3.0, 3.0), vec![3.0]);
    }

    #[test]
    fn chart_is_well_formed_and_stable() {
        let mut c = Chart::new("a < b", "x", "y", (0.0, 1.0), (-1.0, 1.0));
        c.polyline(&[(0.0, 0.0), (1.0, 1.0)], PALETTE[0]);
        c.bar(0.5, 0.2, -0.5, PALETTE[1]);
        c.add_legend("s", PALETTE[0]);
        let s = c.render();
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains("a &lt; b"));
        assert_eq!(s, c.render());
    }
}
