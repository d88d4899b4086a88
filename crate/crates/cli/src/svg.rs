//! Minimal self-contained SVG line charts.

use std::fmt::Write as _;

pub struct Series<'a> {
    pub name: &'a str,
    pub values: &'a [f64],
}

/// Optional horizontal band drawn behind the series, e.g. a comfort range.
pub struct Chart<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub series: Vec<Series<'a>>,
    pub band: Option<(f64, f64)>,
    pub log_y: bool,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
const W: f64 = 720.0;
const H: f64 = 400.0;
const ML: f64 = 64.0;
const MR: f64 = 150.0;
const MT: f64 = 36.0;
const MB: f64 = 48.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Chart<'_> {
    pub fn render(&self) -> String {
        let tf = |v: f64| if self.log_y { v.max(1e-12).log10() } else { v };
        let finite = self
            .series
            .iter()
            .flat_map(|s| s.values.iter().copied())
            .filter(|v| v.is_finite() && (!self.log_y || *v > 0.0));
        let (mut lo, mut hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(tf(v)), b.max(tf(v))));
        if let Some((a, b)) = self.band {
            lo = lo.min(tf(a));
            hi = hi.max(tf(b));
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-9 {
            hi = lo + 1.0;
        }
        let pad = 0.05 * (hi - lo);
        let (lo, hi) = (lo - pad, hi + pad);
        let n = self.series.iter().map(|s| s.values.len()).max().unwrap_or(1).max(2);
        let px = |i: usize| ML + (W - ML - MR) * i as f64 / (n - 1) as f64;
        let py = |v: f64| MT + (H - MT - MB) * (1.0 - (tf(v) - lo) / (hi - lo));

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, esc(self.title));
        if let Some((a, b)) = self.band {
            let _ = writeln!(
                s,
                r##"<rect x="{ML}" y="{:.1}" width="{:.1}" height="{:.1}" fill="#e8f4e8"/>"##,
                py(b),
                W - ML - MR,
                (py(a) - py(b)).max(0.0)
            );
        }
        let _ = writeln!(
            s,
            r#"<rect x="{ML}" y="{MT}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            W - ML - MR,
            H - MT - MB
        );
        for k in 0..=4 {
            let v = lo + (hi - lo) * k as f64 / 4.0;
            let y = MT + (H - MT - MB) * (1.0 - k as f64 / 4.0);
            let label = if self.log_y { format!("{:.1e}", 10f64.powf(v)) } else { format!("{v:.2}") };
            let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{label}</text>"#, ML - 6.0, y + 4.0);
            let _ = writeln!(s, r##"<line x1="{ML}" x2="{}" y1="{y:.1}" y2="{y:.1}" stroke="#ddd"/>"##, W - MR);
        }
        for k in 0..=4 {
            let i = (n - 1) * k / 4;
            let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{i}</text>"#, px(i), H - MB + 16.0);
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (ML + W - MR) / 2.0, H - 10.0, esc(self.x_label));
        let _ = writeln!(
            s,
            r#"<text transform="translate(16 {}) rotate(-90)" text-anchor="middle">{}</text>"#,
            (MT + H - MB) / 2.0,
            esc(self.y_label)
        );
        for (k, ser) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let pts: Vec<String> = ser
                .values
                .iter()
                .enumerate()
                .filter(|(_, v)| v.is_finite() && (!self.log_y || **v > 0.0))
                .map(|(i, &v)| format!("{:.1},{:.1}", px(i), py(v)))
                .collect();
            if !pts.is_empty() {
                let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, pts.join(" "));
            }
            let ly = MT + 10.0 + 18.0 * k as f64;
            let _ = writeln!(s, r#"<line x1="{}" x2="{}" y1="{ly}" y2="{ly}" stroke="{color}" stroke-width="3"/>"#, W - MR + 10.0, W - MR + 30.0);
            let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, W - MR + 36.0, ly + 4.0, esc(ser.name));
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_series_and_skips_nan() {
        let a = [1.0, 2.0, f64::NAN, 4.0];
        let svg = Chart {
            title: "t <1>",
            x_label: "hour",
            y_label: "°C",
            series: vec![Series { name: "a", values: &a }],
            band: Some((1.5, 3.0)),
            log_y: false,
        }
        .render();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("t &lt;1&gt;"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(!svg.contains("NaN"));
    }
}
