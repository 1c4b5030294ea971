//! Static SVG output: log-scale envelope plots and front heat maps.

use std::fmt::Write;

use lightcone::CertificationReport;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Series {
    label: String,
    color: &'static str,
    dashed: bool,
    points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Tick positions for `[lo, hi]`, at most about eight.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 8.0).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series], floor: Option<f64>) -> String {
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    let (mut x0, mut x1) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (mut y0, mut y1) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    if let Some(f) = floor {
        y0 = y0.min(f);
        y1 = y1.max(f);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        (x0, x1) = (x0 - 0.5, x1 + 0.5);
    }
    if y1 - y0 < 1e-12 {
        (y0, y1) = (y0 - 1.0, y1 + 1.0);
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, LEFT + pw / 2.0, escape(title));
    let _ = writeln!(s, r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##);
    for t in ticks(x0, x1) {
        let x = sx(t);
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/>"##, TOP + ph, TOP + ph + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{t}</text>"#, TOP + ph + 18.0);
    }
    for t in ticks(y0, y1) {
        let y = sy(t);
        let _ = writeln!(s, r##"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#333"/>"##, LEFT - 5.0);
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#eee"/>"##, LEFT + pw);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{t}</text>"#, LEFT - 8.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, HEIGHT - 10.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(y_label)
    );
    if let Some(f) = floor {
        let y = sy(f);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#999" stroke-dasharray="2 3"/>"##,
            LEFT + pw
        );
    }
    for (k, ser) in series.iter().enumerate() {
        let path: Vec<String> = ser.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let dash = if ser.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        if path.len() > 1 {
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.8"{dash}/>"#,
                path.join(" "),
                ser.color
            );
        }
        if !ser.dashed {
            for &(x, y) in &ser.points {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#, sx(x), sy(y), ser.color);
            }
        }
        let ly = TOP + 14.0 + 18.0 * k as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="1.8"{dash}/>"#,
            lx + 24.0,
            ser.color
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 30.0, ly + 4.0, escape(&ser.label));
    }
    s.push_str("</svg>\n");
    s
}

fn log10_points(points: impl Iterator<Item = (f64, f64)>) -> Vec<(f64, f64)> {
    points.filter(|p| p.1 > 0.0 && p.1.is_finite()).map(|(x, y)| (x, y.log10())).collect()
}

/// Measured values and envelope (dashed) against t on a log₁₀ axis, one
/// colour per distance.
pub fn envelope_svg(name: &str, report: &CertificationReport) -> String {
    let mut distances: Vec<f64> = report.rows.iter().map(|r| r.d).collect();
    distances.sort_by(f64::total_cmp);
    distances.dedup();
    let many = distances.len() > 1;
    let mut series = Vec::new();
    for (k, &d) in distances.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let rows: Vec<_> = report.rows.iter().filter(|r| r.d == d).collect();
        let suffix = if many { format!(" d={d}") } else { String::new() };
        series.push(Series {
            label: format!("measured{suffix}"),
            color,
            dashed: false,
            points: log10_points(rows.iter().map(|r| (r.t, r.measured))),
        });
        series.push(Series {
            label: format!("envelope{suffix}"),
            color,
            dashed: true,
            points: rows.iter().filter_map(|r| r.log_envelope.map(|l| (r.t, l / std::f64::consts::LN_10))).collect(),
        });
    }
    let title = format!("{name}: {}", report.theorem.name());
    line_plot(&title, "t", "log10 norm", &series, Some(report.environment.floor.log10()))
}

/// `log₁₀ |ψ_t(x)|` on a (time × site) grid.
pub struct FrontMap {
    pub times: Vec<f64>,
    pub sites: Vec<i64>,
    /// `values[k][j]` at `times[k]`, `sites[j]`.
    pub values: Vec<Vec<f64>>,
}

const HEAT_MIN: f64 = -16.0;

fn heat_color(v: f64) -> String {
    let s = ((v - HEAT_MIN) / -HEAT_MIN).clamp(0.0, 1.0);
    // dark blue → yellow
    let r = (20.0 + 235.0 * s) as u8;
    let g = (24.0 + 206.0 * s.powf(0.8)) as u8;
    let b = (90.0 * (1.0 - s) + 40.0) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

pub fn front_svg(title: &str, map: &FrontMap) -> String {
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let (nt, nx) = (map.times.len(), map.sites.len());
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, LEFT + pw / 2.0, escape(title));
    if nt > 0 && nx > 0 {
        let cw = pw / nx as f64;
        let ch = ph / nt as f64;
        for (k, row) in map.values.iter().enumerate() {
            let y = TOP + ph - (k + 1) as f64 * ch;
            // one rectangle per run of equal colour
            let colors: Vec<String> = row.iter().map(|&v| heat_color(v)).collect();
            let mut j = 0;
            while j < colors.len() {
                let run = colors[j..].iter().take_while(|c| **c == colors[j]).count();
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                    LEFT + j as f64 * cw,
                    run as f64 * cw + 0.3,
                    ch + 0.3,
                    colors[j]
                );
                j += run;
            }
        }
        let (x0, x1) = (map.sites[0] as f64, map.sites[nx - 1] as f64);
        for t in ticks(x0, x1) {
            let x = LEFT + (t - x0 + 0.5) / (x1 - x0 + 1.0) * pw;
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{t}</text>"#, TOP + ph + 18.0);
        }
        let (t0, t1) = (map.times[0], map.times[nt - 1]);
        for t in ticks(t0, t1) {
            let y = TOP + ph - (t - t0) / (t1 - t0).max(1e-12) * ph;
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{t}</text>"#, LEFT - 8.0, y + 4.0);
        }
    }
    let _ = writeln!(s, r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">site</text>"#, LEFT + pw / 2.0, HEIGHT - 10.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">t</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    // colour bar
    let bx = LEFT + pw + 30.0;
    for k in 0..32 {
        let v = HEAT_MIN * (1.0 - k as f64 / 31.0);
        let y = TOP + ph - (k + 1) as f64 * ph / 32.0;
        let _ = writeln!(s, r#"<rect x="{bx}" y="{y:.2}" width="18" height="{:.2}" fill="{}"/>"#, ph / 32.0 + 0.3, heat_color(v));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}">0</text>"#, bx + 24.0, TOP + 8.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}">{HEAT_MIN}</text>"#, bx + 24.0, TOP + ph);
    let _ = writeln!(s, r#"<text x="{bx}" y="{}">log10 |psi|</text>"#, TOP - 8.0);
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_cover_the_range() {
        let t = ticks(-49.2, 0.3);
        assert!(t.len() >= 3 && t.len() <= 9);
        assert!(t.iter().all(|v| *v >= -49.2 && *v <= 0.3));
        assert_eq!(ticks(2.0, 14.0), vec![2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0]);
    }

    #[test]
    fn heat_colors_are_hex() {
        assert_eq!(heat_color(0.0).len(), 7);
        assert_eq!(heat_color(-100.0), heat_color(HEAT_MIN));
    }
}
