//! Static log-log plot of a decay table.

use std::fmt::Write;

use fockopa_core::opa::DecayTable;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn decades(lo: f64, hi: f64) -> (i32, i32) {
    let a = lo.log10().floor() as i32;
    let mut b = hi.log10().ceil() as i32;
    if b == a {
        b = a + 1;
    }
    (a, b)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Points with `n ≥ 1` and `c_n > 0`; the fitted line is drawn over the window.
pub fn decay_svg(table: &DecayTable) -> String {
    let pts: Vec<(f64, f64)> = table
        .rows
        .iter()
        .filter(|r| r.n >= 1 && r.c_n > 0.0)
        .map(|r| (r.n as f64, r.c_n))
        .collect();
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">c_n for {}</text>"#,
        W / 2.0,
        escape(&table.descriptor)
    );
    if pts.is_empty() {
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">no positive values</text>"#, W / 2.0, H / 2.0);
        s.push_str("</svg>\n");
        return s;
    }
    let (xmin, xmax) = pts.iter().fold((f64::MAX, f64::MIN), |a, p| (a.0.min(p.0), a.1.max(p.0)));
    let (ymin, ymax) = pts.iter().fold((f64::MAX, f64::MIN), |a, p| (a.0.min(p.1), a.1.max(p.1)));
    let (xa, xb) = decades(xmin, xmax);
    let (ya, yb) = decades(ymin, ymax);
    let px = |x: f64| LEFT + (x.log10() - xa as f64) / (xb - xa) as f64 * (W - LEFT - RIGHT);
    let py = |y: f64| H - BOTTOM - (y.log10() - ya as f64) / (yb - ya) as f64 * (H - TOP - BOTTOM);

    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    for e in xa..=xb {
        let x = px(10f64.powi(e));
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{}" stroke="#ddd"/><text x="{x:.2}" y="{}" text-anchor="middle">1e{e}</text>"##,
            H - BOTTOM,
            H - BOTTOM + 18.0
        );
    }
    for e in ya..=yb {
        let y = py(10f64.powi(e));
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">1e{e}</text>"##,
            W - RIGHT,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">n</text>"#,
        LEFT + (W - LEFT - RIGHT) / 2.0,
        H - 10.0
    );
    let _ = writeln!(s, r#"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle">c_n</text>"#, H / 2.0, H / 2.0);

    let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
    let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#1f77b4"/>"##, path.join(" "));
    for &(x, y) in &pts {
        let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="#1f77b4"/>"##, px(x), py(y));
    }

    if let Some(slope) = table.slope {
        let (a, b) = (table.window.0 as f64, table.window.1 as f64);
        let fit: Vec<(f64, f64)> = pts.iter().cloned().filter(|p| p.0 >= a && p.0 <= b).collect();
        let n = fit.len() as f64;
        let mx = fit.iter().map(|p| p.0.ln()).sum::<f64>() / n;
        let my = fit.iter().map(|p| p.1.ln()).sum::<f64>() / n;
        let at = |x: f64| (my + slope * (x.ln() - mx)).exp();
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#d62728" stroke-dasharray="6 4"/>"##,
            px(a),
            py(at(a)),
            px(b),
            py(at(b))
        );
        let _ = writeln!(
            s,
            r##"<text x="{}" y="{}" text-anchor="end" fill="#d62728">slope {:.4} on [{}, {}]</text>"##,
            W - RIGHT - 8.0,
            TOP + 18.0,
            slope,
            table.window.0,
            table.window.1
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use fockopa_core::freealg::parse;
    use fockopa_core::opa::decay_table;

    #[test]
    fn plot_has_points_and_fit() {
        let f = parse("1 - x1", None).unwrap();
        let t = decay_table(&f, 12, (6, 12)).unwrap();
        let svg = decay_svg(&t);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<circle").count(), 12);
        assert!(svg.contains("slope -0.8"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn constant_table() {
        let f = parse("x1", None).unwrap();
        let t = decay_table(&f, 4, (2, 4)).unwrap();
        let svg = decay_svg(&t);
        assert!(svg.contains("1e0"));
        assert!(svg.contains("slope 0.0000"));
    }
}
