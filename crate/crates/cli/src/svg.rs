//! Error-versus-dimension line chart rendered from a sweep CSV.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use hidim_core::sweep::CSV_HEADER;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const PALETTE: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SvgError {
    #[error("unexpected CSV header '{0}'")]
    Header(String),
    #[error("CSV line {0}: {1}")]
    Row(usize, String),
}

/// `(classifier, [(d, p_hat)])` for the `max` rows, skipping NaN cells.
pub fn max_series(csv: &str) -> Result<BTreeMap<String, Vec<(f64, f64)>>, SvgError> {
    let mut lines = csv.lines();
    let header = lines.next().unwrap_or("");
    if header != CSV_HEADER {
        return Err(SvgError::Header(header.to_string()));
    }
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for (i, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 11 {
            return Err(SvgError::Row(i + 2, format!("expected 11 columns, got {}", cols.len())));
        }
        if cols[4] != "max" {
            continue;
        }
        let d: f64 = cols[0].parse().map_err(|_| SvgError::Row(i + 2, format!("bad d '{}'", cols[0])))?;
        let p: f64 = cols[6].parse().map_err(|_| SvgError::Row(i + 2, format!("bad p_hat '{}'", cols[6])))?;
        let entry = series.entry(cols[3].to_string()).or_default();
        if p.is_finite() {
            entry.push((d, p));
        }
    }
    for pts in series.values_mut() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Ok(series)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Chart of max-over-θ error against `log2 d`, with a dashed 0.5 line and
/// a dotted Bayes floor at `bayes_floor`.
pub fn render(csv: &str, title: &str, bayes_floor: f64) -> Result<String, SvgError> {
    let series = max_series(csv)?;
    let ds: Vec<f64> = series.values().flatten().map(|p| p.0).collect();
    let (mut x_lo, mut x_hi) = ds
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| (lo.min(d.log2()), hi.max(d.log2())));
    if !x_lo.is_finite() {
        (x_lo, x_hi) = (0.0, 1.0);
    }
    if x_hi - x_lo < 1e-9 {
        x_lo -= 1.0;
        x_hi += 1.0;
    }
    let (y_lo, y_hi) = (0.0, 0.6);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |d: f64| LEFT + (d.log2() - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |p: f64| TOP + (1.0 - (p.clamp(y_lo, y_hi) - y_lo) / (y_hi - y_lo)) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#, LEFT + plot_w / 2.0, escape(title));

    // Axes and ticks.
    let (x0, y0) = (LEFT, TOP + plot_h);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{}" y2="{y0}" stroke="black"/>"#, x0 + plot_w);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{TOP}" x2="{x0}" y2="{y0}" stroke="black"/>"#);
    let mut ticks: Vec<f64> = ds.clone();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    for d in ticks {
        let x = sx(d);
        let _ = writeln!(s, r#"<line x1="{x:.1}" y1="{y0}" x2="{x:.1}" y2="{}" stroke="black"/>"#, y0 + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{}" text-anchor="middle">{d}</text>"#, y0 + 18.0);
    }
    for i in 0..=6 {
        let p = i as f64 * 0.1;
        let y = sy(p);
        let _ = writeln!(s, r##"<line x1="{}" y1="{y:.1}" x2="{x0}" y2="{y:.1}" stroke="black"/><line x1="{x0}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="#eee"/>"##, x0 - 5.0, x0 + plot_w);
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{p:.1}</text>"#, x0 - 8.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">dimension d (log scale)</text>"#, LEFT + plot_w / 2.0, HEIGHT - 15.0);
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">max error over θ</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    let hline = |s: &mut String, p: f64, dash: &str, label: &str| {
        let y = sy(p);
        let _ = writeln!(s, r##"<line x1="{x0}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="#555" stroke-dasharray="{dash}"/>"##, x0 + plot_w);
        let _ = writeln!(s, r##"<text x="{}" y="{:.1}" fill="#555">{label}</text>"##, x0 + plot_w + 4.0, y + 4.0);
    };
    hline(&mut s, 0.5, "6 4", "0.5");
    if bayes_floor.is_finite() {
        hline(&mut s, bayes_floor, "2 3", "Bayes");
    }

    for (i, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = pts.iter().map(|&(d, p)| format!("{:.1},{:.1}", sx(d), sy(p))).collect();
        if !coords.is_empty() {
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, coords.join(" "));
            for &(d, p) in pts {
                let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#, sx(d), sy(p));
            }
        }
        let ly = TOP + 40.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 50.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 25.0, ly + 4.0, escape(name));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv() -> String {
        format!(
            "{CSV_HEADER}\n\
             64,3,sphere:alpha=4,matched_filter,max,100,0.2000000000,0.1,0.3,0,0\n\
             64,3,sphere:alpha=4,matched_filter,mean,100,0.1900000000,0.1,0.3,0,0\n\
             256,4,sphere:alpha=4,matched_filter,max,100,0.3000000000,0.2,0.4,0,0\n\
             256,4,sphere:alpha=4,plugin_pooled,max,100,NaN,NaN,NaN,50,0\n"
        )
    }

    #[test]
    fn only_max_rows_are_plotted() {
        let s = max_series(&csv()).unwrap();
        assert_eq!(s["matched_filter"], vec![(64.0, 0.2), (256.0, 0.3)]);
        assert!(s["plugin_pooled"].is_empty());
    }

    #[test]
    fn chart_has_series_and_reference_lines() {
        let svg = render(&csv(), "sphere", 0.0227).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains(">matched_filter<") && svg.contains(">plugin_pooled<"));
        assert!(svg.contains(">0.5<") && svg.contains(">Bayes<"));
    }

    #[test]
    fn rejects_foreign_csv() {
        assert!(matches!(render("a,b\n1,2\n", "", 0.1), Err(SvgError::Header(_))));
    }
}
