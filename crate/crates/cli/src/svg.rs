use std::fmt::Write;

use tritwatch::descriptor::{AlarmEvent, CountSeries, PatternHistogram};
use tritwatch::evaluation::LabelEvent;

const WIDTH: f64 = 960.0;
const PANEL: f64 = 180.0;
const MARGIN: f64 = 40.0;

/// Two stacked panels sharing a frame axis: the count trace on top and the
/// quiet fraction below, with alarms (red) and labels (green) as verticals.
pub fn timeline(
    series: &CountSeries,
    histograms: &[PatternHistogram],
    alarms: &[AlarmEvent],
    labels: &[LabelEvent],
    bin_threshold: f64,
) -> String {
    let height = 2.0 * PANEL + 3.0 * MARGIN;
    let first = series.first_frame as f64;
    let last = series.frame_of(series.len().saturating_sub(1)) as f64;
    let span = (last - first).max(1.0);
    let x = |frame: f64| MARGIN + (frame - first) / span * (WIDTH - 2.0 * MARGIN);
    let max_count = f64::from(series.counts.iter().copied().max().unwrap_or(0).max(1));
    let top = MARGIN;
    let bottom = 2.0 * MARGIN + PANEL;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (y0, title) in [(top, "group count"), (bottom, "quiet fraction")] {
        let _ = writeln!(
            s,
            r##"<rect x="{MARGIN}" y="{y0}" width="{}" height="{PANEL}" fill="none" stroke="#888"/>"##,
            WIDTH - 2.0 * MARGIN
        );
        let _ = writeln!(s, r#"<text x="{MARGIN}" y="{}">{title}</text>"#, y0 - 6.0);
    }

    let counts: Vec<String> = series
        .frames()
        .zip(&series.counts)
        .map(|(f, &c)| {
            format!(
                "{:.1},{:.1}",
                x(f as f64),
                top + PANEL * (1.0 - f64::from(c) / max_count)
            )
        })
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline fill="none" stroke="#1f4e9c" stroke-width="1.2" points="{}"/>"##,
        counts.join(" ")
    );
    let fractions: Vec<String> = histograms
        .iter()
        .map(|h| {
            format!(
                "{:.1},{:.1}",
                x(h.center_frame as f64),
                bottom + PANEL * (1.0 - h.quiet_fraction())
            )
        })
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline fill="none" stroke="#333" stroke-width="1.2" points="{}"/>"##,
        fractions.join(" ")
    );
    let ty = bottom + PANEL * (1.0 - bin_threshold);
    let _ = writeln!(
        s,
        r##"<line x1="{MARGIN}" y1="{ty:.1}" x2="{}" y2="{ty:.1}" stroke="#999" stroke-dasharray="4 3"/>"##,
        WIDTH - MARGIN
    );
    let vertical = |s: &mut String, frame: u64, colour: &str, dash: &str| {
        let xf = x(frame as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{xf:.1}" y1="{top}" x2="{xf:.1}" y2="{}" stroke="{colour}" stroke-dasharray="{dash}"/>"#,
            bottom + PANEL
        );
    };
    for l in labels {
        vertical(&mut s, l.frame, "#2a9d3a", "6 3");
    }
    for a in alarms {
        vertical(&mut s, a.frame, "#d62728", "none");
    }
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="{}">frames {first:.0} to {last:.0}, max count {max_count:.0}, t* = {bin_threshold}</text>"#,
        height - 12.0
    );
    s.push_str("</svg>\n");
    s
}
