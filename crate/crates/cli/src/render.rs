use std::fmt::Write as _;
use std::path::Path;

use crate::CliError;

/// Writes `content` to `out`, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)
                    .map_err(|e| CliError::Validation(format!("cannot create {}: {e}", parent.display())))?;
            }
            std::fs::write(path, content).map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

pub fn json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Check(format!("serialization failed: {e}")))
}

/// One bar per entry, in the given order.
pub struct Bar<'a> {
    pub label: &'a str,
    pub value: f64,
    pub error: Option<f64>,
}

const BAR_W: f64 = 14.0;
const PLOT_H: f64 = 240.0;
const MARGIN_L: f64 = 50.0;
const MARGIN_T: f64 = 30.0;
const LABEL_H: f64 = 60.0;

/// Minimal static bar chart.
pub fn bar_chart_svg(title: &str, bars: &[Bar]) -> String {
    let top = bars.iter().map(|b| b.value + b.error.unwrap_or(0.0)).fold(0.0, f64::max);
    let y_max = if top > 0.0 { top * 1.1 } else { 1.0 };
    let width = MARGIN_L + BAR_W * bars.len() as f64 + 20.0;
    let height = MARGIN_T + PLOT_H + LABEL_H;
    let y = |v: f64| MARGIN_T + PLOT_H * (1.0 - v / y_max);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="9">"#
    );
    let _ = writeln!(s, r#"<text x="{MARGIN_L}" y="16" font-size="12">{}</text>"#, escape(title));
    let _ = writeln!(s, r#"<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{:.2}" stroke="black"/>"#, MARGIN_T + PLOT_H);
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN_L}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
        MARGIN_T + PLOT_H,
        width - 10.0,
        MARGIN_T + PLOT_H
    );
    for tick in 0..=4 {
        let v = y_max * tick as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.3}</text>"#, MARGIN_L - 4.0, y(v) + 3.0);
    }
    for (i, b) in bars.iter().enumerate() {
        let x = MARGIN_L + BAR_W * i as f64 + 2.0;
        let _ = writeln!(
            s,
            r#"<rect x="{x:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="steelblue"><title>{} {:.6}</title></rect>"#,
            y(b.value),
            BAR_W - 4.0,
            PLOT_H * b.value / y_max,
            escape(b.label),
            b.value
        );
        if let Some(e) = b.error.filter(|e| *e > 0.0) {
            let cx = x + (BAR_W - 4.0) / 2.0;
            let _ = writeln!(
                s,
                r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#,
                y((b.value - e).max(0.0)),
                y(b.value + e)
            );
        }
        let lx = x + (BAR_W - 4.0) / 2.0 + 3.0;
        let ly = MARGIN_T + PLOT_H + 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{lx:.2}" y="{ly:.2}" transform="rotate(90 {lx:.2} {ly:.2})" font-family="monospace">{}</text>"#,
            escape(b.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
