use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{ranked, DatasetStats};
use crate::error::{Error, Result};

pub const CLASS_PLOT: &str = "class_dist.svg";
pub const UNIT_PLOT: &str = "unit_dist.svg";

const BAR_W: f64 = 18.0;
const GAP: f64 = 6.0;
const CHART_H: f64 = 240.0;
const MARGIN: f64 = 40.0;
const LABEL_H: f64 = 90.0;

/// Writes the class and excavation-unit bar charts. Returns their paths.
pub fn render_stats_plots(stats: &DatasetStats, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::io(format!("creating {}", out_dir.display()), e))?;
    let charts = [
        (CLASS_PLOT, "Samples per morphological class", &stats.class_histogram),
        (UNIT_PLOT, "Artifacts per excavation unit", &stats.unit_histogram),
    ];
    let mut written = Vec::new();
    for (name, title, hist) in charts {
        let svg = render_bar_chart(title, &ranked(hist));
        let path = out_dir.join(name);
        std::fs::write(&path, svg).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        written.push(path);
    }
    Ok(written)
}

/// A plain vertical bar chart, bars in the given order.
pub fn render_bar_chart(title: &str, bars: &[(&str, usize)]) -> String {
    let max = bars.iter().map(|b| b.1).max().unwrap_or(0).max(1) as f64;
    let width = MARGIN * 2.0 + bars.len() as f64 * (BAR_W + GAP);
    let width = width.max(320.0);
    let height = MARGIN + CHART_H + LABEL_H;
    let base = MARGIN + CHART_H;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="{}" font-family="sans-serif" font-size="14">{}</text>"#,
        MARGIN / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{base}" x2="{}" y2="{base}" stroke="black"/>"#,
        width - MARGIN
    );
    for (i, (label, count)) in bars.iter().enumerate() {
        let x = MARGIN + i as f64 * (BAR_W + GAP);
        let h = CHART_H * (*count as f64) / max;
        let _ = writeln!(
            s,
            r##"<rect class="bar" x="{x}" y="{}" width="{BAR_W}" height="{h}" fill="#4a6fa5"><title>{}: {count}</title></rect>"##,
            base - h,
            escape(label)
        );
        let lx = x + BAR_W / 2.0;
        let ly = base + 8.0;
        let _ = writeln!(
            s,
            r#"<text x="{lx}" y="{ly}" font-family="sans-serif" font-size="10" transform="rotate(60 {lx} {ly})">{}</text>"#,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
