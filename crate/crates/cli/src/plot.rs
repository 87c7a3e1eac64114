//! Static SVG plots of summary CSVs: mean curve, shaded 95% band and the
//! dotted theoretical envelope, one file per metric.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use incentive_bandit::harness::output::{write_file, SUMMARY_HEADER};

use crate::error::{CliError, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
const TICKS: usize = 5;

/// Metrics plotted from a summary: (file suffix, title, mean column, ci column).
pub const METRICS: [(&str, &str, usize, usize); 3] = [
    ("pseudo_regret", "pseudo-regret", 1, 2),
    ("realized_regret", "realized regret", 3, 4),
    ("compensation", "compensation", 5, 6),
];
const BOUND_COLUMN: usize = 7;

/// Parsed numeric rows of a summary CSV.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SummaryTable {
    pub rows: Vec<Vec<f64>>,
}

impl SummaryTable {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| CliError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
        let (header_no, header) = lines
            .next()
            .ok_or_else(|| err(1, "missing header".into()))?;
        let expected: Vec<&str> = SUMMARY_HEADER.split(',').collect();
        let columns: Vec<&str> = header.split(',').collect();
        if columns.len() < expected.len() || columns[..expected.len()] != expected[..] {
            return Err(err(
                header_no + 1,
                format!("header must start with `{SUMMARY_HEADER}`"),
            ));
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != columns.len() {
                return Err(err(
                    i + 1,
                    format!("expected {} fields, found {}", columns.len(), fields.len()),
                ));
            }
            let row = fields
                .iter()
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|_| err(i + 1, format!("not a number: `{f}`")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if let Some(prev) = rows.last().map(|r: &Vec<f64>| r[0]) {
                if row[0].partial_cmp(&prev) != Some(std::cmp::Ordering::Greater) {
                    return Err(err(i + 1, "checkpoints must be increasing".into()));
                }
            }
            rows.push(row);
        }
        Ok(Self { rows })
    }

    /// `(t, mean, ci, bound)` for one metric.
    pub fn series(&self, mean_col: usize, ci_col: usize) -> Vec<(f64, f64, f64, f64)> {
        self.rows
            .iter()
            .map(|r| (r[0], r[mean_col], r[ci_col], r[BOUND_COLUMN]))
            .collect()
    }
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a >= 100.0 || v == 0.0 {
        format!("{v:.0}")
    } else if a >= 1.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.3}")
    }
}

/// Renders one metric. Output depends only on the input values.
pub fn render_svg(title: &str, series: &[(f64, f64, f64, f64)]) -> String {
    let (t_lo, t_hi) = match (series.first(), series.last()) {
        (Some(a), Some(b)) if b.0 > a.0 => (a.0, b.0),
        (Some(a), _) => (a.0 - 1.0, a.0 + 1.0),
        _ => (0.0, 1.0),
    };
    let y_max = series
        .iter()
        .flat_map(|&(_, m, c, b)| [m + c, b])
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max);
    let y_hi = if y_max > 0.0 { y_max * 1.05 } else { 1.0 };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |t: f64| LEFT + (t - t_lo) / (t_hi - t_lo) * plot_w;
    let py = |v: f64| TOP + plot_h - v.max(0.0) / y_hi * plot_h;
    let path = |pts: &mut dyn Iterator<Item = (f64, f64)>| {
        pts.map(|(x, y)| format!("{x:.2},{y:.2}"))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">cumulative {title}</text>"#,
        WIDTH / 2.0
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let (tx, ty) = (t_lo + f * (t_hi - t_lo), f * y_hi);
        let (x, y) = (px(tx), py(ty));
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 19.0,
            tick_label(tx)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0,
            tick_label(ty)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">t</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">cumulative value</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    if series.len() >= 2 {
        let upper = series.iter().map(|&(t, m, c, _)| (px(t), py(m + c)));
        let lower = series.iter().rev().map(|&(t, m, c, _)| (px(t), py(m - c)));
        let _ = writeln!(
            s,
            r##"<polygon class="ci" points="{}" fill="#1f77b4" fill-opacity="0.2" stroke="none"/>"##,
            path(&mut upper.chain(lower))
        );
        let _ = writeln!(
            s,
            r##"<polyline class="mean" points="{}" fill="none" stroke="#1f77b4" stroke-width="2"/>"##,
            path(&mut series.iter().map(|&(t, m, _, _)| (px(t), py(m))))
        );
        let _ = writeln!(
            s,
            r#"<polyline class="bound" points="{}" fill="none" stroke="black" stroke-dasharray="2 4"/>"#,
            path(&mut series.iter().map(|&(t, _, _, b)| (px(t), py(b))))
        );
    } else if let Some(&(t, m, c, b)) = series.first() {
        let _ = writeln!(
            s,
            r##"<line class="ci" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#1f77b4" stroke-opacity="0.4" stroke-width="6"/>"##,
            py(m + c),
            py(m - c),
            x = px(t)
        );
        let _ = writeln!(
            s,
            r##"<circle class="mean" cx="{:.2}" cy="{:.2}" r="4" fill="#1f77b4"/>"##,
            px(t),
            py(m)
        );
        let _ = writeln!(
            s,
            r#"<circle class="bound" cx="{:.2}" cy="{:.2}" r="4" fill="none" stroke="black" stroke-dasharray="2 2"/>"#,
            px(t),
            py(b)
        );
    }

    let lx = LEFT + 12.0;
    let _ = writeln!(
        s,
        r##"<line x1="{lx}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#1f77b4" stroke-width="2"/><text x="{:.2}" y="{:.2}">mean (95% CI shaded)</text>"##,
        TOP + 14.0,
        lx + 24.0,
        TOP + 14.0,
        lx + 30.0,
        TOP + 18.0
    );
    let _ = writeln!(
        s,
        r#"<line x1="{lx}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-dasharray="2 4"/><text x="{:.2}" y="{:.2}">theoretical bound</text>"#,
        TOP + 32.0,
        lx + 24.0,
        TOP + 32.0,
        lx + 30.0,
        TOP + 36.0
    );
    s.push_str("</svg>\n");
    s
}

/// Writes `<stem>_<metric>.svg` for every metric into `out_dir`.
pub fn plot_summary(input: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let text = std::fs::read_to_string(input)
        .map_err(|e| CliError::Core(incentive_bandit::Error::io(input, e)))?;
    let table = SummaryTable::parse(&text, input)?;
    let stem = input
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("summary");
    let mut written = Vec::new();
    for (suffix, title, mean_col, ci_col) in METRICS {
        let path = out_dir.join(format!("{stem}_{suffix}.svg"));
        write_file(&path, &render_svg(title, &table.series(mean_col, ci_col)))?;
        written.push(path);
    }
    Ok(written)
}
