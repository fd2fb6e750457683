use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::RunRecord;
use crate::error::{Error, Result};
use crate::policy::Algorithm;

/// Cumulative regret across seeds at one `(algorithm, t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub t: usize,
    pub seeds: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single seed.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

/// Mean and standard deviation of cumulative regret per `(algorithm, t)`,
/// sorted by algorithm then `t`. Values are summed in sorted order, so the
/// result does not depend on the order of the records.
pub fn aggregate(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(Algorithm, usize), Vec<f64>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.algorithm, r.t))
            .or_default()
            .push(r.cumulative_regret);
    }
    groups
        .into_iter()
        .map(|((algorithm, t), mut v)| {
            v.sort_by(f64::total_cmp);
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let std = if v.len() > 1 {
                (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            SummaryRow {
                algorithm,
                t,
                seeds: v.len(),
                mean,
                std,
                min: v[0],
                max: v[v.len() - 1],
            }
        })
        .collect()
}

/// Paths written by [`emit_outputs`].
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFiles {
    pub runs: PathBuf,
    pub summary: PathBuf,
    pub plot: Option<PathBuf>,
}

/// Writes `runs.csv`, `summary.csv` and, if `plot`, `regret.svg` into `dir`.
pub fn emit_outputs(records: &[RunRecord], dir: &Path, plot: bool) -> Result<OutputFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let summary = aggregate(records);
    let runs_path = dir.join("runs.csv");
    let summary_path = dir.join("summary.csv");
    write_csv::<RunRecord>(&runs_path, records, RUN_HEADER)?;
    write_csv::<SummaryRow>(&summary_path, &summary, SUMMARY_HEADER)?;
    let plot_path = if plot {
        let path = dir.join("regret.svg");
        fs::write(&path, render_svg(&summary)).map_err(|e| Error::io(&path, e))?;
        Some(path)
    } else {
        None
    };
    Ok(OutputFiles {
        runs: runs_path,
        summary: summary_path,
        plot: plot_path,
    })
}

const RUN_HEADER: &[&str] = &[
    "run_id",
    "seed",
    "algorithm",
    "t",
    "explored",
    "matched",
    "arm",
    "reward",
    "regret",
    "cumulative_regret",
];

const SUMMARY_HEADER: &[&str] = &["algorithm", "t", "seeds", "mean", "std", "min", "max"];

fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    // The serializer only emits a header alongside the first row, so write it
    // by hand to keep empty outputs well-formed.
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| Error::csv(path, e))
}

pub fn read_runs(path: &Path) -> Result<Vec<RunRecord>> {
    read_csv(path)
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    read_csv(path)
}

const PALETTE: [&str; 7] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf",
];

/// Line plot of mean cumulative regret with a shaded ±1 std band, one
/// `<polyline>` per algorithm.
pub fn render_svg(summary: &[SummaryRow]) -> String {
    const W: f64 = 720.0;
    const H: f64 = 440.0;
    const LEFT: f64 = 70.0;
    const RIGHT: f64 = 150.0;
    const TOP: f64 = 20.0;
    const BOTTOM: f64 = 50.0;

    let mut series: BTreeMap<Algorithm, Vec<&SummaryRow>> = BTreeMap::new();
    for row in summary {
        series.entry(row.algorithm).or_default().push(row);
    }
    let t_max = summary.iter().map(|r| r.t).max().unwrap_or(1).max(1) as f64;
    let y_max = summary
        .iter()
        .map(|r| r.mean + r.std)
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let sx = |t: f64| LEFT + (W - LEFT - RIGHT) * t / t_max;
    let sy = |y: f64| H - BOTTOM - (H - TOP - BOTTOM) * y.max(0.0) / y_max;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let (x0, x1, y0, y1) = (sx(0.0), sx(t_max), sy(0.0), sy(y_max));
    let _ = writeln!(
        svg,
        r#"<path d="M{x0:.1},{y1:.1} L{x0:.1},{y0:.1} L{x1:.1},{y0:.1}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let frac = i as f64 / 4.0;
        let (tx, vy) = (t_max * frac, y_max * frac);
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.0}</text>"#,
            sx(tx),
            y0 + 18.0,
            tx
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            x0 - 6.0,
            sy(vy) + 4.0,
            format_tick(vy)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">round t</text>"#,
        (x0 + x1) / 2.0,
        H - 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">cumulative regret</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );

    for (i, (algo, rows)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let upper = rows.iter().map(|r| (sx(r.t as f64), sy(r.mean + r.std)));
        let lower = rows.iter().rev().map(|r| (sx(r.t as f64), sy(r.mean - r.std)));
        let band: Vec<String> = upper
            .chain(lower)
            .map(|(x, y)| format!("{x:.1},{y:.1}"))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#,
            band.join(" ")
        );
        let line: Vec<String> = rows
            .iter()
            .map(|r| format!("{:.1},{:.1}", sx(r.t as f64), sy(r.mean)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline data-algorithm="{algo}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            line.join(" ")
        );
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{algo}</text>"#,
            x1 + 12.0,
            x1 + 32.0,
            x1 + 38.0,
            ly + 4.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn format_tick(v: f64) -> String {
    if v >= 100.0 {
        format!("{v:.0}")
    } else if v >= 1.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.3}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(algorithm: Algorithm, seed: u64, t: usize, cum: f64) -> RunRecord {
        RunRecord {
            run_id: seed as usize,
            seed,
            algorithm,
            t,
            explored: false,
            matched: false,
            arm: 0,
            reward: 0.0,
            regret: 0.0,
            cumulative_regret: cum,
        }
    }

    #[test]
    fn single_seed_has_zero_std() {
        let rows = aggregate(&[rec(Algorithm::LinUcb, 1, 1, 0.3), rec(Algorithm::LinUcb, 1, 2, 0.9)]);
        assert!(rows.iter().all(|r| r.std == 0.0 && r.seeds == 1));
    }

    #[test]
    fn two_seed_mean_and_std() {
        let rows = aggregate(&[rec(Algorithm::LinTs, 1, 5, 3.0), rec(Algorithm::LinTs, 2, 5, 5.0)]);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].mean, 4.0);
        assert!((rows[0].std - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn svg_has_one_polyline_per_algorithm() {
        let rows = aggregate(&[
            rec(Algorithm::LinTs, 1, 1, 1.0),
            rec(Algorithm::LinTs, 1, 2, 2.0),
            rec(Algorithm::UcbDelta, 1, 1, 0.5),
        ]);
        let svg = render_svg(&rows);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }
}
