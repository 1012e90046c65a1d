//! CSV tables, plot data and SVG line charts for a finished sweep.
//!
//! Column orders:
//!
//! * `results.csv`: `scheme,selection,feature_mode,kernel,rate,seed,m,n_test,rmse_db,error`
//! * `timings.csv`: `scheme,selection,feature_mode,kernel,rate,seed,wall_ms`
//! * `aggregates.csv`: `scheme,selection,feature_mode,kernel,rate,count,errors,mean_rmse_db,std_rmse_db`
//! * `rmse_by_scheme_<selection>.csv`: `rate`, then `<scheme>_mean,<scheme>_std` per scheme
//! * `rmse_by_arm_<scheme>.csv`: `rate`, then `<feature_mode>_<selection>_mean,…_std` per arm
//! * `kernel_ablation.csv`: `kernel,feature_mode,rate,count,errors,mean_rmse_db,std_rmse_db`

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::sweep::{AggregateRow, EvalReport, TrialRecord};
use super::Scheme;
use crate::dataset::FeatureMode;
use crate::error::{Error, Result};
use crate::selection::SelectionMethod;

const RESULTS_HEADER: [&str; 10] = [
    "scheme",
    "selection",
    "feature_mode",
    "kernel",
    "rate",
    "seed",
    "m",
    "n_test",
    "rmse_db",
    "error",
];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportFiles {
    pub written: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// A plot-data table: x values in the first column, then mean/std pairs.
struct PlotTable {
    stem: String,
    title: String,
    series: Vec<(String, Vec<(f64, f64, f64)>)>,
}

impl PlotTable {
    fn rates(&self) -> Vec<f64> {
        let mut r: Vec<f64> = self.series.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)).collect();
        r.sort_by(f64::total_cmp);
        r.dedup();
        r
    }

    fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(vec![]);
        let mut header = vec!["rate".to_string()];
        for (name, _) in &self.series {
            header.push(format!("{name}_mean"));
            header.push(format!("{name}_std"));
        }
        w.write_record(&header)?;
        for rate in self.rates() {
            let mut row = vec![rate.to_string()];
            for (_, pts) in &self.series {
                match pts.iter().find(|p| p.0 == rate) {
                    Some(&(_, m, s)) => {
                        row.push(fmt_opt(m));
                        row.push(fmt_opt(s));
                    }
                    None => row.extend([String::new(), String::new()]),
                }
            }
            w.write_record(&row)?;
        }
        finish(w)
    }

    fn plot_series(&self) -> Vec<PlotSeries> {
        self.series
            .iter()
            .map(|(name, pts)| PlotSeries {
                name: name.clone(),
                points: pts.iter().filter(|p| p.1.is_finite()).map(|p| (p.0, p.1)).collect(),
            })
            .collect()
    }
}

fn fmt_opt(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        String::new()
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Artifact(e.to_string()))
}

pub fn results_csv(records: &[TrialRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(RESULTS_HEADER)?;
    for r in records {
        w.write_record([
            r.scheme.as_str().to_string(),
            r.selection.as_str().to_string(),
            r.feature_mode.as_str().to_string(),
            r.kernel.clone(),
            r.rate.to_string(),
            r.seed.to_string(),
            r.m.to_string(),
            r.n_test.to_string(),
            r.rmse.map(|v| v.to_string()).unwrap_or_default(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    finish(w)
}

fn timings_csv(records: &[TrialRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record([
        "scheme",
        "selection",
        "feature_mode",
        "kernel",
        "rate",
        "seed",
        "wall_ms",
    ])?;
    for r in records {
        w.write_record([
            r.scheme.as_str().to_string(),
            r.selection.as_str().to_string(),
            r.feature_mode.as_str().to_string(),
            r.kernel.clone(),
            r.rate.to_string(),
            r.seed.to_string(),
            r.wall_ms.map(|v| format!("{v:.3}")).unwrap_or_default(),
        ])?;
    }
    finish(w)
}

fn aggregates_csv(rows: &[AggregateRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record([
        "scheme",
        "selection",
        "feature_mode",
        "kernel",
        "rate",
        "count",
        "errors",
        "mean_rmse_db",
        "std_rmse_db",
    ])?;
    for a in rows {
        w.write_record([
            a.scheme.as_str().to_string(),
            a.selection.as_str().to_string(),
            a.feature_mode.as_str().to_string(),
            a.kernel.clone(),
            a.rate.to_string(),
            a.count.to_string(),
            a.errors.to_string(),
            fmt_opt(a.mean),
            fmt_opt(a.std),
        ])?;
    }
    finish(w)
}

fn kernel_ablation_csv(rows: &[&AggregateRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record([
        "kernel",
        "feature_mode",
        "rate",
        "count",
        "errors",
        "mean_rmse_db",
        "std_rmse_db",
    ])?;
    for a in rows {
        w.write_record([
            a.kernel.clone(),
            a.feature_mode.as_str().to_string(),
            a.rate.to_string(),
            a.count.to_string(),
            a.errors.to_string(),
            fmt_opt(a.mean),
            fmt_opt(a.std),
        ])?;
    }
    finish(w)
}

fn uniq<T: PartialEq + Copy + Ord>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut v: Vec<T> = items.collect();
    v.sort();
    v.dedup();
    v
}

fn plot_tables(report: &EvalReport) -> Vec<PlotTable> {
    let grid: Vec<&AggregateRow> = report.aggregates.iter().filter(|a| a.kernel.is_empty()).collect();
    if grid.is_empty() {
        return vec![];
    }
    let modes = uniq(grid.iter().map(|a| a.feature_mode));
    let primary = if modes.contains(&FeatureMode::PositionPlusSim) {
        FeatureMode::PositionPlusSim
    } else {
        modes[0]
    };
    let selections = uniq(grid.iter().map(|a| a.selection));
    let schemes = uniq(grid.iter().map(|a| a.scheme));
    let points = |pred: &dyn Fn(&AggregateRow) -> bool| -> Vec<(f64, f64, f64)> {
        let mut p: Vec<(f64, f64, f64)> = grid
            .iter()
            .filter(|a| pred(a))
            .map(|a| (a.rate, a.mean, a.std))
            .collect();
        p.sort_by(|a, b| a.0.total_cmp(&b.0));
        p
    };

    let mut tables = vec![];
    for &sel in &selections {
        let series: Vec<(String, Vec<(f64, f64, f64)>)> = schemes
            .iter()
            .map(|&s| {
                (
                    s.as_str().to_string(),
                    points(&|a| a.selection == sel && a.scheme == s && a.feature_mode == primary),
                )
            })
            .filter(|(_, p)| !p.is_empty())
            .collect();
        if !series.is_empty() {
            tables.push(PlotTable {
                stem: format!("rmse_by_scheme_{sel}"),
                title: format!("RMSE vs sampling rate, {sel} selection"),
                series,
            });
        }
    }
    for &scheme in &schemes {
        let mut series = vec![];
        for &mode in &modes {
            for &sel in &selections {
                let p = points(&|a| a.scheme == scheme && a.feature_mode == mode && a.selection == sel);
                if !p.is_empty() {
                    series.push((format!("{mode}_{sel}", mode = mode.as_str()), p));
                }
            }
        }
        tables.push(PlotTable {
            stem: format!("rmse_by_arm_{scheme}"),
            title: format!("RMSE vs sampling rate, {scheme}"),
            series,
        });
    }
    tables
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

const PALETTE: [&str; 12] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#393b79", "#637939",
];

/// Standalone SVG line chart, one polyline per series.
pub fn render_svg(title: &str, x_label: &str, y_label: &str, series: &[PlotSeries]) -> String {
    let (w, h) = (720.0, 440.0);
    let (left, right, top, bottom) = (70.0, 220.0, 40.0, 60.0);
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    let bounds = |vals: Vec<f64>| {
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        match (lo.is_finite(), hi > lo) {
            (false, _) => (0.0, 1.0),
            (true, false) => (lo - 0.5, lo + 0.5),
            (true, true) => {
                let pad = 0.05 * (hi - lo);
                (lo - pad, hi + pad)
            }
        }
    };
    let (x0, x1) = bounds(all.iter().map(|p| p.0).collect());
    let (y0, y1) = bounds(all.iter().map(|p| p.1).collect());
    let pw = w - left - right;
    let ph = h - top - bottom;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        left + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r##"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##
    );
    for i in 0..=5 {
        let y = y0 + (y1 - y0) * i as f64 / 5.0;
        let py = sy(y);
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{py:.2}" x2="{}" y2="{py:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">{y:.2}</text>"##,
            left + pw,
            left - 6.0,
            py + 4.0
        );
    }
    let mut xs: Vec<f64> = all.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    for x in xs {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{x}</text>"#,
            sx(x),
            top + ph + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        h - 16.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(18 {}) rotate(-90)" text-anchor="middle">{}</text>"#,
        top + ph / 2.0,
        escape(y_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let name = escape(&ser.name);
        let pts: Vec<String> = ser
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(s, r#"<g data-series="{name}">"#);
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        for &(x, y) in &ser.points {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sx(x),
                sy(y)
            );
        }
        let ly = top + 10.0 + 18.0 * i as f64;
        let lx = w - right + 16.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{name}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0
        );
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}

fn write(dir: &Path, name: &str, text: &str, files: &mut ReportFiles) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text)?;
    files.written.push(path);
    Ok(())
}

/// Writes the report tables, plot data and optionally SVG charts into `dir`.
pub fn emit_report(report: &EvalReport, dir: &Path, svg: bool) -> Result<ReportFiles> {
    if report.aggregates.is_empty() {
        return Err(Error::InvalidParameter("report has no aggregates to emit".into()));
    }
    // render everything before touching the filesystem
    let mut outputs: Vec<(String, String)> = vec![
        ("results.csv".into(), results_csv(&report.records)?),
        ("aggregates.csv".into(), aggregates_csv(&report.aggregates)?),
    ];
    if report.records.iter().any(|r| r.wall_ms.is_some()) {
        outputs.push(("timings.csv".into(), timings_csv(&report.records)?));
    }
    for table in plot_tables(report) {
        outputs.push((format!("{}.csv", table.stem), table.to_csv()?));
        if svg {
            let chart = render_svg(&table.title, "sampling rate", "RMSE [dB]", &table.plot_series());
            outputs.push((format!("{}.svg", table.stem), chart));
        }
    }
    let ablation: Vec<&AggregateRow> = report.aggregates.iter().filter(|a| !a.kernel.is_empty()).collect();
    if !ablation.is_empty() {
        outputs.push(("kernel_ablation.csv".into(), kernel_ablation_csv(&ablation)?));
        if svg {
            let mut series: Vec<PlotSeries> = vec![];
            for a in &ablation {
                if !a.mean.is_finite() {
                    continue;
                }
                match series.iter_mut().find(|s| s.name == a.kernel) {
                    Some(s) => s.points.push((a.rate, a.mean)),
                    None => series.push(PlotSeries {
                        name: a.kernel.clone(),
                        points: vec![(a.rate, a.mean)],
                    }),
                }
            }
            outputs.push((
                "kernel_ablation.svg".into(),
                render_svg("Kernel comparison", "sampling rate", "RMSE [dB]", &series),
            ));
        }
    }
    std::fs::create_dir_all(dir)?;
    let mut files = ReportFiles::default();
    for (name, text) in outputs {
        write(dir, &name, &text, &mut files)?;
    }
    Ok(files)
}

/// Parses a `results.csv` written by [`emit_report`].
pub fn read_results_csv(text: &str) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != RESULTS_HEADER {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header `{}`", RESULTS_HEADER.join(",")),
        });
    }
    let mut out = vec![];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let perr = |field: &str| Error::Parse {
            line,
            msg: format!("bad {field}"),
        };
        let num = |k: usize, name: &str| rec[k].parse::<f64>().map_err(|_| perr(name));
        out.push(TrialRecord {
            scheme: rec[0].parse::<Scheme>()?,
            selection: rec[1].parse::<SelectionMethod>()?,
            feature_mode: rec[2].parse::<FeatureMode>()?,
            kernel: rec[3].to_string(),
            rate: num(4, "rate")?,
            seed: rec[5].parse().map_err(|_| perr("seed"))?,
            m: rec[6].parse().map_err(|_| perr("m"))?,
            n_test: rec[7].parse().map_err(|_| perr("n_test"))?,
            rmse: if rec[8].is_empty() {
                None
            } else {
                Some(num(8, "rmse_db")?)
            },
            error: if rec[9].is_empty() {
                None
            } else {
                Some(rec[9].to_string())
            },
            wall_ms: None,
        });
    }
    Ok(out)
}
