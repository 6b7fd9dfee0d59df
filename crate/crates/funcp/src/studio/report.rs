//! Report emission: flat JSON test records, study tables, config snapshots
//! and self-contained SVG line plots.

use std::path::{Path, PathBuf};

use crate::cusum::CusumResult;
use crate::error::{Error, Result};
use crate::resample::TestOutcome;

use super::{StudyConfig, StudyResult};

fn json_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "null".to_string()
    }
}

fn json_opt(v: Option<usize>) -> String {
    match v {
        Some(x) => x.to_string(),
        None => "null".to_string(),
    }
}

/// Flat JSON record of a test outcome (fixed key set).
pub fn outcome_json(outcome: &TestOutcome) -> String {
    format!(
        concat!(
            "{{\"method\":\"{}\",\"n\":{},\"G\":{},\"m\":{},\"p\":{},",
            "\"block_len\":{},\"bandwidth\":{},\"B\":{},\"alpha\":{},",
            "\"statistic\":{},\"critical_value\":{},\"p_value\":{},",
            "\"reject\":{},\"argmax_k\":{},\"seed\":{}}}"
        ),
        outcome.method,
        outcome.n,
        outcome.grid_len,
        json_opt(outcome.m),
        json_opt(outcome.p),
        json_opt(outcome.block_len),
        json_opt(outcome.bandwidth),
        outcome.b,
        json_float(outcome.alpha),
        json_float(outcome.statistic),
        json_float(outcome.critical_value),
        json_float(outcome.p_value),
        outcome.reject,
        outcome.argmax_k,
        outcome.seed,
    )
}

/// Write the outcome record plus optional artifacts into `dir`:
/// `outcome.json`, and when requested `replicates.csv` (single column),
/// `cusum_profile.csv` (columns `k,value`) and `cusum_profile.svg`.
pub fn emit_test_outcome(
    outcome: &TestOutcome,
    scan: Option<&CusumResult>,
    dir: &Path,
    dump_replicates: bool,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    let json_path = dir.join("outcome.json");
    std::fs::write(&json_path, outcome_json(outcome) + "\n")
        .map_err(|e| Error::io(&json_path, e))?;
    written.push(json_path);

    if dump_replicates {
        let path = dir.join("replicates.csv");
        let mut body = String::new();
        for v in &outcome.distribution.replicates {
            body.push_str(&format!("{v}\n"));
        }
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }

    if let Some(scan) = scan {
        let csv_path = dir.join("cusum_profile.csv");
        let mut body = String::from("k,value\n");
        for (i, v) in scan.profile.iter().enumerate() {
            body.push_str(&format!("{},{v}\n", i + 1));
        }
        std::fs::write(&csv_path, body).map_err(|e| Error::io(&csv_path, e))?;
        written.push(csv_path);

        let svg_path = dir.join("cusum_profile.svg");
        let series: Vec<(f64, f64)> = scan
            .profile
            .iter()
            .enumerate()
            .map(|(i, v)| ((i + 1) as f64, *v))
            .collect();
        let svg = line_plot(
            "CUSUM profile",
            "k",
            "statistic",
            &[("profile", &series)],
            Some(("critical value", outcome.critical_value)),
        );
        std::fs::write(&svg_path, svg).map_err(|e| Error::io(&svg_path, e))?;
        written.push(svg_path);
    }
    Ok(written)
}

/// Write `table.csv` and `config.snapshot` (and `power_curve.svg` for power
/// studies) into `dir`.
pub fn emit_study(config: &StudyConfig, result: &StudyResult, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    let table_path = dir.join("table.csv");
    std::fs::write(&table_path, result.table_csv()).map_err(|e| Error::io(&table_path, e))?;
    written.push(table_path);

    let snap_path = dir.join("config.snapshot");
    std::fs::write(&snap_path, config.snapshot()).map_err(|e| Error::io(&snap_path, e))?;
    written.push(snap_path);

    if result.rows.iter().any(|r| r.jump != 0.0) {
        // power curve: one polyline per (method, alpha) over jump sizes
        let mut curves: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
        for method in &config.methods {
            for alpha in &config.alphas {
                let pts: Vec<(f64, f64)> = result
                    .rows
                    .iter()
                    .filter(|r| r.method == *method && r.alpha == *alpha)
                    .map(|r| (r.jump, r.frequency))
                    .collect();
                if !pts.is_empty() {
                    curves.push((format!("{method} a={alpha}"), pts));
                }
            }
        }
        let refs: Vec<(&str, &[(f64, f64)])> = curves
            .iter()
            .map(|(n, p)| (n.as_str(), p.as_slice()))
            .collect();
        let svg_path = dir.join("power_curve.svg");
        let svg = line_plot(
            "Size-corrected power",
            "jump",
            "rejection frequency",
            &refs,
            None,
        );
        std::fs::write(&svg_path, svg).map_err(|e| Error::io(&svg_path, e))?;
        written.push(svg_path);
    }
    Ok(written)
}

const PLOT_COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Minimal self-contained SVG line plot.
pub fn line_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(&str, &[(f64, f64)])],
    hline: Option<(&str, f64)>,
) -> String {
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (60.0, 20.0, 30.0, 45.0);
    let (pw, ph) = (w - left - right, h - top - bottom);

    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for (_, pts) in series {
        for (x, y) in pts.iter() {
            xs.push(*x);
            ys.push(*y);
        }
    }
    if let Some((_, y)) = hline {
        if y.is_finite() {
            ys.push(y);
        }
    }
    let (x_min, x_max) = bounds(&xs);
    let (y_min, y_max) = bounds(&ys);
    let sx = move |x: f64| left + (x - x_min) / (x_max - x_min) * pw;
    let sy = move |y: f64| top + ph - (y - y_min) / (y_max - y_min) * ph;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"18\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{title}</text>\n",
        w / 2.0
    ));
    // axes
    svg.push_str(&format!(
        "<line x1=\"{left:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        top + ph,
        left + pw,
        top + ph
    ));
    svg.push_str(&format!(
        "<line x1=\"{left:.2}\" y1=\"{top:.2}\" x2=\"{left:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        top + ph
    ));
    // tick labels at the extremes
    for (value, x, anchor) in [(x_min, left, "start"), (x_max, left + pw, "end")] {
        svg.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"{anchor}\">{value:.3}</text>\n",
            top + ph + 16.0
        ));
    }
    for (value, y) in [(y_min, top + ph), (y_max, top)] {
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{value:.3}</text>\n",
            left - 6.0,
            y + 4.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{x_label}</text>\n",
        left + pw / 2.0,
        h - 10.0
    ));
    svg.push_str(&format!(
        "<text x=\"14\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.2})\">{y_label}</text>\n",
        top + ph / 2.0,
        top + ph / 2.0
    ));

    if let Some((label, y)) = hline {
        if y.is_finite() {
            let yy = sy(y);
            svg.push_str(&format!(
                "<line x1=\"{left:.2}\" y1=\"{yy:.2}\" x2=\"{:.2}\" y2=\"{yy:.2}\" stroke=\"#888888\" stroke-dasharray=\"5,4\"/>\n",
                left + pw
            ));
            svg.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#555555\" text-anchor=\"end\">{label}</text>\n",
                left + pw - 4.0,
                yy - 4.0
            ));
        }
    }

    for (idx, (name, pts)) in series.iter().enumerate() {
        let color = PLOT_COLORS[idx % PLOT_COLORS.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            path.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{color}\">{name}</text>\n",
            left + pw - 150.0,
            top + 14.0 * (idx as f64 + 1.0)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        if v.is_finite() {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}
