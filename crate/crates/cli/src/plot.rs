use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use plotters::prelude::*;

use crate::table::{ResultTable, Row, ValueKind};
use crate::CliError;

fn plot_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Plot(e.to_string())
}

fn is_wigner(row: &Row) -> bool {
    row.zp.is_empty() && !row.z.is_empty()
}

fn first_coord(s: &str) -> f64 {
    s.split(';').next().and_then(|x| x.parse().ok()).unwrap_or(0.0)
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// Writes the panels present in the table into `dir` and returns the written paths.
///
/// err vs eps (log-log), micro vs limit across offsets at the smallest eps, and a Wigner heatmap over (r, theta).
/// An empty table writes nothing and prints a warning.
pub fn render_plots(table: &ResultTable, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    if table.rows.is_empty() {
        eprintln!("warning: result table is empty, no plots written");
        return Ok(Vec::new());
    }
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut experiments: Vec<&str> = table.rows.iter().map(|r| r.experiment.as_str()).collect();
    experiments.dedup();
    for exp in experiments {
        let rows: Vec<&Row> = table.rows.iter().filter(|r| r.experiment == exp).collect();
        if let Some(p) = err_plot(exp, &rows, dir)? {
            written.push(p);
        }
        if rows.iter().any(|r| is_wigner(r)) {
            if let Some(p) = wigner_heatmap(exp, &rows, dir)? {
                written.push(p);
            }
        } else if let Some(p) = overlay_plot(exp, &rows, dir)? {
            written.push(p);
        }
    }
    Ok(written)
}

fn err_plot(exp: &str, rows: &[&Row], dir: &Path) -> Result<Option<PathBuf>, CliError> {
    let mut worst: BTreeMap<u64, f64> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.kind == ValueKind::Err && r.eps > 0.0) {
        let e = worst.entry(r.eps.to_bits()).or_insert(0.0);
        *e = e.max(r.re.abs());
    }
    let pts: Vec<(f64, f64)> = worst.into_iter().map(|(b, e)| (f64::from_bits(b), e)).filter(|p| p.1 > 0.0).collect();
    if pts.is_empty() {
        return Ok(None);
    }
    let path = dir.join(format!("{exp}-err.svg"));
    {
        let root = SVGBackend::new(&path, (640, 480)).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let (xlo, xhi) = pts.iter().fold((f64::MAX, f64::MIN), |a, p| (a.0.min(p.0), a.1.max(p.0)));
        let (ylo, yhi) = pts.iter().fold((f64::MAX, f64::MIN), |a, p| (a.0.min(p.1), a.1.max(p.1)));
        let mut chart = ChartBuilder::on(&root)
            .caption(format!("{exp}: max error"), ("sans-serif", 20))
            .margin(10)
            .x_label_area_size(40)
            .y_label_area_size(70)
            .build_cartesian_2d((xlo / 1.5..xhi * 1.5).log_scale(), (ylo / 2.0..yhi * 2.0).log_scale())
            .map_err(plot_err)?;
        chart.configure_mesh().x_desc("eps").y_desc("max |micro - limit|").draw().map_err(plot_err)?;
        chart.draw_series(LineSeries::new(pts.iter().copied(), &BLUE)).map_err(plot_err)?;
        chart.draw_series(pts.iter().map(|&p| Circle::new(p, 4, BLUE.filled()))).map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(Some(path))
}

fn overlay_plot(exp: &str, rows: &[&Row], dir: &Path) -> Result<Option<PathBuf>, CliError> {
    let Some(eps) = rows.iter().filter(|r| r.kind == ValueKind::Micro).map(|r| r.eps).reduce(f64::min) else {
        return Ok(None);
    };
    let Some(first) = rows.iter().find(|r| r.kind == ValueKind::Micro && r.eps == eps) else {
        return Ok(None);
    };
    let (i, j) = (first.i, first.j);
    let pick = |kinds: &[ValueKind]| -> Vec<(f64, f64)> {
        rows.iter()
            .filter(|r| r.eps == eps && r.i == i && r.j == j && kinds.contains(&r.kind))
            .enumerate()
            .map(|(k, r)| (k as f64, r.re))
            .collect()
    };
    let micro = pick(&[ValueKind::Micro]);
    let limit = pick(&[ValueKind::Limit, ValueKind::NsLimit]);
    let all = micro.iter().chain(&limit);
    let (ylo, yhi) = padded(all.clone().map(|p| p.1).fold(f64::MAX, f64::min), all.map(|p| p.1).fold(f64::MIN, f64::max));
    let path = dir.join(format!("{exp}-overlay.svg"));
    {
        let root = SVGBackend::new(&path, (640, 480)).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(format!("{exp}: entry ({i},{j}) at eps = {eps}"), ("sans-serif", 20))
            .margin(10)
            .x_label_area_size(40)
            .y_label_area_size(70)
            .build_cartesian_2d(-0.5..(micro.len().max(1) as f64 - 0.5), ylo..yhi)
            .map_err(plot_err)?;
        chart.configure_mesh().x_desc("offset pair").y_desc("value").draw().map_err(plot_err)?;
        chart
            .draw_series(micro.iter().map(|&p| Circle::new(p, 4, BLUE.filled())))
            .map_err(plot_err)?
            .label("micro")
            .legend(|(x, y)| Circle::new((x, y), 4, BLUE.filled()));
        chart
            .draw_series(LineSeries::new(limit.iter().copied(), &RED))
            .map_err(plot_err)?
            .label("limit")
            .legend(|(x, y)| PathElement::new(vec![(x - 8, y), (x + 8, y)], RED));
        chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw().map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(Some(path))
}

fn wigner_heatmap(exp: &str, rows: &[&Row], dir: &Path) -> Result<Option<PathBuf>, CliError> {
    let Some(eps) = rows.iter().filter(|r| is_wigner(r) && r.kind == ValueKind::Micro).map(|r| r.eps).reduce(f64::min) else {
        return Ok(None);
    };
    let cells: Vec<(f64, f64, f64)> = rows
        .iter()
        .filter(|r| r.eps == eps && r.kind == ValueKind::Micro && r.i == 0 && r.j == 0)
        .map(|r| (first_coord(&r.r), first_coord(&r.z), r.re))
        .collect();
    let mut rs: Vec<f64> = cells.iter().map(|c| c.0).collect();
    let mut ths: Vec<f64> = cells.iter().map(|c| c.1).collect();
    for v in [&mut rs, &mut ths] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    let edges = |v: &[f64]| -> Vec<f64> {
        let step = if v.len() > 1 { (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64 } else { 1.0 };
        v.iter().map(|x| x - 0.5 * step).chain(std::iter::once(v[v.len() - 1] + 0.5 * step)).collect()
    };
    let (re, te) = (edges(&rs), edges(&ths));
    let (vlo, vhi) = padded(cells.iter().map(|c| c.2).fold(f64::MAX, f64::min), cells.iter().map(|c| c.2).fold(f64::MIN, f64::max));
    let colour = |x: f64| ViridisRGB::get_color_normalized(x, vlo, vhi);

    let path = dir.join(format!("{exp}-wigner.svg"));
    {
        let root = SVGBackend::new(&path, (760, 520)).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let (main, bar) = root.split_horizontally(640);
        let mut chart = ChartBuilder::on(&main)
            .caption(format!("{exp}: Re W(0,0) at eps = {eps}"), ("sans-serif", 20))
            .margin(10)
            .x_label_area_size(40)
            .y_label_area_size(60)
            .build_cartesian_2d(re[0]..re[re.len() - 1], te[0]..te[te.len() - 1])
            .map_err(plot_err)?;
        chart.configure_mesh().disable_mesh().x_desc("r").y_desc("theta").draw().map_err(plot_err)?;
        chart
            .draw_series(cells.iter().map(|&(r, th, x)| {
                let a = rs.iter().position(|&v| v == r).unwrap_or(0);
                let b = ths.iter().position(|&v| v == th).unwrap_or(0);
                Rectangle::new([(re[a], te[b]), (re[a + 1], te[b + 1])], colour(x).filled())
            }))
            .map_err(plot_err)?;
        let mut scale = ChartBuilder::on(&bar)
            .margin_top(40)
            .margin_bottom(50)
            .margin_right(10)
            .y_label_area_size(60)
            .build_cartesian_2d(0.0..1.0, vlo..vhi)
            .map_err(plot_err)?;
        scale.configure_mesh().disable_mesh().disable_x_axis().draw().map_err(plot_err)?;
        let steps = 64;
        scale
            .draw_series((0..steps).map(|k| {
                let a = vlo + (vhi - vlo) * k as f64 / steps as f64;
                let b = vlo + (vhi - vlo) * (k + 1) as f64 / steps as f64;
                Rectangle::new([(0.0, a), (1.0, b)], colour(0.5 * (a + b)).filled())
            }))
            .map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(Some(path))
}
