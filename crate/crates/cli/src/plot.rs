//! SVG charts rendered from report tables.

use std::path::Path;

use plotters::prelude::*;

use crate::args::{PlotArgs, PlotKind};
use crate::commands::write;
use crate::error::CliError;
use crate::manifest::write_manifest;

const SIZE: (u32, u32) = (900, 600);

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut lines = text.lines().filter(|l| !l.is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| CliError::Data(format!("{}: empty table", path.display())))?
            .split('\t')
            .map(String::from)
            .collect();
        let rows: Vec<Vec<String>> = lines.map(|l| l.split('\t').map(String::from).collect()).collect();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != header.len()) {
            return Err(CliError::Data(format!(
                "{}: row {} has {} cells, header has {}",
                path.display(),
                i + 1,
                r.len(),
                header.len()
            )));
        }
        Ok(Self { header, rows })
    }

    fn col(&self, names: &[&str]) -> Option<usize> {
        names.iter().find_map(|n| self.header.iter().position(|h| h == n))
    }

    fn num(&self, row: usize, col: usize) -> Result<f64, CliError> {
        self.rows[row][col]
            .parse()
            .map_err(|_| CliError::Data(format!("cell {:?} in column {} is not a number", self.rows[row][col], self.header[col])))
    }
}

fn draw_err<E: std::fmt::Debug>(e: E) -> CliError {
    CliError::Data(format!("plot: {e:?}"))
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    let span = (hi - lo).abs().max(1e-9);
    (lo - 0.05 * span, hi + 0.05 * span)
}

fn frontier(t: &Table, title: &str, svg: &mut String) -> Result<(), CliError> {
    let missing = || CliError::Data("frontier plots need p, cost_per_10k and acc_mean/accuracy columns".into());
    let pc = t.col(&["p"]).ok_or_else(missing)?;
    let xc = t.col(&["cost_per_10k"]).ok_or_else(missing)?;
    let yc = t.col(&["acc_mean", "accuracy"]).ok_or_else(missing)?;
    let mut pts = (0..t.rows.len())
        .map(|r| Ok((t.num(r, xc)?, t.num(r, yc)?, t.rows[r][pc].clone())))
        .collect::<Result<Vec<_>, CliError>>()?;
    if pts.is_empty() {
        return Err(CliError::Data("frontier table has no rows".into()));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (x0, x1) = padded(pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min), pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max));
    let (y0, y1) = padded(pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min), pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max));

    let root = SVGBackend::with_string(svg, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(20)
        .x_label_area_size(45)
        .y_label_area_size(60)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(draw_err)?;
    chart.configure_mesh().x_desc("cost per 10k queries ($)").y_desc("accuracy").draw().map_err(draw_err)?;
    chart.draw_series(LineSeries::new(pts.iter().map(|p| (p.0, p.1)), &BLUE)).map_err(draw_err)?;
    chart
        .draw_series(pts.iter().map(|p| {
            EmptyElement::at((p.0, p.1))
                + Circle::new((0, 0), 4, BLUE.filled())
                + Text::new(format!("p={}", p.2), (6, -14), ("sans-serif", 12))
        }))
        .map_err(draw_err)?;
    root.present().map_err(draw_err)
}

fn hetero(t: &Table, title: &str, svg: &mut String) -> Result<(), CliError> {
    let names: Vec<String> = t.header[1..].to_vec();
    let k = names.len();
    if t.rows.len() != k {
        return Err(CliError::Data(format!("heterogeneity table has {} rows for {k} arms", t.rows.len())));
    }
    let mut cells = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            cells.push((i, j, t.num(i, j + 1)?));
        }
    }
    let max = cells.iter().map(|c| c.2).fold(0.0, f64::max).max(1.0);

    let root = SVGBackend::with_string(svg, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(20)
        .x_label_area_size(60)
        .y_label_area_size(120)
        .build_cartesian_2d(0..k, 0..k)
        .map_err(draw_err)?;
    let label = |v: &usize| names.get(*v).cloned().unwrap_or_default();
    chart
        .configure_mesh()
        .disable_mesh()
        .x_labels(k)
        .y_labels(k)
        .x_label_formatter(&label)
        .y_label_formatter(&label)
        .x_desc("not correct by")
        .y_desc("correct by")
        .draw()
        .map_err(draw_err)?;
    chart
        .draw_series(cells.iter().map(|&(i, j, v)| {
            let shade = (255.0 * (1.0 - v / max)) as u8;
            Rectangle::new([(j, k - 1 - i), (j + 1, k - i)], RGBColor(255, shade, shade).filled())
        }))
        .map_err(draw_err)?;
    chart
        .draw_series(cells.iter().map(|&(i, j, v)| {
            EmptyElement::at((j, k - i)) + Text::new(format!("{v}"), (10, 10), ("sans-serif", 14))
        }))
        .map_err(draw_err)?;
    root.present().map_err(draw_err)
}

fn selection(t: &Table, row: usize, title: &str, svg: &mut String) -> Result<(), CliError> {
    if row >= t.rows.len() {
        return Err(CliError::Usage(format!("--row {row}: table has {} data rows", t.rows.len())));
    }
    let mut bars = Vec::new();
    for (c, h) in t.header.iter().enumerate() {
        if let Some(arm) = h.strip_suffix("_correct") {
            let ic = t
                .col(&[&format!("{arm}_incorrect")])
                .ok_or_else(|| CliError::Data(format!("no {arm}_incorrect column")))?;
            bars.push((arm.to_string(), t.num(row, c)?, t.num(row, ic)?));
        }
    }
    if bars.is_empty() {
        return Err(CliError::Data("selection plots need <arm>_correct / <arm>_incorrect columns".into()));
    }
    let k = bars.len();
    let top = bars.iter().map(|b| b.1 + b.2).fold(0.0, f64::max).max(1.0) * 1.05;

    let root = SVGBackend::with_string(svg, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(20)
        .x_label_area_size(45)
        .y_label_area_size(60)
        .build_cartesian_2d((0..k).into_segmented(), 0.0..top)
        .map_err(draw_err)?;
    chart
        .configure_mesh()
        .disable_x_mesh()
        .x_label_formatter(&|v| match v {
            SegmentValue::CenterOf(i) => bars.get(*i).map(|b| b.0.clone()).unwrap_or_default(),
            _ => String::new(),
        })
        .y_desc("selections")
        .draw()
        .map_err(draw_err)?;
    let green = RGBColor(46, 139, 87);
    let red = RGBColor(205, 92, 92);
    chart
        .draw_series(bars.iter().enumerate().map(|(i, b)| {
            Rectangle::new([(SegmentValue::Exact(i), 0.0), (SegmentValue::Exact(i + 1), b.1)], green.filled())
        }))
        .map_err(draw_err)?
        .label("correct")
        .legend(move |(x, y)| Rectangle::new([(x, y - 5), (x + 10, y + 5)], green.filled()));
    chart
        .draw_series(bars.iter().enumerate().map(|(i, b)| {
            Rectangle::new([(SegmentValue::Exact(i), b.1), (SegmentValue::Exact(i + 1), b.1 + b.2)], red.filled())
        }))
        .map_err(draw_err)?
        .label("incorrect")
        .legend(move |(x, y)| Rectangle::new([(x, y - 5), (x + 10, y + 5)], red.filled()));
    chart.configure_series_labels().border_style(BLACK).background_style(WHITE).draw().map_err(draw_err)?;
    root.present().map_err(draw_err)
}

pub fn plot(a: &PlotArgs) -> Result<(), CliError> {
    let table = Table::read(&a.input)?;
    let mut svg = String::new();
    let default_title = match a.kind {
        PlotKind::Frontier => "Cost-accuracy frontier",
        PlotKind::Hetero => "Correct by row arm, wrong by column arm",
        PlotKind::Selection => "Selections by arm",
    };
    let title = a.title.as_deref().unwrap_or(default_title);
    match a.kind {
        PlotKind::Frontier => frontier(&table, title, &mut svg)?,
        PlotKind::Hetero => hetero(&table, title, &mut svg)?,
        PlotKind::Selection => selection(&table, a.row, title, &mut svg)?,
    }
    write(&a.out, svg)?;
    write_manifest(&a.out, "plot", a, None, std::slice::from_ref(&a.out))?;
    println!("wrote {}", a.out.display());
    Ok(())
}
