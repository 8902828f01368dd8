//! Standalone SVG plots rendered from result tables.

use plotters::prelude::*;

use crate::config::StudyKind;
use crate::run::StudyResult;
use crate::table::Table;

type Series = (String, Vec<(f64, f64)>);

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(255, 127, 14),
    RGBColor(148, 103, 189),
    RGBColor(90, 90, 90),
];

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = 0.1 * lo.abs().max(1.0);
        (lo - pad, hi + pad)
    }
}

fn bounds<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    padded(lo, hi)
}

/// Line plot; non-finite points are dropped, and with no data the axes are still drawn.
pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (720, 480)).into_drawing_area();
        let _ = draw_lines(&root, title, xlabel, ylabel, series);
        let _ = root.present();
    }
    svg
}

fn draw_lines(
    root: &DrawingArea<SVGBackend<'_>, plotters::coord::Shift>,
    title: &str,
    xlabel: &str,
    ylabel: &str,
    series: &[Series],
) -> Result<(), Box<dyn std::error::Error>> {
    root.fill(&WHITE)?;
    let clean: Vec<Series> = series
        .iter()
        .map(|(n, pts)| (n.clone(), pts.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect()))
        .filter(|(_, pts): &Series| !pts.is_empty())
        .collect();
    let xr = bounds(clean.iter().flat_map(|(_, p)| p.iter().map(|(x, _)| x)));
    let yr = bounds(clean.iter().flat_map(|(_, p)| p.iter().map(|(_, y)| y)));
    let mut chart = ChartBuilder::on(root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(xr.0..xr.1, yr.0..yr.1)?;
    chart.configure_mesh().x_desc(xlabel).y_desc(ylabel).draw()?;
    for (i, (name, pts)) in clean.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(pts.clone(), color.stroke_width(2)))?
            .label(name.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
        chart.draw_series(pts.iter().map(|&p| Circle::new(p, 3, color.filled())))?;
    }
    if !clean.is_empty() {
        chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw()?;
    }
    Ok(())
}

fn color_scale(t: f64) -> RGBColor {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { return RGBColor(220, 220, 220) };
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    RGBColor(lerp(40.0, 240.0), lerp(60.0, 200.0), lerp(160.0, 40.0))
}

/// Heat map of `z` over the distinct values of `x` and `y`, drawn on index axes.
pub fn heatmap(title: &str, xlabel: &str, ylabel: &str, cells: &[(f64, f64, f64)]) -> String {
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (720, 480)).into_drawing_area();
        let _ = draw_heatmap(&root, title, xlabel, ylabel, cells);
        let _ = root.present();
    }
    svg
}

fn distinct(mut v: Vec<f64>) -> Vec<f64> {
    v.retain(|x| x.is_finite());
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup();
    v
}

fn draw_heatmap(
    root: &DrawingArea<SVGBackend<'_>, plotters::coord::Shift>,
    title: &str,
    xlabel: &str,
    ylabel: &str,
    cells: &[(f64, f64, f64)],
) -> Result<(), Box<dyn std::error::Error>> {
    root.fill(&WHITE)?;
    let xs = distinct(cells.iter().map(|c| c.0).collect());
    let ys = distinct(cells.iter().map(|c| c.1).collect());
    let (zlo, zhi) = cells.iter().map(|c| c.2).filter(|z| z.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), z| (a.min(z), b.max(z)));
    let nx = xs.len().max(1);
    let ny = ys.len().max(1);
    let xs_l = xs.clone();
    let ys_l = ys.clone();
    let mut chart = ChartBuilder::on(root)
        .caption(format!("{title} (range {zlo:.3e} .. {zhi:.3e})"), ("sans-serif", 18))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(0f64..nx as f64, 0f64..ny as f64)?;
    chart
        .configure_mesh()
        .disable_mesh()
        .x_labels(nx.min(12))
        .y_labels(ny.min(12))
        .x_label_formatter(&move |v| label_at(&xs_l, *v))
        .y_label_formatter(&move |v| label_at(&ys_l, *v))
        .x_desc(xlabel)
        .y_desc(ylabel)
        .draw()?;
    let span = if zhi > zlo { zhi - zlo } else { 1.0 };
    chart.draw_series(cells.iter().filter_map(|&(x, y, z)| {
        let i = xs.iter().position(|&v| v == x)? as f64;
        let j = ys.iter().position(|&v| v == y)? as f64;
        Some(Rectangle::new([(i, j), (i + 1.0, j + 1.0)], color_scale((z - zlo) / span).filled()))
    }))?;
    Ok(())
}

fn label_at(values: &[f64], v: f64) -> String {
    let i = v.floor();
    if i >= 0.0 && (i as usize) < values.len() && (v - i - 0.5).abs() < 0.5 {
        format!("{:.3}", values[i as usize])
    } else {
        String::new()
    }
}

fn series(t: &Table, x: &str, ys: &[(&str, &str)]) -> Vec<Series> {
    let xv = t.values(x);
    ys.iter()
        .map(|(col, label)| (label.to_string(), xv.iter().copied().zip(t.values(col)).collect()))
        .filter(|(_, pts): &Series| pts.iter().any(|(_, y)| y.is_finite()) || t.rows.is_empty())
        .collect()
}

/// File name and SVG text for every plot derived from `result`.
pub fn emit_plots(result: &StudyResult) -> Vec<(String, String)> {
    let mut out = Vec::new();
    match result.kind {
        StudyKind::Converge => {
            if let Some(t) = result.table("converge") {
                let s = series(
                    t,
                    "N",
                    &[
                        ("energy_per_particle", "ED E(N)/N"),
                        ("e_hartree", "Hartree"),
                        ("e_hartree_product", "Hartree (N-1 pairs)"),
                        ("e_hartree_local", "Hartree (local)"),
                        ("e_gp", "GP"),
                    ],
                );
                out.push(("energy_vs_n.svg".into(), line_plot("Energy per particle", "N", "E/N", &s)));
                let s = series(t, "N", &[("depletion", "1 - λmax(γ1)")]);
                out.push(("depletion_vs_n.svg".into(), line_plot("Depletion", "N", "depletion", &s)));
            }
        }
        StudyKind::NlStudy => {
            if let Some(t) = result.table("nl_study") {
                let eps = t.values("eps");
                let s = t.values("s");
                let gap = t.values("gap");
                let mut lines: Vec<Series> = Vec::new();
                for e in distinct(eps.clone()) {
                    let pts = eps.iter().zip(&s).zip(&gap).filter(|((x, _), _)| **x == e).map(|((_, s), g)| (*s, *g)).collect();
                    lines.push((format!("ε = {e}"), pts));
                }
                out.push(("gap_vs_s.svg".into(), line_plot("Relative gap to e_GP", "s", "gap", &lines)));
                let cells: Vec<(f64, f64, f64)> = s.iter().zip(&eps).zip(&gap).map(|((s, e), g)| (*s, *e, *g)).collect();
                out.push(("gap_heatmap.svg".into(), heatmap("Gap over (ε, s)", "s", "ε", &cells)));
            }
        }
        StudyKind::GpMinimize => {
            if let Some(t) = result.table("energy_trace") {
                let s = series(t, "iteration", &[("energy", "energy")]);
                out.push(("energy_trace.svg".into(), line_plot("GP energy along the descent", "iteration", "energy", &s)));
            }
        }
        StudyKind::ManybodyEd => {
            if let Some(t) = result.table("rdm_spectrum") {
                let s = series(t, "index", &[("eigenvalue", "eigenvalue")]);
                out.push(("rdm_spectrum.svg".into(), line_plot("Density-matrix spectrum", "index", "eigenvalue", &s)));
            }
        }
        StudyKind::Scatter => {
            if let Some(t) = result.table("scatter") {
                let s = series(t, "index", &[("eight_pi_a", "8πa"), ("integral_w", "∫w")]);
                out.push(("born_gap.svg".into(), line_plot("Scattering mass vs Born value", "potential", "value", &s)));
            }
        }
        StudyKind::IneqCheck => {}
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_data_still_draws_axes() {
        let svg = line_plot("empty", "x", "y", &[]);
        assert!(svg.starts_with("<svg") && svg.contains("</svg>"));
        let svg = line_plot("nan", "x", "y", &[("a".into(), vec![(f64::NAN, 1.0)])]);
        assert!(svg.contains("</svg>"));
        let svg = heatmap("empty", "x", "y", &[]);
        assert!(svg.contains("</svg>"));
    }

    #[test]
    fn heatmap_has_one_cell_per_entry() {
        let cells = [(1.0, 0.1, 0.3), (2.0, 0.1, 0.2), (1.0, 0.5, 0.1), (2.0, 0.5, f64::NAN)];
        let svg = heatmap("h", "s", "eps", &cells);
        assert!(svg.matches("<rect").count() >= 4);
    }
}
