//! Static SVG figures: output vs reference, per-agent inputs, phases.
//! Agents 1-5 are drawn solid and agents 6-10 dashed.

use plotters::prelude::*;

use bcast_core::simulator::SimTrace;

use crate::error::CliError;

const SIZE: (u32, u32) = (960, 540);
const BUCKETS: usize = 1200;

/// Min/max envelope per bucket, kept in time order, so chattering stays visible.
fn decimate(t: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    if t.len() <= 2 * BUCKETS {
        return t.iter().copied().zip(y.iter().copied()).collect();
    }
    let per = t.len().div_ceil(BUCKETS);
    let mut out = Vec::with_capacity(2 * BUCKETS + 1);
    for start in (0..t.len()).step_by(per) {
        let end = (start + per).min(t.len());
        let (mut lo, mut hi) = (start, start);
        for k in start..end {
            if y[k] < y[lo] {
                lo = k;
            }
            if y[k] > y[hi] {
                hi = k;
            }
        }
        let (a, b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        out.push((t[a], y[a]));
        if b != a {
            out.push((t[b], y[b]));
        }
    }
    out
}

fn range(cols: &[&[f64]]) -> (f64, f64) {
    let (lo, hi) = cols
        .iter()
        .flat_map(|c| c.iter())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let pad = 0.05 * (hi - lo).max(1e-9);
    (lo - pad, hi + pad)
}

fn plot_err<E: std::fmt::Debug>(e: E) -> CliError {
    CliError::Runtime(format!("plot rendering failed: {e:?}"))
}

fn agent_color(i: usize) -> RGBColor {
    let c = Palette99::pick(i).to_rgba();
    RGBColor(c.0, c.1, c.2)
}

struct Series<'a> {
    label: String,
    y: &'a [f64],
    color: RGBColor,
    dashed: bool,
}

fn render(title: &str, y_label: &str, t: &[f64], series: &[Series]) -> Result<String, CliError> {
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let cols: Vec<&[f64]> = series.iter().map(|s| s.y).collect();
        let (y0, y1) = range(&cols);
        let t1 = t.last().copied().unwrap_or(1.0).max(1e-12);
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 22))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(60)
            .build_cartesian_2d(0.0..t1, y0..y1)
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc("t [s]")
            .y_desc(y_label)
            .draw()
            .map_err(plot_err)?;
        for s in series {
            let pts = decimate(t, s.y);
            let style = s.color.stroke_width(1);
            let color = s.color;
            if s.dashed {
                chart
                    .draw_series(DashedLineSeries::new(pts, 6, 4, style))
                    .map_err(plot_err)?
                    .label(s.label.as_str())
                    .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
            } else {
                chart
                    .draw_series(LineSeries::new(pts, style))
                    .map_err(plot_err)?
                    .label(s.label.as_str())
                    .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
            }
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .position(SeriesLabelPosition::UpperRight)
            .draw()
            .map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(svg)
}

pub fn output_plot(trace: &SimTrace) -> Result<String, CliError> {
    render(
        "Output y_p and reference y_r",
        "y",
        &trace.t,
        &[
            Series {
                label: "y_r".into(),
                y: &trace.y_r,
                color: BLACK,
                dashed: true,
            },
            Series {
                label: "y_p".into(),
                y: &trace.y_p,
                color: BLUE,
                dashed: false,
            },
        ],
    )
}

fn agent_series<'a>(cols: &'a [Vec<f64>], prefix: &str) -> Vec<Series<'a>> {
    cols.iter()
        .enumerate()
        .map(|(i, y)| Series {
            label: format!("{prefix}{}", i + 1),
            y,
            color: agent_color(i),
            dashed: i >= 5,
        })
        .collect()
}

pub fn inputs_plot(trace: &SimTrace) -> Result<String, CliError> {
    render("Agent inputs u_pi", "u_pi", &trace.t, &agent_series(&trace.u_agents, "u_p"))
}

pub fn phases_plot(trace: &SimTrace) -> Result<String, CliError> {
    render("Agent phases phi_i", "phi_i", &trace.t, &agent_series(&trace.phi, "phi_"))
}

/// File name and SVG body of every figure.
pub fn all_plots(trace: &SimTrace) -> Result<Vec<(&'static str, String)>, CliError> {
    Ok(vec![
        ("output.svg", output_plot(trace)?),
        ("inputs.svg", inputs_plot(trace)?),
        ("phases.svg", phases_plot(trace)?),
    ])
}
