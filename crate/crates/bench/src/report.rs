//! CSV and SVG output.
//!
//! Floats are serialised with 17 significant digits, so a written file parses
//! back to bit-identical values. Per-replicate errors and per-replicate wall
//! times go to separate files: error records are a pure function of the seed
//! and reproduce byte-for-byte, wall times never do.

use std::io::{self, BufRead, Write};
use std::str::FromStr;

use resample_core::simdata::GridKind;

use crate::harness::{BenchRun, CellSummary, SchemeSpec};

/// 17 significant digits: round-trips every finite `f64` exactly.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_float(field: &str) -> io::Result<f64> {
    f64::from_str(field)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("bad float {field}: {e}")))
}

fn parse_usize(field: &str) -> io::Result<usize> {
    usize::from_str(field)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("bad count {field}: {e}")))
}

pub fn grid_name(kind: GridKind) -> String {
    match kind {
        GridKind::Paper => "paper".to_string(),
        GridKind::Desk { max_particles } => format!("desk-{max_particles}"),
    }
}

/// Deterministic protocol header shared by all benchmark CSV files.
fn write_metadata<W: Write>(run: &BenchRun, out: &mut W) -> io::Result<()> {
    let o = &run.options;
    let schemes = o
        .schemes
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(",");
    writeln!(out, "# generator = resample-bench")?;
    writeln!(out, "# grid = {}", grid_name(o.grid))?;
    writeln!(out, "# schemes = {schemes}")?;
    writeln!(out, "# seed = {}", o.seed)?;
    writeln!(out, "# error_replicates = {}", o.error_replicates)?;
    writeln!(out, "# timing_replicates = {}", o.timing_replicates)?;
    writeln!(out, "# epsilon = {}", o.epsilon)?;
    writeln!(
        out,
        "# metropolis_w_max_policy = 99th percentile of w_max over {} pilot draws per cell",
        o.pilot_draws
    )?;
    writeln!(
        out,
        "# replicate_policy = fresh Dirichlet draw per replicate; schemes paired on the same draw"
    )?;
    writeln!(
        out,
        "# timing_policy = monotonic clock around the resampling call only, after {} warm-up calls per cell",
        o.warmup
    )?;
    Ok(())
}

fn iterations_field(iterations: Option<u32>) -> String {
    iterations.map(|b| b.to_string()).unwrap_or_default()
}

/// Per-replicate resampling errors (deterministic for a given seed).
pub fn write_error_csv<W: Write>(run: &BenchRun, mut out: W) -> io::Result<()> {
    write_metadata(run, &mut out)?;
    writeln!(
        out,
        "scheme,presort,particles,alpha,replicate,error,metropolis_iterations"
    )?;
    for r in &run.records {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.scheme.scheme,
            r.scheme.presort,
            r.particles,
            format_float(r.alpha),
            r.replicate,
            format_float(r.error),
            iterations_field(r.metropolis_iterations),
        )?;
    }
    Ok(())
}

/// Per-replicate wall times (vary from run to run).
pub fn write_timing_csv<W: Write>(run: &BenchRun, mut out: W) -> io::Result<()> {
    write_metadata(run, &mut out)?;
    writeln!(out, "scheme,presort,particles,alpha,replicate,wall_ns")?;
    for r in run
        .records
        .iter()
        .filter(|r| r.replicate < run.options.timing_replicates)
    {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.scheme.scheme,
            r.scheme.presort,
            r.particles,
            format_float(r.alpha),
            r.replicate,
            r.wall_ns,
        )?;
    }
    Ok(())
}

pub const SUMMARY_COLUMNS: &str = "scheme,presort,particles,alpha,error_replicates,mean_error,\
error_se,timing_replicates,mean_wall_ns,median_wall_ns,wall_se,metropolis_iterations";

/// Per-cell aggregates; an empty slice writes the header only.
pub fn write_summary_csv<W: Write>(summaries: &[CellSummary], mut out: W) -> io::Result<()> {
    writeln!(out, "{SUMMARY_COLUMNS}")?;
    for s in summaries {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            s.scheme.scheme,
            s.scheme.presort,
            s.particles,
            format_float(s.alpha),
            s.error_replicates,
            format_float(s.mean_error),
            format_float(s.error_se),
            s.timing_replicates,
            format_float(s.mean_wall_ns),
            format_float(s.median_wall_ns),
            format_float(s.wall_se),
            iterations_field(s.metropolis_iterations),
        )?;
    }
    Ok(())
}

/// Parse a summary CSV back; exact inverse of [`write_summary_csv`].
pub fn read_summary_csv<R: BufRead>(reader: R) -> io::Result<Vec<CellSummary>> {
    let mut rows = Vec::new();
    let mut saw_header = false;
    for line in reader.lines() {
        let line = line?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != SUMMARY_COLUMNS {
                return Err(io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("unexpected header: {line}"),
                ));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 12 {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("expected 12 fields, got {}", fields.len()),
            ));
        }
        let scheme = resample_core::Scheme::from_str(fields[0])
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
        let presort = fields[1] == "true";
        rows.push(CellSummary {
            scheme: SchemeSpec { scheme, presort },
            particles: parse_usize(fields[2])?,
            alpha: parse_float(fields[3])?,
            error_replicates: parse_usize(fields[4])?,
            mean_error: parse_float(fields[5])?,
            error_se: parse_float(fields[6])?,
            timing_replicates: parse_usize(fields[7])?,
            mean_wall_ns: parse_float(fields[8])?,
            median_wall_ns: parse_float(fields[9])?,
            wall_se: parse_float(fields[10])?,
            metropolis_iterations: if fields[11].is_empty() {
                None
            } else {
                Some(u32::from_str(fields[11]).map_err(|e| {
                    io::Error::new(io::ErrorKind::InvalidData, format!("bad iterations: {e}"))
                })?)
            },
        });
    }
    Ok(rows)
}

/// Which aggregate an SVG panel plots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvgMetric {
    MeanError,
    MeanWallNanos,
}

impl SvgMetric {
    fn value(self, s: &CellSummary) -> f64 {
        match self {
            SvgMetric::MeanError => s.mean_error,
            SvgMetric::MeanWallNanos => s.mean_wall_ns,
        }
    }

    fn label(self) -> &'static str {
        match self {
            SvgMetric::MeanError => "mean resampling error",
            SvgMetric::MeanWallNanos => "mean wall time (ns)",
        }
    }
}

const PANEL_W: f64 = 260.0;
const PANEL_H: f64 = 240.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_T: f64 = 56.0;
const MARGIN_B: f64 = 44.0;
const PANEL_GAP: f64 = 28.0;

fn scheme_color(rank: u8) -> &'static str {
    match rank {
        0 => "#1f77b4",
        1 => "#17becf",
        2 => "#2ca02c",
        3 => "#d62728",
        _ => "#9467bd",
    }
}

/// Log-log line chart: one panel per alpha (most to least uniform), particle
/// count on x, the chosen metric on y, one polyline per scheme.
pub fn render_svg(summaries: &[CellSummary], metric: SvgMetric) -> String {
    let mut alphas: Vec<f64> = summaries.iter().map(|s| s.alpha).collect();
    alphas.sort_unstable_by(|a, b| b.total_cmp(a));
    alphas.dedup();

    let mut schemes: Vec<SchemeSpec> = summaries.iter().map(|s| s.scheme).collect();
    schemes.sort_unstable_by_key(|s| s.rank());
    schemes.dedup();

    let points: Vec<(f64, SchemeSpec, f64, f64)> = summaries
        .iter()
        .filter(|s| metric.value(s).is_finite() && metric.value(s) > 0.0)
        .map(|s| {
            (
                s.alpha,
                s.scheme,
                (s.particles as f64).log2(),
                metric.value(s).log10(),
            )
        })
        .collect();

    let width = MARGIN_L + alphas.len() as f64 * (PANEL_W + PANEL_GAP);
    let height = MARGIN_T + PANEL_H + MARGIN_B;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         font-family=\"sans-serif\" font-size=\"11\">\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{MARGIN_L}\" y=\"18\" font-size=\"14\">{} across particle counts</text>\n",
        metric.label()
    ));

    if points.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }

    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(_, _, x, y) in &points {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    if x_hi == x_lo {
        x_hi = x_lo + 1.0;
    }
    y_lo = (y_lo - 0.2).floor();
    y_hi = (y_hi + 0.2).ceil();

    // legend
    for (i, scheme) in schemes.iter().enumerate() {
        let x = MARGIN_L + i as f64 * 150.0;
        let color = scheme_color(scheme.rank());
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"30\" x2=\"{}\" y2=\"30\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            x + 18.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"34\">{scheme}</text>\n",
            x + 24.0
        ));
    }

    for (panel, &alpha) in alphas.iter().enumerate() {
        let left = MARGIN_L + panel as f64 * (PANEL_W + PANEL_GAP);
        let top = MARGIN_T;
        let to_x = |x: f64| left + (x - x_lo) / (x_hi - x_lo) * PANEL_W;
        let to_y = |y: f64| top + (y_hi - y) / (y_hi - y_lo) * PANEL_H;

        svg.push_str(&format!(
            "<rect x=\"{left}\" y=\"{top}\" width=\"{PANEL_W}\" height=\"{PANEL_H}\" \
             fill=\"none\" stroke=\"#888\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">alpha = {alpha}</text>\n",
            left + PANEL_W / 2.0,
            top - 8.0
        ));

        // x ticks at powers of two, thinned to at most ~5 labels
        let lo_exp = x_lo.ceil() as i32;
        let hi_exp = x_hi.floor() as i32;
        let step = (((hi_exp - lo_exp) as usize / 4).max(1)) as i32;
        let mut exp = lo_exp;
        while exp <= hi_exp {
            let x = to_x(f64::from(exp));
            let y = top + PANEL_H;
            svg.push_str(&format!(
                "<line x1=\"{x}\" y1=\"{y}\" x2=\"{x}\" y2=\"{}\" stroke=\"#888\"/>\n",
                y + 4.0
            ));
            svg.push_str(&format!(
                "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\" font-size=\"9\">{}</text>\n",
                y + 16.0,
                1u64 << exp
            ));
            exp += step;
        }
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">particles</text>\n",
            left + PANEL_W / 2.0,
            top + PANEL_H + 34.0
        ));

        // y ticks at powers of ten (first panel carries the labels)
        let mut dec = y_lo.ceil() as i32;
        while f64::from(dec) <= y_hi {
            let y = to_y(f64::from(dec));
            svg.push_str(&format!(
                "<line x1=\"{left}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#ddd\"/>\n",
                left + PANEL_W
            ));
            if panel == 0 {
                svg.push_str(&format!(
                    "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"9\">1e{dec}</text>\n",
                    left - 6.0,
                    y + 3.0
                ));
            }
            dec += 1;
        }

        for scheme in &schemes {
            let mut series: Vec<(f64, f64)> = points
                .iter()
                .filter(|(a, s, _, _)| *a == alpha && s == scheme)
                .map(|&(_, _, x, y)| (x, y))
                .collect();
            if series.is_empty() {
                continue;
            }
            series.sort_by(|a, b| a.0.total_cmp(&b.0));
            let path: Vec<String> = series
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", to_x(x), to_y(y)))
                .collect();
            svg.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                scheme_color(scheme.rank()),
                path.join(" ")
            ));
        }
    }

    svg.push_str("</svg>\n");
    svg
}
