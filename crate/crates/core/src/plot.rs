//! Static SVG plots. Output depends only on the data, so identical inputs
//! render to identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::experiments::SweepResult;
use crate::field::FieldState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Mean VOT +/- SEM against competitor amplitude, with per-trial density.
    SweepLine,
    /// Activation over (step, x).
    FieldEvolutionHeatmap,
    /// CH over the (target amplitude, competitor amplitude) grid.
    Surface2d,
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sweep_line" => Ok(PlotKind::SweepLine),
            "field_evolution_heatmap" => Ok(PlotKind::FieldEvolutionHeatmap),
            "surface_2d" => Ok(PlotKind::Surface2d),
            other => Err(Error::UnknownPlotKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum PlotInput<'a> {
    Sweep(&'a SweepResult),
    Trajectory(&'a [FieldState]),
}

pub fn render_plot(input: PlotInput<'_>, kind: PlotKind) -> Result<String> {
    match (kind, input) {
        (PlotKind::SweepLine, PlotInput::Sweep(s)) => Ok(sweep_line(s)),
        (PlotKind::Surface2d, PlotInput::Sweep(s)) => Ok(surface_2d(s)),
        (PlotKind::FieldEvolutionHeatmap, PlotInput::Trajectory(t)) => Ok(heatmap(t)),
        (kind, _) => Err(Error::InvalidInput(format!("{kind:?} cannot be drawn from this data"))),
    }
}

pub fn write_plot(input: PlotInput<'_>, kind: PlotKind, path: &Path) -> Result<()> {
    let svg = render_plot(input, kind)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

struct Axes {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Axes {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn open(svg: &mut String, title: &str) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 8.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

fn draw_axes(svg: &mut String, ax: &Axes, xlabel: &str, ylabel: &str) {
    let (left, right) = (ax.px(ax.x0), ax.px(ax.x1));
    let (bottom, top) = (ax.py(ax.y0), ax.py(ax.y1));
    let _ = writeln!(
        svg,
        r#"<path d="M{left:.2},{top:.2} L{left:.2},{bottom:.2} L{right:.2},{bottom:.2}" fill="none" stroke="black"/>"#
    );
    let xs = nice_step(ax.x1 - ax.x0);
    let mut t = (ax.x0 / xs).ceil() * xs;
    while t <= ax.x1 + 1e-9 {
        let x = ax.px(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{bottom:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            bottom + 5.0,
            bottom + 18.0,
            trim(t)
        );
        t += xs;
    }
    let ys = nice_step(ax.y1 - ax.y0);
    let mut t = (ax.y0 / ys).ceil() * ys;
    while t <= ax.y1 + 1e-9 {
        let y = ax.py(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{left:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 5.0,
            left - 8.0,
            y + 4.0,
            trim(t)
        );
        t += ys;
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (left + right) / 2.0,
        HEIGHT - 15.0,
        escape(xlabel)
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0,
        escape(ylabel)
    );
}

fn trim(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

/// Competitor amplitudes drawn with a highlight marker.
const HIGHLIGHTED: [(f64, &str); 3] = [(0.0, "no competitor"), (-3.0, "no context"), (-6.0, "context")];

fn sweep_line(result: &SweepResult) -> String {
    let p_target = result.config.target.p;
    let cells: Vec<_> = result.cells.iter().filter(|c| c.mean_vot.is_finite()).collect();
    let mut svg = String::new();
    open(&mut svg, "Mean VOT target by competitor amplitude");

    let (mut x0, mut x1) = cells
        .iter()
        .map(|c| c.condition.a_mp)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !x0.is_finite() {
        (x0, x1) = (-1.0, 1.0);
    }
    if x0 == x1 {
        (x0, x1) = (x0 - 1.0, x1 + 1.0);
    }
    let mut vots: Vec<f64> = result.trials.iter().filter_map(|t| t.vot_target).collect();
    vots.extend(cells.iter().flat_map(|c| [c.mean_vot - c.sem_vot, c.mean_vot + c.sem_vot]));
    vots.push(p_target);
    let lo = vots.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vots.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = ((hi - lo) * 0.08).max(1.0);
    let ax = Axes {
        x0: x0 - 0.25,
        x1: x1 + 0.25,
        y0: (lo - pad).floor(),
        y1: (hi + pad).ceil(),
    };
    draw_axes(&mut svg, &ax, "competitor input amplitude a_mp", "VOT target (ms)");

    // per-trial density: one dot per distinct (a_mp, vot), opacity by count
    let mut counts: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    for t in &result.trials {
        if let Some(v) = t.vot_target {
            let key = ((t.condition.a_mp * 1000.0).round() as i64, (v * 10.0).round() as i64);
            *counts.entry(key).or_default() += 1;
        }
    }
    let max_count = counts.values().copied().max().unwrap_or(1) as f64;
    for ((mp, v), n) in &counts {
        let _ = writeln!(
            svg,
            r##"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="#7f7f7f" fill-opacity="{:.3}"/>"##,
            ax.px(*mp as f64 / 1000.0),
            ax.py(*v as f64 / 10.0),
            0.08 + 0.6 * (*n as f64 / max_count)
        );
    }

    let y_ref = ax.py(p_target);
    let _ = writeln!(
        svg,
        r##"<line x1="{:.2}" y1="{y_ref:.2}" x2="{:.2}" y2="{y_ref:.2}" stroke="#555555" stroke-dasharray="4 3"/>"##,
        ax.px(ax.x0),
        ax.px(ax.x1)
    );
    let _ = writeln!(
        svg,
        r##"<text x="{:.2}" y="{:.2}" text-anchor="end" fill="#555555">CH = 0 ({} ms)</text>"##,
        ax.px(ax.x1) - 4.0,
        y_ref - 5.0,
        trim(p_target)
    );

    for c in &cells {
        let x = ax.px(c.condition.a_mp);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#1f4e9c"/>"##,
            ax.py(c.mean_vot - c.sem_vot),
            ax.py(c.mean_vot + c.sem_vot)
        );
    }
    let path: Vec<String> = cells
        .iter()
        .map(|c| format!("{:.2},{:.2}", ax.px(c.condition.a_mp), ax.py(c.mean_vot)))
        .collect();
    if !path.is_empty() {
        let _ = writeln!(
            svg,
            r##"<polyline points="{}" fill="none" stroke="#1f4e9c" stroke-width="1.5"/>"##,
            path.join(" ")
        );
    }
    for c in &cells {
        let highlight = HIGHLIGHTED.iter().find(|(mp, _)| *mp == c.condition.a_mp);
        let (x, y) = (ax.px(c.condition.a_mp), ax.py(c.mean_vot));
        match highlight {
            Some((_, label)) => {
                let _ = writeln!(
                    svg,
                    r##"<circle cx="{x:.2}" cy="{y:.2}" r="5.5" fill="#c0392b"/><text x="{x:.2}" y="{:.2}" text-anchor="middle" fill="#c0392b">{label} (CH {:+.1})</text>"##,
                    y - 10.0,
                    c.ch_ms
                );
            }
            None => {
                let _ = writeln!(svg, r##"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="#1f4e9c"/>"##);
            }
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn lerp(a: u8, b: u8, t: f64) -> u8 {
    (a as f64 + (b as f64 - a as f64) * t).round() as u8
}

// Blue below zero, white at zero, red above; `t` in [-1, 1].
fn diverging(t: f64) -> String {
    let t = t.clamp(-1.0, 1.0);
    let (r, g, b) = if t < 0.0 {
        let s = -t;
        (lerp(255, 33, s), lerp(255, 102, s), lerp(255, 172, s))
    } else {
        (lerp(255, 178, t), lerp(255, 24, t), lerp(255, 43, t))
    };
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn heatmap(trajectory: &[FieldState]) -> String {
    let mut svg = String::new();
    open(&mut svg, "Field activation u(x, t)");
    let n = trajectory.first().map(|s| s.u.len()).unwrap_or(1).max(1);
    let steps = trajectory.len().max(1);
    let ax = Axes {
        x0: 0.0,
        x1: steps as f64,
        y0: 0.0,
        y1: n as f64,
    };
    let values = || trajectory.iter().flat_map(|s| s.u.iter().copied());
    // separate scales below and above threshold so a small peak stays visible
    let neg = values().fold(0.0f64, |m, v| m.max(-v)).max(1e-9);
    let pos = values().fold(0.0f64, |m, v| m.max(v)).max(1e-9);
    const LEVELS: f64 = 12.0;
    let level = |v: f64| {
        if v > 0.0 {
            (v / pos * LEVELS).ceil() as i64
        } else {
            (v / neg * LEVELS).round() as i64
        }
    };
    let cell_w = ax.px(1.0) - ax.px(0.0);
    let cell_h = ax.py(0.0) - ax.py(1.0);
    let _ = writeln!(svg, r#"<g shape-rendering="crispEdges">"#);
    for (i, state) in trajectory.iter().enumerate() {
        let mut x = 0;
        while x < n {
            let lv = level(state.u[x]);
            let mut end = x + 1;
            while end < n && level(state.u[end]) == lv {
                end += 1;
            }
            let _ = writeln!(
                svg,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                ax.px(i as f64),
                ax.py(end as f64),
                cell_w + 0.3,
                cell_h * (end - x) as f64,
                diverging(lv as f64 / LEVELS)
            );
            x = end;
        }
    }
    let _ = writeln!(svg, "</g>");
    draw_axes(&mut svg, &ax, "time step", "VOT (ms)");
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="36" text-anchor="end">blue: u &lt; 0 (min {:.2}), red: u &gt; 0 (max {:.2})</text>"#,
        WIDTH - RIGHT,
        -neg,
        pos
    );
    svg.push_str("</svg>\n");
    svg
}

fn surface_2d(result: &SweepResult) -> String {
    let mut svg = String::new();
    open(&mut svg, "CH (mean VOT - target center) by input amplitudes");
    let mut targets: Vec<f64> = result.cells.iter().map(|c| c.condition.a_target).collect();
    let mut mps: Vec<f64> = result.cells.iter().map(|c| c.condition.a_mp).collect();
    targets.sort_by(f64::total_cmp);
    targets.dedup();
    mps.sort_by(f64::total_cmp);
    mps.dedup();
    let (nt, nm) = (targets.len().max(1), mps.len().max(1));
    let ax = Axes {
        x0: 0.0,
        x1: nt as f64,
        y0: 0.0,
        y1: nm as f64,
    };
    let extent = |sign: f64| {
        result
            .cells
            .iter()
            .map(|c| c.ch_ms * sign)
            .filter(|v| v.is_finite())
            .fold(0.0f64, f64::max)
            .max(1e-9)
    };
    let (pos, neg) = (extent(1.0), extent(-1.0));
    let (cw, ch) = (ax.px(1.0) - ax.px(0.0), ax.py(0.0) - ax.py(1.0));
    for c in &result.cells {
        let i = targets.iter().position(|t| *t == c.condition.a_target).unwrap_or(0);
        let j = mps.iter().position(|m| *m == c.condition.a_mp).unwrap_or(0);
        let (x, y) = (ax.px(i as f64), ax.py(j as f64 + 1.0));
        // yellow above the reference plane, blue below
        let color = if !c.ch_ms.is_finite() {
            "#dddddd".to_string()
        } else if c.ch_ms >= 0.0 {
            let t = c.ch_ms / pos;
            format!("#{:02x}{:02x}{:02x}", lerp(255, 240, t), lerp(255, 200, t), lerp(255, 20, t))
        } else {
            diverging(c.ch_ms / neg)
        };
        let _ = writeln!(
            svg,
            r##"<rect x="{x:.2}" y="{y:.2}" width="{cw:.2}" height="{ch:.2}" fill="{color}" stroke="#ffffff" stroke-width="0.5"><title>a_target={} a_mp={} CH={:.2}</title></rect>"##,
            c.condition.a_target, c.condition.a_mp, c.ch_ms
        );
        if cw > 30.0 && ch > 11.0 {
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="9">{:.1}</text>"#,
                x + cw / 2.0,
                y + ch / 2.0 + 3.0,
                c.ch_ms
            );
        }
    }
    // axis labels at cell centers
    for (i, t) in targets.iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            ax.px(i as f64 + 0.5),
            ax.py(0.0) + 16.0,
            trim(*t)
        );
    }
    for (j, m) in mps.iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            ax.px(0.0) - 6.0,
            ax.py(j as f64 + 0.5) + 4.0,
            trim(*m)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">target input amplitude a_target</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{0:.2}" text-anchor="middle" transform="rotate(-90 18 {0:.2})">competitor input amplitude a_mp</text>"#,
        HEIGHT / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="36" text-anchor="end">reference plane: {} ms; yellow = CH, blue = trace effect</text>"#,
        WIDTH - RIGHT,
        trim(result.config.target.p)
    );
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;
    use crate::experiments::{Condition, ConditionStats};
    use crate::readout::ReadoutMethod;

    fn cell(a_target: f64, a_mp: f64, mean: f64) -> ConditionStats {
        ConditionStats {
            condition: Condition::new(a_target, a_mp),
            n_trials: 10,
            n_valid: 10,
            mean_vot: mean,
            sd_vot: 1.0,
            sem_vot: 0.3,
            skewness: 0.0,
            mode_vot: mean.round(),
            p10_vot: mean - 1.0,
            ch_ms: mean - 70.0,
            ch_vs_empirical_baseline: None,
            frac_stabilized: 1.0,
            mean_time_to_threshold: Some(40.0),
            median_time_to_threshold: Some(40.0),
            n_never_crossed: 0,
            readout_method: ReadoutMethod::Argmax,
            master_seed: 1,
        }
    }

    fn sweep(cells: Vec<ConditionStats>) -> SweepResult {
        SweepResult {
            cells,
            trials: vec![],
            master_seed: 1,
            config: RunConfig::default(),
        }
    }

    #[test]
    fn sweep_line_has_reference_and_highlights() {
        let s = sweep(vec![cell(6.0, -6.0, 80.0), cell(6.0, -3.0, 75.0), cell(6.0, 0.0, 70.0), cell(6.0, 2.0, 65.0)]);
        let svg = render_plot(PlotInput::Sweep(&s), PlotKind::SweepLine).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("CH = 0 (70 ms)"));
        assert!(svg.contains("context (CH +10.0)"));
        assert!(svg.contains("no competitor (CH +0.0)"));
        assert_eq!(svg, render_plot(PlotInput::Sweep(&s), PlotKind::SweepLine).unwrap());
    }

    #[test]
    fn surface_colors_by_sign() {
        let s = sweep(vec![cell(5.0, -6.0, 80.0), cell(5.0, 5.0, 50.0), cell(10.0, -6.0, 76.0), cell(10.0, 5.0, 62.0)]);
        let svg = render_plot(PlotInput::Sweep(&s), PlotKind::Surface2d).unwrap();
        // strongest CH is full yellow, strongest trace full blue
        assert!(svg.contains(r##"fill="#f0c814""##), "{svg}");
        assert!(svg.contains(r##"fill="#2166ac""##), "{svg}");
        assert!(svg.contains("reference plane: 70 ms"));
    }

    #[test]
    fn heatmap_is_deterministic() {
        let traj: Vec<FieldState> = (0..5)
            .map(|t| FieldState {
                u: (0..20).map(|x| (x as f64 - 10.0).abs() * -0.5 + t as f64 * 0.3).collect(),
                step: t,
            })
            .collect();
        let a = render_plot(PlotInput::Trajectory(&traj), PlotKind::FieldEvolutionHeatmap).unwrap();
        let b = render_plot(PlotInput::Trajectory(&traj), PlotKind::FieldEvolutionHeatmap).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("<rect"));
    }

    #[test]
    fn kind_parsing_and_mismatch() {
        assert!(matches!("pie".parse::<PlotKind>(), Err(Error::UnknownPlotKind(_))));
        assert_eq!("surface_2d".parse::<PlotKind>().unwrap(), PlotKind::Surface2d);
        let s = sweep(vec![]);
        assert!(render_plot(PlotInput::Sweep(&s), PlotKind::FieldEvolutionHeatmap).is_err());
        // empty sweeps still render
        assert!(render_plot(PlotInput::Sweep(&s), PlotKind::SweepLine).is_ok());
    }
}
