//! SVG renderings of a finished race: opponent model bands and a track map.

use std::fmt::Write as _;

use racecraft::gp::{OpponentObservation, OpponentTrajectoryGp};
use racecraft::sim::race::{EventKind, TraceSample};
use racecraft::sim::{RaceConfig, RaceSetup};

use crate::artifacts::{self, RunFiles, Stamped};
use crate::{CliError, EventLog};

const GP_SAMPLES: usize = 400;
const ROC_STEP: f64 = 0.1;

pub struct PlotInputs {
    pub hash: String,
    pub config: RaceConfig,
    pub events: EventLog,
    pub gp: OpponentTrajectoryGp,
    pub observations: Vec<OpponentObservation>,
    pub trace: Vec<TraceSample>,
}

impl PlotInputs {
    pub fn load(files: &RunFiles) -> Result<Self, CliError> {
        let config = RaceConfig::load(&files.config)?;
        let events: Stamped<EventLog> = artifacts::read_json(&files.events)?;
        let gp: Stamped<OpponentTrajectoryGp> = artifacts::read_json(&files.gp)?;
        let (_, observations) = artifacts::read_csv(&files.observations)?;
        let (_, trace) = artifacts::read_csv(&files.trajectory)?;
        Ok(Self {
            hash: events.config_hash,
            config,
            events: events.body,
            gp: gp.body,
            observations,
            trace,
        })
    }

    /// `(c_start, c_end)` of every maneuver that was planned against a region of collision.
    pub fn regions(&self) -> Vec<(f64, f64)> {
        self.events
            .events
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::ManeuverStart { c_start: Some(a), c_end: Some(b) } => Some((a, b)),
                _ => None,
            })
            .collect()
    }
}

/// Affine map from data coordinates onto a pixel box, y pointing up.
struct Axes {
    x0: f64,
    y0: f64,
    sx: f64,
    sy: f64,
    left: f64,
    bottom: f64,
}

impl Axes {
    fn new(x_range: (f64, f64), y_range: (f64, f64), left: f64, top: f64, width: f64, height: f64) -> Self {
        let dx = (x_range.1 - x_range.0).max(1e-9);
        let dy = (y_range.1 - y_range.0).max(1e-9);
        Self {
            x0: x_range.0,
            y0: y_range.0,
            sx: width / dx,
            sy: height / dy,
            left,
            bottom: top + height,
        }
    }

    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        (self.left + (x - self.x0) * self.sx, self.bottom - (y - self.y0) * self.sy)
    }
}

fn points(axes: &Axes, pts: impl IntoIterator<Item = (f64, f64)>) -> String {
    let mut s = String::new();
    for (i, (x, y)) in pts.into_iter().enumerate() {
        let (u, v) = axes.px(x, y);
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{u:.2},{v:.2}");
    }
    s
}

fn header(out: &mut String, hash: &str, width: f64, height: f64) {
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#);
    let _ = writeln!(out, "<!-- {} -->", artifacts::hash_line(hash).trim_start_matches("# "));
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

/// Mean ± one predictive standard deviation of `d` and `v_s` over the lap, with the raw observations.
pub fn gp_svg(inputs: &PlotInputs) -> String {
    let gp = &inputs.gp;
    let lap = gp.lap_length;
    let (w, panel_h, margin) = (900.0, 260.0, 50.0);
    let height = 2.0 * panel_h + 3.0 * margin;
    let mut out = String::new();
    header(&mut out, &inputs.hash, w, height);
    let ss: Vec<f64> = (0..=GP_SAMPLES).map(|i| lap * i as f64 / GP_SAMPLES as f64).collect();
    let panels: [(&str, &str, Box<dyn Fn(f64) -> (f64, f64)>, Box<dyn Fn(&OpponentObservation) -> f64>); 2] = [
        ("d", "lateral offset d [m]", Box::new(|s| gp.predict_d(s)), Box::new(|o| o.d)),
        ("v_s", "speed v_s [m/s]", Box::new(|s| gp.predict_vs(s)), Box::new(|o| o.v_s)),
    ];
    for (k, (series, label, predict, value)) in panels.iter().enumerate() {
        let pred: Vec<(f64, f64)> = ss.iter().map(|&s| predict(s)).collect();
        let mut lo = pred.iter().map(|(m, sd)| m - sd).fold(f64::INFINITY, f64::min);
        let mut hi = pred.iter().map(|(m, sd)| m + sd).fold(f64::NEG_INFINITY, f64::max);
        for o in &inputs.observations {
            lo = lo.min(value(o));
            hi = hi.max(value(o));
        }
        let pad = 0.05 * (hi - lo).max(1e-3);
        let top = margin + k as f64 * (panel_h + margin);
        let axes = Axes::new((0.0, lap), (lo - pad, hi + pad), 70.0, top, w - 100.0, panel_h);
        let (x_a, y_a) = axes.px(0.0, lo - pad);
        let (x_b, y_b) = axes.px(lap, hi + pad);
        let _ = writeln!(out, r#"<g data-series="{series}">"#);
        let _ = writeln!(
            out,
            r##"<rect x="{x_a:.2}" y="{y_b:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#444"/>"##,
            x_b - x_a,
            y_a - y_b
        );
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="13" font-family="sans-serif">{label}</text>"#, x_a, y_b - 8.0);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" font-family="sans-serif">{:.2}</text><text x="{:.2}" y="{:.2}" font-size="11" font-family="sans-serif">{:.2}</text>"#,
            x_a - 60.0,
            y_a,
            lo - pad,
            x_a - 60.0,
            y_b + 10.0,
            hi + pad
        );
        let upper = ss.iter().zip(&pred).map(|(&s, (m, sd))| (s, m + sd));
        let lower = ss.iter().zip(&pred).rev().map(|(&s, (m, sd))| (s, m - sd));
        let band = points(&axes, upper.chain(lower));
        let _ = writeln!(out, r##"<polygon class="band" data-series="{series}" points="{band}" fill="#9ecae1" fill-opacity="0.5" stroke="none"/>"##);
        let mean = points(&axes, ss.iter().zip(&pred).map(|(&s, (m, _))| (s, *m)));
        let _ = writeln!(out, r##"<polyline class="mean" data-series="{series}" points="{mean}" fill="none" stroke="#08519c" stroke-width="1.5"/>"##);
        for o in &inputs.observations {
            let (u, v) = axes.px(o.s, value(o));
            let _ = writeln!(out, r##"<circle class="obs" cx="{u:.2}" cy="{v:.2}" r="1.2" fill="#d95f02" fill-opacity="0.4"/>"##);
        }
        let _ = writeln!(out, "</g>");
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="13" font-family="sans-serif">s [m]</text>"#,
        0.5 * w,
        height - 12.0
    );
    out.push_str("</svg>\n");
    out
}

/// Track outline, both driven paths and the shaded regions of collision.
pub fn track_svg(inputs: &PlotInputs) -> Result<String, CliError> {
    let setup = RaceSetup::new(&inputs.config)?;
    let frame = setup.ego_line.frame();
    let lap = frame.total_length();
    let (left, right) = setup.track.boundaries();
    let all = left.iter().chain(&right);
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in all {
        xmin = xmin.min(p[0]);
        xmax = xmax.max(p[0]);
        ymin = ymin.min(p[1]);
        ymax = ymax.max(p[1]);
    }
    let scale = 800.0 / (xmax - xmin).max(ymax - ymin).max(1e-9);
    let (margin, w, h) = (30.0, (xmax - xmin) * scale, (ymax - ymin) * scale);
    let axes = Axes::new((xmin, xmax), (ymin, ymax), margin, margin, w, h);
    let mut out = String::new();
    header(&mut out, &inputs.hash, w + 2.0 * margin, h + 2.0 * margin);
    for (c_start, c_end) in inputs.regions() {
        let len = (c_end - c_start).rem_euclid(lap);
        let n = ((len / ROC_STEP).ceil() as usize).max(1);
        let along: Vec<f64> = (0..=n).map(|i| c_start + len * i as f64 / n as f64).collect();
        let edge = |s: f64, side: f64| {
            let (wl, wr) = frame.width_at(frame.wrap_s(s));
            let p = frame.frenet_to_cartesian(frame.wrap_s(s), if side > 0.0 { wl } else { -wr });
            (p.x, p.y)
        };
        let outline = along.iter().map(|&s| edge(s, 1.0)).chain(along.iter().rev().map(|&s| edge(s, -1.0)));
        let _ = writeln!(
            out,
            r##"<polygon class="roc" data-c-start="{c_start}" data-c-end="{c_end}" points="{}" fill="#fc9272" fill-opacity="0.5" stroke="none"/>"##,
            points(&axes, outline)
        );
    }
    for (class, b) in [("boundary-left", &left), ("boundary-right", &right)] {
        let mut pts: Vec<(f64, f64)> = b.iter().map(|p| (p[0], p[1])).collect();
        pts.push(pts[0]);
        let _ = writeln!(out, r#"<polyline class="{class}" points="{}" fill="none" stroke="black" stroke-width="1.5"/>"#, points(&axes, pts));
    }
    let line = (0..setup.ego_line.len()).map(|i| frame.s_at(i)).map(|s| {
        let p = frame.frenet_to_cartesian(s, 0.0);
        (p.x, p.y)
    });
    let _ = writeln!(
        out,
        r##"<polyline class="racing-line" points="{}" fill="none" stroke="#999" stroke-dasharray="4 3"/>"##,
        points(&axes, line)
    );
    for (class, color, xy) in [
        ("ego", "#2171b5", Box::new(|t: &TraceSample| (t.ego_x, t.ego_y)) as Box<dyn Fn(&TraceSample) -> (f64, f64)>),
        ("opponent", "#cb181d", Box::new(|t: &TraceSample| (t.opp_x, t.opp_y))),
    ] {
        for seg in segments(&inputs.trace) {
            let _ = writeln!(
                out,
                r#"<polyline class="{class}" points="{}" fill="none" stroke="{color}" stroke-width="1" stroke-opacity="0.6"/>"#,
                points(&axes, seg.iter().map(|t| xy(t)))
            );
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Split the trace where a respawn teleports the cars.
fn segments(trace: &[TraceSample]) -> Vec<&[TraceSample]> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..trace.len() {
        let (a, b) = (&trace[i - 1], &trace[i]);
        let jump = |ax: f64, ay: f64, bx: f64, by: f64| (bx - ax).hypot(by - ay) > 2.0;
        if jump(a.ego_x, a.ego_y, b.ego_x, b.ego_y) || jump(a.opp_x, a.opp_y, b.opp_x, b.opp_y) {
            out.push(&trace[start..i]);
            start = i;
        }
    }
    if start < trace.len() {
        out.push(&trace[start..]);
    }
    out
}
