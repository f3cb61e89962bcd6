//! Plain SVG figures: training reward curve, trajectories, radii bands.

use std::fmt::Write;

use shepherd_core::geometry::Obstacle;
use shepherd_core::sim::Frame;

use crate::error::{Result, RunError};
use crate::io::{GeometryJson, RadiiRow};
use crate::training::EpisodeLogRow;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

const HERDER: &str = "#1f5fbf";
const TARGET: &str = "#c2187a";
const GOAL: &str = "#2a9d3a";

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Maps data coordinates onto the plot area.
#[derive(Debug, Clone, Copy)]
struct Axes {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Axes {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(a, b): (f64, f64)| if b > a { (a, b) } else { (a - 1.0, a + 1.0) };
        let (x0, x1) = widen(x);
        let (y0, y1) = widen(y);
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

struct Doc {
    body: String,
}

impl Doc {
    fn new(title: &str) -> Self {
        let mut body = String::new();
        let _ = write!(
            body,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = write!(body, r#"<title>{}</title><rect width="100%" height="100%" fill="white"/>"#, escape(title));
        let _ = write!(
            body,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(title)
        );
        Self { body }
    }

    fn polyline(&mut self, pts: impl IntoIterator<Item = (f64, f64)>, stroke: &str, width: f64, extra: &str) {
        let mut d = String::new();
        for (x, y) in pts {
            let _ = write!(d, "{x:.2},{y:.2} ");
        }
        let _ = write!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width}" {extra}/>"#,
            d.trim_end()
        );
    }

    fn polygon(&mut self, pts: impl IntoIterator<Item = (f64, f64)>, fill: &str, extra: &str) {
        let mut d = String::new();
        for (x, y) in pts {
            let _ = write!(d, "{x:.2},{y:.2} ");
        }
        let _ = write!(self.body, r#"<polygon points="{}" fill="{fill}" {extra}/>"#, d.trim_end());
    }

    fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: &str, stroke: &str, extra: &str) {
        let _ = write!(
            self.body,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{r:.2}" fill="{fill}" stroke="{stroke}" {extra}/>"#
        );
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, s: &str) {
        let _ = write!(self.body, r#"<text x="{x:.1}" y="{y:.1}" text-anchor="{anchor}">{}</text>"#, escape(s));
    }

    fn frame(&mut self, axes: &Axes, xlabel: &str, ylabel: &str) {
        let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
        let _ = write!(
            self.body,
            r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            r - l,
            b - t
        );
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let xv = axes.x0 + f * (axes.x1 - axes.x0);
            let yv = axes.y0 + f * (axes.y1 - axes.y0);
            self.text(axes.px(xv), b + 16.0, "middle", &tick(xv));
            self.text(l - 6.0, axes.py(yv) + 4.0, "end", &tick(yv));
        }
        self.text((l + r) / 2.0, HEIGHT - 16.0, "middle", xlabel);
        let _ = write!(
            self.body,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            (t + b) / 2.0,
            (t + b) / 2.0,
            escape(ylabel)
        );
    }

    fn legend(&mut self, entries: &[(&str, &str)]) {
        for (k, (color, label)) in entries.iter().enumerate() {
            let y = MARGIN + 14.0 + 16.0 * k as f64;
            let x = WIDTH - MARGIN - 150.0;
            let _ = write!(self.body, r#"<rect x="{x}" y="{}" width="12" height="4" fill="{color}"/>"#, y - 4.0);
            self.text(x + 18.0, y, "start", label);
        }
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

fn tick(v: f64) -> String {
    if v.abs() >= 1e4 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn min_max(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    values.into_iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
}

fn moving_median(values: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            let mut w = values[lo..hi].to_vec();
            w.sort_by(f64::total_cmp);
            w[w.len() / 2]
        })
        .collect()
}

/// Cumulative training reward per episode with a moving median.
pub fn reward_curve(rows: &[EpisodeLogRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(RunError::MissingArtifact("training log has no episodes".into()));
    }
    let rewards: Vec<f64> = rows.iter().map(|r| r.cumulative_reward).collect();
    let axes = Axes::new((0.0, rows.len() as f64), min_max(rewards.iter().copied()));
    let mut doc = Doc::new("Cumulative reward per training episode");
    doc.frame(&axes, "episode", "cumulative reward");
    doc.polyline(
        rewards.iter().enumerate().map(|(i, &r)| (axes.px(i as f64), axes.py(r))),
        "#9bb7e0",
        0.6,
        "",
    );
    let window = (rows.len() / 50).max(1) | 1;
    let smooth = moving_median(&rewards, window);
    doc.polyline(smooth.iter().enumerate().map(|(i, &r)| (axes.px(i as f64), axes.py(r))), HERDER, 2.0, "");
    doc.legend(&[("#9bb7e0", "episode"), (HERDER, "moving median")]);
    Ok(doc.finish())
}

fn obstacle_outline(o: &Obstacle) -> Vec<shepherd_core::Vec2> {
    (0..96).map(|k| o.boundary_point(k as f64 / 96.0)).collect()
}

/// Herder and target paths with the goal, the initialization disc and the
/// obstacles.
pub fn trajectories(frames: &[Frame], geometry: &GeometryJson) -> Result<String> {
    let first = frames.first().ok_or_else(|| RunError::MissingArtifact("trajectory has no steps".into()))?;
    let r = geometry.init_radius * 1.15;
    let extent = frames
        .iter()
        .flat_map(|f| f.herders.iter().chain(&f.targets))
        .fold(r, |m, p| m.max(p.x.abs()).max(p.y.abs()));
    // Square plot area so circles stay round.
    let scale = (HEIGHT - 2.0 * MARGIN) / (2.0 * extent);
    let cx = WIDTH / 2.0;
    let cy = HEIGHT / 2.0;
    let map = |p: shepherd_core::Vec2| (cx + p.x * scale, cy - p.y * scale);
    let mut doc = Doc::new("Trajectories");
    doc.circle(cx, cy, geometry.init_radius * scale, "none", "#999999", r#"stroke-dasharray="6 4""#);
    doc.circle(cx, cy, geometry.goal_radius * scale, "#2a9d3a33", GOAL, "");
    for o in geometry.obstacles() {
        doc.polygon(obstacle_outline(&o).into_iter().map(map), "#555555", "");
    }
    for i in 0..first.targets.len() {
        doc.polyline(frames.iter().filter_map(|f| f.targets.get(i)).map(|p| map(*p)), TARGET, 0.8, r#"opacity="0.8""#);
    }
    for j in 0..first.herders.len() {
        doc.polyline(frames.iter().filter_map(|f| f.herders.get(j)).map(|p| map(*p)), HERDER, 1.2, "");
    }
    for p in &first.targets {
        let (x, y) = map(*p);
        doc.circle(x, y, 2.5, "white", TARGET, "");
    }
    for p in &first.herders {
        let (x, y) = map(*p);
        doc.circle(x, y, 3.0, "white", HERDER, "");
    }
    let last = frames.last().expect("non-empty");
    for p in &last.targets {
        let (x, y) = map(*p);
        doc.circle(x, y, 2.5, TARGET, TARGET, "");
    }
    for p in &last.herders {
        let (x, y) = map(*p);
        doc.circle(x, y, 3.0, HERDER, HERDER, "");
    }
    doc.legend(&[(HERDER, "herders"), (TARGET, "targets"), (GOAL, "goal region")]);
    Ok(doc.finish())
}

fn band(doc: &mut Doc, axes: &Axes, rows: &[RadiiRow], dt: f64, stat: fn(&RadiiRow) -> (f64, f64), color: &str) {
    let x = |r: &RadiiRow| axes.px(r.step as f64 * dt);
    let upper = rows.iter().map(|r| {
        let (m, s) = stat(r);
        (x(r), axes.py(m + s))
    });
    let lower = rows.iter().rev().map(|r| {
        let (m, s) = stat(r);
        (x(r), axes.py((m - s).max(0.0)))
    });
    doc.polygon(upper.chain(lower), color, r#"fill-opacity="0.2""#);
    doc.polyline(rows.iter().map(|r| (x(r), axes.py(stat(r).0))), color, 1.5, "");
}

/// Mean radial distance of targets and herders with one-standard-deviation
/// bands, and the goal radius.
pub fn radii(rows: &[RadiiRow], goal_radius: f64, dt: f64) -> Result<String> {
    if rows.is_empty() {
        return Err(RunError::MissingArtifact("radii table has no rows".into()));
    }
    let t_max = rows.last().map_or(1.0, |r| r.step as f64 * dt);
    let y_max = rows
        .iter()
        .map(|r| (r.target_mean + r.target_std).max(r.herder_mean + r.herder_std).max(r.target_max))
        .fold(goal_radius, f64::max);
    let axes = Axes::new((0.0, t_max), (0.0, y_max * 1.05));
    let mut doc = Doc::new("Radial distance from the goal");
    doc.frame(&axes, "time", "distance");
    band(&mut doc, &axes, rows, dt, |r| (r.target_mean, r.target_std), TARGET);
    band(&mut doc, &axes, rows, dt, |r| (r.herder_mean, r.herder_std), HERDER);
    doc.polyline(
        [(axes.px(0.0), axes.py(goal_radius)), (axes.px(t_max), axes.py(goal_radius))],
        GOAL,
        1.5,
        r#"stroke-dasharray="6 4""#,
    );
    doc.legend(&[(TARGET, "targets"), (HERDER, "herders"), (GOAL, "goal radius")]);
    Ok(doc.finish())
}
