//! Planar SVG plots of trajectories and obstacles.

use std::fmt::Write as _;

use crate::avoidance::Obstacle;
use crate::dmp::Trajectory;
use crate::obstacles::{PointObstacle, Superquadric};

pub const OUTLINE_POINTS: usize = 200;
const WIDTH: f64 = 640.0;
const MARGIN: f64 = 24.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

#[derive(Debug, Clone)]
struct Line {
    label: String,
    points: Vec<[f64; 2]>,
    color: String,
    dashed: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    title: String,
    lines: Vec<Line>,
    outlines: Vec<Vec<[f64; 2]>>,
    dots: Vec<[f64; 2]>,
    markers: Vec<([f64; 2], String)>,
}

fn planar(tr: &Trajectory) -> Vec<[f64; 2]> {
    tr.positions().iter().map(|p| [p[0], p[1]]).collect()
}

impl Plot {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            ..Self::default()
        }
    }

    /// Adds the first two coordinates of `tr`.
    pub fn trajectory(
        &mut self,
        label: &str,
        tr: &Trajectory,
        color: &str,
        dashed: bool,
    ) -> &mut Self {
        if tr.dims() >= 2 {
            self.lines.push(Line {
                label: label.to_string(),
                points: planar(tr),
                color: color.to_string(),
                dashed,
            });
        }
        self
    }

    pub fn superquadric(&mut self, sq: &Superquadric) -> &mut Self {
        if sq.dims() == 2 {
            self.outlines.push(
                sq.outline(OUTLINE_POINTS)
                    .iter()
                    .map(|p| [p[0], p[1]])
                    .collect(),
            );
        }
        self
    }

    pub fn obstacle(&mut self, o: &Obstacle) -> &mut Self {
        match o {
            Obstacle::Volume(sq) => return self.superquadric(sq),
            Obstacle::Point(p) => self.dots.extend(point(p)),
            Obstacle::Cloud(ps) => self.dots.extend(ps.iter().filter_map(point)),
        }
        self
    }

    pub fn marker(&mut self, at: [f64; 2], color: &str) -> &mut Self {
        self.markers.push((at, color.to_string()));
        self
    }

    /// `timestamp` becomes a leading comment when given.
    pub fn render(&self, timestamp: Option<&str>) -> String {
        let all = self
            .lines
            .iter()
            .flat_map(|l| l.points.iter())
            .chain(self.outlines.iter().flatten())
            .chain(&self.dots)
            .chain(self.markers.iter().map(|(p, _)| p));
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in all {
            for i in 0..2 {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        if !(lo[0] <= hi[0]) {
            lo = [0.0, 0.0];
            hi = [1.0, 1.0];
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
        let scale = (WIDTH - 2.0 * MARGIN) / span;
        let height = (hi[1] - lo[1]) * scale + 2.0 * MARGIN + 20.0;
        let width = (hi[0] - lo[0]) * scale + 2.0 * MARGIN;
        let map = |p: &[f64; 2]| {
            (
                MARGIN + (p[0] - lo[0]) * scale,
                height - MARGIN - (p[1] - lo[1]) * scale,
            )
        };

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.2} {height:.2}">"#
        );
        if let Some(ts) = timestamp {
            let _ = writeln!(s, "<!-- generated {ts} -->");
        }
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{MARGIN}" y="16" font-family="sans-serif" font-size="13">{}</text>"#,
            escape(&self.title)
        );
        for outline in &self.outlines {
            s.push_str(r##"<path fill="#dddddd" stroke="black" stroke-width="1" d=""##);
            for (k, p) in outline.iter().enumerate() {
                let (x, y) = map(p);
                let _ = write!(s, "{}{x:.2},{y:.2} ", if k == 0 { "M" } else { "L" });
            }
            s.push_str("Z\"/>\n");
        }
        for p in &self.dots {
            let (x, y) = map(p);
            let _ = writeln!(
                s,
                r#"<circle cx="{x:.2}" cy="{y:.2}" r="1.5" fill="black"/>"#
            );
        }
        for line in &self.lines {
            let dash = if line.dashed {
                r#" stroke-dasharray="6,4""#
            } else {
                ""
            };
            let _ = write!(
                s,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points=""#,
                line.color
            );
            for p in &line.points {
                let (x, y) = map(p);
                let _ = write!(s, "{x:.2},{y:.2} ");
            }
            s.push_str("\"/>\n");
        }
        for (p, c) in &self.markers {
            let (x, y) = map(p);
            let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="{c}"/>"#);
        }
        for (i, line) in self.lines.iter().enumerate() {
            let y = 34.0 + 16.0 * i as f64;
            let dash = if line.dashed {
                r#" stroke-dasharray="6,4""#
            } else {
                ""
            };
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="2"{dash}/>"#,
                width - 170.0,
                width - 146.0,
                line.color
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
                width - 140.0,
                y + 4.0,
                escape(&line.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn point(p: &PointObstacle) -> Option<[f64; 2]> {
    (p.position.len() == 2).then(|| [p.position[0], p.position[1]])
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
