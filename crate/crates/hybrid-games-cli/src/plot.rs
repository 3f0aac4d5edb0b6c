//! Static SVG rendering of a solved scenario: lane lines, trajectory
//! polylines (occluded stretches dashed), and body rectangles every 25th
//! stage. Output is a pure function of the inputs.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use nalgebra::Vector2;

use hybrid_games::game::TrajectoryIterate;
use hybrid_games::visibility::player_pose;

use crate::config::PreparedScenario;

const PLAYER_COLORS: [&str; 6] =
    ["#2f9e44", "#1971c2", "#a05a2c", "#e03131", "#9c36b5", "#f08c00"];

/// Interval between drawn body rectangles, in stages.
const MARKER_STRIDE: usize = 25;

struct Frame {
    min: Vector2<f64>,
    max: Vector2<f64>,
    scale: f64,
}

impl Frame {
    fn to_svg(&self, p: Vector2<f64>) -> (f64, f64) {
        // Flip y so +y points up in the drawing.
        ((p.x - self.min.x) * self.scale, (self.max.y - p.y) * self.scale)
    }
}

fn fmt2(v: f64) -> String {
    format!("{v:.2}")
}

/// Render the scenario to an SVG file.
pub fn emit_plot(
    trajectory: &TrajectoryIterate,
    scenario: &PreparedScenario,
    path: &Path,
) -> Result<()> {
    let svg = render_svg(trajectory, scenario);
    std::fs::write(path, svg).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Build the SVG document in memory (deterministic for identical inputs).
pub fn render_svg(trajectory: &TrajectoryIterate, scenario: &PreparedScenario) -> String {
    let n = scenario.problem.num_players();

    let mut min = Vector2::new(f64::INFINITY, f64::INFINITY);
    let mut max = Vector2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut widen = |p: Vector2<f64>| {
        min.x = min.x.min(p.x);
        min.y = min.y.min(p.y);
        max.x = max.x.max(p.x);
        max.y = max.y.max(p.y);
    };
    for state in &trajectory.states {
        for i in 0..n {
            widen(player_pose(state, i).0);
        }
    }
    for rect in &scenario.occluders.static_rects {
        for c in rect.corners() {
            widen(c);
        }
    }
    let pad = 8.0;
    min -= Vector2::new(pad, pad);
    max += Vector2::new(pad, pad);
    let scale = 8.0;
    let frame = Frame { min, max, scale };
    let width = (max.x - min.x) * scale;
    let height = (max.y - min.y) * scale;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        fmt2(width),
        fmt2(height),
        fmt2(width),
        fmt2(height)
    );
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="#fcfcf7"/>"##);

    // Lane center-lines and soft boundaries, clipped to the frame box.
    for (i, w) in scenario.problem.weights.iter().enumerate() {
        let lane = &w.lane;
        let span = (max - min).norm();
        let mid = lane.point + lane.direction * lane.progress((min + max) * 0.5);
        let a = mid - lane.direction * span;
        let b = mid + lane.direction * span;
        let (x1, y1) = frame.to_svg(a);
        let (x2, y2) = frame.to_svg(b);
        let _ = writeln!(
            svg,
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#b5b5a8" stroke-width="1" stroke-dasharray="10 6"/>"##,
            fmt2(x1),
            fmt2(y1),
            fmt2(x2),
            fmt2(y2)
        );
        let normal = lane.normal();
        for side in [-1.0, 1.0] {
            let offset = normal * side * w.lane_half_width;
            let (x1, y1) = frame.to_svg(a + offset);
            let (x2, y2) = frame.to_svg(b + offset);
            let _ = writeln!(
                svg,
                r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#d8d8cb" stroke-width="1"/>"##,
                fmt2(x1),
                fmt2(y1),
                fmt2(x2),
                fmt2(y2)
            );
        }
        let _ = i;
    }

    // Static occluders.
    for rect in &scenario.occluders.static_rects {
        let _ = writeln!(svg, "{}", polygon(&frame, &rect.corners(), "#8891a0", 0.9, "none"));
    }

    // Trajectory polylines, split into visible (solid) and occluded
    // (dashed) runs.
    for i in 0..n {
        let color = PLAYER_COLORS[i % PLAYER_COLORS.len()];
        let mut t = 0;
        while t < trajectory.horizon() {
            let occluded = trajectory.occluded[t];
            let mut run_end = t;
            while run_end + 1 < trajectory.horizon() && trajectory.occluded[run_end + 1] == occluded {
                run_end += 1;
            }
            // Overlap one point with the next run so the line is continuous.
            let last_point = (run_end + 1).min(trajectory.horizon() - 1);
            let mut pts = String::new();
            for s in t..=last_point {
                let (x, y) = frame.to_svg(player_pose(&trajectory.states[s], i).0);
                let _ = write!(pts, "{},{} ", fmt2(x), fmt2(y));
            }
            let dash = if occluded { r#" stroke-dasharray="6 5""# } else { "" };
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.6"{}/>"#,
                pts.trim_end(),
                color,
                dash
            );
            t = run_end + 1;
        }
    }

    // Body rectangles at stage 1 and every 25th stage after it.
    for i in 0..n {
        let color = PLAYER_COLORS[i % PLAYER_COLORS.len()];
        let mut t = 1;
        while t <= trajectory.horizon() {
            let (c, heading) = player_pose(&trajectory.states[t - 1], i);
            let rect = scenario.geometry[i].at(c, heading);
            let _ = writeln!(svg, "{}", polygon(&frame, &rect.corners(), color, 0.35, color));
            t += MARKER_STRIDE;
        }
    }

    svg.push_str("</svg>\n");
    svg
}

fn polygon(frame: &Frame, corners: &[Vector2<f64>; 4], fill: &str, opacity: f64, stroke: &str) -> String {
    let mut pts = String::new();
    for c in corners {
        let (x, y) = frame.to_svg(*c);
        let _ = write!(pts, "{},{} ", fmt2(x), fmt2(y));
    }
    format!(
        r#"<polygon points="{}" fill="{}" fill-opacity="{}" stroke="{}" stroke-width="0.8"/>"#,
        pts.trim_end(),
        fill,
        opacity,
        stroke
    )
}
