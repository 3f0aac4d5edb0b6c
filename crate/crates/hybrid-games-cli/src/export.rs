//! Trajectory CSV export/import and JSON report writing.

use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::DVector;

use hybrid_games::game::TrajectoryIterate;

use crate::report::RunReport;

/// Write a trajectory as CSV: header, then one row per stage with
/// `t, time_s, occluded` followed by each player's
/// `p_x, p_y, v, theta, omega_cmd, accel_cmd`. Floats carry nine
/// significant digits.
pub fn export_trajectory(
    trajectory: &TrajectoryIterate,
    dt: f64,
    path: &Path,
) -> Result<()> {
    let n = trajectory.num_players();
    let mut out = String::new();
    out.push_str("t,time_s,occluded");
    for i in 1..=n {
        out.push_str(&format!(
            ",p{i}_x,p{i}_y,p{i}_v,p{i}_theta,p{i}_omega,p{i}_accel"
        ));
    }
    out.push('\n');

    let fmt = |v: f64| format!("{v:.8e}");
    for t in 1..=trajectory.horizon() {
        let x = &trajectory.states[t - 1];
        let us = &trajectory.controls[t - 1];
        out.push_str(&format!(
            "{t},{},{}",
            fmt((t - 1) as f64 * dt),
            u8::from(trajectory.occluded[t - 1])
        ));
        for i in 0..n {
            let o = 4 * i;
            for v in [x[o], x[o + 1], x[o + 2], x[o + 3], us[i][0], us[i][1]] {
                out.push(',');
                out.push_str(&fmt(v));
            }
        }
        out.push('\n');
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Read back a CSV produced by [`export_trajectory`]. Returns the
/// trajectory and the timestep recovered from the time column.
pub fn import_trajectory(path: &Path) -> Result<(TrajectoryIterate, f64)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().context("empty CSV")?;
    let cols = header.split(',').count();
    if cols < 9 || (cols - 3) % 6 != 0 {
        bail!("unexpected column count {cols}");
    }
    let n = (cols - 3) / 6;

    let mut states = Vec::new();
    let mut controls = Vec::new();
    let mut occluded = Vec::new();
    let mut times = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            bail!("line {}: expected {cols} fields, got {}", lineno + 2, fields.len());
        }
        times.push(fields[1].parse::<f64>()?);
        occluded.push(fields[2] != "0");
        let mut x = DVector::zeros(4 * n);
        let mut us = Vec::with_capacity(n);
        for i in 0..n {
            let base = 3 + 6 * i;
            for k in 0..4 {
                x[4 * i + k] = fields[base + k].parse::<f64>()?;
            }
            us.push(DVector::from_vec(vec![
                fields[base + 4].parse::<f64>()?,
                fields[base + 5].parse::<f64>()?,
            ]));
        }
        states.push(x);
        controls.push(us);
    }
    if states.is_empty() {
        bail!("CSV has no data rows");
    }
    let dt = if times.len() >= 2 { times[1] - times[0] } else { 0.0 };
    Ok((TrajectoryIterate { states, controls, occluded }, dt))
}

/// Serialize a run report as pretty JSON.
pub fn write_report_json(report: &RunReport, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(report)?;
    std::fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
