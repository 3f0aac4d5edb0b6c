//! Wall-clock scaling of the hybrid LQ solve against state dimension.

use std::time::Instant;

use serde::Serialize;

use hybrid_games::game::{partition_from_flags, InformationSchedule};
use hybrid_games::lq::solve_lq_hybrid;
use hybrid_games::synth::{random_lq_game, RandomGameSpec};

#[derive(Clone, Debug, Serialize)]
pub struct BenchSample {
    pub state_dim: usize,
    /// Best-of-reps wall clock for one hybrid solve.
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub horizon: usize,
    pub samples: Vec<BenchSample>,
    /// Least-squares slope of log(time) against log(state_dim).
    pub log_log_slope: f64,
}

fn half_open_half_closed_schedule(horizon: usize) -> InformationSchedule {
    let flags: Vec<bool> = (0..horizon).map(|t| t < horizon / 2).collect();
    partition_from_flags(&flags).expect("nonempty horizon")
}

/// Time `solve_lq_hybrid` on random two-player games of growing state
/// dimension and fit the scaling exponent.
pub fn complexity_bench(state_dims: &[usize], horizon: usize, reps: usize, seed: u64) -> BenchReport {
    let schedule = half_open_half_closed_schedule(horizon);
    let mut samples = Vec::with_capacity(state_dims.len());
    for &n in state_dims {
        let spec = RandomGameSpec {
            state_dim: n,
            control_dims: vec![2, 2],
            horizon,
            linear_scale: 1.0,
        };
        let game = random_lq_game(&spec, seed.wrapping_add(n as u64));
        // Warm-up solve outside the timed region.
        solve_lq_hybrid(&game, &schedule).expect("well-posed random game");
        let mut best = f64::INFINITY;
        for _ in 0..reps.max(1) {
            let start = Instant::now();
            let solution = solve_lq_hybrid(&game, &schedule).expect("well-posed random game");
            let elapsed = start.elapsed().as_secs_f64();
            std::hint::black_box(&solution);
            best = best.min(elapsed);
        }
        samples.push(BenchSample { state_dim: n, seconds: best });
    }

    let log_log_slope = fit_slope(
        &samples.iter().map(|s| (s.state_dim as f64).ln()).collect::<Vec<_>>(),
        &samples.iter().map(|s| s.seconds.ln()).collect::<Vec<_>>(),
    );
    BenchReport { horizon, samples, log_log_slope }
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mean_x) * (y - mean_y);
        den += (x - mean_x) * (x - mean_x);
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_cubic_data_is_three() {
        let xs: Vec<f64> = [8.0_f64, 16.0, 32.0].iter().map(|v| v.ln()).collect();
        let ys: Vec<f64> = [8.0_f64, 16.0, 32.0].iter().map(|v| (v * v * v).ln()).collect();
        let slope = fit_slope(&xs, &ys);
        assert!((slope - 3.0).abs() < 1e-12);
    }
}
