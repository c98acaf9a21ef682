//! Log-log rate fits of Kolmogorov distances against `N`.

use serde::{Deserialize, Serialize};

/// Minimum number of points above the noise threshold for a fit.
pub const MIN_POINTS: usize = 3;

/// One observation: distance `delta` at size `n` with Monte Carlo floor
/// `floor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    pub delta: f64,
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum RateOutcome {
    /// `log(adjusted delta) = intercept + slope log N`, with `band` twice the
    /// slope's standard error.
    Fit { slope: f64, intercept: f64, band: f64, points_used: usize },
    /// Fewer than [`MIN_POINTS`] distances clear twice their floor.
    InsufficientSignal { points_above_floor: usize },
}

impl RateOutcome {
    pub fn slope(&self) -> Option<f64> {
        match self {
            RateOutcome::Fit { slope, .. } => Some(*slope),
            RateOutcome::InsufficientSignal { .. } => None,
        }
    }

    /// Whether `target` lies inside `slope +- band`.
    pub fn contains(&self, target: f64) -> bool {
        match self {
            RateOutcome::Fit { slope, band, .. } => (slope - target).abs() <= *band,
            RateOutcome::InsufficientSignal { .. } => false,
        }
    }
}

/// OLS fit of `log sqrt(delta^2 - floor^2)` on `log N`, using only points
/// with `delta > 2 floor`.
pub fn rate_fit(points: &[RatePoint]) -> RateOutcome {
    let used: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.delta > 2.0 * p.floor && p.n > 0)
        .map(|p| ((p.n as f64).ln(), (p.delta * p.delta - p.floor * p.floor).sqrt().ln()))
        .collect();
    let k = used.len();
    if k < MIN_POINTS {
        return RateOutcome::InsufficientSignal { points_above_floor: k };
    }
    let kf = k as f64;
    let mx = used.iter().map(|p| p.0).sum::<f64>() / kf;
    let my = used.iter().map(|p| p.1).sum::<f64>() / kf;
    let sxx: f64 = used.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = used.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = used.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let se = (rss / (kf - 2.0) / sxx).sqrt();
    RateOutcome::Fit { slope, intercept, band: 2.0 * se, points_used: k }
}
