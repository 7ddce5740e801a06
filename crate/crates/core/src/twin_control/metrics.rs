use serde::{Deserialize, Serialize};

/// A tip position at time `t` (seconds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedPosition {
    pub t: f64,
    pub p: [f64; 3],
}

impl TimedPosition {
    pub fn new(t: f64, p: [f64; 3]) -> Self {
        TimedPosition { t, p }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("{0} trajectory is empty")]
    Empty(&'static str),
    #[error("{0} trajectory timestamps must be finite and strictly increasing")]
    Unordered(&'static str),
    #[error("trajectories do not overlap in time")]
    NoOverlap,
}

/// Deviation on one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum AxisDeviation {
    /// RMS difference as a percentage of the demonstrator's range on this axis.
    Percent(f64),
    /// The demonstrator did not move on this axis; plain RMS difference in meters.
    AbsoluteMeters(f64),
}

impl AxisDeviation {
    pub fn value(&self) -> f64 {
        match *self {
            AxisDeviation::Percent(v) | AxisDeviation::AbsoluteMeters(v) => v,
        }
    }

    pub fn is_percent(&self) -> bool {
        matches!(self, AxisDeviation::Percent(_))
    }
}

/// Per-axis deviation in x, y, z order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationReport {
    pub axes: [AxisDeviation; 3],
    /// Number of points on the common time grid.
    pub samples: usize,
}

impl DeviationReport {
    pub fn values(&self) -> [f64; 3] {
        self.axes.map(|a| a.value())
    }

    /// Values at three significant digits, as printed in tables.
    pub fn formatted(&self) -> [String; 3] {
        self.axes.map(|a| format_sig3(a.value()))
    }
}

/// Formats a non-negative value with three significant digits.
pub(crate) fn format_sig3(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v:.2}");
    }
    let digits = v.abs().log10().floor() as i32;
    let decimals = (2 - digits).max(0) as usize;
    format!("{v:.decimals$}")
}

fn check_series(series: &[TimedPosition], name: &'static str) -> Result<(), MetricsError> {
    if series.is_empty() {
        return Err(MetricsError::Empty(name));
    }
    if series.iter().any(|s| !s.t.is_finite()) || series.windows(2).any(|w| w[1].t <= w[0].t) {
        return Err(MetricsError::Unordered(name));
    }
    Ok(())
}

fn mean_interval(series: &[TimedPosition]) -> f64 {
    if series.len() < 2 {
        return 0.0;
    }
    (series[series.len() - 1].t - series[0].t) / (series.len() - 1) as f64
}

/// Linear interpolation of a strictly increasing series at `t` (clamped to its span).
fn interpolate(series: &[TimedPosition], t: f64) -> [f64; 3] {
    let idx = series.partition_point(|s| s.t <= t);
    if idx == 0 {
        return series[0].p;
    }
    if idx >= series.len() {
        return series[series.len() - 1].p;
    }
    let (a, b) = (&series[idx - 1], &series[idx]);
    let w = (t - a.t) / (b.t - a.t);
    std::array::from_fn(|k| a.p[k] + w * (b.p[k] - a.p[k]))
}

/// Relative deviation between a demonstrator and an executor tip trajectory.
///
/// Both series are resampled by linear interpolation onto a uniform grid over
/// their common time span, spaced at the slower series' mean sample interval.
/// Per axis the RMS difference on that grid is divided by the demonstrator's
/// range (max minus min of its samples) and reported in percent. Axes where the
/// demonstrator has zero range report the RMS in meters instead.
pub fn deviation_metrics(demo: &[TimedPosition], exec: &[TimedPosition]) -> Result<DeviationReport, MetricsError> {
    check_series(demo, "demonstrator")?;
    check_series(exec, "executor")?;
    let start = demo[0].t.max(exec[0].t);
    let end = demo[demo.len() - 1].t.min(exec[exec.len() - 1].t);
    if end < start {
        return Err(MetricsError::NoOverlap);
    }
    let step = mean_interval(demo).max(mean_interval(exec));
    let n = if step > 0.0 && end > start {
        // tolerate rounding so a grid point lands on `end` when the span is a whole number of steps
        ((end - start) / step + 1e-9).floor() as usize + 1
    } else {
        1
    };

    let mut sum_sq = [0.0; 3];
    for k in 0..n {
        let t = start + k as f64 * step;
        let a = interpolate(demo, t);
        let b = interpolate(exec, t);
        for axis in 0..3 {
            let d = a[axis] - b[axis];
            sum_sq[axis] += d * d;
        }
    }

    let axes = std::array::from_fn(|axis| {
        let rms = (sum_sq[axis] / n as f64).sqrt();
        let (lo, hi) = demo
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.p[axis]), hi.max(s.p[axis])));
        let range = hi - lo;
        if range > 0.0 {
            AxisDeviation::Percent(100.0 * rms / range)
        } else {
            AxisDeviation::AbsoluteMeters(rms)
        }
    });
    Ok(DeviationReport { axes, samples: n })
}
