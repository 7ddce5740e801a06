use super::ControlError;
use crate::arm_model::{TendonVector, TENDONS};
use serde::{Deserialize, Serialize};

/// Executor tendon tracking imperfections: backlash, lag and speed limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackingParams {
    /// Backlash half-width, m.
    pub deadband: f64,
    /// Tendon speed limit, m/s.
    pub rate_limit: f64,
    /// First-order lag time constant, s. Zero means no lag.
    pub time_constant: f64,
}

impl Default for TrackingParams {
    fn default() -> Self {
        TrackingParams {
            deadband: 0.002,
            rate_limit: 0.05,
            time_constant: 0.05,
        }
    }
}

impl TrackingParams {
    /// Perfect tracking: no backlash, no lag, no speed limit.
    pub const IDEAL: TrackingParams = TrackingParams {
        deadband: 0.0,
        rate_limit: f64::INFINITY,
        time_constant: 0.0,
    };

    pub fn validate(&self) -> Result<(), ControlError> {
        if !(self.deadband.is_finite() && self.deadband >= 0.0) {
            return Err(ControlError::InvalidTracking("deadband must be non-negative"));
        }
        if !(self.rate_limit > 0.0) {
            return Err(ControlError::InvalidTracking("rate limit must be positive"));
        }
        if !(self.time_constant.is_finite() && self.time_constant >= 0.0) {
            return Err(ControlError::InvalidTracking("time constant must be non-negative"));
        }
        Ok(())
    }
}

/// One tracking update of the executor's tendons toward the commanded lengths.
///
/// A tendon within the deadband (inclusive) does not move. Otherwise it relaxes
/// exponentially toward the near edge of the deadband, `commanded -+ deadband`,
/// and never moves faster than the rate limit, so it cannot overshoot that edge.
pub fn executor_track(
    commanded: &TendonVector,
    current: &TendonVector,
    tp: &TrackingParams,
    dt: f64,
) -> Result<TendonVector, ControlError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(ControlError::InvalidTimeStep(dt));
    }
    let decay = if tp.time_constant > 0.0 {
        (-dt / tp.time_constant).exp()
    } else {
        0.0
    };
    let max_move = tp.rate_limit * dt;
    let mut out = *current;
    for k in 0..TENDONS {
        let (cmd, cur) = (commanded.0[k], current.0[k]);
        let err = cmd - cur;
        if err.abs() <= tp.deadband {
            continue;
        }
        let target = cmd - tp.deadband * err.signum();
        let relaxed = target + (cur - target) * decay;
        let step = relaxed - cur;
        out.0[k] = if step.abs() <= max_move {
            relaxed
        } else {
            cur + max_move.copysign(step)
        };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(v: f64) -> TendonVector {
        let mut t = TendonVector::ZERO;
        t.0[0] = v;
        t
    }

    #[test]
    fn no_error_no_motion() {
        let t = TendonVector([0.01, -0.02, 0.01, 0.0, 0.0, 0.0, 0.003, -0.003, 0.0]);
        assert_eq!(executor_track(&t, &t, &TrackingParams::default(), 0.01).unwrap(), t);
    }

    #[test]
    fn deadband_edge_is_inclusive() {
        let tp = TrackingParams::default();
        let out = executor_track(&single(0.002), &TendonVector::ZERO, &tp, 0.01).unwrap();
        assert_eq!(out, TendonVector::ZERO);
    }

    #[test]
    fn first_order_step_response() {
        let tp = TrackingParams {
            deadband: 0.002,
            rate_limit: 1e3,
            time_constant: 0.05,
        };
        let dt = 0.001;
        let mut x = TendonVector::ZERO;
        for _ in 0..150 {
            x = executor_track(&single(0.01), &x, &tp, dt).unwrap();
        }
        let expect = 0.008 * (1.0 - (-3.0f64).exp());
        assert!((x.0[0] - expect).abs() < 1e-12);
        assert!((x.0[0] - 0.008).abs() < 0.05 * 0.008);
    }

    #[test]
    fn rate_limit_caps_speed() {
        let tp = TrackingParams {
            deadband: 0.0,
            rate_limit: 0.05,
            time_constant: 0.0,
        };
        let out = executor_track(&single(1.0), &TendonVector::ZERO, &tp, 0.01).unwrap();
        assert!((out.0[0] - 0.0005).abs() < 1e-15);
    }

    #[test]
    fn ideal_tracking_copies() {
        let cmd = TendonVector([0.01, -0.02, 0.01, 0.0, 0.004, -0.004, 0.003, -0.003, 0.0]);
        assert_eq!(executor_track(&cmd, &TendonVector::ZERO, &TrackingParams::IDEAL, 0.01).unwrap(), cmd);
    }

    #[test]
    fn rejects_bad_dt() {
        assert!(executor_track(&TendonVector::ZERO, &TendonVector::ZERO, &TrackingParams::default(), 0.0).is_err());
    }
}
