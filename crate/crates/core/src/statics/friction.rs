use super::{FrictionParams, StaticsError};

fn non_negative_current(current: f64) -> Result<(), StaticsError> {
    if current.is_finite() && current >= 0.0 {
        Ok(())
    } else {
        Err(StaticsError::NegativeCurrent(current))
    }
}

fn non_negative_force(force: f64) -> Result<(), StaticsError> {
    if force.is_finite() && force >= 0.0 {
        Ok(())
    } else {
        Err(StaticsError::NegativeForce(force))
    }
}

/// Motor actuation force `k_act I + C_act`.
pub fn actuation_force(current: f64, p: &FrictionParams) -> Result<f64, StaticsError> {
    non_negative_current(current)?;
    Ok(p.k_act * current + p.c_act)
}

/// Largest friction force a stuck tendon can sustain:
/// `mu_s (alpha F_T + beta F_act)`.
pub fn static_friction_limit(tension: f64, actuation: f64, p: &FrictionParams) -> Result<f64, StaticsError> {
    non_negative_force(tension)?;
    non_negative_force(actuation)?;
    Ok(p.mu_s * (p.alpha * tension + p.beta * actuation))
}

/// Kinetic friction `mu_k (F_T + F_act) sign(v)`. The returned value carries the
/// sign of the tendon velocity; callers subtract it to oppose the motion.
pub fn kinetic_friction(tension: f64, actuation: f64, velocity: f64, p: &FrictionParams) -> Result<f64, StaticsError> {
    non_negative_force(tension)?;
    non_negative_force(actuation)?;
    if velocity == 0.0 || !velocity.is_finite() {
        return Err(StaticsError::ZeroVelocity);
    }
    Ok(p.mu_k * (tension + actuation) * velocity.signum())
}

/// Current-only form of kinetic friction, `(k_kf I + C_kf) sign(v)`.
pub fn kinetic_friction_from_current(current: f64, velocity: f64, p: &FrictionParams) -> Result<f64, StaticsError> {
    non_negative_current(current)?;
    if velocity == 0.0 || !velocity.is_finite() {
        return Err(StaticsError::ZeroVelocity);
    }
    Ok((p.k_kf * current + p.c_kf) * velocity.signum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> FrictionParams {
        FrictionParams::default()
    }

    #[test]
    fn actuation_intercept_and_value() {
        let p = params();
        assert_eq!(actuation_force(0.0, &p).unwrap(), 0.5);
        assert!((actuation_force(0.3, &p).unwrap() - 6.5).abs() < 1e-12);
        assert_eq!(actuation_force(-0.1, &p), Err(StaticsError::NegativeCurrent(-0.1)));
    }

    #[test]
    fn static_limit_values() {
        let p = params();
        assert_eq!(static_friction_limit(0.0, 0.0, &p).unwrap(), 0.0);
        assert!((static_friction_limit(10.0, 10.0, &p).unwrap() - 3.0).abs() < 1e-12);
        assert!(static_friction_limit(-1.0, 0.0, &p).is_err());
    }

    #[test]
    fn static_limit_grows_with_current() {
        let p = params();
        let mut last = -1.0;
        for k in 0..=10 {
            let act = actuation_force(k as f64 * 0.1, &p).unwrap();
            let limit = static_friction_limit(5.0, act, &p).unwrap();
            assert!(limit > last);
            last = limit;
        }
    }

    #[test]
    fn kinetic_magnitude_and_sign() {
        let p = params();
        assert!((kinetic_friction(10.0, 10.0, 0.3, &p).unwrap() - 4.0).abs() < 1e-12);
        assert!((kinetic_friction(10.0, 10.0, -0.3, &p).unwrap() + 4.0).abs() < 1e-12);
        assert_eq!(kinetic_friction(10.0, 10.0, 0.0, &p), Err(StaticsError::ZeroVelocity));
    }

    #[test]
    fn current_form_matches_default_fit_at_zero_tension() {
        let p = params();
        for k in 0..=10 {
            let i = k as f64 * 0.1;
            let a = kinetic_friction(0.0, actuation_force(i, &p).unwrap(), 1.0, &p).unwrap();
            let b = kinetic_friction_from_current(i, 1.0, &p).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }
}
