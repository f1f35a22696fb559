use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Rest-to-rest trapezoidal velocity profile over a straight move.
///
/// Degenerates to a triangle when the move is too short to reach `v_max`
/// (`distance < v_max² / accel`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionProfile<T> {
    pub distance: T,
    pub v_max: T,
    pub accel: T,
}

impl<T: Scalar> MotionProfile<T> {
    pub fn new(distance: T, v_max: T, accel: T) -> Result<Self> {
        if !(distance >= T::zero() && distance.is_finite()) {
            return Err(Error::Contract(format!("distance must be >= 0, got {distance}")));
        }
        if !(v_max > T::zero() && v_max.is_finite() && accel > T::zero() && accel.is_finite()) {
            return Err(Error::Contract(format!(
                "v_max and accel must be positive, got {v_max} and {accel}"
            )));
        }
        Ok(Self { distance, v_max, accel })
    }

    /// Profile covering `distance` in exactly `duration`, spending
    /// `ramp_fraction` of it on each of the ramps.
    pub fn spanning(distance: T, duration: T, ramp_fraction: T) -> Result<Self> {
        let half = T::of(0.5);
        if !(duration > T::zero()) || !(ramp_fraction > T::zero() && ramp_fraction <= half) {
            return Err(Error::Contract(format!(
                "need duration > 0 and ramp fraction in (0, 0.5], got {duration} and {ramp_fraction}"
            )));
        }
        if distance == T::zero() {
            return Self::new(distance, T::one(), T::one());
        }
        let t_ramp = ramp_fraction * duration;
        let v_max = distance / (duration - t_ramp);
        Self::new(distance, v_max, v_max / t_ramp)
    }

    pub fn is_trapezoidal(&self) -> bool {
        self.distance >= self.v_max * self.v_max / self.accel
    }

    /// Velocity reached at the end of the ramp-up.
    pub fn peak_velocity(&self) -> T {
        if self.is_trapezoidal() {
            self.v_max
        } else {
            (self.distance * self.accel).sqrt()
        }
    }

    pub fn ramp_time(&self) -> T {
        self.peak_velocity() / self.accel
    }

    pub fn cruise_time(&self) -> T {
        if self.is_trapezoidal() {
            (self.distance - self.v_max * self.v_max / self.accel) / self.v_max
        } else {
            T::zero()
        }
    }

    pub fn duration(&self) -> T {
        T::of(2.0) * self.ramp_time() + self.cruise_time()
    }

    fn check_time(&self, t: T) -> Result<()> {
        if t >= T::zero() && t <= self.duration() {
            Ok(())
        } else {
            Err(Error::Contract(format!(
                "t = {t} outside profile duration [0, {}]",
                self.duration()
            )))
        }
    }

    pub fn velocity(&self, t: T) -> Result<T> {
        self.check_time(t)?;
        let tr = self.ramp_time();
        let tc = self.cruise_time();
        let v = if t < tr {
            self.accel * t
        } else if t <= tr + tc {
            self.peak_velocity()
        } else {
            self.accel * (self.duration() - t)
        };
        Ok(v.max(T::zero()).min(self.v_max))
    }

    pub fn acceleration(&self, t: T) -> Result<T> {
        self.check_time(t)?;
        let tr = self.ramp_time();
        let tc = self.cruise_time();
        Ok(if t < tr {
            self.accel
        } else if t <= tr + tc {
            T::zero()
        } else {
            -self.accel
        })
    }

    pub fn position(&self, t: T) -> Result<T> {
        self.check_time(t)?;
        let half = T::of(0.5);
        let tr = self.ramp_time();
        let tc = self.cruise_time();
        let vp = self.peak_velocity();
        Ok(if t < tr {
            half * self.accel * t * t
        } else if t <= tr + tc {
            half * vp * tr + vp * (t - tr)
        } else {
            let rem = self.duration() - t;
            self.distance - half * self.accel * rem * rem
        })
    }
}

/// Free-function form of [`MotionProfile::velocity`].
pub fn trapezoid_velocity<T: Scalar>(profile: &MotionProfile<T>, t: T) -> Result<T> {
    profile.velocity(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson integration of the velocity, independent of `position`.
    fn integrate(p: &MotionProfile<f64>, steps: usize) -> f64 {
        let t_end = p.duration();
        if t_end == 0.0 {
            return 0.0;
        }
        // Integrate each phase separately so the kinks sit on panel edges.
        let edges = [0.0, p.ramp_time(), p.ramp_time() + p.cruise_time(), t_end];
        let mut total = 0.0;
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let h = (b - a) / steps as f64;
            let mut s = p.velocity(a).unwrap() + p.velocity(b).unwrap();
            for i in 1..steps {
                let f = p.velocity(a + i as f64 * h).unwrap();
                s += if i % 2 == 1 { 4.0 * f } else { 2.0 * f };
            }
            total += s * h / 3.0;
        }
        total
    }

    #[test]
    fn trapezoid_phases() {
        let p = MotionProfile::new(1.0, 0.5, 0.5).unwrap();
        assert!(p.is_trapezoidal());
        assert_eq!(p.ramp_time(), 1.0);
        assert_eq!(p.cruise_time(), 1.0);
        assert_eq!(p.duration(), 3.0);
        assert_eq!(trapezoid_velocity(&p, 1.5).unwrap(), 0.5);
        assert!((integrate(&p, 1000) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn triangular_case() {
        let p = MotionProfile::new(0.25, 1.0, 1.0).unwrap();
        assert!(!p.is_trapezoidal());
        assert_eq!(p.peak_velocity(), 0.5);
        assert_eq!(p.velocity(0.5).unwrap(), 0.5);
        assert_eq!(p.duration(), 1.0);
        assert!((integrate(&p, 1000) - 0.25).abs() < 1e-9 * 0.25);
    }

    #[test]
    fn zero_distance() {
        let p = MotionProfile::new(0.0, 1.0, 2.0).unwrap();
        assert_eq!(p.duration(), 0.0);
        assert_eq!(p.velocity(0.0).unwrap(), 0.0);
        assert!(p.velocity(0.1).is_err());
    }

    #[test]
    fn outside_duration_is_rejected() {
        let p = MotionProfile::new(1.0, 0.5, 0.5).unwrap();
        assert!(matches!(p.velocity(-0.01), Err(Error::Contract(_))));
        assert!(matches!(p.velocity(3.01), Err(Error::Contract(_))));
    }

    #[test]
    fn spanning_hits_requested_duration() {
        let p: MotionProfile<f64> = MotionProfile::spanning(0.4, 3.0, 0.25).unwrap();
        assert!((p.duration() - 3.0).abs() < 1e-12);
        assert!((p.position(3.0).unwrap() - 0.4).abs() < 1e-12);
        assert!((integrate(&p, 2000) - 0.4).abs() < 1e-9 * 0.4);
    }

    #[test]
    fn single_precision_profile() {
        let p = MotionProfile::new(1.0f32, 0.5, 0.5).unwrap();
        assert_eq!(p.velocity(1.5).unwrap(), 0.5f32);
    }

    proptest::proptest! {
        #[test]
        fn velocity_stays_in_bounds_and_integrates(
            distance in 0.001f64..5.0,
            v_max in 0.05f64..3.0,
            accel in 0.05f64..10.0,
            frac in 0.0f64..=1.0,
        ) {
            let p = MotionProfile::new(distance, v_max, accel).unwrap();
            let t = frac * p.duration();
            let v = p.velocity(t).unwrap();
            proptest::prop_assert!(v >= 0.0 && v <= v_max);
            proptest::prop_assert_eq!(p.velocity(0.0).unwrap(), 0.0);
            proptest::prop_assert!(p.velocity(p.duration()).unwrap().abs() < 1e-12);
            let area = integrate(&p, 400);
            proptest::prop_assert!((area - distance).abs() <= 1e-9 * distance.max(1e-3));
            proptest::prop_assert!((p.position(p.duration()).unwrap() - distance).abs() <= 1e-9 * distance);
        }
    }
}
