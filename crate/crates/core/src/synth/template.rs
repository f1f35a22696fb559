use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Source, TaskLabel};
use crate::error::{Error, Result};

pub const MIN_RPM: f64 = 5_000.0;
pub const MAX_RPM: f64 = 35_000.0;

/// Motion and channel-coupling parameters of one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskTemplate {
    pub task: TaskLabel,
    /// Seconds per work + return cycle.
    pub pass_period: f64,
    /// Metres travelled per stroke.
    pub stroke_distance: f64,
    pub rpm: f64,
    pub load_level: f64,
    /// Load on the return stroke relative to the work stroke.
    pub return_load_ratio: f64,
    /// Depth multiplier per pass, cycled.
    pub depth_schedule: Vec<f64>,
    pub heading_deg: f64,
    /// Habitual tool tilt (roll, pitch) in degrees.
    #[serde(default)]
    pub grip_tilt_deg: [f64; 2],
    pub vibration_gain: f64,
    pub mic_gain: f64,
    pub current_idle: f64,
    pub current_load_gain: f64,
}

impl TaskTemplate {
    /// Nominal parameters, i.e. what the robot executes.
    pub fn nominal(task: TaskLabel) -> Self {
        let (pass_period, stroke, rpm, load, ret, depth, heading, vib, mic, idle, gain) = match task {
            TaskLabel::Cutting => (
                4.0,
                0.25,
                28_500.0,
                0.70,
                0.15,
                vec![0.8, 1.0, 1.2],
                0.0,
                2.2,
                0.45,
                0.30,
                1.4,
            ),
            TaskLabel::Engraving => (
                2.0,
                0.05,
                21_300.0,
                0.45,
                0.5,
                vec![0.7, 1.0, 1.3, 1.0],
                45.0,
                1.6,
                0.35,
                0.30,
                1.2,
            ),
            TaskLabel::Routing => (
                6.0,
                0.40,
                24_600.0,
                0.60,
                0.2,
                vec![0.9, 1.0, 1.1, 1.2],
                90.0,
                2.0,
                0.40,
                0.30,
                1.3,
            ),
            TaskLabel::Sanding => (1.5, 0.12, 11_700.0, 0.50, 1.0, vec![1.0], 0.0, 2.4, 0.40, 0.30, 1.1),
        };
        Self {
            task,
            pass_period,
            stroke_distance: stroke,
            rpm,
            load_level: load,
            return_load_ratio: ret,
            depth_schedule: depth,
            heading_deg: heading,
            grip_tilt_deg: [0.0; 2],
            vibration_gain: vib,
            mic_gain: mic,
            current_idle: idle,
            current_load_gain: gain,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(MIN_RPM..=MAX_RPM).contains(&self.rpm) {
            return Err(Error::Config(format!(
                "{} template rpm {} outside [{MIN_RPM}, {MAX_RPM}]",
                self.task, self.rpm
            )));
        }
        if !(self.pass_period > 0.0) {
            return Err(Error::Config(format!("{} template pass_period must be > 0", self.task)));
        }
        if !(0.0..=1.0).contains(&self.load_level) {
            return Err(Error::Config(format!(
                "{} template load_level outside [0, 1]",
                self.task
            )));
        }
        if self.depth_schedule.is_empty() || self.depth_schedule.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::Config(format!(
                "{} template needs a non-empty, non-negative depth schedule",
                self.task
            )));
        }
        if self.stroke_distance < 0.0 {
            return Err(Error::Config(format!("{} template stroke_distance < 0", self.task)));
        }
        Ok(())
    }

    /// How one person's technique and tool setup differ from the nominal
    /// program: each coupling is rescaled by `1 + spread * N(0, 1)`, and the
    /// heading and grip tilt get additive normal offsets.
    pub fn perturbed<R: Rng + ?Sized>(&self, v: &SubjectVariation, rng: &mut R) -> Self {
        let mut z = || -> f64 { StandardNormal.sample(rng) };
        let mut t = self.clone();
        let mut f = |lo: f64, hi: f64| (1.0 + v.spread * z()).clamp(lo, hi);
        t.pass_period *= f(0.5, 1.5);
        t.stroke_distance *= f(0.5, 1.5);
        t.rpm = (t.rpm * f(0.7, 1.3)).clamp(MIN_RPM, MAX_RPM);
        t.load_level = (t.load_level * f(0.5, 1.5)).clamp(0.0, 1.0);
        t.vibration_gain *= f(0.5, 1.5);
        t.mic_gain *= f(0.5, 1.5);
        t.current_idle *= f(0.5, 1.5);
        t.current_load_gain *= f(0.5, 1.5);
        let mut z = || -> f64 { StandardNormal.sample(rng) };
        t.heading_deg += v.heading_std_deg * z();
        for a in &mut t.grip_tilt_deg {
            *a += v.tilt_std_deg * z();
        }
        t
    }
}

/// Spread of per-subject template perturbations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SubjectVariation {
    /// Relative std of the multiplicative coupling factors.
    pub spread: f64,
    pub heading_std_deg: f64,
    pub tilt_std_deg: f64,
}

impl Default for SubjectVariation {
    fn default() -> Self {
        Self {
            spread: 0.1,
            heading_std_deg: 5.0,
            tilt_std_deg: 20.0,
        }
    }
}

/// Variability of the operator. Robot presets are strictly tighter than
/// human presets on every field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticityConfig {
    pub mode: Source,
    /// Relative std of pass duration.
    pub jitter_std: f64,
    /// Relative std of per-pass depth and stroke length.
    #[serde(default)]
    pub depth_std: f64,
    /// Stationary std (rad) of heading wander; tilt wander is 0.4 of it.
    pub drift_std: f64,
    /// Probability of an idle pause before a pass.
    pub pause_prob: f64,
    /// Run-to-run spread of vibration transmission.
    pub compliance_gain: f64,
    /// Std (degrees) of the per-run workpiece orientation.
    #[serde(default)]
    pub orientation_std_deg: f64,
    /// Relative std of the per-run pressing effort, which scales load.
    #[serde(default)]
    pub effort_std: f64,
    /// Std (degrees) of the per-run static tool tilt.
    #[serde(default)]
    pub posture_std_deg: f64,
    pub seed: u64,
}

impl StochasticityConfig {
    pub fn robot(seed: u64) -> Self {
        Self {
            mode: Source::Robot,
            jitter_std: 0.005,
            depth_std: 0.08,
            drift_std: 0.05,
            pause_prob: 0.0,
            compliance_gain: 0.2,
            orientation_std_deg: 10.0,
            effort_std: 0.1,
            posture_std_deg: 5.0,
            seed,
        }
    }

    pub fn human(seed: u64) -> Self {
        Self {
            mode: Source::Human,
            jitter_std: 0.15,
            depth_std: 0.15,
            drift_std: 0.1,
            pause_prob: 0.02,
            compliance_gain: 0.25,
            orientation_std_deg: 20.0,
            effort_std: 0.2,
            posture_std_deg: 10.0,
            seed,
        }
    }

    pub fn preset(mode: Source, seed: u64) -> Self {
        match mode {
            Source::Robot => Self::robot(seed),
            Source::Human => Self::human(seed),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("jitter_std", self.jitter_std),
            ("depth_std", self.depth_std),
            ("drift_std", self.drift_std),
            ("pause_prob", self.pause_prob),
            ("compliance_gain", self.compliance_gain),
            ("orientation_std_deg", self.orientation_std_deg),
            ("effort_std", self.effort_std),
            ("posture_std_deg", self.posture_std_deg),
        ];
        if let Some((name, v)) = fields.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config(format!("{name} must be finite and >= 0, got {v}")));
        }
        if self.pause_prob > 1.0 {
            return Err(Error::Config("pause_prob must be <= 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nominal_templates_are_valid() {
        for &t in TaskLabel::ALL {
            TaskTemplate::nominal(t).validate().unwrap();
        }
    }

    #[test]
    fn robot_preset_is_tighter_than_human() {
        let (r, h) = (StochasticityConfig::robot(0), StochasticityConfig::human(0));
        assert!(r.jitter_std < h.jitter_std);
        assert!(r.drift_std < h.drift_std);
        assert!(r.depth_std < h.depth_std);
        assert!(r.pause_prob < h.pause_prob);
        assert!(r.compliance_gain < h.compliance_gain);
        assert!(r.orientation_std_deg < h.orientation_std_deg);
        assert!(r.effort_std < h.effort_std);
        assert!(r.posture_std_deg < h.posture_std_deg);
        r.validate().unwrap();
        h.validate().unwrap();
    }

    #[test]
    fn rpm_range_is_enforced() {
        let mut t = TaskTemplate::nominal(TaskLabel::Cutting);
        t.rpm = 40_000.0;
        assert!(t.validate().is_err());
        t.rpm = 4_000.0;
        assert!(t.validate().is_err());
    }
}
