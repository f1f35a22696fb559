//! Additive sensor model driven by trapezoidal tool passes.
//!
//! Each pass is a loaded work stroke followed by a lighter return stroke, both
//! rest-to-rest trapezoidal moves along the task heading. Channel couplings:
//!
//! * accel: stroke acceleration along the heading, gravity through wrist tilt,
//!   and a tool-frequency vibration (`rpm / 60` Hz) whose amplitude follows load;
//! * gyro: tilt and heading rates plus vibration pickup;
//! * mag: the ambient field rotated by heading, with motor-current interference;
//! * mic: tool-frequency carrier with a load-proportional envelope;
//! * current: idle draw plus a load-proportional term.
//!
//! Output values are quantized to 1e-5 so that CSV round-trips are exact.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::profile::MotionProfile;
use super::template::{StochasticityConfig, SubjectVariation, TaskTemplate};
use crate::data::{ChannelId, RunKey, SensorRun, SensorSample, Source, TaskLabel, NUM_CHANNELS};
use crate::error::{Error, Result};
use crate::ingest::{Manifest, ManifestEntry};
use crate::seed::derive_seed;

pub const GRAVITY: f64 = 9.81;
pub const DEFAULT_DURATION_S: f64 = 180.0;
const QUANTUM_SCALE: f64 = 1e5;
const RAMP_FRACTION: f64 = 0.25;
const MAG_HORIZONTAL_UT: f64 = 22.0;
const MAG_VERTICAL_UT: f64 = -42.0;
const MIC_FLOOR: f64 = 0.02;
const IDLE_VIBRATION: f64 = 0.1;
const HEADING_TAU_S: f64 = 5.0;
const TILT_TAU_S: f64 = 3.0;
/// Arm inertia: angles follow the wander through a one-pole lag.
const ARM_LAG_S: f64 = 1.0;

#[derive(Debug, Clone, Copy)]
struct Segment {
    start: f64,
    duration: f64,
    motion: Option<(MotionProfile<f64>, f64)>,
    load: f64,
}

fn gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn quantize(v: f64) -> f64 {
    (v * QUANTUM_SCALE).round() / QUANTUM_SCALE
}

fn plan_segments<R: Rng + ?Sized>(
    template: &TaskTemplate,
    stoch: &StochasticityConfig,
    effort: f64,
    duration: f64,
    rng: &mut R,
) -> Result<Vec<Segment>> {
    let jitter = |rng: &mut R, std: f64, lo: f64| (1.0 + std * gauss(rng)).max(lo);
    let mut segs = Vec::new();
    let mut t = 0.0;
    let mut pass = 0usize;
    while t < duration {
        if stoch.pause_prob > 0.0 && rng.random::<f64>() < stoch.pause_prob {
            let len = template.pass_period * rng.random_range(0.5..2.5);
            segs.push(Segment {
                start: t,
                duration: len,
                motion: None,
                load: 0.0,
            });
            t += len;
        }
        let period = template.pass_period * jitter(rng, stoch.jitter_std, 0.4);
        let depth = template.depth_schedule[pass % template.depth_schedule.len()] * jitter(rng, stoch.depth_std, 0.0);
        let load = (template.load_level * depth * effort).clamp(0.0, 1.5);
        let stroke = template.stroke_distance * jitter(rng, stoch.depth_std, 0.2);
        let half = period / 2.0;
        for (dir, l) in [(1.0, load), (-1.0, load * template.return_load_ratio)] {
            segs.push(Segment {
                start: t,
                duration: half,
                motion: Some((MotionProfile::spanning(stroke, half, RAMP_FRACTION)?, dir)),
                load: l,
            });
            t += half;
        }
        pass += 1;
    }
    Ok(segs)
}

/// Ornstein-Uhlenbeck step toward 0 with stationary std `sigma`.
fn ou_step<R: Rng + ?Sized>(x: f64, sigma: f64, tau: f64, dt: f64, rng: &mut R) -> f64 {
    if sigma == 0.0 {
        return x - x * dt / tau;
    }
    x - x * dt / tau + sigma * (2.0 * dt / tau).sqrt() * gauss(rng)
}

/// One synthetic run. Deterministic in `stoch.seed`.
pub fn generate_run(
    key: RunKey,
    template: &TaskTemplate,
    stoch: &StochasticityConfig,
    duration: f64,
    rate_hz: f64,
) -> Result<SensorRun> {
    if key.task != template.task {
        return Err(Error::Contract(format!(
            "run key task {} does not match template task {}",
            key.task, template.task
        )));
    }
    if !(duration > 0.0 && rate_hz > 0.0) {
        return Err(Error::Contract(format!(
            "duration and rate must be positive, got {duration} s at {rate_hz} Hz"
        )));
    }
    template.validate()?;
    stoch.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(stoch.seed);
    let n = (duration * rate_hz).round().max(1.0) as usize;
    let dt = 1.0 / rate_hz;
    let effort = (1.0 + stoch.effort_std * gauss(&mut rng)).max(0.2);
    let segments = plan_segments(template, stoch, effort, duration, &mut rng)?;

    let compliance = stoch.compliance_gain;
    let tilt_sigma = 0.4 * stoch.drift_std;
    let tool_hz = template.rpm / 60.0;
    let phase = rng.random_range(0.0..2.0 * PI);
    let static_tilt = template
        .grip_tilt_deg
        .map(|a| (a + stoch.posture_std_deg * gauss(&mut rng)).to_radians());
    let heading0 = (template.heading_deg + stoch.orientation_std_deg * gauss(&mut rng)).to_radians()
        + stoch.drift_std * gauss(&mut rng);
    let vib_run_gain = (1.0 + compliance * gauss(&mut rng)).max(0.1);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");

    let mut heading_dev = 0.0;
    let mut tilt = [0.0f64; 2];
    let mut smooth: Option<[f64; 3]> = None;
    let mut prev_angles: Option<[f64; 3]> = None;
    let mut seg_idx = 0;
    let mut samples = Vec::with_capacity(n);

    for i in 0..n {
        let t = i as f64 * dt;
        while seg_idx + 1 < segments.len() && segments[seg_idx + 1].start <= t {
            seg_idx += 1;
        }
        let seg = &segments[seg_idx];
        let tau = (t - seg.start).clamp(0.0, seg.duration);
        let travel_accel = match &seg.motion {
            Some((profile, dir)) => dir * profile.acceleration(tau.min(profile.duration()))?,
            None => 0.0,
        };
        let load = seg.load;

        heading_dev = ou_step(heading_dev, stoch.drift_std, HEADING_TAU_S, dt, &mut rng);
        tilt[0] = ou_step(tilt[0], tilt_sigma, TILT_TAU_S, dt, &mut rng);
        tilt[1] = ou_step(tilt[1], tilt_sigma, TILT_TAU_S, dt, &mut rng);
        let heading = heading0 + heading_dev;
        let (tx, ty) = (static_tilt[0] + tilt[0], static_tilt[1] + tilt[1]);

        let raw = [tx, ty, heading];
        let alpha = dt / (ARM_LAG_S + dt);
        let angles = match smooth {
            Some(s) => [0, 1, 2].map(|k| s[k] + alpha * (raw[k] - s[k])),
            None => raw,
        };
        smooth = Some(angles);
        let (tx, ty, heading) = (angles[0], angles[1], angles[2]);
        let rates = match prev_angles {
            Some(p) => [0, 1, 2].map(|k| (angles[k] - p[k]) / dt),
            None => [0.0; 3],
        };
        prev_angles = Some(angles);

        let w = 2.0 * PI * tool_hz * t + phase;
        let carrier = [w.sin(), (w + 1.0).sin(), (w + 2.0).sin()];
        let vib = template.vibration_gain * (IDLE_VIBRATION + load) * vib_run_gain;
        let current_clean = template.current_idle + template.current_load_gain * load;

        let mut nz = |s: f64| s * noise.sample(&mut rng);
        let mut v = [0.0; NUM_CHANNELS];
        v[ChannelId::AccelX.ordinal()] =
            travel_accel * heading.cos() + GRAVITY * ty.sin() + 0.6 * vib * carrier[0] + nz(0.03);
        v[ChannelId::AccelY.ordinal()] =
            travel_accel * heading.sin() - GRAVITY * tx.sin() + 0.4 * vib * carrier[1] + nz(0.03);
        v[ChannelId::AccelZ.ordinal()] = GRAVITY * tx.cos() * ty.cos() + vib * carrier[2] + nz(0.03);
        v[ChannelId::GyroX.ordinal()] = rates[0].to_degrees() + 8.0 * vib * carrier[1] + nz(0.2);
        v[ChannelId::GyroY.ordinal()] = rates[1].to_degrees() + 8.0 * vib * carrier[2] + nz(0.2);
        v[ChannelId::GyroZ.ordinal()] = rates[2].to_degrees() + 5.0 * vib * carrier[0] + nz(0.2);
        v[ChannelId::MagX.ordinal()] = MAG_HORIZONTAL_UT * heading.cos() + nz(0.3);
        v[ChannelId::MagY.ordinal()] = -MAG_HORIZONTAL_UT * heading.sin() + nz(0.3);
        v[ChannelId::MagZ.ordinal()] = MAG_VERTICAL_UT + MAG_HORIZONTAL_UT * tx.sin() + 0.8 * current_clean + nz(0.3);
        v[ChannelId::Mic.ordinal()] =
            ((MIC_FLOOR + template.mic_gain * load) * carrier[0] + nz(0.005)).clamp(-1.0, 1.0);
        v[ChannelId::Current.ordinal()] = current_clean + nz(0.02);

        samples.push(SensorSample {
            t,
            values: v.map(quantize),
        });
    }
    SensorRun::new(key, rate_hz, samples)
}

/// Number of runs to synthesize for one (source, subject, task) cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunCount {
    pub source: Source,
    pub subject_id: String,
    pub task: TaskLabel,
    pub runs: u32,
}

/// Everything [`generate_dataset`] needs besides the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSpec {
    pub counts: Vec<RunCount>,
    pub duration_s: f64,
    pub rate_hz: f64,
    /// Per-subject template perturbations (human subjects only).
    pub subject: SubjectVariation,
    pub templates: Vec<TaskTemplate>,
    /// Robot stochasticity; `seed` is replaced per run.
    pub robot: StochasticityConfig,
    /// Human stochasticity; `seed` is replaced per run.
    pub human: StochasticityConfig,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            counts: Vec::new(),
            duration_s: DEFAULT_DURATION_S,
            rate_hz: crate::ingest::DEFAULT_RATE_HZ,
            subject: SubjectVariation::default(),
            templates: TaskLabel::ALL.iter().map(|&t| TaskTemplate::nominal(t)).collect(),
            robot: StochasticityConfig::robot(0),
            human: StochasticityConfig::human(0),
        }
    }
}

impl DatasetSpec {
    /// `runs` per task for every listed subject of `source`.
    pub fn with_subjects(mut self, source: Source, subjects: &[&str], runs: u32) -> Self {
        for s in subjects {
            for &task in TaskLabel::ALL {
                self.counts.push(RunCount {
                    source,
                    subject_id: (*s).to_string(),
                    task,
                    runs,
                });
            }
        }
        self
    }

    pub fn template(&self, task: TaskLabel) -> Result<&TaskTemplate> {
        self.templates
            .iter()
            .find(|t| t.task == task)
            .ok_or_else(|| Error::Config(format!("no template for task {task}")))
    }

    /// Template a subject works with: nominal for robots, a seeded
    /// perturbation of it for human subjects.
    pub fn subject_template(
        &self,
        source: Source,
        subject_id: &str,
        task: TaskLabel,
        seed: u64,
    ) -> Result<TaskTemplate> {
        let nominal = self.template(task)?;
        Ok(match source {
            Source::Robot => nominal.clone(),
            Source::Human => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("subject/{subject_id}/{task}")));
                nominal.perturbed(&self.subject, &mut rng)
            }
        })
    }

    pub fn run_file_name(key: &RunKey) -> String {
        format!(
            "runs/{}_{}_{}_{:02}.csv",
            key.source, key.subject_id, key.task, key.run_index
        )
    }
}

/// Runs for every count cell plus a manifest pointing at
/// [`DatasetSpec::run_file_name`] paths. Runs are generated in parallel; each
/// owns its seeded stream, so the output does not depend on scheduling.
pub fn generate_dataset(spec: &DatasetSpec, seed: u64) -> Result<(Vec<SensorRun>, Manifest)> {
    use rayon::prelude::*;

    let mut jobs = Vec::new();
    for c in &spec.counts {
        let template = spec.subject_template(c.source, &c.subject_id, c.task, seed)?;
        for run_index in 0..c.runs {
            let key = RunKey {
                subject_id: c.subject_id.clone(),
                source: c.source,
                task: c.task,
                run_index,
            };
            let mut stoch = match c.source {
                Source::Robot => spec.robot.clone(),
                Source::Human => spec.human.clone(),
            };
            stoch.mode = c.source;
            stoch.seed = derive_seed(seed, &format!("run/{key}"));
            jobs.push((key, template.clone(), stoch));
        }
    }
    let runs: Vec<SensorRun> = jobs
        .par_iter()
        .map(|(key, template, stoch)| generate_run(key.clone(), template, stoch, spec.duration_s, spec.rate_hz))
        .collect::<Result<_>>()?;
    let entries = runs
        .iter()
        .map(|r| ManifestEntry {
            path: DatasetSpec::run_file_name(r.key()),
            subject_id: r.key().subject_id.clone(),
            source: r.key().source,
            task: r.key().task,
            run_index: r.key().run_index,
            rate_hz: r.rate_hz(),
        })
        .collect();
    let manifest = Manifest::new(entries, "")?;
    Ok((runs, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::mean;

    fn key(task: TaskLabel) -> RunKey {
        RunKey {
            subject_id: "r".into(),
            source: Source::Robot,
            task,
            run_index: 0,
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let t = TaskTemplate::nominal(TaskLabel::Sanding);
        let s = StochasticityConfig::human(42);
        let a = generate_run(key(TaskLabel::Sanding), &t, &s, 20.0, 100.0).unwrap();
        let b = generate_run(key(TaskLabel::Sanding), &t, &s, 20.0, 100.0).unwrap();
        assert_eq!(a, b);
        let c = generate_run(
            key(TaskLabel::Sanding),
            &t,
            &StochasticityConfig::human(43),
            20.0,
            100.0,
        )
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sample_count_matches_duration() {
        let t = TaskTemplate::nominal(TaskLabel::Cutting);
        let r = generate_run(
            key(TaskLabel::Cutting),
            &t,
            &StochasticityConfig::robot(1),
            180.0,
            100.0,
        )
        .unwrap();
        assert_eq!(r.len(), 18_000);
    }

    #[test]
    fn routing_autocorrelation_peaks_at_pass_period() {
        let t = TaskTemplate::nominal(TaskLabel::Routing);
        let r = generate_run(
            key(TaskLabel::Routing),
            &t,
            &StochasticityConfig::robot(7),
            180.0,
            100.0,
        )
        .unwrap();
        let x = r.channel(ChannelId::AccelX);
        let m = mean(&x);
        let x: Vec<f64> = x.iter().map(|v| v - m).collect();
        let acf =
            |lag: usize| -> f64 { x.iter().zip(&x[lag..]).map(|(a, b)| a * b).sum::<f64>() / (x.len() - lag) as f64 };
        let period = (t.pass_period * r.rate_hz()).round() as usize;
        let best = (period / 2..=period * 3 / 2)
            .max_by(|&a, &b| acf(a).total_cmp(&acf(b)))
            .unwrap();
        assert!(best.abs_diff(period) <= 1, "acf peak at lag {best}, expected {period}");
    }

    #[test]
    fn zero_load_leaves_idle_current_and_mic_floor() {
        let mut t = TaskTemplate::nominal(TaskLabel::Cutting);
        t.load_level = 0.0;
        let r = generate_run(key(TaskLabel::Cutting), &t, &StochasticityConfig::robot(3), 30.0, 100.0).unwrap();
        let cur = r.channel(ChannelId::Current);
        assert!((mean(&cur) - t.current_idle).abs() < 0.005);
        assert!(cur.iter().all(|c| (c - t.current_idle).abs() < 0.02 * 6.0));
        let mic = r.channel(ChannelId::Mic);
        let rms = (mic.iter().map(|v| v * v).sum::<f64>() / mic.len() as f64).sqrt();
        let floor = (MIC_FLOOR * MIC_FLOOR / 2.0 + 0.005f64.powi(2)).sqrt();
        assert!((rms - floor).abs() < 0.003, "mic rms {rms} vs floor {floor}");
    }

    #[test]
    fn mismatched_template_is_rejected() {
        let t = TaskTemplate::nominal(TaskLabel::Cutting);
        assert!(generate_run(key(TaskLabel::Sanding), &t, &StochasticityConfig::robot(0), 1.0, 100.0).is_err());
    }

    #[test]
    fn dataset_manifest_covers_every_run() {
        let spec = DatasetSpec {
            duration_s: 12.0,
            ..DatasetSpec::default()
        }
        .with_subjects(Source::Robot, &["robot"], 2)
        .with_subjects(Source::Human, &["h0", "h1"], 1);
        let (runs, manifest) = generate_dataset(&spec, 9).unwrap();
        assert_eq!(runs.len(), 16);
        assert_eq!(manifest.entries.len(), 16);
        for (r, e) in runs.iter().zip(&manifest.entries) {
            assert_eq!(r.key(), &e.key());
        }
        let (again, _) = generate_dataset(&spec, 9).unwrap();
        assert_eq!(runs, again);
    }

    #[test]
    fn human_subjects_get_distinct_templates() {
        let spec = DatasetSpec::default();
        let a = spec
            .subject_template(Source::Human, "h0", TaskLabel::Cutting, 1)
            .unwrap();
        let b = spec
            .subject_template(Source::Human, "h1", TaskLabel::Cutting, 1)
            .unwrap();
        assert_ne!(a, b);
        let r = spec
            .subject_template(Source::Robot, "robot", TaskLabel::Cutting, 1)
            .unwrap();
        assert_eq!(r, TaskTemplate::nominal(TaskLabel::Cutting));
    }
}
