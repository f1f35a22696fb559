use proptest::prelude::*;

use toolsense::cli::GenerateParams;
use toolsense::eval::{fraction_sweep, spearman, Regime};
use toolsense::features::{make_windows, NormalizationParams, WindowParams};
use toolsense::model::{MlpParams, Sample, TrainConfig};
use toolsense::pipeline::{clean_rows, featurize_runs, ExperimentData};
use toolsense::stats::window_stats;
use toolsense::synth::generate_dataset;
use toolsense::{
    ChannelId, FeatureVec, RunKey, SensorRun, SensorSample, Source, Statistic, TaskLabel, NUM_CHANNELS, NUM_CLASSES,
};

fn small_data(
    robot_runs: u32,
    subjects: usize,
    human_runs: u32,
    seed: u64,
    clean_k: Option<f64>,
) -> ExperimentData<f64> {
    let spec = GenerateParams {
        robot_runs_per_task: robot_runs,
        human_subjects: subjects,
        human_runs_per_task: human_runs,
        ..GenerateParams::default()
    }
    .spec();
    let (runs, _) = generate_dataset(&spec, seed).unwrap();
    ExperimentData::from_runs(&runs, WindowParams::default(), clean_k).unwrap()
}

fn flat_run(n: usize, rate: f64) -> SensorRun {
    let key = RunKey {
        subject_id: "robot".into(),
        source: Source::Robot,
        task: TaskLabel::ALL[0],
        run_index: 0,
    };
    let samples = (0..n)
        .map(|i| SensorSample {
            t: i as f64 / rate,
            values: [0.0; NUM_CHANNELS],
        })
        .collect();
    SensorRun::new(key, rate, samples).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stats_are_internally_consistent(xs in prop::collection::vec(-1e3f64..1e3, 1..300)) {
        let s = window_stats(&xs).unwrap();
        let (min, max, mean, sum, var, std, sem) = (s[0], s[1], s[2], s[3], s[4], s[5], s[6]);
        let n = xs.len() as f64;
        prop_assert!(min <= mean + 1e-9 && mean <= max + 1e-9);
        prop_assert!(var >= 0.0 && s[9] >= 0.0);
        prop_assert!((sum - mean * n).abs() <= 1e-9 * sum.abs().max(1.0) * n);
        prop_assert!((std * std - var).abs() <= 1e-9 * var.max(1.0));
        prop_assert!((sem * n.sqrt() - std).abs() <= 1e-9 * std.max(1.0));
        // Half-range bounds the MAD.
        prop_assert!(s[9] <= max - min + 1e-12);
    }

    #[test]
    fn shift_leaves_spread_and_shape_alone(xs in prop::collection::vec(-10f64..10.0, 4..100), c in -100f64..100.0) {
        let a = window_stats(&xs).unwrap();
        let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
        let b = window_stats(&shifted).unwrap();
        for k in [4, 5, 6, 9] {
            prop_assert!((a[k] - b[k]).abs() <= 1e-6 * a[k].abs().max(1.0));
        }
        if a[4] > 1e-6 {
            for k in [7, 8] {
                prop_assert!((a[k] - b[k]).abs() <= 1e-4 * a[k].abs().max(1.0));
            }
        }
    }

    #[test]
    fn window_count_matches_formula(n in 1usize..5000, ws in 0.5f64..20.0, ov in 0.0f64..0.9) {
        let params = WindowParams { window_seconds: ws, overlap_fraction: ov };
        let run = flat_run(n, 100.0);
        let (w, stride) = params.lengths(100.0).unwrap();
        let got = make_windows(&run, params).unwrap();
        let expect = if n < w { 0 } else { (n - w) / stride + 1 };
        prop_assert_eq!(got.windows.len(), expect);
        prop_assert_eq!(got.too_short, n < w);
        for win in &got.windows {
            prop_assert_eq!(win.len(), w);
            prop_assert!(win.end <= n);
        }
    }

    #[test]
    fn normalized_values_stay_in_unit_interval(
        rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 110), 1..8),
        probe in prop::collection::vec(-1e4f64..1e4, 110),
    ) {
        let vecs: Vec<FeatureVec> = rows.into_iter().map(|r| FeatureVec::new(r).unwrap()).collect();
        let norm: NormalizationParams<f64> = NormalizationParams::fit(vecs.iter(), "prop").unwrap();
        for v in vecs.iter().chain([&FeatureVec::new(probe).unwrap()]) {
            prop_assert!(norm.apply(v).values().iter().all(|x| (0.0..=1.0).contains(x)));
        }
    }
}

#[test]
fn cleaning_drops_an_injected_outlier_window() {
    let spec = GenerateParams {
        robot_runs_per_task: 2,
        human_subjects: 1,
        human_runs_per_task: 2,
        ..GenerateParams::default()
    }
    .spec();
    let (runs, _) = generate_dataset(&spec, 5).unwrap();
    let mut rows = featurize_runs::<f64>(&runs, WindowParams::default()).unwrap();
    let victim = rows.len() / 2;
    let idx = ChannelId::Current.ordinal() * toolsense::NUM_STATS + Statistic::Mean.ordinal();
    let mut values = rows[victim].features.values().to_vec();
    values[idx] += 1e3;
    rows[victim].features = FeatureVec::new(values).unwrap();
    let marked = rows[victim].clone();

    let (kept, reports) = clean_rows(rows.clone(), 3.5).unwrap();
    assert!(!kept.contains(&marked));
    assert!(kept.len() < rows.len());
    let removed: usize = reports.iter().map(|r| r.report.windows_removed).sum();
    assert_eq!(removed, rows.len() - kept.len());
    let flagged: usize = reports
        .iter()
        .map(|r| r.report.per_channel_flag_counts[ChannelId::Current.ordinal()])
        .sum();
    assert!(flagged >= 1);
}

#[test]
fn untrained_network_scores_near_chance() {
    // Uncleaned, so every task keeps the same number of test windows.
    let data = small_data(2, 2, 3, 6, None);
    let mut counts = [0usize; NUM_CLASSES];
    for s in &data.human.test {
        counts[s.label] += 1;
    }
    let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
    assert_eq!(lo, hi, "test set not balanced: {counts:?}");
    let mut accs = Vec::new();
    for seed in 0..20 {
        let params: MlpParams<f64> = MlpParams::glorot(&TrainConfig::default().layer_dims(), seed).unwrap();
        accs.push(params.accuracy(&data.human.test).unwrap());
    }
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    assert!(
        (mean - 0.25).abs() <= 0.05,
        "mean untrained accuracy {mean}, per seed {accs:?}"
    );
}

#[test]
fn nearest_centroid_separates_human_tasks() {
    let data = small_data(2, 4, 6, 8, Some(3.5));
    let dim = data.human.train[0].x.len();
    let mut centroids = vec![vec![0.0; dim]; NUM_CLASSES];
    let mut counts = [0usize; NUM_CLASSES];
    for s in &data.human.train {
        counts[s.label] += 1;
        for (c, x) in centroids[s.label].iter_mut().zip(&s.x) {
            *c += x;
        }
    }
    for (c, n) in centroids.iter_mut().zip(counts) {
        c.iter_mut().for_each(|v| *v /= n as f64);
    }
    let nearest = |s: &Sample<f64>| {
        let d = |c: &Vec<f64>| c.iter().zip(&s.x).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        (0..NUM_CLASSES)
            .min_by(|&a, &b| d(&centroids[a]).total_cmp(&d(&centroids[b])))
            .unwrap()
    };
    let correct = data.human.test.iter().filter(|s| nearest(s) == s.label).count();
    let acc = correct as f64 / data.human.test.len() as f64;
    assert!(acc >= 0.8, "nearest-centroid accuracy {acc}");
}

#[test]
fn zero_shot_accuracy_does_not_fall_with_more_data() {
    let data = small_data(3, 3, 6, 10, Some(3.5));
    let pretrained: MlpParams<f64> = MlpParams::glorot(&TrainConfig::default().layer_dims(), 0).unwrap();
    let cfg = TrainConfig {
        epochs: 40,
        ..TrainConfig::default()
    };
    let fractions = [0.1, 0.3, 1.0];
    let table = fraction_sweep(&data.human, &pretrained, &fractions, &[0, 1], &cfg, 1).unwrap();
    let curve = table.curve(Regime::ZeroShot);
    let (xs, ys): (Vec<f64>, Vec<f64>) = curve.iter().copied().unzip();
    assert_eq!(xs, fractions);
    assert!(spearman(&xs, &ys) >= 0.0, "zero-shot curve {curve:?}");
}
