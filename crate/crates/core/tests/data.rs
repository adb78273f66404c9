use kst_mixer::data::{
    assemble_patches, build_directional_matrix, build_positional_matrix, extract_patches, load_dir, loocv_split,
    make_window_samples, save_recording, ColonFrame, ColonoscopeFrame, InsertionRecording, MatrixKind,
    NormalizationStats, WindowSpec,
};
use kst_mixer::nn::Tensor2D;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SPEC: WindowSpec = WindowSpec { tau: 18, s1: 6, s2: 3 };

fn unit(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let v: [f64; 3] = [
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(0.1..1.0),
    ];
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn recording(id: &str, frames: usize, seed: u64) -> InsertionRecording {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    InsertionRecording {
        id: id.into(),
        sample_rate: 6.0,
        frames: (1..=frames)
            .map(|t| {
                (
                    ColonoscopeFrame {
                        t,
                        positions: (0..6)
                            .map(|_| {
                                [
                                    rng.gen_range(-50.0..50.0),
                                    rng.gen_range(0.0..200.0),
                                    rng.gen_range(0.0..80.0),
                                ]
                            })
                            .collect(),
                        directions: (0..6).map(|_| unit(&mut rng)).collect(),
                        insertion_length: rng.gen_range(100.0..1100.0),
                    },
                    ColonFrame {
                        t,
                        markers: (0..12)
                            .map(|_| {
                                [
                                    rng.gen_range(-100.0..100.0),
                                    rng.gen_range(0.0..250.0),
                                    rng.gen_range(0.0..90.0),
                                ]
                            })
                            .collect(),
                    },
                )
            })
            .collect(),
    }
}

#[test]
fn column_index_maps_to_frame_t_c_minus_column() {
    // each entry encodes (frame, sensor, axis) so the index map can be read back
    let frames: Vec<ColonoscopeFrame> = (1..=18)
        .map(|t| ColonoscopeFrame {
            t,
            positions: (0..6)
                .map(|n| [0, 1, 2].map(|a| (1000 * t + 10 * n + a) as f64))
                .collect(),
            directions: vec![[1.0, 0.0, 0.0]; 6],
            insertion_length: 0.0,
        })
        .collect();
    let window: Vec<&ColonoscopeFrame> = frames.iter().collect();
    let m = build_positional_matrix(&window, 18).unwrap();
    assert_eq!((m.rows(), m.cols()), (18, 18));
    let t_c = 18;
    for row in 0..18 {
        for col in 0..18 {
            let want = 1000 * (t_c - col) + 10 * (row / 3) + row % 3;
            assert_eq!(m.get(row, col), want as f64, "row {row} col {col}");
        }
    }
    let d = build_directional_matrix(&window, 18).unwrap();
    assert!((0..18).all(|c| d.get(0, c) == 1.0 && d.get(1, c) == 0.0));
}

#[test]
fn windows_never_cross_recordings() {
    let recs = [recording("a", 30, 1), recording("b", 25, 2)];
    let stats = NormalizationStats::from_recordings(&recs).unwrap();
    for rec in &recs {
        let set = make_window_samples(rec, SPEC, &stats).unwrap();
        assert_eq!(set.samples.len(), rec.len() - SPEC.tau + 1);
        for s in &set.samples {
            assert_eq!(s.recording, rec.id);
            assert!(s.t_c >= SPEC.tau && s.t_c <= rec.len());
            // newest normalized length comes from frame t_c of this recording
            let raw = rec.frames[s.t_c - 1].0.insertion_length;
            assert!((stats.length.denormalize(s.lengths[0]) - raw).abs() < 1e-9);
            assert_eq!(s.target, rec.frames[s.t_c - 1].1);
        }
    }
}

#[test]
fn fold_statistics_come_from_training_recordings_only() {
    let mut recs: Vec<InsertionRecording> = (0..4).map(|i| recording(&format!("r{i}"), 20, i)).collect();
    // push one recording far outside the others
    for (scope, colon) in &mut recs[2].frames {
        scope.positions[0][0] += 1e4;
        colon.markers[0][1] -= 1e4;
        scope.insertion_length += 1e4;
    }
    let folds = loocv_split(&recs).unwrap();
    assert_eq!(folds.len(), 4);
    for fold in &folds {
        assert_eq!(fold.train.len(), 3);
        assert!(fold.train.iter().all(|r| r.id != fold.test.id));
        let stats = fold.stats().unwrap();
        let expected = NormalizationStats::from_recordings(fold.train.iter().copied()).unwrap();
        assert_eq!(stats, expected);
        let outlier_in_train = fold.test.id != "r2";
        assert_eq!(stats.position[0].max > 5e3, outlier_in_train, "fold {}", fold.index);
        assert_eq!(stats.length.max > 5e3, outlier_in_train);
    }
}

#[test]
fn normalization_maps_training_extremes_to_zero_and_one() {
    let recs = [recording("a", 40, 7), recording("b", 40, 8)];
    let stats = NormalizationStats::from_recordings(&recs).unwrap();
    for axis in 0..3 {
        let values: Vec<f64> = recs
            .iter()
            .flat_map(|r| {
                r.scope_frames()
                    .flat_map(move |f| f.positions.iter().map(move |p| p[axis]))
            })
            .collect();
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(stats.position[axis].normalize(lo), (0.0, false));
        assert_eq!(stats.position[axis].normalize(hi), (1.0, false));
    }
    // directions use the fixed (d + 1) / 2 map
    assert_eq!(stats.direction.normalize(-1.0).0, 0.0);
    assert_eq!(stats.direction.normalize(0.0).0, 0.5);
    assert_eq!(stats.direction.normalize(1.0).0, 1.0);
}

#[test]
fn out_of_range_test_inputs_are_clamped_and_counted() {
    let stats = NormalizationStats::from_recordings(&[recording("a", 20, 3)]).unwrap();
    let m = Tensor2D::from_rows(&[
        vec![stats.position[0].max + 10.0],
        vec![stats.position[1].denormalize(0.5)],
        vec![stats.position[2].min - 1.0],
    ])
    .unwrap();
    let (n, clamped) = stats.normalize_matrix(&m, MatrixKind::Position).unwrap();
    assert_eq!(clamped, 2);
    assert_eq!(n.get(0, 0), 1.0);
    assert_eq!(n.get(2, 0), 0.0);
}

#[test]
fn degenerate_training_ranges_are_rejected() {
    let mut rec = recording("a", 20, 4);
    for (scope, _) in &mut rec.frames {
        scope.insertion_length = 500.0;
    }
    assert!(NormalizationStats::from_recordings(&[rec]).is_err());
}

#[test]
fn recordings_survive_a_save_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let recs = [recording("insertion-01", 21, 5), recording("insertion-02", 19, 6)];
    for r in &recs {
        save_recording(r, &dir.path().join(format!("{}.jsonl", r.id))).unwrap();
    }
    let loaded = load_dir(dir.path()).unwrap();
    assert_eq!(loaded.len(), 2);
    for (a, b) in loaded.iter().zip(&recs) {
        assert_eq!(a, b);
    }
}

#[test]
fn non_unit_directions_fail_to_load() {
    let dir = tempfile::tempdir().unwrap();
    let mut rec = recording("bad", 20, 9);
    rec.frames[4].0.directions[2] = [2.0, 0.0, 0.0];
    let path = dir.path().join("bad.jsonl");
    save_recording(&rec, &path).ok();
    assert!(kst_mixer::data::load_recording(&path).is_err());
}

fn divisor_pairs() -> impl Strategy<Value = (usize, usize, usize, usize)> {
    (1usize..6, 1usize..6, 1usize..5, 1usize..5).prop_map(|(gr, gc, s1, s2)| (gr * s1, gc * s2, s1, s2))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn patches_reassemble_to_the_original((rows, cols, s1, s2) in divisor_pairs(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = Tensor2D::from_fn(rows, cols, |_, _| rng.gen());
        let p = extract_patches(&m, s1, s2).unwrap();
        prop_assert_eq!(p.rows(), rows * cols / (s1 * s2));
        prop_assert_eq!(p.cols(), s1 * s2);
        prop_assert_eq!(assemble_patches(&p, rows, cols, s1, s2).unwrap(), m);
    }

    #[test]
    fn normalization_inverts_on_the_training_range(seed in any::<u64>(), x in 0.0f64..=1.0) {
        let stats = NormalizationStats::from_recordings(&[recording("a", 20, seed)]).unwrap();
        for range in stats.position.iter().chain(&stats.marker).chain([&stats.length]) {
            let v = range.denormalize(x);
            let (back, _) = range.normalize(v);
            prop_assert!((back - x).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_count_is_frames_minus_tau_plus_one(frames in 1usize..60, seed in 0u64..50) {
        let stats = NormalizationStats::from_recordings(&[recording("s", 30, seed)]).unwrap();
        let set = make_window_samples(&recording("r", frames, seed + 1), SPEC, &stats).unwrap();
        prop_assert_eq!(set.samples.len(), (frames + 1).saturating_sub(SPEC.tau));
        prop_assert_eq!(set.warnings.is_empty(), frames >= SPEC.tau);
    }
}
