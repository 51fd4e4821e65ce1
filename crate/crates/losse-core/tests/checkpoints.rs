//! Snapshot and checkpoint round-trips across the learner and world model.

use losse_core::encoding::{LosseConfig, LosseEncoder};
use losse_core::learner::{FtlLearner, GramMatrix};
use losse_core::world_model::{Transition, WorldModel, WorldModelConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn learner_snapshot_survives_resume_and_more_training() {
    let enc = LosseEncoder::new(LosseConfig::new(3, 5, 2, 7, 4)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let draw = |rng: &mut ChaCha8Rng| {
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y = vec![x[0] - x[2]];
        (x, y)
    };

    let mut original = FtlLearner::new(enc.output_dim(), 1, 1e-3).unwrap();
    for _ in 0..200 {
        let (x, y) = draw(&mut rng);
        original
            .observe_sparse(&enc.encode(&x).unwrap(), &y)
            .unwrap();
    }
    let mut snapshot = Vec::new();
    original.write_snapshot(&mut snapshot).unwrap();
    let mut resumed = FtlLearner::read_snapshot(&mut snapshot.as_slice()).unwrap();

    // Both copies continue identically on the same continuation stream.
    let continuation: Vec<(Vec<f64>, Vec<f64>)> = (0..100).map(|_| draw(&mut rng)).collect();
    for (x, y) in &continuation {
        let phi = enc.encode(x).unwrap();
        original.observe_sparse(&phi, y).unwrap();
        resumed.observe_sparse(&phi, y).unwrap();
    }
    assert!(original
        .weights()
        .iter()
        .zip(resumed.weights().iter())
        .all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn sparse_storage_snapshot_round_trip() {
    // Force the sparse-row Gram representation by exceeding the dense cap.
    let dim = losse_core::learner::DENSE_GRAM_LIMIT + 8;
    let mut learner = FtlLearner::new(dim, 1, 1e-3).unwrap();
    assert!(matches!(learner.gram(), GramMatrix::SparseRows(_)));
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..50 {
        let i = rng.random_range(0..dim - 3);
        let phi = losse_core::encoding::SparseVector::new(
            dim,
            vec![i, i + 2],
            vec![rng.random::<f64>() + 0.1, 1.0],
        )
        .unwrap();
        learner
            .observe_sparse(&phi, &[rng.random::<f64>()])
            .unwrap();
    }
    let mut buf = Vec::new();
    learner.write_snapshot(&mut buf).unwrap();
    let restored = FtlLearner::read_snapshot(&mut buf.as_slice()).unwrap();
    let mut buf2 = Vec::new();
    restored.write_snapshot(&mut buf2).unwrap();
    assert_eq!(buf, buf2, "snapshot round trip must be bit-exact");
}

#[test]
fn world_model_checkpoint_resumes_rollouts() {
    let mut model = WorldModel::new(
        LosseConfig::new(4, 6, 2, 6, 12),
        WorldModelConfig {
            dt: 1.0,
            epsilon: 1.0,
            state_bounds: vec![(-1.0, 1.0), (-1.0, 1.0)],
            action_dim: 2,
        },
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..300 {
        let s = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let next = vec![0.8 * s[0] + 0.05, 0.9 * s[1]];
        model
            .observe(&Transition::discrete(
                s,
                rng.random_range(0..2),
                2,
                1.0,
                next,
            ))
            .unwrap();
    }
    let mut buf = Vec::new();
    model.write_checkpoint(&mut buf).unwrap();
    let restored = WorldModel::read_checkpoint(&mut buf.as_slice()).unwrap();
    let policy = |_: &[f64]| vec![1.0, 0.0];
    let a = model.unroll(&[0.4, -0.4], policy, 6).unwrap();
    let b = restored.unroll(&[0.4, -0.4], policy, 6).unwrap();
    assert_eq!(a, b, "restored model must reproduce rollouts bit for bit");
}
