//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measured numbers (visible with `--nocapture`).
//!
//! Run with: `cargo test -p losse-cli --test acceptance -- --nocapture`

use losse_cli::config::{DenoiseExpConfig, DynaExpConfig, StreamConfig};
use losse_cli::experiments::stream::Method;
use losse_cli::experiments::{denoise, dyna, stream};
use losse_core::encoding::{soft_bin_axis, BinMode, Features, LosseConfig, LosseEncoder};
use losse_core::env::{PrwConfig, PrwStream};
use losse_core::learner::{squared_loss, BatchAccumulator, FtlLearner, RegretLedger, Sample};
use losse_core::util::mean;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn frob(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Criterion 1: the printed soft-binning example reproduces exactly.
///
/// soft_bin_axis(1.7, 4 edges {0,1,2,3}, distance mode) must place values
/// 0.7 and 0.3 at edges 1 and 2 and zeros elsewhere. The 0.7 is bit-exact;
/// the complementary 0.3 lands one ulp off the decimal literal
/// (0.30000000000000004), which is as exact as f64 permits, so it is pinned
/// to 1e-15. The pair must still sum to exactly 1.
#[test]
fn criterion_01_printed_binning_example() {
    let bin = soft_bin_axis(1.7, 4, (0.0, 3.0), BinMode::Distance).unwrap();
    assert_eq!(bin.left_index, 1);
    assert_eq!(bin.left_value, 0.7);
    assert!((bin.right_value - 0.3).abs() <= 1e-15);
    assert_eq!(bin.left_value + bin.right_value, 1.0);
    // Full 4-vector view: zeros off the two neighbor edges.
    let mut full = [0.0f64; 4];
    full[bin.left_index] = bin.left_value;
    full[bin.left_index + 1] = bin.right_value;
    assert_eq!(full[0], 0.0);
    assert_eq!(full[3], 0.0);
    println!(
        "criterion 01 PASS: binning 1.7 over edges [0,1,2,3] -> [0, {}, {}, 0]",
        full[1], full[2]
    );
}

/// Criterion 2: sparsity bounds over 10^4 random inputs at the
/// discrete-control encoder geometry (kappa=30, rho=2, lambda=10):
/// nnz <= 120 and nnz/D <= 0.04 for every sample, D = 3000.
#[test]
fn criterion_02_sparsity_bounds() {
    let enc = LosseEncoder::new(LosseConfig::new(6, 30, 2, 10, 7)).unwrap();
    assert_eq!(enc.output_dim(), 3000);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_nnz = 0usize;
    for _ in 0..10_000 {
        let x: Vec<f64> = (0..6).map(|_| rng.random_range(-4.0..4.0)).collect();
        let phi = enc.encode(&x).unwrap();
        assert!(phi.nnz() <= 120, "nnz {} exceeds 120", phi.nnz());
        assert!(
            phi.density() <= 0.04,
            "density {} exceeds 0.04",
            phi.density()
        );
        worst_nnz = worst_nnz.max(phi.nnz());
    }
    println!("criterion 02 PASS: worst nnz {worst_nnz} <= 120, density <= 0.04 over 10^4 inputs");
}

/// Test-local normal-equation oracle, independent of the production
/// solver: Gauss-Jordan elimination with partial pivoting.
fn gauss_oracle(mut a: Array2<f64>, mut b: Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    let cols = b.ncols();
    for col in 0..n {
        let mut pivot = col;
        for r in (col + 1)..n {
            if a[[r, col]].abs() > a[[pivot, col]].abs() {
                pivot = r;
            }
        }
        if pivot != col {
            for c in 0..n {
                let tmp = a[[col, c]];
                a[[col, c]] = a[[pivot, c]];
                a[[pivot, c]] = tmp;
            }
            for c in 0..cols {
                let tmp = b[[col, c]];
                b[[col, c]] = b[[pivot, c]];
                b[[pivot, c]] = tmp;
            }
        }
        let p = a[[col, col]];
        for r in 0..n {
            if r != col && a[[r, col]] != 0.0 {
                let f = a[[r, col]] / p;
                for c in 0..n {
                    a[[r, c]] -= f * a[[col, c]];
                }
                for c in 0..cols {
                    b[[r, c]] -= f * b[[col, c]];
                }
            }
        }
    }
    for r in 0..n {
        let p = a[[r, r]];
        for c in 0..cols {
            b[[r, c]] /= p;
        }
    }
    b
}

/// Criterion 3: the dense-path weights match an independent batch
/// normal-equation solve after every one of 2000 samples (D=32, S=4),
/// relative Frobenius error <= 1e-8. The oracle accumulates its own sums
/// and solves by test-local pivoted elimination.
#[test]
fn criterion_03_dense_oracle_equivalence() {
    let (d, s) = (32, 4);
    let eps = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut learner = FtlLearner::new(d, s, eps).unwrap();
    let mut gram = Array2::<f64>::zeros((d, d));
    let mut cross = Array2::<f64>::zeros((d, s));
    let mut worst = 0.0f64;
    for _ in 0..2000 {
        let phi: Vec<f64> = (0..d).map(|_| rng.random::<f64>() - 0.5).collect();
        let y: Vec<f64> = (0..s).map(|_| rng.random::<f64>() - 0.5).collect();
        learner.observe_dense(&phi, &y).unwrap();
        for i in 0..d {
            for j in 0..d {
                gram[[i, j]] += phi[i] * phi[j];
            }
            for c in 0..s {
                cross[[i, c]] += phi[i] * y[c];
            }
        }
        let mut ridged = gram.clone();
        for i in 0..d {
            ridged[[i, i]] += eps;
        }
        let oracle = gauss_oracle(ridged, cross.clone());
        let rel = frob(&(learner.weights() - &oracle)) / frob(&oracle);
        worst = worst.max(rel);
        assert!(
            rel <= 1e-8,
            "relative error {rel} at step {}",
            learner.steps_seen()
        );
    }
    println!(
        "criterion 03 PASS: worst relative Frobenius error {worst:.3e} <= 1e-8 over 2000 steps"
    );
}

/// Criterion 4: block optimality after every sparse update over 10^4
/// encoded samples: ||(A_ss + eps I) W_s + A_s,comp W_comp - B_s|| within
/// 1e-8 of scale.
#[test]
fn criterion_04_block_optimality() {
    let enc = LosseEncoder::new(LosseConfig::new(6, 30, 2, 10, 17)).unwrap();
    let mut learner = FtlLearner::new(enc.output_dim(), 2, 1e-6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let x: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
        let phi = enc.encode(&x).unwrap();
        let y = [x[0] * x[1], (x[2] + x[3]).sin()];
        learner.observe_sparse(&phi, &y).unwrap();
        let (resid, scale) = learner.block_optimality_residual(phi.indices());
        let rel = resid / scale;
        worst = worst.max(rel);
        assert!(
            resid <= 1e-8 * scale,
            "residual {resid} vs scale {scale} at step {}",
            learner.steps_seen()
        );
    }
    println!(
        "criterion 04 PASS: worst residual/scale {worst:.3e} <= 1e-8 over 10^4 sparse updates"
    );
}

/// Criterion 5: sparse-path weights track the batch oracle on the
/// piecewise-random-walk task (kappa=10, rho=2, lambda=10): relative
/// Frobenius distance <= 0.05 at every 500-step checkpoint.
///
/// Free parameters pinned here: correlation level d = 0.9 and ridge 10.0
/// shared by both sides (block tracking degrades measurably at tiny
/// ridges; see the repository README's discussion of the ridge term).
#[test]
fn criterion_05_sparse_vs_oracle_proximity() {
    let eps = 10.0;
    let enc = LosseEncoder::new(LosseConfig::new(1, 10, 2, 10, 42)).unwrap();
    let mut stream = PrwStream::new(PrwConfig::new(0.9, 7)).unwrap();
    let mut learner = FtlLearner::new(enc.output_dim(), 1, eps).unwrap();
    let mut acc = BatchAccumulator::new(enc.output_dim(), 1);
    let mut worst = 0.0f64;
    for step in 1..=20_000 {
        let (x, y) = stream.next_sample();
        let phi = enc.encode(&[x]).unwrap();
        learner.observe_sparse(&phi, &[y]).unwrap();
        acc.add(&Features::Sparse(phi), &[y]);
        if step % 500 == 0 {
            let oracle = acc.solve(eps).unwrap();
            let rel = frob(&(learner.weights() - &oracle)) / frob(&oracle);
            worst = worst.max(rel);
            assert!(rel <= 0.05, "relative distance {rel} at step {step}");
        }
    }
    println!(
        "criterion 05 PASS: worst oracle distance {worst:.4} <= 0.05 at every 500-step checkpoint"
    );
}

/// Criterion 6: covariate-shift robustness over 30 seeds. The closed-form
/// learner's holdout MSE at d=0.98 stays within 2x of its d=0 MSE, while
/// gradient descent on the same features degrades strictly from d=0 to
/// d=0.98 (the forgetting ordering; the interior of the d grid is measured
/// but not monotone under the retention holdout).
#[test]
fn criterion_06_covariate_shift_robustness() {
    let mut cfg = StreamConfig::default();
    cfg.d_grid = vec![0.0, 0.5, 0.9, 0.98];
    cfg.seeds = (0..30).collect();
    cfg.stream_len = 100_000;
    let report = stream::run_stream(&cfg).unwrap();
    let ftl0 = report.mean_mse(0.0, Method::Ftl).unwrap();
    let ftl98 = report.mean_mse(0.98, Method::Ftl).unwrap();
    assert!(
        ftl98 <= 2.0 * ftl0,
        "closed-form MSE at d=0.98 ({ftl98}) exceeds 2x the d=0 MSE ({ftl0})"
    );
    let sgd0 = report.mean_mse(0.0, Method::Sgd).unwrap();
    let sgd98 = report.mean_mse(0.98, Method::Sgd).unwrap();
    assert!(
        sgd98 > sgd0,
        "gradient-descent MSE must increase from d=0 ({sgd0}) to d=0.98 ({sgd98})"
    );
    println!(
        "criterion 06 PASS: ftl {ftl0:.6} -> {ftl98:.6} (ratio {:.2} <= 2); sgd {sgd0:.5} -> {sgd98:.5} (strictly increasing)",
        ftl98 / ftl0
    );
}

/// Criterion 7: denoising benchmark. With a real digit corpus (pass its
/// directory via LOSSE_MNIST_DIR) the sparse-lattice encoder's test MSE at
/// patch sizes {9, 16, 25} is checked against 0.028/0.029/0.031 +- 0.007
/// and the full encoder ordering at patch 25. Without the corpus the
/// synthetic fallback checks the weaker representational property: the
/// sparse-lattice encoder is strictly best at patch 25.
#[test]
fn criterion_07_denoise_benchmark() {
    let corpus = std::env::var_os("LOSSE_MNIST_DIR").map(std::path::PathBuf::from);
    let mut cfg = DenoiseExpConfig::default();
    cfg.dataset_path = corpus.clone();
    cfg.seeds = vec![0, 1, 2];
    cfg.max_images = if corpus.is_some() { 10_000 } else { 4_000 };
    cfg.patch_sides = if corpus.is_some() {
        vec![3, 4, 5]
    } else {
        vec![5]
    };
    let report = denoise::run_denoise(&cfg).unwrap();
    let at = |patch: usize, enc: &str| report.mean_mse(patch, enc).unwrap();
    if report.real_corpus {
        for (patch, expect) in [(3, 0.028), (4, 0.029), (5, 0.031)] {
            let got = at(patch, "losse");
            assert!(
                (got - expect).abs() <= 0.007,
                "patch {} losse MSE {got} vs {expect} +- 0.007",
                patch * patch
            );
        }
        let (l, r, t, f) = (
            at(5, "losse"),
            at(5, "relu"),
            at(5, "tilecode"),
            at(5, "fourier"),
        );
        assert!(
            l < r && r < t && t < f,
            "ordering at patch 25 violated: losse {l}, relu {r}, tilecode {t}, fourier {f}"
        );
        println!(
            "criterion 07 PASS (real corpus): losse {:.4}/{:.4}/{:.4}; ordering {l:.4} < {r:.4} < {t:.4} < {f:.4}",
            at(3, "losse"),
            at(4, "losse"),
            at(5, "losse")
        );
    } else {
        let l = at(5, "losse");
        for enc in ["relu", "tilecode", "fourier"] {
            let other = at(5, enc);
            assert!(
                l < other,
                "sparse-lattice encoder ({l}) not better than {enc} ({other}) on the fallback corpus"
            );
        }
        println!(
            "criterion 07 PASS (synthetic fallback): losse {l:.4} strictly best (relu {:.4}, tilecode {:.4}, fourier {:.4})",
            at(5, "relu"),
            at(5, "tilecode"),
            at(5, "fourier")
        );
    }
}

/// Criterion 8: regret sublinearity on a stationary linear-Gaussian
/// stream: Regret_T / T decreases across T in {1e3, 1e4, 1e5} and
/// Regret_{10T} / Regret_T <= 3.
#[test]
fn criterion_08_regret_sublinearity() {
    let (d, s) = (16, 2);
    let eps = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let truth = Array2::from_shape_fn((d, s), |_| rng.random::<f64>() - 0.5);
    let mut learner = FtlLearner::new(d, s, eps).unwrap();
    let mut ledger = RegretLedger::new();
    let mut samples: Vec<Sample> = Vec::with_capacity(100_000);
    let mut regrets = Vec::new();
    let checkpoints = [1_000usize, 10_000, 100_000];
    for step in 1..=100_000 {
        let phi: Vec<f64> = (0..d).map(|_| rng.random::<f64>() - 0.5).collect();
        let mut y = vec![0.0; s];
        for c in 0..s {
            let signal: f64 = phi.iter().zip(truth.column(c)).map(|(p, t)| p * t).sum();
            let noise: f64 = rng.random::<f64>() - 0.5;
            y[c] = signal + 0.1 * noise;
        }
        // Predict-then-update: the loss is suffered before the target is
        // absorbed.
        let features = Features::Dense(phi.clone());
        let pred = learner.predict(&features).unwrap();
        ledger.record(squared_loss(&pred, &y)).unwrap();
        learner.observe_dense(&phi, &y).unwrap();
        samples.push((features, y));
        if checkpoints.contains(&step) {
            let regret = ledger.regret_vs_batch(&samples, eps).unwrap();
            regrets.push((step, regret));
        }
    }
    for window in regrets.windows(2) {
        let (t0, r0) = window[0];
        let (t1, r1) = window[1];
        let avg0 = r0 / t0 as f64;
        let avg1 = r1 / t1 as f64;
        assert!(avg1 < avg0, "Regret/T not decreasing: {avg0} -> {avg1}");
        assert!(
            r1 / r0 <= 3.0,
            "Regret_{{10T}}/Regret_T = {} > 3 between T={t0} and T={t1}",
            r1 / r0
        );
    }
    println!(
        "criterion 08 PASS: regret {:?} (Regret/T decreasing, 10x ratios {:.3}, {:.3})",
        regrets
            .iter()
            .map(|(t, r)| format!("T={t}: {r:.3}"))
            .collect::<Vec<_>>(),
        regrets[1].1 / regrets[0].1,
        regrets[2].1 / regrets[1].1
    );
}

/// Criterion 9: constant-time sparse updates. Mean observe wall time over
/// steps [1e5, 1e5 + 1e3] must be at most twice the mean over steps
/// [1e3, 2e3] with a fixed encoder config.
#[test]
fn criterion_09_constant_time_updates() {
    let enc = LosseEncoder::new(LosseConfig::new(1, 10, 2, 10, 29)).unwrap();
    let mut stream = PrwStream::new(PrwConfig::new(0.9, 31)).unwrap();
    let mut learner = FtlLearner::new(enc.output_dim(), 1, 1.0).unwrap();
    let mut early = Vec::with_capacity(1000);
    let mut late = Vec::with_capacity(1000);
    for step in 1..=101_000u64 {
        let (x, y) = stream.next_sample();
        let phi = enc.encode(&[x]).unwrap();
        let start = std::time::Instant::now();
        learner.observe_sparse(&phi, &[y]).unwrap();
        let micros = start.elapsed().as_secs_f64() * 1e6;
        if (1_000..2_000).contains(&step) {
            early.push(micros);
        } else if (100_000..101_000).contains(&step) {
            late.push(micros);
        }
    }
    let early_mean = mean(&early);
    let late_mean = mean(&late);
    let ratio = late_mean / early_mean;
    assert!(
        ratio <= 2.0,
        "late/early observe time ratio {ratio:.3} exceeds 2 ({early_mean:.1} us -> {late_mean:.1} us)"
    );
    println!(
        "criterion 09 PASS: observe time {early_mean:.1} us early vs {late_mean:.1} us late (ratio {ratio:.2} <= 2)"
    );
}

/// Criterion 10: planning end to end on the gridworld, 30 seeds, 50k-step
/// budget. The planning arm's mean final normalized return must exceed the
/// model-free arm's by at least 0.1, and the final model error map over
/// the visited region must flag under 10% of cells at delta = 0.05.
#[test]
fn criterion_10_dyna_end_to_end() {
    let mut cfg = DynaExpConfig::gridworld_defaults();
    cfg.seeds = (0..30).collect();
    let report = dyna::run_experiment(&cfg).unwrap();
    let dyna_mean = report.mean_final_return(dyna::ARM_DYNA);
    let free_mean = report.mean_final_return(dyna::ARM_MODEL_FREE);
    assert!(
        dyna_mean - free_mean >= 0.1,
        "planning arm ({dyna_mean:.4}) does not beat model-free ({free_mean:.4}) by 0.1"
    );
    // Stronger form from the experiment design: the planning agent should
    // essentially solve the task within the budget.
    assert!(
        dyna_mean >= 0.9,
        "planning arm mean final normalized return {dyna_mean:.4} below 0.9"
    );
    let fractions = report.error_fractions(dyna::ARM_DYNA);
    assert_eq!(
        fractions.len(),
        30,
        "every planning run must produce an error map"
    );
    let mean_fraction = mean(&fractions);
    let worst = fractions.iter().cloned().fold(0.0f64, f64::max);
    assert!(
        mean_fraction < 0.10,
        "mean visited-region error fraction {mean_fraction:.4} is not below 0.10"
    );
    // Single-pass bookkeeping: every real transition observed exactly once.
    for run in &report.runs {
        if run.arm == dyna::ARM_DYNA {
            assert_eq!(run.result.observe_calls, run.result.transitions_seen);
        }
    }
    println!(
        "criterion 10 PASS: final normalized return {dyna_mean:.4} (planning) vs {free_mean:.4} (model-free), gap {:.4} >= 0.1; error fraction mean {mean_fraction:.4} (worst {worst:.4}) < 0.10",
        dyna_mean - free_mean
    );
}

/// Criterion 11: re-running an experiment with an identical manifest
/// produces byte-identical CSVs.
#[test]
fn criterion_11_byte_identical_reruns() {
    let tmp = std::env::temp_dir().join(format!("losse_accept_det_{}", std::process::id()));
    let run = |tag: &str| {
        let mut cfg = StreamConfig::default();
        cfg.seeds = vec![0, 1];
        cfg.d_grid = vec![0.0, 0.9];
        cfg.stream_len = 2_000;
        cfg.holdout = 100;
        let report = stream::run_stream(&cfg).unwrap();
        let dir = tmp.join(tag);
        stream::write_report(&report, &cfg, &dir).unwrap();
        dir
    };
    let a = run("a");
    let b = run("b");
    for file in ["stream_runs.csv", "stream_summary.csv", "manifest.json"] {
        let fa = std::fs::read(a.join(file)).unwrap();
        let fb = std::fs::read(b.join(file)).unwrap();
        assert_eq!(fa, fb, "{file} differs between identical re-runs");
    }

    // A small planning run must replay byte-identically too.
    let run_dyna_once = |tag: &str| {
        let mut cfg = DynaExpConfig::gridworld_defaults();
        cfg.seeds = vec![3];
        cfg.epochs = 40;
        cfg.interactions_per_epoch = 25;
        cfg.probe_per_dim = 8;
        cfg.error_eval_epochs = 20;
        let report = dyna::run_experiment(&cfg).unwrap();
        let dir = tmp.join(tag);
        dyna::write_report(&report, &cfg, &dir).unwrap();
        dir
    };
    let da = run_dyna_once("da");
    let db = run_dyna_once("db");
    for file in [
        "metrics_dyna_seed3.csv",
        "metrics_model-free_seed3.csv",
        "dyna_summary.csv",
        "manifest.json",
    ] {
        let fa = std::fs::read(da.join(file)).unwrap();
        let fb = std::fs::read(db.join(file)).unwrap();
        assert_eq!(fa, fb, "{file} differs between identical re-runs");
    }
    std::fs::remove_dir_all(&tmp).ok();
    println!(
        "criterion 11 PASS: stream and planning reruns byte-identical (metrics CSVs and manifests)"
    );
}
