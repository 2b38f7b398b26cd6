//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any failed. Pass criterion numbers as arguments to run a
//! subset, e.g. `cargo test --test acceptance -- 3 7`.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use swarmcast::data::{self, EventKind, Scenario, SynthConfig};
use swarmcast::forecaster::{self, ForecastModel, StateChunk, TrainConfig};
use swarmcast::kmeans;
use swarmcast::metrics;
use swarmcast::nn::{gradcheck, Dense, LayerNorm, LstmCell, Parameters};
use swarmcast::set_to_cluster::{self, HebbianConfig, DEFAULT_DECODE_THRESHOLD, MIN_RADIUS};
use swarmcast::{seeded_rng, Codebook, Frame, Point, StateVector};

type Check = fn() -> Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point> {
    (0..n).map(|_| [rng.random(), rng.random()]).collect()
}

fn random_codebook(rng: &mut ChaCha8Rng, k: usize) -> Codebook {
    Codebook::new(random_points(rng, k), MIN_RADIUS).unwrap()
}

// 1 ------------------------------------------------------------------------

fn wta_oracle() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = seeded_rng(1);
    let mut checked = 0;
    for k in [1, 16, 64] {
        for _ in 0..5 {
            let cb = random_codebook(&mut rng, k);
            let points = random_points(&mut rng, 1000);
            let oracle = kmeans::assign(&points, cb.weights());
            for (p, &o) in points.iter().zip(&oracle) {
                let w = set_to_cluster::winner(*p, &cb).neuron_index;
                ensure(w == o, || format!("k={k} point {p:?}: winner {w}, brute force {o}"))?;
                checked += 1;
            }
        }
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(1), || format!("took {t:?}"))?;
    Ok(format!("{checked} points agree, {t:.2?}"))
}

// 2 ------------------------------------------------------------------------

fn encoder_properties() -> Result<String, String> {
    let mut rng = seeded_rng(2);
    for f in 0..500 {
        let k = rng.random_range(1..=64);
        let cb = random_codebook(&mut rng, k);
        let n = rng.random_range(0..40);
        let frame = Frame::new(f, random_points(&mut rng, n));
        let pooled = set_to_cluster::encode_frame(&frame, &cb, MIN_RADIUS);
        for &x in &frame.agents {
            let s = set_to_cluster::agent_state(x, &cb, MIN_RADIUS);
            let nz: Vec<f64> = s.values().iter().copied().filter(|v| *v != 0.0).collect();
            ensure(nz.len() == 1 && nz[0] >= MIN_RADIUS, || format!("frame {f}: agent state {nz:?}"))?;
            let w = set_to_cluster::winner(x, &cb);
            ensure(w.distance <= pooled.values()[w.neuron_index], || {
                format!("frame {f}: distance {} exceeds pooled radius", w.distance)
            })?;
        }
        for _ in 0..10 {
            let mut shuffled = frame.clone();
            shuffled.agents.shuffle(&mut rng);
            let again = set_to_cluster::encode_frame(&shuffled, &cb, MIN_RADIUS);
            ensure(again == pooled, || format!("frame {f}: permutation changed the encoding"))?;
        }
    }
    Ok("500 frames: one-hot states, permutation invariance, radius covers members".into())
}

// 3 ------------------------------------------------------------------------

fn blobs(rng: &mut ChaCha8Rng, per_blob: usize) -> Vec<Point> {
    let centers = [[0.2, 0.2], [0.8, 0.25], [0.25, 0.75], [0.75, 0.8]];
    let mut out = Vec::new();
    for c in centers {
        for _ in 0..per_blob {
            out.push([
                c[0] + rng.random_range(-0.05..0.05),
                c[1] + rng.random_range(-0.05..0.05),
            ]);
        }
    }
    out
}

fn hebbian_fixed_point() -> Result<String, String> {
    let mut rng = seeded_rng(3);
    let points = blobs(&mut rng, 50);
    let init = Codebook::new(vec![[0.3, 0.3], [0.7, 0.3], [0.3, 0.7], [0.7, 0.7]], MIN_RADIUS).unwrap();
    let fit = kmeans::lloyd(&points, 4, &init, 1000, 1e-9).map_err(|e| e.to_string())?;
    let cb = Codebook::new(fit.centroids.clone(), MIN_RADIUS).unwrap();
    // the whole set as one batch, spread over several frames
    let frames: Vec<Frame> = points
        .chunks(20)
        .enumerate()
        .map(|(i, c)| Frame::new(i as i64, c.to_vec()))
        .collect();
    let next = set_to_cluster::hebbian_update(&frames, &cb, 1.0).map_err(|e| e.to_string())?;
    let max_dw = cb
        .weights()
        .iter()
        .zip(next.weights())
        .flat_map(|(a, b)| [(a[0] - b[0]).abs(), (a[1] - b[1]).abs()])
        .fold(0.0, f64::max);
    ensure(max_dw < 1e-9, || format!("max |dw| = {max_dw:e}"))?;
    Ok(format!("Lloyd converged in {} iterations, max |dw| = {max_dw:.1e}", fit.iterations))
}

// 4 ------------------------------------------------------------------------

fn hebbian_progress() -> Result<String, String> {
    let start = Instant::now();
    let frames = data::synth_scenario(&SynthConfig::default()).map_err(|e| e.to_string())?;
    let (train, heldout) = frames.split_at(frames.len() * 4 / 5);
    let cfg = HebbianConfig {
        k: 64,
        learning_rate: 1.0,
        epochs: 20,
        ..HebbianConfig::default()
    };
    let r = set_to_cluster::train_codebook(train, heldout, &cfg).map_err(|e| e.to_string())?;
    let (d0, d1) = (r.history[0], *r.history.last().unwrap());
    let t = start.elapsed();
    ensure(d1 < 0.5 * d0, || format!("held-out d {d0:.4e} -> {d1:.4e}"))?;
    ensure(t < Duration::from_secs(30), || format!("took {t:?}"))?;
    Ok(format!("held-out d {d0:.3e} -> {d1:.3e} (ratio {:.3}), {t:.2?}", d1 / d0))
}

// 5 ------------------------------------------------------------------------

fn gradient_suite() -> Result<String, String> {
    let mut rng = seeded_rng(5);
    let mut v = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };
    let h = 1e-5;
    let dense = gradcheck::check_dense(&Dense::random(4, 8, &mut seeded_rng(50)), &v(4), h);
    let mut ln = LayerNorm::new(16);
    ln.gain = v(16);
    ln.bias = v(16);
    let norm = gradcheck::check_layernorm(&ln, &v(16), h);
    let cell = LstmCell::random(5, 4, &mut seeded_rng(51));
    let inputs: Vec<Vec<f64>> = (0..3).map(|_| v(5)).collect();
    let lstm = gradcheck::check_lstm_unrolled(&cell, &inputs, h);

    let model = forecaster::build_model_with(4, 4, 4, 52).map_err(|e| e.to_string())?;
    let cfg = TrainConfig {
        observe_len: 3,
        predict_len: 3,
        ..TrainConfig::default()
    };
    let chunk: Vec<StateVector> = (0..6)
        .map(|_| StateVector(v(4).into_iter().map(|x| 0.06 * x.abs()).collect()))
        .collect();
    let full = forecaster::grad_check_model(&model, &chunk, &cfg, h).map_err(|e| e.to_string())?;

    let mut worst = 0.0f64;
    for (name, r) in [("dense", dense), ("layernorm", norm), ("lstm", lstm), ("forecaster", full)] {
        ensure(r.max_rel_error < 1e-4, || format!("{name}: max rel error {:e}", r.max_rel_error))?;
        worst = worst.max(r.max_rel_error);
    }
    Ok(format!(
        "dense/layernorm/lstm/full unroll ({} params) worst rel error {worst:.1e}",
        full.checked
    ))
}

// 6 ------------------------------------------------------------------------

fn loss_scaling() -> Result<String, String> {
    let mut rng = seeded_rng(6);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let k = rng.random_range(1..=64);
        let steps = rng.random_range(1..=49);
        let mut seq = || -> Vec<StateVector> {
            (0..steps)
                .map(|_| StateVector((0..k).map(|_| rng.random_range(0.0..0.12)).collect()))
                .collect()
        };
        let (pred, truth) = (seq(), seq());
        let a10 = metrics::rollout_mse(&pred, &truth, 10.0).unwrap().mean_scaled;
        let a1 = metrics::rollout_mse(&pred, &truth, 1.0).unwrap().mean_scaled;
        let diff = (a10 - 100.0 * a1).abs();
        worst = worst.max(diff);
        ensure(diff <= 1e-12, || format!("{a10:e} vs 100 x {a1:e}"))?;
    }
    Ok(format!("100 pairs, max |L10 - 100 L1| = {worst:.1e}"))
}

// 7 ------------------------------------------------------------------------

/// Direct transcription of the definition: full distance matrix, then for
/// every point the mean distance to each cluster.
fn silhouette_oracle(points: &[Point], labels: &[usize]) -> Vec<f64> {
    let n = points.len();
    let d: Vec<Vec<f64>> = points
        .iter()
        .map(|p| points.iter().map(|q| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()).collect())
        .collect();
    let clusters: BTreeSet<usize> = labels.iter().copied().collect();
    (0..n)
        .map(|i| {
            let own: Vec<usize> = (0..n).filter(|&j| labels[j] == labels[i] && j != i).collect();
            if own.is_empty() {
                return 0.0;
            }
            let a = own.iter().map(|&j| d[i][j]).sum::<f64>() / own.len() as f64;
            let b = clusters
                .iter()
                .filter(|&&c| c != labels[i])
                .map(|&c| {
                    let m: Vec<usize> = (0..n).filter(|&j| labels[j] == c).collect();
                    m.iter().map(|&j| d[i][j]).sum::<f64>() / m.len() as f64
                })
                .fold(f64::INFINITY, f64::min);
            if a.max(b) == 0.0 {
                0.0
            } else {
                (b - a) / a.max(b)
            }
        })
        .collect()
}

fn silhouette_check() -> Result<String, String> {
    let mut rng = seeded_rng(7);
    let mut worst = 0.0f64;
    for set in 0..50 {
        let n = rng.random_range(2..=200);
        let c = rng.random_range(2..=6).min(n);
        let points = random_points(&mut rng, n);
        let mut labels: Vec<usize> = (0..n).map(|i| if i < c { i } else { rng.random_range(0..c) }).collect();
        labels.shuffle(&mut rng);
        let got = metrics::silhouette(&points, &labels).map_err(|e| e.to_string())?;
        let want = silhouette_oracle(&points, &labels);
        for (g, w) in got.per_point.iter().zip(&want) {
            worst = worst.max((g - w).abs());
        }
        let mean = want.iter().sum::<f64>() / n as f64;
        ensure((got.mean - mean).abs() < 1e-9, || format!("set {set}: mean {} vs {mean}", got.mean))?;
    }
    ensure(worst < 1e-9, || format!("per-point deviation {worst:e}"))?;
    let hand = metrics::silhouette(&[[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]], &[0, 0, 1, 1])
        .map_err(|e| e.to_string())?;
    ensure((hand.mean - 0.9002).abs() < 1e-4, || format!("hand example {}", hand.mean))?;
    Ok(format!("50 sets within {worst:.1e}; hand example {:.4}", hand.mean))
}

// 8 ------------------------------------------------------------------------

fn parameter_accounting() -> Result<String, String> {
    let (k, p, h) = (64, forecaster::DEFAULT_PROJECTION, forecaster::DEFAULT_HIDDEN);
    let model = forecaster::build_model(k, 0).map_err(|e| e.to_string())?;
    let formula = (k * p + p) + 2 * p + 4 * ((p + h) * h + h) + (h * k + k);
    let codebook = set_to_cluster::init_codebook(k, 0).map_err(|e| e.to_string())?;
    ensure(model.param_count() == 41_472 && formula == 41_472, || {
        format!("model {} formula {formula}", model.param_count())
    })?;
    ensure(codebook.param_count() == 128, || format!("codebook {}", codebook.param_count()))?;
    let rel = (41_700.0 - 41_472.0) / 41_700.0;
    ensure(rel < 0.006, || format!("{rel}"))?;
    Ok(format!(
        "(k*P+P) + 2P + 4((P+H)H+H) + (H*k+k) = {} + {} + {} + {} = {formula}; codebook 2k = 128; {:.2}% below 41.7k",
        k * p + p,
        2 * p,
        4 * ((p + h) * h + h),
        h * k + k,
        rel * 100.0
    ))
}

// 9 and 10 -----------------------------------------------------------------

struct EndToEnd {
    scenario: Scenario,
    codebook: Codebook,
    test: Vec<StateChunk>,
    cfg: TrainConfig,
    best: ForecastModel,
    first: ForecastModel,
    best_epoch: Option<usize>,
    epochs_run: usize,
    elapsed: Duration,
}

fn end_to_end() -> &'static EndToEnd {
    static RUN: OnceLock<EndToEnd> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let scenario = data::synth_scenario_with_events(&SynthConfig::scripted_events(11_000, 50, 11)).unwrap();
        let split = data::chunk_and_split_default(&scenario.frames).unwrap();
        let train_frames: Vec<Frame> = split.train.iter().flat_map(|c| c.frames.clone()).collect();
        let val_frames: Vec<Frame> = split.val.iter().flat_map(|c| c.frames.clone()).collect();
        let codebook = set_to_cluster::train_codebook(&train_frames, &val_frames, &HebbianConfig::default())
            .unwrap()
            .codebook;
        let train = forecaster::encode_chunks(&split.train, &codebook);
        let val = forecaster::encode_chunks(&split.val, &codebook);
        let test = forecaster::encode_chunks(&split.test, &codebook);
        let cfg = TrainConfig {
            epochs: 300,
            seed: 11,
            ..TrainConfig::default()
        };
        let model = forecaster::build_model(codebook.k(), 11).unwrap();
        let out = forecaster::train(model, &train, &val, &cfg).unwrap();
        EndToEnd {
            scenario,
            codebook,
            test,
            cfg,
            epochs_run: out.history.len(),
            best_epoch: out.best_epoch,
            first: out.first_epoch.unwrap(),
            best: out.model,
            elapsed: start.elapsed(),
        }
    })
}

fn mean_predict_mse(model: &ForecastModel, chunks: &[StateChunk], cfg: &TrainConfig) -> f64 {
    chunks
        .iter()
        .map(|c| forecaster::evaluate_chunk(model, &c.states, cfg).unwrap().predict_unscaled)
        .sum::<f64>()
        / chunks.len() as f64
}

fn forecasting() -> Result<String, String> {
    let run = end_to_end();
    let best = mean_predict_mse(&run.best, &run.test, &run.cfg);
    let first = mean_predict_mse(&run.first, &run.test, &run.cfg);
    let persistence = run
        .test
        .iter()
        .map(|c| forecaster::persistence_mse(&c.states, &run.cfg).unwrap())
        .sum::<f64>()
        / run.test.len() as f64;
    let detail = format!(
        "test MSE {best:.3e}, epoch-1 {first:.3e} (ratio {:.3}), persistence {persistence:.3e}; \
         best epoch {:?} of {}, {:.0?}",
        best / first,
        run.best_epoch,
        run.epochs_run,
        run.elapsed
    );
    ensure(run.test.len() == 22, || format!("{} test chunks", run.test.len()))?;
    ensure(best < 0.5 * first, || format!("(a) failed: {detail}"))?;
    ensure(best < persistence, || format!("(b) failed: {detail}"))?;
    ensure(run.elapsed < Duration::from_secs(600), || format!("too slow: {detail}"))?;
    Ok(detail)
}

fn event_capture() -> Result<String, String> {
    let run = end_to_end();
    let th = DEFAULT_DECODE_THRESHOLD;
    let mut scores = Vec::new();
    for c in &run.test {
        let start = c.start_frame as usize;
        let has_split = run
            .scenario
            .events
            .iter()
            .any(|e| e.scripted && e.kind == EventKind::Split && (start..start + 50).contains(&e.frame));
        if !has_split {
            continue;
        }
        let pred = forecaster::rollout_with(&run.best, &c.states[..run.cfg.observe_len], &run.cfg).unwrap();
        let last = pred.last().unwrap();
        let decoded = set_to_cluster::decode(last, &run.codebook, th, c.start_frame + 49).unwrap();
        let predicted: Vec<usize> = decoded.clusters.iter().map(|cl| cl.neuron).collect();
        let truth = c.states.last().unwrap().active(th);
        scores.push(metrics::jaccard(&predicted, &truth));
    }
    ensure(!scores.is_empty(), || "no test chunk contains a scripted split".into())?;
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    ensure(mean >= 0.5, || format!("mean Jaccard {mean:.3} over {} splits", scores.len()))?;
    Ok(format!("mean Jaccard {mean:.3} over {} split chunks", scores.len()))
}

// 11 -----------------------------------------------------------------------

fn complexity() -> Result<String, String> {
    // encode_frame only borrows the codebook immutably
    let _: fn(&Frame, &Codebook, f64) -> StateVector = set_to_cluster::encode_frame;
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.csv");
    let status = Command::new(env!("CARGO_BIN_EXE_swarmcast"))
        .args(["bench", "--n", "1000", "-k", "64,128", "--iters", "1,10", "--frames", "100", "--repeats", "7"])
        .arg("--out")
        .arg(&out)
        .env("RUST_LOG", "warn")
        .status()
        .map_err(|e| e.to_string())?;
    ensure(status.success(), || format!("bench exited with {status}"))?;
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    let enc = |k: f64| rows.iter().find(|r| r[1] == k).unwrap()[3];
    let lloyd = |k: f64, it: f64| rows.iter().find(|r| r[1] == k && r[2] == it).unwrap()[4];
    let ratio = enc(128.0) / enc(64.0);
    ensure((1.5..=2.5).contains(&ratio), || format!("encoder k 64->128 ratio {ratio:.2}"))?;
    let growth = lloyd(64.0, 10.0) / lloyd(64.0, 1.0);
    ensure(growth > 2.0, || format!("Lloyd time only grew {growth:.2}x from 1 to 10 iterations"))?;

    let mut rng = seeded_rng(11);
    let cb = random_codebook(&mut rng, 64);
    let before = cb.clone();
    for i in 0..100 {
        set_to_cluster::encode_frame(&Frame::new(i, random_points(&mut rng, 50)), &cb, MIN_RADIUS);
    }
    ensure(cb == before, || "codebook changed while encoding".into())?;
    Ok(format!(
        "encoder {:.0} -> {:.0} ns/frame (x{ratio:.2}); Lloyd 1 -> 10 iterations x{growth:.1}; encode borrows codebook immutably",
        enc(64.0),
        enc(128.0)
    ))
}

// 12 -----------------------------------------------------------------------

fn pipeline(dir: &Path) -> Result<(), String> {
    let bin = env!("CARGO_BIN_EXE_swarmcast");
    let p = |name: &str| dir.join(name).display().to_string();
    let steps: Vec<Vec<String>> = vec![
        vec!["synth".into(), "--preset".into(), "scripted".into(), "--frames".into(), "1500".into(), "--out".into(), p("frames.jsonl")],
        vec!["train-clusters".into(), "--frames".into(), p("frames.jsonl"), "--epochs".into(), "5".into(), "--out".into(), p("codebook.json")],
        vec!["encode".into(), "--frames".into(), p("frames.jsonl"), "--codebook".into(), p("codebook.json"), "--out".into(), p("states.csv")],
        vec!["train-forecaster".into(), "--states".into(), p("states.csv"), "--epochs".into(), "3".into(), "--out".into(), p("model.json"), "--log".into(), p("loss.csv")],
        vec!["predict".into(), "--model".into(), p("model.json"), "--codebook".into(), p("codebook.json"), "--states".into(), p("states.csv"), "--out".into(), p("pred.jsonl")],
        vec!["eval".into(), "--predictions".into(), p("pred.jsonl"), "--states".into(), p("states.csv"), "--codebook".into(), p("codebook.json"), "--frames".into(), p("frames.jsonl"), "--out".into(), p("metrics.csv")],
    ];
    for args in steps {
        let out = Command::new(bin)
            .args(&args)
            .env("SWARM_SEED", "5")
            .env("RUST_LOG", "warn")
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || {
            format!("{} failed: {}", args[0], String::from_utf8_lossy(&out.stderr))
        })?;
    }
    Ok(())
}

fn reproducibility() -> Result<String, String> {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    pipeline(a.path())?;
    pipeline(b.path())?;
    let files = ["frames.jsonl", "codebook.json", "states.csv", "model.json", "loss.csv", "pred.jsonl", "metrics.csv"];
    for f in files {
        let (x, y) = (std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
        ensure(!x.is_empty() && x == y, || format!("{f} differs between runs"))?;
    }
    Ok(format!("{} artifacts byte-identical across two runs", files.len()))
}

fn main() {
    let checks: [(u32, &str, Check); 12] = [
        (1, "WTA oracle equivalence", wta_oracle),
        (2, "encoder properties", encoder_properties),
        (3, "Hebbian fixed point", hebbian_fixed_point),
        (4, "Hebbian progress", hebbian_progress),
        (5, "gradient suite", gradient_suite),
        (6, "loss-scaling identity", loss_scaling),
        (7, "Silhouette oracle", silhouette_check),
        (8, "parameter accounting", parameter_accounting),
        (9, "end-to-end forecasting", forecasting),
        (10, "event capture", event_capture),
        (11, "complexity check", complexity),
        (12, "reproducibility", reproducibility),
    ];
    let only: BTreeSet<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, check) in checks {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {id:>2} PASS {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id:>2} FAIL {name}: {detail} [{secs:.1} s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
