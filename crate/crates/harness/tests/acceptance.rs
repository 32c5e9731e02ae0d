//! Acceptance suite. Runs every criterion in order on one thread so the
//! timing checks are not disturbed, printing one PASS/FAIL line each.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use esa_core::data::*;
use esa_core::models::{build_model, Arch, Model, ModelConfig};
use esa_core::nn::*;
use esa_core::select::*;
use esa_core::seq::*;
use esa_harness::*;
use rand::Rng;

type Outcome = std::result::Result<String, String>;

/// Finite-difference step. Smaller steps drown gradients near 1e-8 in rounding noise.
const EPS: f64 = 1e-4;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn rel(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-12)
}

/// Central differences of `f` with respect to every entry of `x`.
fn input_grad_error(x: &Matrix, analytic: &Matrix, f: impl Fn(&Matrix) -> f64) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..x.as_slice().len() {
        let mut p = x.clone();
        p.as_mut_slice()[k] += EPS;
        let mut m = x.clone();
        m.as_mut_slice()[k] -= EPS;
        worst = worst.max(rel(analytic.as_slice()[k], (f(&p) - f(&m)) / (2.0 * EPS)));
    }
    worst
}

fn weighted_sum(y: &Matrix, r: &Matrix) -> f64 {
    y.as_slice().iter().zip(r.as_slice()).map(|(a, b)| a * b).sum()
}

fn small_cfg(arch: Arch, ratio: f64) -> ModelConfig {
    ModelConfig {
        arch,
        hidden_dim: 8,
        window_len: 8,
        n_heads: 8,
        select: SelectConfig::new(ratio, RouteMode::Bypass).unwrap(),
        seed: 2024,
        ..Default::default()
    }
}

fn model_grad_error(cfg: &ModelConfig, x: &Matrix) -> f64 {
    let mut m = build_model(cfg).unwrap();
    grad_check(
        &mut m,
        |m: &mut Model, backward| {
            let y = m.forward(x)?;
            if backward {
                m.backward(2.0 * (y - 0.3))?;
            }
            Ok((y - 0.3).powi(2))
        },
        EPS,
    )
    .unwrap()
}

fn c1_gradients() -> Outcome {
    let t = Instant::now();
    let mut rng = layer_rng(1, "c1");
    let mut errs: Vec<(&str, f64)> = Vec::new();

    let x = random(5, 4, &mut rng);
    let r = random(5, 3, &mut rng);
    let mut lin = Linear::new("lin", 4, 3, &mut rng);
    let e = grad_check(
        &mut lin,
        |l: &mut Linear, b| {
            let y = l.forward(&x)?;
            if b {
                l.backward(&r)?;
            }
            Ok(weighted_sum(&y, &r))
        },
        EPS,
    )
    .unwrap();
    errs.push(("linear", e));

    let x = random(4, 5, &mut rng);
    let r = random(4, 5, &mut rng);
    for (name, kind) in [("sigmoid", ActivationKind::Sigmoid), ("tanh", ActivationKind::Tanh)] {
        let mut act = Activation::new(kind);
        act.forward(&x);
        let dx = act.backward(&r).unwrap();
        let e = input_grad_error(&x, &dx, |x| weighted_sum(&Activation::new(kind).forward(x), &r));
        errs.push((name, e));
    }
    let y = softmax_rows(&x);
    let dx = softmax_rows_backward(&y, &r).unwrap();
    errs.push(("softmax", input_grad_error(&x, &dx, |x| weighted_sum(&softmax_rows(x), &r))));
    let target = random(4, 5, &mut rng);
    let (_, dx) = mse_loss(&x, &target).unwrap();
    errs.push(("mse", input_grad_error(&x, &dx, |x| mse_loss(x, &target).unwrap().0)));

    let x = random(6, 3, &mut rng);
    let r = random(6, 5, &mut rng);
    let mut lstm = Lstm::new("lstm", 3, 5, &mut rng);
    let e = grad_check(
        &mut lstm,
        |l: &mut Lstm, b| {
            let y = l.forward(&x, &LstmState::zeros(5))?;
            if b {
                l.backward(&r)?;
            }
            Ok(weighted_sum(&y, &r))
        },
        EPS,
    )
    .unwrap();
    errs.push(("lstm", e));

    let r2 = random(6, 2, &mut rng);
    let mut rnn = Rnn::from_params(RnnCellParams::new("rnn", 3, 4, 2, &mut rng));
    let e = grad_check(
        &mut rnn,
        |l: &mut Rnn, b| {
            let y = l.forward(&x)?;
            if b {
                l.backward(&r2)?;
            }
            Ok(weighted_sum(&y, &r2))
        },
        EPS,
    )
    .unwrap();
    errs.push(("rnn", e));

    let xa = random(6, 8, &mut rng);
    let ra = random(6, 8, &mut rng);
    let mut mha = MultiHeadAttention::new(AttentionParams::new("att", 8, 2, &mut rng).unwrap());
    let e = grad_check(
        &mut mha,
        |l: &mut MultiHeadAttention, b| {
            let (y, _) = l.forward(&xa)?;
            if b {
                l.backward(&ra)?;
            }
            Ok(weighted_sum(&y, &ra))
        },
        EPS,
    )
    .unwrap();
    errs.push(("attention", e));

    let mut router = SelectRouter::new(
        Lstm::new("lstm", 8, 8, &mut rng),
        None,
        PositionalEncoding::new(6, 8),
        RouteMode::Bypass,
    )
    .unwrap();
    let sel = SelectionResult {
        scores: vec![0.0; 6],
        selected: vec![1, 3, 5],
        k: 3,
    };
    let e = grad_check(
        &mut router,
        |l: &mut SelectRouter, b| {
            let y = l.route_forward(&xa, &sel)?;
            if b {
                l.route_backward(&ra)?;
            }
            Ok(weighted_sum(&y, &ra))
        },
        EPS,
    )
    .unwrap();
    errs.push(("router", e));

    let w = random(8, 3, &mut rng);
    let esa = small_cfg(Arch::EsaLstm, 3.0 / 8.0);
    let k = build_model(&esa).unwrap().selection(&w).unwrap().unwrap().k;
    errs.push(("esa_lstm", model_grad_error(&esa, &w)));
    errs.push(("lstm_net", model_grad_error(&small_cfg(Arch::Lstm, 1.0), &w)));
    errs.push((
        "cascaded",
        model_grad_error(
            &ModelConfig {
                lstm_layers: 2,
                ..small_cfg(Arch::CascadedLstm, 1.0)
            },
            &w,
        ),
    ));
    errs.push((
        "fcnn",
        model_grad_error(
            &ModelConfig {
                fcnn_depth: 4,
                ..small_cfg(Arch::Fcnn, 1.0)
            },
            &w,
        ),
    ));

    let secs = t.elapsed().as_secs_f64();
    let worst = errs.iter().map(|e| e.1).fold(0.0, f64::max);
    let detail = format!(
        "max rel err {worst:.2e} over {} checks (eps {EPS:e}, esa K={k}), {secs:.1}s [{}]",
        errs.len(),
        errs.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect::<Vec<_>>().join(", ")
    );
    check(worst < 1e-4 && k == 3 && secs < 30.0, detail)
}

fn c2_attention_rows() -> Outcome {
    let mut rng = layer_rng(2, "c2");
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let len = rng.gen_range(1..=48);
        let heads = [1, 2, 4, 8][i % 4];
        let d = heads * rng.gen_range(1..=4);
        let p = AttentionParams::new("att", d, heads, &mut rng).unwrap();
        let scale = [0.1, 1.0, 10.0][i % 3];
        let x = random(len, d, &mut rng).scale(scale);
        for a in attention_weights(&x, &p).unwrap() {
            for r in 0..len {
                let s: f64 = a.row(r).iter().sum();
                worst = worst.max((s - 1.0).abs());
            }
        }
    }
    let p = AttentionParams::new("att", 8, 2, &mut rng).unwrap();
    let single = attention_weights(&random(1, 8, &mut rng), &p).unwrap();
    let exact = single.iter().all(|a| a.shape() == (1, 1) && a.get(0, 0) == 1.0);
    check(
        worst <= 1e-9 && exact,
        format!("max |row sum - 1| = {worst:.1e} over 1000 forwards; L=1 exact: {exact}"),
    )
}

fn c3_equivalence() -> Outcome {
    let base = ModelConfig::default();
    let with = |arch, ratio| ModelConfig {
        arch,
        select: SelectConfig { ratio, ..base.select },
        ..base.clone()
    };
    let mut esa1 = build_model(&with(Arch::EsaLstm, 1.0)).unwrap();
    let mut lstm = build_model(&with(Arch::Lstm, 1.0)).unwrap();
    let mut esa0 = build_model(&with(Arch::EsaLstm, 0.0)).unwrap();
    let mut rng = layer_rng(3, "c3");
    let (mut full, mut empty) = (0, 0);
    for _ in 0..100 {
        let w = random(base.window_len, base.n_input_channels, &mut rng).scale(2.0);
        if esa1.forward(&w).unwrap().to_bits() == lstm.forward(&w).unwrap().to_bits() {
            full += 1;
        }
        let y0 = esa0.forward(&w).unwrap();
        if y0.to_bits() == lstm.fc_only_predict(&w).unwrap().to_bits() {
            empty += 1;
        }
    }
    check(
        full == 100 && empty == 100 && esa0.lstm_steps() == 0,
        format!("p=1 vs lstm identical {full}/100, p=0 vs fc-only identical {empty}/100"),
    )
}

/// Routes one extra unselected row through the LSTM.
struct MisRouter(SelectRouter);

impl RoutedSequence for MisRouter {
    fn route_forward(&mut self, x: &Matrix, sel: &SelectionResult) -> esa_core::Result<Matrix> {
        let mut wide = sel.clone();
        if let Some(extra) = sel.mask().iter().position(|&m| !m) {
            wide.selected.push(extra);
            wide.selected.sort_unstable();
            wide.k += 1;
        }
        self.0.route_forward(x, &wide)
    }

    fn route_backward(&mut self, d_out: &Matrix) -> esa_core::Result<Matrix> {
        self.0.route_backward(d_out)
    }

    fn lstm_params(&self) -> Vec<&Parameter> {
        self.0.lstm_params()
    }

    fn zero_lstm_grads(&mut self) {
        self.0.zero_lstm_grads()
    }
}

fn c4_mask() -> Outcome {
    let cfg = ModelConfig {
        hidden_dim: 12,
        window_len: 24,
        n_heads: 4,
        ..ModelConfig::default()
    };
    let mut model = build_model(&cfg).unwrap();
    let mut rng = layer_rng(4, "c4");
    let mut passed = 0;
    for _ in 0..100 {
        let batch: Vec<Matrix> = (0..4).map(|_| random(24, 3, &mut rng).scale(2.0)).collect();
        if model.selection_gradient_mask_check(&batch).unwrap() {
            passed += 1;
        }
    }

    let d = 12;
    let att = AttentionParams::new("score", d, 4, &mut rng).unwrap();
    let sel_cfg = SelectConfig::new(0.3, RouteMode::Bypass).unwrap();
    let batch: Vec<(Matrix, SelectionResult)> = (0..100)
        .map(|_| {
            let x = random(24, d, &mut rng);
            let s = received_attention(&x, &att).unwrap();
            let sel = top_k_select_anchored(&s, &sel_cfg, 23);
            (x, sel)
        })
        .collect();
    let router = || {
        SelectRouter::new(
            Lstm::new("lstm", d, d, &mut layer_rng(4, "lstm")),
            None,
            PositionalEncoding::new(24, d),
            RouteMode::Bypass,
        )
        .unwrap()
    };
    let clean = selection_gradient_mask_check(&mut router(), &batch).unwrap();
    let leaky = selection_gradient_mask_check(&mut MisRouter(router()), &batch).unwrap();
    check(
        passed == 100 && clean && !leaky,
        format!("model batches passing {passed}/100, router {clean}, mis-routing fixture passes: {leaky}"),
    )
}

fn c5_cost(dir: &Path) -> Outcome {
    let t = Instant::now();
    let mut bad = Vec::new();
    let mut rng = layer_rng(5, "c5");
    for p in [0.1, 0.3, 0.5, 1.0] {
        let mut m = build_model(&ModelConfig {
            window_len: 128,
            select: SelectConfig { ratio: p, ..SelectConfig::default() },
            ..ModelConfig::default()
        })
        .unwrap();
        let want = (p * 128.0f64).round() as u64;
        for _ in 0..10 {
            m.reset_lstm_steps();
            m.forward(&random(128, 3, &mut rng)).unwrap();
            if m.lstm_steps() != want {
                bad.push(format!("p={p}: {} != {want}", m.lstm_steps()));
            }
        }
    }

    let mut run = RunConfig::default();
    for (k, v) in [
        ("window_len", "128"),
        ("samples_per_epoch", "512"),
        ("train_stride", "8"),
        ("eval_stride", "64"),
        ("bench_epochs", "5"),
    ] {
        run.set(k, v).unwrap();
    }
    run.out_dir = dir.join("bench");
    let rows = cmd_bench(&run).unwrap();
    for r in rows.iter().filter(|r| r.label.starts_with("esa")) {
        let want = (r.ratio * 128.0).round();
        if r.steps_per_window != want {
            bad.push(format!("bench {}: {} != {want}", r.label, r.steps_per_window));
        }
    }
    let time = |ratio: f64| {
        rows.iter()
            .find(|r| r.label.starts_with("esa") && r.ratio == ratio)
            .map(BenchRow::mean)
            .unwrap()
    };
    let (t3, t10) = (time(0.3), time(1.0));
    let secs = t.elapsed().as_secs_f64();
    check(
        bad.is_empty() && t3 < t10 && secs < 300.0,
        format!(
            "steps exact: {} {}; epoch time p=0.3 {t3:.3}s vs p=1.0 {t10:.3}s at L=128; {secs:.0}s",
            bad.is_empty(),
            bad.join("; ")
        ),
    )
}

/// Training results shared by the directional criteria.
struct Directional {
    fcnn: MetricsReport,
    ratios: Vec<(f64, MetricsReport)>,
    lstm: MetricsReport,
    pipeline_seconds: f64,
}

fn directional_run() -> RunConfig {
    let mut run = RunConfig::default();
    for (k, v) in [
        ("epochs", "40"),
        ("samples_per_epoch", "4096"),
        ("train_stride", "4"),
        ("eval_stride", "4"),
        ("patience", "0"),
    ] {
        run.set(k, v).unwrap();
    }
    run
}

fn train_directional() -> Directional {
    let run = directional_run();
    let t = Instant::now();
    let wells = load_wells(&run).unwrap();
    let data = prepare(&run, &wells).unwrap();
    let fit = |cfg: ModelConfig| {
        let out = train_model(&run, &cfg, &data, |_| {}).unwrap();
        assert!(out.diverged_at.is_none(), "{} diverged", cfg.label());
        out.report
    };
    let fcnn = fit(ModelConfig {
        arch: Arch::Fcnn,
        fcnn_depth: 4,
        ..run.model.clone()
    });
    let esa3 = fit(AblationAxis::Ratio.apply(&run.model, 0.3));
    let pipeline_seconds = t.elapsed().as_secs_f64();
    let mut ratios = vec![(0.3, esa3)];
    for p in [0.0, 0.1, 0.5] {
        ratios.push((p, fit(AblationAxis::Ratio.apply(&run.model, p))));
    }
    ratios.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lstm = fit(ModelConfig {
        arch: Arch::Lstm,
        ..run.model.clone()
    });
    Directional {
        fcnn,
        ratios,
        lstm,
        pipeline_seconds,
    }
}

fn c6_ordering(d: &Directional) -> Outcome {
    let esa = &d.ratios.iter().find(|r| r.0 == 0.3).unwrap().1;
    let wins = esa
        .per_well
        .iter()
        .zip(&d.fcnn.per_well)
        .filter(|(e, f)| e.rmse <= f.rmse)
        .count();
    let per: Vec<String> = esa
        .per_well
        .iter()
        .zip(&d.fcnn.per_well)
        .map(|(e, f)| format!("{} {:.3}/{:.3}", e.label, e.rmse, f.rmse))
        .collect();
    check(
        wins >= 4 && d.pipeline_seconds < 1800.0,
        format!(
            "esa p=0.3 <= fcnn-4 on {wins}/5 wells [{}]; pipeline {:.0}s",
            per.join(", "),
            d.pipeline_seconds
        ),
    )
}

fn mean_rmse(m: &MetricsReport) -> f64 {
    m.per_well.iter().map(|w| w.rmse).sum::<f64>() / m.per_well.len() as f64
}

fn c7_ablation(d: &Directional) -> Outcome {
    // p = 1.0 selects every row, which is the vanilla LSTM bit for bit.
    let mut means: Vec<(f64, f64)> = d.ratios.iter().map(|(p, m)| (*p, mean_rmse(m))).collect();
    means.push((1.0, mean_rmse(&d.lstm)));
    let end = means[0].1.min(means[4].1);
    let ok = means[1..4].iter().all(|m| m.1 < end);
    check(
        ok,
        format!(
            "mean RMSE by p: {}",
            means.iter().map(|(p, m)| format!("{p}={m:.4}")).collect::<Vec<_>>().join(" ")
        ),
    )
}

fn c8_convergence(d: &Directional) -> Outcome {
    let esa = &d.ratios.iter().find(|r| r.0 == 0.3).unwrap().1;
    let goal = d.lstm.final_val_rmse();
    let lstm_t = d.lstm.seconds_to_reach(goal).unwrap();
    let esa_t = esa.seconds_to_reach(goal);
    let ratio = esa_t.map_or(f64::INFINITY, |t| t / lstm_t);
    check(
        ratio < 1.0,
        format!(
            "lstm final val {goal:.4}: lstm reaches it in {lstm_t:.1}s, esa p=0.3 in {}; ratio {ratio:.3}",
            esa_t.map_or("never".to_string(), |t| format!("{t:.1}s"))
        ),
    )
}

fn run_cli(args: &[&str], out: &Path) {
    let o = Command::new(env!("CARGO_BIN_EXE_esa-lstm"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

/// Every output file of a command directory, with timing columns and files removed.
fn non_timing_outputs(dir: &Path) -> Vec<(String, String)> {
    let mut files: Vec<(String, String)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
        .filter(|(n, _)| !n.contains("time") && n != "bench.txt" && n != "compare.txt")
        .map(|(n, text)| {
            let text = match n.as_str() {
                "history.csv" => text.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string() + "\n").collect(),
                "run.cfg" => text.lines().filter(|l| !l.starts_with("out_dir")).map(|l| l.to_string() + "\n").collect(),
                _ => text,
            };
            (n, text)
        })
        .collect();
    files.sort();
    files
}

fn c9_determinism(dir: &Path) -> Outcome {
    let tiny = [
        "--seed", "11", "--set", "synth_samples=160", "--set", "window_len=16", "--set", "hidden_dim=8",
        "--set", "epochs=2", "--set", "samples_per_epoch=48", "--set", "train_stride=2", "--set", "eval_stride=4",
    ];
    let with = |cmd: &[&'static str]| -> Vec<&'static str> { cmd.iter().chain(tiny.iter()).copied().collect() };
    let mut compared = Vec::new();
    let mut differ = Vec::new();
    for (name, args) in [
        ("gen-data", with(&["gen-data"])),
        ("train", with(&["train"])),
        ("compare", with(&["compare", "--targets", "res,den"])),
        ("ablate", with(&["ablate", "--axis", "ratio"])),
        ("bench", with(&["bench", "--set", "bench_epochs=1", "--set", "samples_per_epoch=4"])),
    ] {
        let a = dir.join(format!("{name}-a"));
        let b = dir.join(format!("{name}-b"));
        run_cli(&args, &a);
        run_cli(&args, &b);
        let (oa, ob) = (non_timing_outputs(&a), non_timing_outputs(&b));
        if oa.is_empty() || oa != ob {
            differ.push(name);
        }
        compared.push(format!("{name}:{}", oa.len()));
    }
    let ckpt = dir.join("train-a").join("checkpoint.txt");
    let well = dir.join("gen-data-a").join("W01.csv");
    let mut preds = Vec::new();
    for k in 0..2 {
        let out = dir.join(format!("pred{k}.csv"));
        let o = Command::new(env!("CARGO_BIN_EXE_esa-lstm"))
            .arg("predict")
            .arg("--checkpoint")
            .arg(&ckpt)
            .arg("--well")
            .arg(&well)
            .arg("--output")
            .arg(&out)
            .output()
            .unwrap();
        assert!(o.status.success());
        preds.push((std::fs::read_to_string(&out).unwrap(), o.stdout));
    }
    if preds[0] != preds[1] {
        differ.push("predict");
    }
    compared.push("predict:1".into());
    check(
        differ.is_empty(),
        format!("files compared {}; differing: {differ:?}", compared.join(" ")),
    )
}

fn c10_data() -> Outcome {
    let mut failures = Vec::new();
    let wells = generate_synthetic(&SyntheticConfig::default()).unwrap();
    let inputs = default_inputs("res");
    for (n, l) in [(6001, 64), (100, 64), (64, 64), (500, 1), (300, 128)] {
        let mut log = wells[0].clone();
        for c in &mut log.curves {
            c.values.truncate(n);
            c.valid.truncate(n);
        }
        let ds = make_windows(&log, "res", &inputs, l, 1).unwrap();
        if ds.len() != n - l + 1 {
            failures.push(format!("windows N={n} L={l}: {}", ds.len()));
        }
    }

    let split = split_wells(&wells, 15, 5, 42).unwrap();
    let train_ids: Vec<&str> = split.train.iter().map(|w| w.well_id.as_str()).collect();
    let test_ids: Vec<&str> = split.test.iter().map(|(_, w)| w.well_id.as_str()).collect();
    let mut all: Vec<&str> = train_ids.iter().chain(&test_ids).copied().collect();
    all.sort_unstable();
    all.dedup();
    if train_ids.len() != 15 || test_ids.len() != 5 || all.len() != 20 {
        failures.push("split not a 15/5 partition".into());
    }
    let stats = fit_normalizer(&split.train).unwrap();
    if test_ids.iter().any(|id| stats.fitted_on(id)) {
        failures.push("test well in normalizer".into());
    }

    let mut norm_err = 0.0f64;
    for (_, w) in &split.test {
        let z = normalize(w, &stats).unwrap();
        for c in &z.curves {
            let back = denormalize(&c.values, &stats, &c.name).unwrap();
            let orig = &w.curve(&c.name).unwrap().values;
            for (a, b) in back.iter().zip(orig) {
                norm_err = norm_err.max((a - b).abs() / b.abs().max(1.0));
            }
        }
    }
    if norm_err > 1e-12 {
        failures.push(format!("normalization round trip {norm_err:.1e}"));
    }

    let mut csv_err = 0.0f64;
    for w in &wells[..3] {
        let mut buf = Vec::new();
        write_csv(w, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), &w.well_id, "memory").unwrap().log;
        for c in &w.curves {
            let b = back.curve(&c.name).unwrap();
            for (x, y) in c.values.iter().zip(&b.values) {
                csv_err = csv_err.max((x - y).abs());
            }
        }
        for k in [0, w.len() - 1] {
            csv_err = csv_err.max((w.depth(k) - back.depth(k)).abs());
        }
    }
    if csv_err > 1e-9 {
        failures.push(format!("csv round trip {csv_err:.1e}"));
    }
    check(
        failures.is_empty(),
        format!(
            "window counts, 15/5 split, normalization err {norm_err:.1e}, csv err {csv_err:.1e} {}",
            failures.join("; ")
        ),
    )
}

fn main() {
    // Positional numbers pick a subset of criteria; cargo's own flags are ignored.
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let (mut passed, mut failed) = (0, 0);
    let mut report = |n: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        if !only.is_empty() && !only.contains(&n) {
            return;
        }
        let t = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match res {
            Ok(d) => {
                passed += 1;
                println!("criterion {n:>2} {name}: PASS ({secs:.1}s) {d}")
            }
            Err(d) => {
                failed += 1;
                println!("criterion {n:>2} {name}: FAIL ({secs:.1}s) {d}")
            }
        }
    };
    let mut shared: Option<Directional> = None;
    report(1, "gradient correctness", &mut c1_gradients);
    report(2, "attention normalization", &mut c2_attention_rows);
    report(3, "degenerate equivalence", &mut c3_equivalence);
    report(4, "selection masking", &mut c4_mask);
    report(5, "selective cost", &mut || c5_cost(dir.path()));
    report(6, "model ordering", &mut || c6_ordering(shared.get_or_insert_with(train_directional)));
    report(7, "ablation trend", &mut || c7_ablation(shared.get_or_insert_with(train_directional)));
    report(8, "convergence speed", &mut || c8_convergence(shared.get_or_insert_with(train_directional)));
    report(9, "determinism", &mut || c9_determinism(dir.path()));
    report(10, "data pipeline", &mut c10_data);
    println!("{passed} passed, {failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
