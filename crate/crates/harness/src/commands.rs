use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::{Path, PathBuf};

use esa_core::data::{
    denormalize, generate_synthetic, load_csv, make_prediction_windows, normalize, save_csv,
    NormStats, WellLog,
};
use esa_core::models::{load_checkpoint, save_checkpoint, Arch, ModelConfig};
use esa_core::select::SelectConfig;

use crate::config::RunConfig;
use crate::error::{write_file, HarnessError, Result};
use crate::metrics::{rmse, MetricsReport};
use crate::pipeline::{load_wells, prepare, Prepared};
use crate::table;
use crate::train::{checkpoint_meta, predict_dataset, train_model};

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

/// Writes the seeded synthetic wells as `W01.csv`, `W02.csv`, ...
pub fn cmd_gen_data(run: &RunConfig) -> Result<Vec<PathBuf>> {
    ensure_dir(&run.out_dir)?;
    let wells = generate_synthetic(&run.synthetic())?;
    let mut paths = Vec::with_capacity(wells.len());
    for w in &wells {
        let path = run.out_dir.join(format!("{}.csv", w.well_id));
        save_csv(w, &path)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Trains one model and writes `run.cfg`, `checkpoint.txt`, `history.csv`,
/// `lstm_steps.csv` and `metrics.csv` under the output directory.
pub fn cmd_train(run: &RunConfig) -> Result<MetricsReport> {
    run.validate()?;
    ensure_dir(&run.out_dir)?;
    write_file(&run.out_dir.join("run.cfg"), &run.to_text())?;
    let wells = load_wells(run)?;
    let data = prepare(run, &wells)?;
    let out = train_model(run, &run.model, &data, |h| {
        eprintln!(
            "epoch {:>4}  train_loss {:.6}  val_rmse {:.6}  {:.2}s",
            h.epoch, h.train_loss, h.val_rmse, h.seconds
        )
    })?;
    let mut meta = checkpoint_meta(&data);
    meta.insert("best_epoch".into(), out.report.best_epoch.to_string());
    write_file(&run.out_dir.join("checkpoint.txt"), &save_checkpoint(&out.best, &meta))?;
    write_file(&run.out_dir.join("history.csv"), &out.report.history_csv())?;
    write_file(&run.out_dir.join("lstm_steps.csv"), &out.report.steps_csv())?;
    write_file(&run.out_dir.join("metrics.csv"), &out.report.metrics_csv())?;
    match out.diverged_at {
        Some(epoch) => Err(HarnessError::Diverged { epoch }),
        None => Ok(out.report),
    }
}

fn meta_stats(meta: &BTreeMap<String, String>, channels: &[String]) -> Result<NormStats> {
    let get = |k: String| -> Result<f64> {
        meta.get(&k)
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| HarnessError::Config(format!("checkpoint lacks `{k}`")))
    };
    let mut mean = Vec::new();
    let mut std = Vec::new();
    for ch in channels {
        mean.push(get(format!("norm.{ch}.mean"))?);
        std.push(get(format!("norm.{ch}.std"))?);
    }
    Ok(NormStats {
        channels: channels.to_vec(),
        mean,
        std,
        source_wells: meta
            .get("norm.source_wells")
            .map(|s| s.split(',').map(String::from).collect())
            .unwrap_or_default(),
    })
}

/// Result of [`cmd_predict`]: the CSV text and the RMSE when actuals exist.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub csv: String,
    pub rmse: Option<f64>,
    pub rows: usize,
}

/// Predicts `target` at every depth of `log` that has a full window of inputs.
pub fn predict_log(checkpoint_text: &str, log: &WellLog, target: Option<&str>) -> Result<Prediction> {
    let (mut model, meta) = load_checkpoint(checkpoint_text)?;
    let trained_target = meta
        .get("target")
        .cloned()
        .ok_or_else(|| HarnessError::Config("checkpoint lacks `target`".into()))?;
    if let Some(t) = target {
        if t != trained_target {
            return Err(HarnessError::Config(format!(
                "checkpoint predicts `{trained_target}`, not `{t}`"
            )));
        }
    }
    let inputs: Vec<String> = meta
        .get("inputs")
        .map(|s| s.split(',').map(String::from).collect())
        .unwrap_or_default();
    let mut channels = inputs.clone();
    channels.push(trained_target.clone());
    let stats = meta_stats(&meta, &channels)?;
    for ch in &inputs {
        log.require(ch)?;
    }
    let l = model.config().window_len;
    if log.len() < l {
        return Err(HarnessError::Config(format!(
            "well {} has {} samples, fewer than the window length L={l}",
            log.well_id,
            log.len()
        )));
    }
    let z = normalize(log, &stats)?;
    let ds = make_prediction_windows(&z, &trained_target, &inputs, l)?;
    let (p, _) = predict_dataset(&mut model, &ds)?;
    let pred = denormalize(&p, &stats, &trained_target)?;
    let actual_curve = log.curve(&trained_target);
    let mut csv = String::from("depth,actual,predicted,abs_error\n");
    let (mut sp, mut sa) = (Vec::new(), Vec::new());
    for (i, p) in pred.iter().enumerate() {
        let k = ds.end_index(i)?;
        let depth = ds.depth(i)?;
        match actual_curve.filter(|c| c.valid[k]).map(|c| c.values[k]) {
            Some(a) => {
                let _ = writeln!(csv, "{depth:.4},{a},{p:.9},{:.9}", (p - a).abs());
                sp.push(*p);
                sa.push(a);
            }
            None => {
                let _ = writeln!(csv, "{depth:.4},,{p:.9},");
            }
        }
    }
    let rmse = if sp.is_empty() { None } else { Some(rmse(&sp, &sa)?) };
    Ok(Prediction {
        csv,
        rmse,
        rows: pred.len(),
    })
}

pub fn cmd_predict(checkpoint: &Path, well_csv: &Path, target: Option<&str>, out: &Path) -> Result<Prediction> {
    let text = std::fs::read_to_string(checkpoint).map_err(|e| HarnessError::io(checkpoint, e))?;
    let loaded = load_csv(well_csv)?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    let pred = predict_log(&text, &loaded.log, target)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    write_file(out, &pred.csv)?;
    Ok(pred)
}

/// Baseline line-up: FCNN-4, FCNN-8, LSTM, cascaded LSTM, ESA-LSTM.
pub fn compare_models(base: &ModelConfig) -> Vec<ModelConfig> {
    let with = |arch, depth| ModelConfig {
        arch,
        fcnn_depth: depth,
        ..base.clone()
    };
    vec![
        with(Arch::Fcnn, 4),
        with(Arch::Fcnn, 8),
        with(Arch::Lstm, base.fcnn_depth),
        with(Arch::CascadedLstm, base.fcnn_depth),
        with(Arch::EsaLstm, base.fcnn_depth),
    ]
}

fn fmt_cell(r: &Result<MetricsReport>, f: impl Fn(&MetricsReport) -> f64) -> String {
    match r {
        Ok(m) => format!("{:.4}", f(m)),
        Err(_) => "FAIL".into(),
    }
}

/// One training run per cell; a failed cell is reported and counted.
fn run_cell(run: &RunConfig, cfg: &ModelConfig, data: &Prepared, name: &str) -> Result<MetricsReport> {
    eprintln!("cell {name}");
    let out = train_model(run, cfg, data, |_| {})?;
    match out.diverged_at {
        Some(epoch) => Err(HarnessError::Diverged { epoch }),
        None => Ok(out.report),
    }
}

pub struct CompareResult {
    pub models: Vec<String>,
    pub targets: Vec<String>,
    /// `cells[model][target]`.
    pub cells: Vec<Vec<Result<MetricsReport>>>,
    pub rmse_csv: String,
    pub time_csv: String,
    pub text: String,
}

impl CompareResult {
    pub fn failures(&self) -> usize {
        self.cells.iter().flatten().filter(|c| c.is_err()).count()
    }
}

/// Leave-one-channel-out synthesis for every baseline and target. Writes
/// `compare_rmse.csv`, `compare_time.csv` and `compare.txt`.
pub fn cmd_compare(run: &RunConfig, targets: &[String]) -> Result<CompareResult> {
    ensure_dir(&run.out_dir)?;
    write_file(&run.out_dir.join("run.cfg"), &run.to_text())?;
    let wells = load_wells(run)?;
    let models = compare_models(&run.model);
    let mut cells: Vec<Vec<Result<MetricsReport>>> = models.iter().map(|_| Vec::new()).collect();
    for t in targets {
        let trun = RunConfig {
            target: t.clone(),
            inputs: Vec::new(),
            ..run.clone()
        };
        let data = trun.validate().and_then(|_| prepare(&trun, &wells));
        for (m, cfg) in models.iter().enumerate() {
            let cell = match &data {
                Ok(d) => run_cell(&trun, cfg, d, &format!("{} / {t}", cfg.label())),
                Err(e) => Err(HarnessError::Config(e.to_string())),
            };
            cells[m].push(cell);
        }
    }
    let labels: Vec<String> = models.iter().map(ModelConfig::label).collect();
    let mut header = vec!["model".to_string()];
    header.extend(targets.iter().cloned());
    let rows: Vec<Vec<String>> = labels
        .iter()
        .zip(&cells)
        .map(|(l, row)| {
            let mut r = vec![l.clone()];
            r.extend(row.iter().map(|c| fmt_cell(c, |m| m.aggregate_rmse)));
            r
        })
        .collect();
    let time_rows: Vec<Vec<String>> = labels
        .iter()
        .zip(&cells)
        .map(|(l, row)| {
            let ok: Vec<f64> = row.iter().flatten().map(MetricsReport::mean_epoch_seconds).collect();
            let mean = if ok.is_empty() { f64::NAN } else { ok.iter().sum::<f64>() / ok.len() as f64 };
            vec![l.clone(), format!("{mean:.4}")]
        })
        .collect();
    let time_header = vec!["model".to_string(), "mean_epoch_seconds".to_string()];
    let rmse_csv = table::csv(&header, &rows);
    let time_csv = table::csv(&time_header, &time_rows);
    let esa = run.model.select;
    let text = format!(
        "RMSE by synthesized channel (esa_lstm p={} {})\n{}\n{}",
        esa.ratio,
        esa.mode.as_str(),
        table::render(&header, &rows),
        table::render(&time_header, &time_rows)
    );
    write_file(&run.out_dir.join("compare_rmse.csv"), &rmse_csv)?;
    write_file(&run.out_dir.join("compare_time.csv"), &time_csv)?;
    write_file(&run.out_dir.join("compare.txt"), &text)?;
    let res = CompareResult {
        models: labels,
        targets: targets.to_vec(),
        cells,
        rmse_csv,
        time_csv,
        text,
    };
    Ok(res)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AblationAxis {
    Neurons,
    Ratio,
}

impl std::str::FromStr for AblationAxis {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neurons" => Ok(AblationAxis::Neurons),
            "ratio" => Ok(AblationAxis::Ratio),
            o => Err(HarnessError::Config(format!("unknown axis `{o}` (neurons|ratio)"))),
        }
    }
}

impl AblationAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            AblationAxis::Neurons => "neurons",
            AblationAxis::Ratio => "ratio",
        }
    }

    pub fn values(self) -> Vec<f64> {
        match self {
            AblationAxis::Neurons => vec![10.0, 30.0, 50.0, 100.0],
            AblationAxis::Ratio => vec![0.0, 0.1, 0.3, 0.5, 1.0],
        }
    }

    pub fn apply(self, base: &ModelConfig, v: f64) -> ModelConfig {
        let mut cfg = ModelConfig {
            arch: Arch::EsaLstm,
            ..base.clone()
        };
        match self {
            AblationAxis::Neurons => cfg.hidden_dim = v as usize,
            AblationAxis::Ratio => {
                cfg.select = SelectConfig {
                    ratio: v,
                    ..cfg.select
                }
            }
        }
        cfg
    }
}

pub struct AblationResult {
    pub axis: AblationAxis,
    pub values: Vec<f64>,
    /// One report per axis value; every cell uses the run seed.
    pub cells: Vec<Result<MetricsReport>>,
    pub rmse_csv: String,
    pub time_csv: String,
    pub text: String,
}

impl AblationResult {
    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.is_err()).count()
    }

    /// `rmse[well][value]`, `NaN` for failed cells.
    pub fn grid(&self) -> Vec<Vec<f64>> {
        let n_wells = self
            .cells
            .iter()
            .flatten()
            .map(|m| m.per_well.len())
            .max()
            .unwrap_or(0);
        (0..n_wells)
            .map(|w| {
                self.cells
                    .iter()
                    .map(|c| c.as_ref().map_or(f64::NAN, |m| m.per_well[w].rmse))
                    .collect()
            })
            .collect()
    }
}

fn axis_label(axis: AblationAxis, v: f64) -> String {
    match axis {
        AblationAxis::Neurons => format!("{}", v as usize),
        AblationAxis::Ratio => format!("{v}"),
    }
}

/// ESA-LSTM sweep over one axis. Rows are test wells, columns axis values.
/// Writes `ablate_<axis>.csv`, `ablate_<axis>_time.csv`, `ablate_<axis>.txt`.
pub fn cmd_ablate(run: &RunConfig, axis: AblationAxis) -> Result<AblationResult> {
    run.validate()?;
    ensure_dir(&run.out_dir)?;
    write_file(&run.out_dir.join("run.cfg"), &run.to_text())?;
    let wells = load_wells(run)?;
    let data = prepare(run, &wells)?;
    let values = axis.values();
    let cells: Vec<Result<MetricsReport>> = values
        .iter()
        .map(|&v| {
            let cfg = axis.apply(&run.model, v);
            run_cell(run, &cfg, &data, &format!("{} = {}", axis.as_str(), axis_label(axis, v)))
        })
        .collect();
    let mut header = vec!["well".to_string()];
    header.extend(values.iter().map(|&v| axis_label(axis, v)));
    let labels: Vec<String> = data.test.iter().map(|(l, _)| l.clone()).collect();
    let mut rows: Vec<Vec<String>> = labels
        .iter()
        .enumerate()
        .map(|(w, l)| {
            let mut r = vec![l.clone()];
            r.extend(cells.iter().map(|c| fmt_cell(c, |m| m.per_well[w].rmse)));
            r
        })
        .collect();
    let mut mean = vec!["mean".to_string()];
    mean.extend(cells.iter().map(|c| {
        fmt_cell(c, |m| m.per_well.iter().map(|s| s.rmse).sum::<f64>() / m.per_well.len() as f64)
    }));
    rows.push(mean);
    let time_header = vec![axis.as_str().to_string(), "mean_epoch_seconds".to_string()];
    let time_rows: Vec<Vec<String>> = values
        .iter()
        .zip(&cells)
        .map(|(&v, c)| vec![axis_label(axis, v), fmt_cell(c, MetricsReport::mean_epoch_seconds)])
        .collect();
    let rmse_csv = table::csv(&header, &rows);
    let time_csv = table::csv(&time_header, &time_rows);
    let text = format!(
        "esa_lstm {} RMSE by test well (target {})\n{}",
        axis.as_str(),
        run.target,
        table::render(&header, &rows)
    );
    let stem = format!("ablate_{}", axis.as_str());
    write_file(&run.out_dir.join(format!("{stem}.csv")), &rmse_csv)?;
    write_file(&run.out_dir.join(format!("{stem}_time.csv")), &time_csv)?;
    write_file(&run.out_dir.join(format!("{stem}.txt")), &text)?;
    Ok(AblationResult {
        axis,
        values,
        cells,
        rmse_csv,
        time_csv,
        text,
    })
}

#[derive(Clone, Debug)]
pub struct BenchRow {
    pub label: String,
    pub ratio: f64,
    pub window_len: usize,
    pub steps_per_window: f64,
    pub epoch_seconds: Vec<f64>,
}

impl BenchRow {
    pub fn mean(&self) -> f64 {
        self.epoch_seconds.iter().sum::<f64>() / self.epoch_seconds.len() as f64
    }

    pub fn std(&self) -> f64 {
        let m = self.mean();
        let n = self.epoch_seconds.len() as f64;
        (self.epoch_seconds.iter().map(|s| (s - m).powi(2)).sum::<f64>() / n).sqrt()
    }
}

/// Bench line-up: vanilla LSTM, then ESA-LSTM at every ablation ratio above 0.
pub fn bench_models(base: &ModelConfig) -> Vec<ModelConfig> {
    let mut v = vec![ModelConfig {
        arch: Arch::Lstm,
        ..base.clone()
    }];
    for r in [0.1, 0.3, 0.5, 1.0] {
        v.push(AblationAxis::Ratio.apply(base, r));
    }
    v
}

/// Epoch timing after one warm-up epoch, over `max(bench_epochs, 5)` epochs.
/// Writes `bench_steps.csv` (deterministic) and `bench_time.csv`, `bench.txt`.
pub fn cmd_bench(run: &RunConfig) -> Result<Vec<BenchRow>> {
    run.validate()?;
    ensure_dir(&run.out_dir)?;
    let wells = load_wells(run)?;
    let data = prepare(run, &wells)?;
    let epochs = run.bench_epochs.max(5);
    let mut rows = Vec::new();
    for cfg in bench_models(&run.model) {
        let brun = RunConfig {
            epochs: epochs + 1,
            patience: 0,
            ..run.clone()
        };
        let out = train_model(&brun, &cfg, &data, |_| {})?;
        if let Some(epoch) = out.diverged_at {
            return Err(HarnessError::Diverged { epoch });
        }
        let h = &out.report.history;
        let per_epoch = match run.samples_per_epoch {
            0 => data.train.len(),
            n => n.min(data.train.len()),
        };
        let label = match cfg.arch {
            Arch::EsaLstm => format!("esa_lstm p={}", cfg.select.ratio),
            _ => cfg.label(),
        };
        rows.push(BenchRow {
            label,
            ratio: cfg.select.ratio,
            window_len: cfg.window_len,
            steps_per_window: h[0].lstm_steps as f64 / per_epoch as f64,
            epoch_seconds: h[1..].iter().map(|r| r.seconds).collect(),
        });
    }
    let steps_header: Vec<String> = ["model", "window_len", "lstm_steps_per_window"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let steps_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.label.clone(), r.window_len.to_string(), format!("{}", r.steps_per_window)])
        .collect();
    let time_header: Vec<String> = ["model", "epochs", "mean_seconds", "std_seconds"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let time_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.label.clone(),
                r.epoch_seconds.len().to_string(),
                format!("{:.4}", r.mean()),
                format!("{:.4}", r.std()),
            ]
        })
        .collect();
    write_file(&run.out_dir.join("bench_steps.csv"), &table::csv(&steps_header, &steps_rows))?;
    write_file(&run.out_dir.join("bench_time.csv"), &table::csv(&time_header, &time_rows))?;
    let text = format!(
        "{}\n{}",
        table::render(&steps_header, &steps_rows),
        table::render(&time_header, &time_rows)
    );
    write_file(&run.out_dir.join("bench.txt"), &text)?;
    Ok(rows)
}
