use std::collections::BTreeMap;
use std::time::Instant;

use esa_core::data::{denormalize, WindowDataset};
use esa_core::models::{build_model, Model, ModelConfig};
use esa_core::nn::{layer_rng, AdamConfig, AdamState, HasParams};
use rand::seq::SliceRandom;

use crate::config::RunConfig;
use crate::error::Result;
use crate::metrics::{rmse, EpochRecord, MetricsReport, WellScore};
use crate::pipeline::Prepared;

/// Normalized predictions and normalized targets of every sample.
pub fn predict_dataset(model: &mut Model, ds: &WindowDataset) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut pred = Vec::with_capacity(ds.len());
    let mut actual = Vec::with_capacity(ds.len());
    for i in 0..ds.len() {
        pred.push(model.forward(&ds.window(i)?)?);
        actual.push(ds.target(i)?.unwrap_or(f64::NAN));
    }
    Ok((pred, actual))
}

/// RMSE in physical units of the target channel.
pub fn physical_rmse(model: &mut Model, ds: &WindowDataset, data: &Prepared) -> Result<f64> {
    let (p, a) = predict_dataset(model, ds)?;
    let p = denormalize(&p, &data.stats, &data.target)?;
    let a = denormalize(&a, &data.stats, &data.target)?;
    rmse(&p, &a)
}

pub fn evaluate_test(model: &mut Model, data: &Prepared) -> Result<(Vec<WellScore>, f64)> {
    let mut scores = Vec::with_capacity(data.test.len());
    let (mut all_p, mut all_a) = (Vec::new(), Vec::new());
    for (label, ds) in &data.test {
        let (p, a) = predict_dataset(model, ds)?;
        let p = denormalize(&p, &data.stats, &data.target)?;
        let a = denormalize(&a, &data.stats, &data.target)?;
        scores.push(WellScore {
            label: label.clone(),
            well_id: ds.wells().first().map_or_else(String::new, |s| s.to_string()),
            rmse: rmse(&p, &a)?,
            n: p.len(),
        });
        all_p.extend(p);
        all_a.extend(a);
    }
    Ok((scores, rmse(&all_p, &all_a)?))
}

/// Metadata stored alongside a checkpoint so it can predict on raw logs.
pub fn checkpoint_meta(data: &Prepared) -> BTreeMap<String, String> {
    let mut meta = BTreeMap::new();
    meta.insert("target".into(), data.target.clone());
    meta.insert("inputs".into(), data.inputs.join(","));
    for (i, ch) in data.stats.channels.iter().enumerate() {
        meta.insert(format!("norm.{ch}.mean"), format!("{:.17e}", data.stats.mean[i]));
        meta.insert(format!("norm.{ch}.std"), format!("{:.17e}", data.stats.std[i]));
    }
    meta.insert("norm.source_wells".into(), data.stats.source_wells.join(","));
    meta
}

pub struct TrainOutcome {
    /// Parameters with the lowest validation RMSE seen.
    pub best: Model,
    pub report: MetricsReport,
    /// Epoch at which the loss became non-finite.
    pub diverged_at: Option<usize>,
}

/// Minibatch Adam on squared error with early stopping on validation RMSE.
/// `on_epoch` sees each history row as it is produced.
pub fn train_model(
    run: &RunConfig,
    cfg: &ModelConfig,
    data: &Prepared,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    for (_, ds) in &data.test {
        for well in ds.wells() {
            assert!(
                !data.stats.fitted_on(well),
                "test well {well} leaked into normalization"
            );
        }
    }
    let mut model = build_model(cfg)?;
    let mut adam = AdamState::new(AdamConfig {
        lr: run.lr,
        ..Default::default()
    });
    let mut rng = layer_rng(run.seed, "shuffle");
    let initial = physical_rmse(&mut model, &data.val, data)?;
    let mut best = model.clone();
    let mut report = MetricsReport {
        model: cfg.label(),
        target: data.target.clone(),
        initial_val_rmse: initial,
        best_val_rmse: initial,
        ..Default::default()
    };
    let mut since_best = 0;
    let mut diverged_at = None;
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let per_epoch = match run.samples_per_epoch {
        0 => order.len(),
        n => n.min(order.len()),
    };
    for epoch in 1..=run.epochs {
        order.shuffle(&mut rng);
        model.reset_lstm_steps();
        let start = Instant::now();
        let mut sse = 0.0;
        let mut finite = true;
        for batch in order[..per_epoch].chunks(run.batch_size) {
            let scale = 2.0 / batch.len() as f64;
            for &i in batch {
                let y = data.train.target(i)?.unwrap_or(f64::NAN);
                let err = model.forward(&data.train.window(i)?)? - y;
                if !err.is_finite() {
                    finite = false;
                    break;
                }
                sse += err * err;
                model.backward(scale * err)?;
            }
            if !finite {
                break;
            }
            adam.step(&mut model.params_mut())?;
            model.zero_grad();
        }
        let seconds = start.elapsed().as_secs_f64();
        let train_loss = sse / per_epoch as f64;
        if !finite || !train_loss.is_finite() {
            diverged_at = Some(epoch);
            break;
        }
        let lstm_steps = model.lstm_steps();
        let val_rmse = physical_rmse(&mut model, &data.val, data)?;
        if !val_rmse.is_finite() {
            diverged_at = Some(epoch);
            break;
        }
        let rec = EpochRecord {
            epoch,
            train_loss,
            val_rmse,
            seconds,
            lstm_steps,
        };
        on_epoch(&rec);
        report.history.push(rec);
        if val_rmse < report.best_val_rmse {
            report.best_val_rmse = val_rmse;
            report.best_epoch = epoch;
            best = model.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if run.patience > 0 && since_best >= run.patience {
                break;
            }
        }
    }
    report.train_seconds = report.history.iter().map(|h| h.seconds).sum();
    let (per_well, agg) = evaluate_test(&mut best, data)?;
    report.per_well = per_well;
    report.aggregate_rmse = agg;
    Ok(TrainOutcome {
        best,
        report,
        diverged_at,
    })
}
