use std::fmt::Write;

use crate::error::{HarnessError, Result};

pub fn rmse(pred: &[f64], actual: &[f64]) -> Result<f64> {
    if pred.len() != actual.len() {
        return Err(HarnessError::Config(format!(
            "rmse: {} predictions vs {} actuals",
            pred.len(),
            actual.len()
        )));
    }
    if pred.is_empty() {
        return Err(esa_core::Error::EmptyBatch.into());
    }
    let ss: f64 = pred.iter().zip(actual).map(|(p, a)| (p - a).powi(2)).sum();
    Ok((ss / pred.len() as f64).sqrt())
}

/// One row of the training history.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean squared error on normalized targets.
    pub train_loss: f64,
    /// Validation RMSE in physical units.
    pub val_rmse: f64,
    /// Wall-clock seconds spent on the epoch's parameter updates.
    pub seconds: f64,
    pub lstm_steps: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WellScore {
    pub label: String,
    pub well_id: String,
    pub rmse: f64,
    pub n: usize,
}

/// Outcome of one training run, RMSE in physical units.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsReport {
    pub model: String,
    pub target: String,
    pub per_well: Vec<WellScore>,
    /// RMSE over every test window pooled.
    pub aggregate_rmse: f64,
    pub initial_val_rmse: f64,
    pub best_val_rmse: f64,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
    pub train_seconds: f64,
}

impl MetricsReport {
    pub fn mean_epoch_seconds(&self) -> f64 {
        if self.history.is_empty() {
            0.0
        } else {
            self.history.iter().map(|h| h.seconds).sum::<f64>() / self.history.len() as f64
        }
    }

    pub fn final_val_rmse(&self) -> f64 {
        self.history.last().map_or(self.initial_val_rmse, |h| h.val_rmse)
    }

    /// Cumulative training seconds until validation RMSE first reaches
    /// `threshold`, if it does.
    pub fn seconds_to_reach(&self, threshold: f64) -> Option<f64> {
        let mut t = 0.0;
        for h in &self.history {
            t += h.seconds;
            if h.val_rmse <= threshold {
                return Some(t);
            }
        }
        None
    }

    pub fn history_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_rmse,seconds\n");
        for h in &self.history {
            let _ = writeln!(out, "{},{:.12e},{:.12e},{:.6}", h.epoch, h.train_loss, h.val_rmse, h.seconds);
        }
        out
    }

    pub fn steps_csv(&self) -> String {
        let mut out = String::from("epoch,lstm_steps\n");
        for h in &self.history {
            let _ = writeln!(out, "{},{}", h.epoch, h.lstm_steps);
        }
        out
    }

    pub fn metrics_csv(&self) -> String {
        let mut out = String::from("label,well_id,windows,rmse\n");
        for w in &self.per_well {
            let _ = writeln!(out, "{},{},{},{:.9}", w.label, w.well_id, w.n, w.rmse);
        }
        let n: usize = self.per_well.iter().map(|w| w.n).sum();
        let _ = writeln!(out, "all,,{n},{:.9}", self.aggregate_rmse);
        out
    }
}
