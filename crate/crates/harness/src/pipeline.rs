use std::path::Path;

use esa_core::data::{
    fit_normalizer, generate_synthetic, load_csv, make_windows, normalize, split_wells, NormStats,
    WellLog, WindowDataset,
};
use esa_core::nn::layer_rng;
use rand::seq::SliceRandom;

use crate::config::RunConfig;
use crate::error::{HarnessError, Result};

/// Loads every `*.csv` in `dir`, sorted by file name.
pub fn load_well_dir(dir: &Path) -> Result<(Vec<WellLog>, Vec<String>)> {
    let entries = std::fs::read_dir(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| HarnessError::io(dir, e))?.path();
        if path.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")) {
            paths.push(path);
        }
    }
    paths.sort();
    let mut wells = Vec::with_capacity(paths.len());
    let mut warnings = Vec::new();
    for p in paths {
        let loaded = load_csv(&p)?;
        warnings.extend(loaded.warnings.into_iter().map(|w| format!("{}: {w}", p.display())));
        wells.push(loaded.log);
    }
    Ok((wells, warnings))
}

/// Wells from `data_dir` when set, otherwise the seeded synthetic set.
pub fn load_wells(run: &RunConfig) -> Result<Vec<WellLog>> {
    match &run.data_dir {
        Some(dir) => {
            let (wells, warnings) = load_well_dir(dir)?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            Ok(wells)
        }
        None => Ok(generate_synthetic(&run.synthetic())?),
    }
}

/// Normalized, windowed data for one target channel.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub target: String,
    pub inputs: Vec<String>,
    pub stats: NormStats,
    pub train: WindowDataset,
    pub val: WindowDataset,
    /// Labelled test wells (A, B, ...).
    pub test: Vec<(String, WindowDataset)>,
}

impl Prepared {
    pub fn target_std(&self) -> f64 {
        self.stats.std_of(&self.target).unwrap_or(1.0)
    }
}

/// Splits wells, fits normalization on the training wells only, windows
/// every well and holds out a seeded fraction of training windows for
/// validation.
pub fn prepare(run: &RunConfig, wells: &[WellLog]) -> Result<Prepared> {
    let inputs = run.input_channels();
    let target = run.target.clone();
    let l = run.model.window_len;
    let split = split_wells(wells, run.n_train, run.n_test, run.seed)?;
    let stats = fit_normalizer(&split.train)?;
    let mut all = WindowDataset::empty(&target, &inputs, l);
    for w in &split.train {
        let z = normalize(w, &stats)?;
        all.extend(make_windows(&z, &target, &inputs, l, run.train_stride)?)?;
    }
    if all.len() < 2 {
        return Err(HarnessError::Config(format!(
            "only {} training windows of length {l}",
            all.len()
        )));
    }
    let mut order: Vec<usize> = (0..all.len()).collect();
    order.shuffle(&mut layer_rng(run.seed, "validation"));
    let n_val = ((all.len() as f64 * run.val_fraction).ceil() as usize).clamp(1, all.len() - 1);
    let mut val_idx = order[..n_val].to_vec();
    let mut train_idx = order[n_val..].to_vec();
    val_idx.sort_unstable();
    train_idx.sort_unstable();
    let val = all.subset(&val_idx)?;
    let train = all.subset(&train_idx)?;
    let mut test = Vec::with_capacity(split.test.len());
    for (label, w) in &split.test {
        let z = normalize(w, &stats)?;
        test.push((label.clone(), make_windows(&z, &target, &inputs, l, run.eval_stride)?));
    }
    Ok(Prepared {
        target,
        inputs,
        stats,
        train,
        val,
        test,
    })
}
