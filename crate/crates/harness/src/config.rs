use std::fmt::Write;
use std::path::{Path, PathBuf};

use esa_core::data::{default_inputs, SyntheticConfig};
use esa_core::models::{ModelConfig, MODEL_KEYS};

use crate::error::{HarnessError, Result};

/// Everything needed to reproduce a run. Serialized as flat `key = value`
/// lines; `#` starts a comment.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    /// Directory of well CSVs; synthetic wells are generated when absent.
    pub data_dir: Option<PathBuf>,
    pub synth_wells: usize,
    pub synth_samples: usize,
    pub target: String,
    /// Input channels; empty means the experiment channels minus the target.
    pub inputs: Vec<String>,
    pub n_train: usize,
    pub n_test: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub patience: usize,
    pub val_fraction: f64,
    /// Training windows drawn per epoch; 0 uses every training window.
    pub samples_per_epoch: usize,
    /// Spacing of window end positions on training wells.
    pub train_stride: usize,
    /// Spacing of window end positions on test wells.
    pub eval_stride: usize,
    pub bench_epochs: usize,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelConfig::default(),
            data_dir: None,
            synth_wells: 20,
            synth_samples: 6001,
            target: "res".into(),
            inputs: Vec::new(),
            n_train: 15,
            n_test: 5,
            epochs: 100,
            batch_size: 32,
            lr: 1e-3,
            patience: 15,
            val_fraction: 0.1,
            samples_per_epoch: 0,
            train_stride: 1,
            eval_stride: 1,
            bench_epochs: 5,
            out_dir: PathBuf::from("out"),
            seed: 42,
        }
    }
}

pub const RUN_KEYS: [&str; 18] = [
    "data_dir",
    "synth_wells",
    "synth_samples",
    "target",
    "inputs",
    "n_train",
    "n_test",
    "epochs",
    "batch_size",
    "lr",
    "patience",
    "val_fraction",
    "samples_per_epoch",
    "train_stride",
    "eval_stride",
    "bench_epochs",
    "out_dir",
    "seed",
];

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| HarnessError::Config(format!("bad value `{v}` for `{key}`")))
}

impl RunConfig {
    pub fn input_channels(&self) -> Vec<String> {
        if self.inputs.is_empty() {
            default_inputs(&self.target)
        } else {
            self.inputs.clone()
        }
    }

    pub fn synthetic(&self) -> SyntheticConfig {
        SyntheticConfig {
            n_wells: self.synth_wells,
            n_samples: self.synth_samples,
            seed: self.seed,
            ..Default::default()
        }
    }

    /// Sets one key. `seed` also seeds the model.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "seed" => {
                self.seed = num(key, v)?;
                self.model.seed = self.seed;
            }
            "data_dir" => self.data_dir = (!v.is_empty()).then(|| PathBuf::from(v)),
            "synth_wells" => self.synth_wells = num(key, v)?,
            "synth_samples" => self.synth_samples = num(key, v)?,
            "target" => self.target = v.to_string(),
            "inputs" => {
                self.inputs = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            }
            "n_train" => self.n_train = num(key, v)?,
            "n_test" => self.n_test = num(key, v)?,
            "epochs" => self.epochs = num(key, v)?,
            "batch_size" => self.batch_size = num(key, v)?,
            "lr" => self.lr = num(key, v)?,
            "patience" => self.patience = num(key, v)?,
            "val_fraction" => self.val_fraction = num(key, v)?,
            "samples_per_epoch" => self.samples_per_epoch = num(key, v)?,
            "train_stride" => self.train_stride = num(key, v)?,
            "eval_stride" => self.eval_stride = num(key, v)?,
            "bench_epochs" => self.bench_epochs = num(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            _ => {
                if !self.model.set(key, v)? {
                    return Err(HarnessError::Config(format!("unknown key `{key}`")));
                }
            }
        }
        Ok(())
    }

    /// Applies `key = value` lines.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!("line {}: expected `key = value`", i + 1))
            })?;
            self.set(k.trim(), v)
                .map_err(|e| HarnessError::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let inputs = self.input_channels();
        if inputs.len() != self.model.n_input_channels {
            return Err(HarnessError::Config(format!(
                "{} input channels but n_input_channels = {}",
                inputs.len(),
                self.model.n_input_channels
            )));
        }
        if inputs.contains(&self.target) {
            return Err(HarnessError::Config(format!("target `{}` is also an input", self.target)));
        }
        if self.batch_size == 0 || self.train_stride == 0 || self.eval_stride == 0 {
            return Err(HarnessError::Config(
                "batch_size and strides must be at least 1".into(),
            ));
        }
        if !(self.lr > 0.0) || !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(HarnessError::Config("lr must be positive, val_fraction in (0, 1)".into()));
        }
        if self.model.seed != self.seed {
            return Err(HarnessError::Config("model seed differs from run seed".into()));
        }
        Ok(())
    }

    /// Serialized form; `RunConfig::default().apply_text(&c.to_text())`
    /// reproduces `c`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.model.to_pairs() {
            if k != "seed" {
                let _ = writeln!(out, "{k} = {v}");
            }
        }
        let data_dir = self
            .data_dir
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        let values = [
            data_dir,
            self.synth_wells.to_string(),
            self.synth_samples.to_string(),
            self.target.clone(),
            self.inputs.join(","),
            self.n_train.to_string(),
            self.n_test.to_string(),
            self.epochs.to_string(),
            self.batch_size.to_string(),
            format!("{}", self.lr),
            self.patience.to_string(),
            format!("{}", self.val_fraction),
            self.samples_per_epoch.to_string(),
            self.train_stride.to_string(),
            self.eval_stride.to_string(),
            self.bench_epochs.to_string(),
            self.out_dir.display().to_string(),
            self.seed.to_string(),
        ];
        for (k, v) in RUN_KEYS.iter().zip(values) {
            let _ = writeln!(out, "{k} = {v}");
        }
        debug_assert!(MODEL_KEYS.contains(&"seed"));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut c = RunConfig::default();
        c.set("arch", "fcnn").unwrap();
        c.set("seed", "9").unwrap();
        c.set("inputs", "den, gr ,cal").unwrap();
        c.set("data_dir", "/tmp/wells").unwrap();
        c.set("lr", "0.0005").unwrap();
        let mut back = RunConfig::default();
        back.apply_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.model.seed, 9);
    }

    #[test]
    fn comments_and_errors() {
        let mut c = RunConfig::default();
        c.apply_text("# header\nepochs = 3  # short\n\n").unwrap();
        assert_eq!(c.epochs, 3);
        assert!(c.apply_text("bogus = 1").unwrap_err().to_string().contains("line 1"));
        assert!(c.apply_text("epochs 3").is_err());
        assert!(c.apply_text("epochs = x").is_err());
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::default();
        c.validate().unwrap();
        c.target = "den".into();
        c.validate().unwrap();
        c.inputs = vec!["den".into(), "gr".into(), "cal".into()];
        assert!(c.validate().is_err());
    }
}
