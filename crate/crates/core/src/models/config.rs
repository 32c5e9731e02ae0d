use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::select::{RouteMode, SelectConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Arch {
    EsaLstm,
    Lstm,
    CascadedLstm,
    Fcnn,
}

impl Arch {
    pub fn as_str(self) -> &'static str {
        match self {
            Arch::EsaLstm => "esa_lstm",
            Arch::Lstm => "lstm",
            Arch::CascadedLstm => "cascaded_lstm",
            Arch::Fcnn => "fcnn",
        }
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "esa_lstm" | "esa-lstm" => Ok(Arch::EsaLstm),
            "lstm" => Ok(Arch::Lstm),
            "cascaded_lstm" | "cascaded-lstm" | "c-lstm" => Ok(Arch::CascadedLstm),
            "fcnn" => Ok(Arch::Fcnn),
            other => Err(Error::Config(format!("unknown architecture `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub arch: Arch,
    /// Width of the fully connected layers and of every LSTM.
    pub hidden_dim: usize,
    pub n_heads: usize,
    pub select: SelectConfig,
    /// Stacked LSTM layers for the cascaded baseline.
    pub lstm_layers: usize,
    /// Hidden layers of the FCNN baseline.
    pub fcnn_depth: usize,
    pub window_len: usize,
    pub n_input_channels: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            arch: Arch::EsaLstm,
            hidden_dim: 30,
            n_heads: 8,
            select: SelectConfig::default(),
            lstm_layers: 2,
            fcnn_depth: 4,
            window_len: 64,
            n_input_channels: 3,
            seed: 42,
        }
    }
}

/// Keys accepted by [`ModelConfig::set`], in serialization order.
pub const MODEL_KEYS: [&str; 10] = [
    "arch",
    "hidden_dim",
    "n_heads",
    "select_ratio",
    "select_mode",
    "lstm_layers",
    "fcnn_depth",
    "window_len",
    "n_input_channels",
    "seed",
];

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("hidden_dim", self.hidden_dim),
            ("n_heads", self.n_heads),
            ("lstm_layers", self.lstm_layers),
            ("fcnn_depth", self.fcnn_depth),
            ("window_len", self.window_len),
            ("n_input_channels", self.n_input_channels),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        self.select.validate()
    }

    /// Attention width: the smallest multiple of `n_heads` not below `hidden_dim`.
    pub fn attention_dim(&self) -> usize {
        self.hidden_dim.div_ceil(self.n_heads) * self.n_heads
    }

    /// Display label, e.g. `fcnn-4` or `esa_lstm`.
    pub fn label(&self) -> String {
        match self.arch {
            Arch::Fcnn => format!("fcnn-{}", self.fcnn_depth),
            a => a.as_str().to_string(),
        }
    }

    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let values = [
            self.arch.as_str().to_string(),
            self.hidden_dim.to_string(),
            self.n_heads.to_string(),
            format!("{}", self.select.ratio),
            self.select.mode.as_str().to_string(),
            self.lstm_layers.to_string(),
            self.fcnn_depth.to_string(),
            self.window_len.to_string(),
            self.n_input_channels.to_string(),
            self.seed.to_string(),
        ];
        MODEL_KEYS.iter().copied().zip(values).collect()
    }

    /// Sets one key. Returns `Ok(false)` for keys this type does not own.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad value `{v}` for `{key}`")))
        }
        match key {
            "arch" => self.arch = value.trim().parse()?,
            "hidden_dim" => self.hidden_dim = num(key, value)?,
            "n_heads" => self.n_heads = num(key, value)?,
            "select_ratio" => self.select.ratio = num(key, value)?,
            "select_mode" => self.select.mode = value.trim().parse::<RouteMode>()?,
            "lstm_layers" => self.lstm_layers = num(key, value)?,
            "fcnn_depth" => self.fcnn_depth = num(key, value)?,
            "window_len" => self.window_len = num(key, value)?,
            "n_input_channels" => self.n_input_channels = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_round_trip() {
        let cfg = ModelConfig {
            arch: Arch::CascadedLstm,
            hidden_dim: 17,
            select: SelectConfig::new(0.125, RouteMode::Gate).unwrap(),
            seed: u64::MAX,
            ..Default::default()
        };
        let mut back = ModelConfig::default();
        for (k, v) in cfg.to_pairs() {
            assert!(back.set(k, &v).unwrap());
        }
        assert_eq!(back, cfg);
        assert!(!back.set("epochs", "3").unwrap());
        assert!(back.set("arch", "rnn").is_err());
    }

    #[test]
    fn attention_width_rounds_up_to_head_multiple() {
        let cfg = ModelConfig::default();
        assert_eq!(cfg.attention_dim(), 32);
        for (h, want) in [(10, 16), (30, 32), (50, 56), (100, 104), (8, 8)] {
            let c = ModelConfig {
                hidden_dim: h,
                ..Default::default()
            };
            assert_eq!(c.attention_dim(), want);
        }
    }
}
