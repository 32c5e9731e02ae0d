use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::welllog::{Curve, WellLog, KNOWN_CHANNELS};
use crate::error::{Error, Result};

/// Parameters of the layered-earth generator. Channel-indexed vectors follow
/// [`SyntheticConfig::channels`].
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub n_wells: usize,
    pub n_samples: usize,
    pub depth_start: f64,
    pub dz: f64,
    pub channels: Vec<String>,
    pub n_states: usize,
    /// Probability of staying in the current lithology from one sample to the next.
    pub persistence: f64,
    /// Explicit transition matrix; when absent it is built from `persistence`
    /// with uniform off-diagonal mass.
    pub transition: Option<Vec<Vec<f64>>>,
    /// `[state][channel]` mean response.
    pub state_means: Vec<Vec<f64>>,
    pub noise_scale: Vec<f64>,
    pub ar_coef: Vec<f64>,
    /// Vertical resolution of each tool in samples (centered moving average).
    pub tool_window: Vec<usize>,
    /// Per-well offset of every state mean, in units of the channel noise scale.
    pub well_jitter: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_wells: 20,
            n_samples: 6001,
            depth_start: 50.0,
            dz: 0.05,
            channels: KNOWN_CHANNELS.iter().map(|s| s.to_string()).collect(),
            n_states: 4,
            persistence: 0.98,
            transition: None,
            state_means: vec![
                vec![45.0, 2.20, 55.0, 216.0, -45.0],
                vec![28.0, 2.30, 70.0, 218.0, -32.0],
                vec![14.0, 2.42, 95.0, 224.0, -15.0],
                vec![6.0, 2.55, 125.0, 236.0, -3.0],
            ],
            noise_scale: vec![3.0, 0.025, 7.0, 2.5, 3.0],
            ar_coef: vec![0.7, 0.7, 0.6, 0.8, 0.9],
            tool_window: vec![15, 7, 9, 5, 25],
            well_jitter: 1.0,
            seed: 42,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_wells == 0 || self.n_samples == 0 {
            return bad("n_wells and n_samples must be positive".into());
        }
        if !(self.dz > 0.0) || !self.depth_start.is_finite() {
            return bad("dz must be positive and depth_start finite".into());
        }
        if self.n_states == 0 {
            return bad("n_states must be positive".into());
        }
        if !(self.persistence > 0.0 && self.persistence < 1.0) {
            return bad(format!("persistence {} outside (0, 1)", self.persistence));
        }
        let nc = self.channels.len();
        if nc == 0 {
            return bad("no channels".into());
        }
        if self.state_means.len() != self.n_states
            || self.state_means.iter().any(|m| m.len() != nc)
        {
            return bad(format!("state_means must be {} x {nc}", self.n_states));
        }
        if self.noise_scale.len() != nc || self.ar_coef.len() != nc || self.tool_window.len() != nc {
            return bad(format!("per-channel vectors must have length {nc}"));
        }
        if self.noise_scale.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return bad("noise scales must be finite and non-negative".into());
        }
        if self.ar_coef.iter().any(|a| !(a.abs() < 1.0)) {
            return bad("AR coefficients must lie in (-1, 1)".into());
        }
        if self.tool_window.iter().any(|&w| w == 0) {
            return bad("tool windows must be at least one sample".into());
        }
        if !(self.well_jitter >= 0.0) {
            return bad("well_jitter must be non-negative".into());
        }
        self.transition_matrix().map(|_| ())
    }

    pub fn transition_matrix(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.n_states;
        let m = match &self.transition {
            Some(m) => m.clone(),
            None if n == 1 => vec![vec![1.0]],
            None => {
                let off = (1.0 - self.persistence) / (n - 1) as f64;
                (0..n)
                    .map(|i| (0..n).map(|j| if i == j { self.persistence } else { off }).collect())
                    .collect()
            }
        };
        if m.len() != n || m.iter().any(|r| r.len() != n) {
            return Err(Error::Config(format!("transition matrix must be {n} x {n}")));
        }
        for (i, row) in m.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "degenerate transition matrix: row {i} sums to {sum}"
                )));
            }
        }
        Ok(m)
    }
}

/// FNV-style mix so each well's stream depends only on (seed, well index).
fn well_seed(seed: u64, well: usize) -> u64 {
    let mut h = seed ^ 0xcbf2_9ce4_8422_2325;
    for b in (well as u64).to_le_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn sample_next(rng: &mut ChaCha8Rng, row: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (j, p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    row.len() - 1
}

/// Centered moving average with the window shrunk at the edges.
fn boxcar(x: &[f64], width: usize) -> Vec<f64> {
    if width <= 1 {
        return x.to_vec();
    }
    let half = width / 2;
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..x.len())
        .map(|k| {
            let lo = k.saturating_sub(half);
            let hi = (k + half + 1).min(x.len());
            let run = &x[lo..hi];
            if run.iter().all(|v| *v == run[0]) {
                run[0]
            } else {
                (prefix[hi] - prefix[lo]) / (hi - lo) as f64
            }
        })
        .collect()
}

fn generate_well(cfg: &SyntheticConfig, trans: &[Vec<f64>], index: usize) -> Result<WellLog> {
    let mut rng = ChaCha8Rng::seed_from_u64(well_seed(cfg.seed, index));
    let n = cfg.n_samples;
    let mut states = Vec::with_capacity(n);
    let mut s = rng.gen_range(0..cfg.n_states);
    for _ in 0..n {
        states.push(s);
        s = sample_next(&mut rng, &trans[s]);
    }
    let mut curves = Vec::with_capacity(cfg.channels.len());
    for (c, name) in cfg.channels.iter().enumerate() {
        let scale = cfg.noise_scale[c];
        let offsets: Vec<f64> = (0..cfg.n_states)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                cfg.well_jitter * scale * z
            })
            .collect();
        let base: Vec<f64> = states
            .iter()
            .map(|&st| cfg.state_means[st][c] + offsets[st])
            .collect();
        let mut values = boxcar(&base, cfg.tool_window[c]);
        let phi = cfg.ar_coef[c];
        let innov = scale * (1.0 - phi * phi).sqrt();
        let mut e = 0.0;
        for (k, v) in values.iter_mut().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            e = if k == 0 { scale * z } else { phi * e + innov * z };
            *v += e;
        }
        curves.push(Curve::new(name.clone(), values));
    }
    WellLog::new(format!("W{:02}", index + 1), cfg.depth_start, cfg.dz, curves)
}

/// Generates `cfg.n_wells` logs. Each well is a pure function of the seed and
/// its index.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<Vec<WellLog>> {
    cfg.validate()?;
    let trans = cfg.transition_matrix()?;
    (0..cfg.n_wells).map(|i| generate_well(cfg, &trans, i)).collect()
}
