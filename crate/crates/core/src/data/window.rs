use super::welllog::WellLog;
use crate::error::{Error, Result};
use crate::nn::Matrix;

/// Input rows and target column of one well, stored once and shared by all
/// of its windows.
#[derive(Clone, Debug)]
struct WellBlock {
    well_id: String,
    depth_start: f64,
    dz: f64,
    /// Row-major `N x n_in`.
    inputs: Vec<f64>,
    /// `NaN` where the target is masked or absent.
    target: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Sample {
    block: usize,
    end: usize,
}

/// Sliding-window view of one or more wells: each sample is the
/// `L x n_in` input slice ending at a depth and the target at that depth.
#[derive(Clone, Debug)]
pub struct WindowDataset {
    input_channels: Vec<String>,
    target_channel: String,
    window_len: usize,
    blocks: Vec<WellBlock>,
    samples: Vec<Sample>,
    pub warnings: Vec<String>,
}

impl WindowDataset {
    pub fn empty(target: &str, inputs: &[String], window_len: usize) -> Self {
        WindowDataset {
            input_channels: inputs.to_vec(),
            target_channel: target.to_string(),
            window_len,
            blocks: Vec::new(),
            samples: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn input_channels(&self) -> &[String] {
        &self.input_channels
    }

    pub fn target_channel(&self) -> &str {
        &self.target_channel
    }

    fn sample(&self, i: usize) -> Result<(&WellBlock, usize)> {
        let s = self.samples.get(i).ok_or(Error::Bounds {
            index: i,
            len: self.samples.len(),
        })?;
        Ok((&self.blocks[s.block], s.end))
    }

    /// Raw row-major input values of window `i`.
    pub fn window_slice(&self, i: usize) -> Result<&[f64]> {
        let (b, end) = self.sample(i)?;
        let n_in = self.input_channels.len();
        Ok(&b.inputs[(end + 1 - self.window_len) * n_in..(end + 1) * n_in])
    }

    pub fn window(&self, i: usize) -> Result<Matrix> {
        Matrix::from_vec(
            self.window_len,
            self.input_channels.len(),
            self.window_slice(i)?.to_vec(),
        )
    }

    pub fn target(&self, i: usize) -> Result<Option<f64>> {
        let (b, end) = self.sample(i)?;
        let t = b.target[end];
        Ok(t.is_finite().then_some(t))
    }

    pub fn well_id(&self, i: usize) -> Result<&str> {
        Ok(&self.sample(i)?.0.well_id)
    }

    pub fn depth(&self, i: usize) -> Result<f64> {
        let (b, end) = self.sample(i)?;
        Ok(b.depth_start + end as f64 * b.dz)
    }

    /// Sample index within its well of the window's final row.
    pub fn end_index(&self, i: usize) -> Result<usize> {
        Ok(self.sample(i)?.1)
    }

    /// Distinct wells contributing at least one sample, in insertion order.
    pub fn wells(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for s in &self.samples {
            let id = self.blocks[s.block].well_id.as_str();
            if out.last() != Some(&id) && !out.contains(&id) {
                out.push(id);
            }
        }
        out
    }

    /// Appends another dataset with the same channel roles and window length.
    pub fn extend(&mut self, other: WindowDataset) -> Result<()> {
        if other.input_channels != self.input_channels
            || other.target_channel != self.target_channel
            || other.window_len != self.window_len
        {
            return Err(Error::Data("cannot merge datasets with different channel roles".into()));
        }
        let offset = self.blocks.len();
        self.blocks.extend(other.blocks);
        self.samples.extend(other.samples.into_iter().map(|s| Sample {
            block: s.block + offset,
            end: s.end,
        }));
        self.warnings.extend(other.warnings);
        Ok(())
    }

    /// A dataset over the chosen samples, sharing the same well data.
    pub fn subset(&self, indices: &[usize]) -> Result<WindowDataset> {
        let samples = indices
            .iter()
            .map(|&i| {
                self.samples.get(i).copied().ok_or(Error::Bounds {
                    index: i,
                    len: self.samples.len(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(WindowDataset {
            input_channels: self.input_channels.clone(),
            target_channel: self.target_channel.clone(),
            window_len: self.window_len,
            blocks: self.blocks.clone(),
            samples,
            warnings: Vec::new(),
        })
    }
}

fn check_roles(log: &WellLog, target: &str, inputs: &[String], window_len: usize) -> Result<()> {
    if window_len == 0 {
        return Err(Error::Config("window length must be at least 1".into()));
    }
    if inputs.is_empty() {
        return Err(Error::Config("no input channels".into()));
    }
    if inputs.iter().any(|c| c == target) {
        return Err(Error::Config(format!("target `{target}` is also an input")));
    }
    for c in inputs {
        log.require(c)?;
    }
    Ok(())
}

fn build(
    log: &WellLog,
    target: &str,
    inputs: &[String],
    window_len: usize,
    stride: usize,
    need_target: bool,
) -> Result<WindowDataset> {
    check_roles(log, target, inputs, window_len)?;
    if stride == 0 {
        return Err(Error::Config("stride must be at least 1".into()));
    }
    let n = log.len();
    let mut ds = WindowDataset::empty(target, inputs, window_len);
    if window_len > n {
        ds.warnings.push(format!(
            "well {}: {n} samples is shorter than window length L={window_len}; no windows",
            log.well_id
        ));
        return Ok(ds);
    }
    let curves: Vec<_> = inputs.iter().map(|c| log.require(c)).collect::<Result<_>>()?;
    let n_in = inputs.len();
    let mut values = vec![0.0; n * n_in];
    // prefix[k] = number of rows before k with any masked input.
    let mut prefix = vec![0usize; n + 1];
    for k in 0..n {
        let mut bad = false;
        for (j, c) in curves.iter().enumerate() {
            if c.valid[k] {
                values[k * n_in + j] = c.values[k];
            } else {
                bad = true;
            }
        }
        prefix[k + 1] = prefix[k] + bad as usize;
    }
    let target_vals: Vec<f64> = match log.curve(target) {
        Some(c) => c
            .values
            .iter()
            .zip(&c.valid)
            .map(|(&v, &ok)| if ok { v } else { f64::NAN })
            .collect(),
        None if need_target => return Err(log.require(target).unwrap_err()),
        None => vec![f64::NAN; n],
    };
    let mut end = window_len - 1;
    while end < n {
        let clean = prefix[end + 1] == prefix[end + 1 - window_len];
        if clean && (!need_target || target_vals[end].is_finite()) {
            ds.samples.push(Sample { block: 0, end });
        }
        end += stride;
    }
    ds.blocks.push(WellBlock {
        well_id: log.well_id.clone(),
        depth_start: log.depth_start,
        dz: log.dz,
        inputs: values,
        target: target_vals,
    });
    Ok(ds)
}

/// Supervised windows: every input row and the target must be unmasked.
pub fn make_windows(
    log: &WellLog,
    target: &str,
    inputs: &[String],
    window_len: usize,
    stride: usize,
) -> Result<WindowDataset> {
    build(log, target, inputs, window_len, stride, true)
}

/// Windows for inference at stride 1: inputs must be unmasked, the target
/// may be masked or absent from the log.
pub fn make_prediction_windows(
    log: &WellLog,
    target: &str,
    inputs: &[String],
    window_len: usize,
) -> Result<WindowDataset> {
    build(log, target, inputs, window_len, 1, false)
}
