use super::welllog::WellLog;
use crate::error::{Error, Result};

/// Smallest standard deviation used for scaling.
pub const STD_FLOOR: f64 = 1e-8;

/// Per-channel z-score statistics and the wells they were fitted on.
#[derive(Clone, Debug, PartialEq)]
pub struct NormStats {
    pub channels: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub source_wells: Vec<String>,
}

impl NormStats {
    pub fn index(&self, channel: &str) -> Result<usize> {
        self.channels
            .iter()
            .position(|c| c == channel)
            .ok_or_else(|| Error::Data(format!("no normalization stats for `{channel}`")))
    }

    pub fn fitted_on(&self, well_id: &str) -> bool {
        self.source_wells.iter().any(|w| w == well_id)
    }

    pub fn mean_of(&self, channel: &str) -> Result<f64> {
        Ok(self.mean[self.index(channel)?])
    }

    pub fn std_of(&self, channel: &str) -> Result<f64> {
        Ok(self.std[self.index(channel)?])
    }
}

/// Fits population mean and standard deviation per channel over every
/// unmasked sample of `wells`. Channels are those of the first well; all
/// wells must carry them. A channel whose spread falls under the floor is
/// centred on its first value so constant data normalizes to exact zeros.
pub fn fit_normalizer(wells: &[WellLog]) -> Result<NormStats> {
    let first = wells.first().ok_or(Error::EmptyBatch)?;
    let channels: Vec<String> = first.channel_names().iter().map(|s| s.to_string()).collect();
    let mut mean = Vec::with_capacity(channels.len());
    let mut std = Vec::with_capacity(channels.len());
    for ch in &channels {
        let mut n = 0usize;
        let mut sum = 0.0;
        let mut first_val = None;
        for w in wells {
            for v in w.require(ch)?.valid_values() {
                first_val.get_or_insert(v);
                n += 1;
                sum += v;
            }
        }
        let Some(first_val) = first_val else {
            return Err(Error::Data(format!("channel `{ch}` has no valid samples")));
        };
        let mu = sum / n as f64;
        let mut ss = 0.0;
        for w in wells {
            for v in w.require(ch)?.valid_values() {
                ss += (v - mu).powi(2);
            }
        }
        let sd = (ss / n as f64).sqrt();
        if sd < STD_FLOOR {
            mean.push(first_val);
            std.push(STD_FLOOR);
        } else {
            mean.push(mu);
            std.push(sd);
        }
    }
    Ok(NormStats {
        channels,
        mean,
        std,
        source_wells: wells.iter().map(|w| w.well_id.clone()).collect(),
    })
}

/// Z-scores every channel present in `stats`; other channels are copied.
pub fn normalize(log: &WellLog, stats: &NormStats) -> Result<WellLog> {
    let mut out = log.clone();
    for curve in &mut out.curves {
        if let Ok(i) = stats.index(&curve.name) {
            let (m, s) = (stats.mean[i], stats.std[i]);
            for (v, &ok) in curve.values.iter_mut().zip(&curve.valid) {
                if ok {
                    *v = (*v - m) / s;
                }
            }
        }
    }
    Ok(out)
}

pub fn denormalize(values: &[f64], stats: &NormStats, channel: &str) -> Result<Vec<f64>> {
    let i = stats.index(channel)?;
    let (m, s) = (stats.mean[i], stats.std[i]);
    Ok(values.iter().map(|v| v * s + m).collect())
}
