use crate::error::{Error, Result};

/// Channel names recognised on ingest: resistivity (Ω·m), density (g/cm³),
/// natural gamma (API), caliper (mm), spontaneous potential (mV).
pub const KNOWN_CHANNELS: [&str; 5] = ["res", "den", "gr", "cal", "sp"];

/// The four channels of the leave-one-out synthesis experiments.
pub const EXPERIMENT_CHANNELS: [&str; 4] = ["res", "den", "gr", "cal"];

/// Physical unit of a known channel, for reports.
pub fn channel_unit(name: &str) -> &'static str {
    match name {
        "res" => "ohm.m",
        "den" => "g/cm3",
        "gr" => "API",
        "cal" => "mm",
        "sp" => "mV",
        _ => "",
    }
}

/// The experiment channels other than `target`, in canonical order.
pub fn default_inputs(target: &str) -> Vec<String> {
    EXPERIMENT_CHANNELS
        .iter()
        .filter(|c| **c != target)
        .map(|c| c.to_string())
        .collect()
}

/// One logged channel. Masked samples hold `NaN` and `valid == false`.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub name: String,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

impl Curve {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        let valid = values.iter().map(|v| v.is_finite()).collect();
        Curve {
            name: name.into(),
            values,
            valid,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn valid_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .zip(&self.valid)
            .filter(|(_, &ok)| ok)
            .map(|(&v, _)| v)
    }

    pub fn mask_at(&mut self, k: usize) {
        self.values[k] = f64::NAN;
        self.valid[k] = false;
    }
}

/// A depth-indexed multichannel log sampled every `dz` metres from
/// `depth_start`.
#[derive(Clone, Debug, PartialEq)]
pub struct WellLog {
    pub well_id: String,
    pub depth_start: f64,
    pub dz: f64,
    pub curves: Vec<Curve>,
}

impl WellLog {
    pub fn new(well_id: impl Into<String>, depth_start: f64, dz: f64, curves: Vec<Curve>) -> Result<Self> {
        let log = WellLog {
            well_id: well_id.into(),
            depth_start,
            dz,
            curves,
        };
        log.validate()?;
        Ok(log)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dz > 0.0) || !self.depth_start.is_finite() {
            return Err(Error::Data(format!(
                "well {}: sampling interval must be positive",
                self.well_id
            )));
        }
        let n = self.len();
        for c in &self.curves {
            if c.values.len() != n || c.valid.len() != n {
                return Err(Error::Data(format!(
                    "well {}: channel {} has {} samples, expected {n}",
                    self.well_id,
                    c.name,
                    c.values.len()
                )));
            }
            if c.values.iter().zip(&c.valid).any(|(v, &ok)| ok && !v.is_finite()) {
                return Err(Error::Data(format!(
                    "well {}: channel {} has a non-finite unmasked sample",
                    self.well_id, c.name
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.curves.first().map_or(0, Curve::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn depth(&self, k: usize) -> f64 {
        self.depth_start + k as f64 * self.dz
    }

    pub fn curve(&self, name: &str) -> Option<&Curve> {
        self.curves.iter().find(|c| c.name == name)
    }

    pub fn curve_mut(&mut self, name: &str) -> Option<&mut Curve> {
        self.curves.iter_mut().find(|c| c.name == name)
    }

    pub fn channel_names(&self) -> Vec<&str> {
        self.curves.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn require(&self, name: &str) -> Result<&Curve> {
        self.curve(name).ok_or_else(|| {
            Error::Data(format!("well {} has no `{name}` channel", self.well_id))
        })
    }
}
