use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::welllog::{Curve, WellLog, KNOWN_CHANNELS};
use crate::error::{Error, Result};

/// Largest allowed deviation of a depth from the regular grid, in metres.
pub const DEPTH_TOLERANCE: f64 = 1e-6;

/// A parsed log plus non-fatal findings (unknown channel names).
#[derive(Clone, Debug)]
pub struct LoadedLog {
    pub log: WellLog,
    pub warnings: Vec<String>,
}

/// Reads a `depth,<channel>...` CSV. Empty cells become masked samples;
/// the well id is the file stem.
pub fn load_csv(path: impl AsRef<Path>) -> Result<LoadedLog> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "well".into());
    read_csv(file, &id, &path.display().to_string())
}

pub fn read_csv(reader: impl std::io::Read, well_id: &str, source: &str) -> Result<LoadedLog> {
    let fmt = |msg: String| Error::Format {
        path: source.to_string(),
        msg,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| fmt(e.to_string()))?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    if headers.first().map(String::as_str) != Some("depth") {
        return Err(fmt("first column must be `depth`".into()));
    }
    if headers.len() < 3 {
        return Err(fmt("need a depth column and at least two channels".into()));
    }
    let warnings = headers[1..]
        .iter()
        .filter(|h| !KNOWN_CHANNELS.contains(&h.as_str()))
        .map(|h| format!("unknown channel `{h}` kept as-is"))
        .collect();

    let mut depths = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len() - 1];
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| fmt(format!("row {row}: {e}")))?;
        if rec.len() != headers.len() {
            return Err(fmt(format!("row {row}: expected {} fields", headers.len())));
        }
        let depth: f64 = rec[0]
            .parse()
            .map_err(|_| fmt(format!("row {row}: bad depth `{}`", &rec[0])))?;
        if let Some(&prev) = depths.last() {
            if depth <= prev {
                return Err(fmt(format!(
                    "row {row}: depth {depth} does not increase (previous {prev})"
                )));
            }
        }
        depths.push(depth);
        for (col, field) in columns.iter_mut().zip(rec.iter().skip(1)) {
            if field.is_empty() {
                col.push(f64::NAN);
            } else {
                let v: f64 = field
                    .parse()
                    .map_err(|_| fmt(format!("row {row}: bad value `{field}`")))?;
                col.push(if v.is_finite() { v } else { f64::NAN });
            }
        }
    }
    if depths.is_empty() {
        return Err(fmt("no data rows".into()));
    }
    let dz = if depths.len() > 1 {
        depths[1] - depths[0]
    } else {
        0.05
    };
    for (k, &d) in depths.iter().enumerate() {
        let expected = depths[0] + k as f64 * dz;
        if (d - expected).abs() > DEPTH_TOLERANCE {
            return Err(fmt(format!(
                "row {}: depth {d} is off the {dz} m grid (expected {expected})",
                k + 1
            )));
        }
    }
    let curves = headers[1..]
        .iter()
        .zip(columns)
        .map(|(name, values)| Curve::new(name.clone(), values))
        .collect();
    let log = WellLog::new(well_id, depths[0], dz, curves)?;
    Ok(LoadedLog { log, warnings })
}

/// Decimal places needed to print the depth grid exactly (at least 2).
fn depth_decimals(log: &WellLog) -> usize {
    (2..=9)
        .find(|&n| {
            let scale = 10f64.powi(n as i32);
            let ok = |v: f64| ((v * scale).round() - v * scale).abs() < 1e-6;
            ok(log.dz) && ok(log.depth_start)
        })
        .unwrap_or(9)
}

pub fn write_csv(log: &WellLog, mut out: impl Write) -> std::io::Result<()> {
    let names = log.channel_names().join(",");
    writeln!(out, "depth,{names}")?;
    let decimals = depth_decimals(log);
    for k in 0..log.len() {
        write!(out, "{:.*}", decimals, log.depth(k))?;
        for c in &log.curves {
            if c.valid[k] {
                write!(out, ",{}", c.values[k])?;
            } else {
                out.write_all(b",")?;
            }
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_csv(log: &WellLog, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_csv(log, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}
