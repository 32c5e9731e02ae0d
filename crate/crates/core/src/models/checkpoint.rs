//! Plain-text checkpoints.
//!
//! ```text
//! esa-lstm-checkpoint
//! format_version 1
//! config <key> <value>        one line per ModelConfig key
//! meta <key> <value...>       free-form metadata, value runs to end of line
//! param <name> <rows> <cols>
//! <rows·cols values, space separated, 17 significant digits>
//! end
//! ```

use std::collections::BTreeMap;
use std::fmt::Write;

use super::{Model, ModelConfig};
use crate::error::{Error, Result};
use crate::nn::HasParams;

pub const CHECKPOINT_MAGIC: &str = "esa-lstm-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn save_checkpoint(model: &Model, meta: &BTreeMap<String, String>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{CHECKPOINT_MAGIC}");
    let _ = writeln!(out, "format_version {CHECKPOINT_VERSION}");
    for (k, v) in model.config().to_pairs() {
        let _ = writeln!(out, "config {k} {v}");
    }
    for (k, v) in meta {
        let _ = writeln!(out, "meta {k} {v}");
    }
    for p in model.params() {
        let (r, c) = p.value.shape();
        let _ = writeln!(out, "param {} {r} {c}", p.name);
        let line: Vec<String> = p.value.as_slice().iter().map(|v| format!("{v:.16e}")).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out.push_str("end\n");
    out
}

pub fn load_checkpoint(text: &str) -> Result<(Model, BTreeMap<String, String>)> {
    let bad = |line: usize, msg: &str| Error::Format {
        path: "checkpoint".into(),
        msg: format!("line {line}: {msg}"),
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim() == CHECKPOINT_MAGIC => {}
        _ => return Err(bad(1, "missing checkpoint header")),
    }
    match lines.next() {
        Some((n, l)) => {
            let v = l.strip_prefix("format_version ").ok_or_else(|| bad(n, "missing format_version"))?;
            if v.trim() != CHECKPOINT_VERSION.to_string() {
                return Err(bad(n, &format!("unsupported format version {v}")));
            }
        }
        None => return Err(bad(2, "truncated")),
    }

    let mut config = ModelConfig::default();
    let mut meta = BTreeMap::new();
    let mut values: BTreeMap<String, (usize, usize, Vec<f64>)> = BTreeMap::new();
    let mut ended = false;
    while let Some((n, line)) = lines.next() {
        let (tag, rest) = line.split_once(' ').unwrap_or((line, ""));
        match tag {
            "config" => {
                let (k, v) = rest.split_once(' ').ok_or_else(|| bad(n, "malformed config line"))?;
                if !config.set(k, v)? {
                    return Err(bad(n, &format!("unknown config key `{k}`")));
                }
            }
            "meta" => {
                let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                meta.insert(k.to_string(), v.to_string());
            }
            "param" => {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                let [name, r, c] = parts[..] else {
                    return Err(bad(n, "malformed param header"));
                };
                let r: usize = r.parse().map_err(|_| bad(n, "bad row count"))?;
                let c: usize = c.parse().map_err(|_| bad(n, "bad column count"))?;
                let (vn, vline) = lines.next().ok_or_else(|| bad(n, "missing values"))?;
                let vals = vline
                    .split_whitespace()
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| bad(vn, "unparsable value"))?;
                if vals.len() != r * c {
                    return Err(bad(vn, &format!("expected {} values, got {}", r * c, vals.len())));
                }
                values.insert(name.to_string(), (r, c, vals));
            }
            "end" => {
                ended = true;
                break;
            }
            "" => {}
            other => return Err(bad(n, &format!("unexpected record `{other}`"))),
        }
    }
    if !ended {
        return Err(bad(0, "missing end marker"));
    }

    let mut model = Model::new(config)?;
    for p in model.params_mut() {
        let (r, c, vals) = values.remove(&p.name).ok_or_else(|| Error::Format {
            path: "checkpoint".into(),
            msg: format!("missing parameter {}", p.name),
        })?;
        if (r, c) != p.value.shape() {
            return Err(Error::dim("checkpoint parameter", (r, c), p.value.shape()));
        }
        p.value.as_mut_slice().copy_from_slice(&vals);
    }
    if let Some(extra) = values.keys().next() {
        return Err(Error::Format {
            path: "checkpoint".into(),
            msg: format!("unexpected parameter {extra}"),
        });
    }
    Ok((model, meta))
}
