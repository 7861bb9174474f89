//! `--set key=value` overrides applied to a parsed JSON document.

use anyhow::{anyhow, bail, Context, Result};
use serde_json::Value;

/// Splits `a.b.c=value`; the value is parsed as JSON when possible and kept
/// as a string otherwise.
pub fn parse(arg: &str) -> Result<(Vec<String>, Value)> {
    let (key, raw) = arg
        .split_once('=')
        .ok_or_else(|| anyhow!("override `{arg}` is not of the form key=value"))?;
    let path: Vec<String> = key.split('.').map(str::to_owned).collect();
    if path.iter().any(String::is_empty) {
        bail!("override key `{key}` has an empty segment");
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
    Ok((path, value))
}

/// Writes `value` at `path`, creating missing objects on the way. Numeric
/// segments index into existing arrays. Unknown keys are caught later when
/// the document is deserialized with its strict schema.
pub fn apply(doc: &mut Value, path: &[String], value: Value) -> Result<()> {
    let mut cur = doc;
    for (depth, seg) in path.iter().enumerate() {
        let last = depth + 1 == path.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(seg.clone(), value);
                    return Ok(());
                }
                map.entry(seg.clone())
                    .or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = seg
                    .parse()
                    .with_context(|| format!("`{seg}` is not an array index"))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| anyhow!("index {idx} out of range for array of length {len}"))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => bail!("cannot descend into `{}`: not an object or array", path[..depth].join(".")),
        };
    }
    Ok(())
}

pub fn apply_all(doc: &mut Value, args: &[String]) -> Result<()> {
    for arg in args {
        let (path, value) = parse(arg)?;
        apply(doc, &path, value).with_context(|| format!("applying override `{arg}`"))?;
    }
    Ok(())
}
