//! Distributed-versus-oracle comparison of a simulation trace.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

/// Relative eigenvalue error below which the estimate counts as settled.
pub const E_LAMBDA_BAND: f64 = 0.05;
/// Position-estimate error, in meters, below which it counts as settled.
pub const POS_ERR_BAND: f64 = 0.01;

const REQUIRED: [&str; 7] = [
    "t",
    "agent",
    "lam7_hat",
    "lam7_true",
    "pos_err",
    "e_lambda",
    "n_edges",
];

/// Per-tick series extracted from a trace.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Series {
    pub t: Vec<f64>,
    pub lambda7: Vec<f64>,
    pub e_lambda: Vec<f64>,
    /// `pos_err[tick][agent]`
    pub pos_err: Vec<Vec<f64>>,
    pub n_edges: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub max: f64,
    pub last: f64,
    /// First time from which the metric stays inside its band, if ever.
    pub settling_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    /// Trace rows per agent, the `t = 0` state included.
    pub samples: usize,
    pub agents: usize,
    /// `e_λ / λ₇`, band [`E_LAMBDA_BAND`].
    pub e_lambda_rel: MetricSummary,
    pub e_lambda: MetricSummary,
    /// Largest per-agent position error per tick, band [`POS_ERR_BAND`].
    pub pos_err: MetricSummary,
    /// Settling time is the time of the last topology change.
    pub n_edges: MetricSummary,
}

pub fn read_series(input: impl Read) -> Result<Series> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().context("reading trace header")?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let missing: Vec<&str> = REQUIRED.iter().copied().filter(|c| col(c).is_none()).collect();
    if !missing.is_empty() {
        bail!("trace is missing columns: {}", missing.join(", "));
    }
    let idx: BTreeMap<&str, usize> = REQUIRED.iter().map(|&c| (c, col(c).unwrap())).collect();
    let mut s = Series::default();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("reading trace row {}", line + 2))?;
        let get = |c: &str| -> Result<f64> {
            let raw = rec.get(idx[c]).unwrap_or("");
            raw.trim()
                .parse()
                .with_context(|| format!("row {}: column {c} has `{raw}`", line + 2))
        };
        let t = get("t")?;
        let agent = get("agent")? as usize;
        if agent == 0 {
            s.t.push(t);
            s.lambda7.push(get("lam7_true")?);
            s.e_lambda.push(get("e_lambda")?);
            s.n_edges.push(get("n_edges")?);
            s.pos_err.push(Vec::new());
        }
        match s.pos_err.last_mut() {
            Some(row) if row.len() == agent => row.push(get("pos_err")?),
            _ => bail!("row {}: agent rows out of order", line + 2),
        }
    }
    if s.t.is_empty() {
        bail!("trace has no rows");
    }
    Ok(s)
}

fn summarize(t: &[f64], x: &[f64], in_band: impl Fn(usize, f64) -> bool) -> MetricSummary {
    let n = x.len() as f64;
    let mut settle = None;
    for k in (0..x.len()).rev() {
        if in_band(k, x[k]) {
            settle = Some(t[k]);
        } else {
            break;
        }
    }
    MetricSummary {
        mean: x.iter().sum::<f64>() / n,
        max: x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        last: *x.last().unwrap(),
        settling_time: settle,
    }
}

pub fn compare(s: &Series) -> Comparison {
    let rel: Vec<f64> = s
        .e_lambda
        .iter()
        .zip(&s.lambda7)
        .map(|(e, l)| e / l.abs().max(f64::MIN_POSITIVE))
        .collect();
    let pos_max: Vec<f64> = s
        .pos_err
        .iter()
        .map(|r| r.iter().copied().fold(0.0, f64::max))
        .collect();
    let last_edges = *s.n_edges.last().unwrap();
    Comparison {
        samples: s.t.len(),
        agents: s.pos_err[0].len(),
        e_lambda_rel: summarize(&s.t, &rel, |_, x| x <= E_LAMBDA_BAND),
        e_lambda: summarize(&s.t, &s.e_lambda, |k, x| x <= E_LAMBDA_BAND * s.lambda7[k].abs()),
        pos_err: summarize(&s.t, &pos_max, |_, x| x <= POS_ERR_BAND),
        n_edges: summarize(&s.t, &s.n_edges, |_, x| x == last_edges),
    }
}

/// Writes `e_lambda.csv`, `pos_err.csv` and `n_edges.csv` into `dir`.
pub fn write_series(s: &Series, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut w = csv::Writer::from_path(dir.join("e_lambda.csv"))?;
    w.write_record(["t", "e_lambda", "e_lambda_rel", "lam7_true"])?;
    for k in 0..s.t.len() {
        let rel = s.e_lambda[k] / s.lambda7[k].abs().max(f64::MIN_POSITIVE);
        w.write_record([s.t[k], s.e_lambda[k], rel, s.lambda7[k]].map(|x| format!("{x:.8e}")))?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("pos_err.csv"))?;
    let mut header = vec!["t".to_string()];
    header.extend((0..s.pos_err[0].len()).map(|i| format!("agent{i}")));
    w.write_record(&header)?;
    for k in 0..s.t.len() {
        let mut row = vec![format!("{:.8e}", s.t[k])];
        row.extend(s.pos_err[k].iter().map(|x| format!("{x:.8e}")));
        w.write_record(&row)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("n_edges.csv"))?;
    w.write_record(["t", "n_edges"])?;
    for k in 0..s.t.len() {
        w.write_record([format!("{:.8e}", s.t[k]), format!("{}", s.n_edges[k])])?;
    }
    w.flush()?;
    Ok(())
}
