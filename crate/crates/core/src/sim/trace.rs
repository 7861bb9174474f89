//! Per-tick trace records, their CSV form and the run summary.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

pub const TRACE_HEADER: &str = "t,agent,px,py,pz,phx,phy,phz,vhx,vhy,vhz,lam7_hat,lam7_true,lam8_true,pos_err,e_lambda,n_edges,clamped,breach";

/// State of the whole team after one control tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub p: Vec<Vector3<f64>>,
    pub p_hat: Vec<Vector3<f64>>,
    pub v_hat: Vec<Vector3<f64>>,
    pub lambda7_hat: Vec<f64>,
    pub lambda7: f64,
    pub lambda8: f64,
    /// `‖p_i - p_c - p̂_i‖` per agent.
    pub pos_err: Vec<f64>,
    /// `Σ_i |λ₇ - λ̂₇ᵢ| / n`.
    pub e_lambda: f64,
    pub n_edges: usize,
    pub clamped: Vec<bool>,
    /// Per-agent shortfall below `l_min` to the nearest agent or obstacle.
    pub breach: Vec<f64>,
}

impl TraceRecord {
    pub fn max_breach(&self) -> f64 {
        self.breach.iter().copied().fold(0.0, f64::max)
    }

    pub fn v_hat_norm(&self) -> f64 {
        self.v_hat.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt()
    }
}

fn f(x: f64) -> String {
    format!("{x:.8e}")
}

/// Append-only sequence of tick records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn push(&mut self, r: TraceRecord) {
        self.records.push(r);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Writes one row per (tick, agent), floats with 9 significant digits.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "{TRACE_HEADER}")?;
        for r in &self.records {
            for i in 0..r.p.len() {
                let (p, ph, vh) = (r.p[i], r.p_hat[i], r.v_hat[i]);
                let cols = [
                    f(r.t),
                    i.to_string(),
                    f(p.x),
                    f(p.y),
                    f(p.z),
                    f(ph.x),
                    f(ph.y),
                    f(ph.z),
                    f(vh.x),
                    f(vh.y),
                    f(vh.z),
                    f(r.lambda7_hat[i]),
                    f(r.lambda7),
                    f(r.lambda8),
                    f(r.pos_err[i]),
                    f(r.e_lambda),
                    r.n_edges.to_string(),
                    u8::from(r.clamped[i]).to_string(),
                    f(r.breach[i]),
                ];
                writeln!(out, "{}", cols.join(","))?;
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("trace CSV is ASCII")
    }
}

/// Aggregate view of a run, written next to the trace as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub ticks: usize,
    pub duration: f64,
    pub lambda_min: f64,
    /// Smallest true `λ₇` from the end of the warm-up window on.
    pub min_lambda7_after_warmup: Option<f64>,
    pub ticks_below_min: usize,
    /// Number of separate runs of ticks below `lambda_min`.
    pub spikes: usize,
    pub longest_run_below_min: usize,
    /// Every excursion below `lambda_min` lasts one tick and there are at
    /// most `spike_tolerance` of them.
    pub lambda_ok: bool,
    pub mean_e_lambda: f64,
    pub mean_e_lambda_after_warmup: Option<f64>,
    pub final_pos_err: Vec<f64>,
    pub max_final_pos_err: f64,
    pub edge_count_histogram: BTreeMap<usize, usize>,
    pub edge_count_min: usize,
    pub edge_count_max: usize,
    pub max_breach: f64,
    /// Ticks whose largest breach exceeds the tolerance.
    pub breach_ticks: usize,
    pub longest_breach_run: usize,
    pub clamp_events: usize,
    pub vhat_bound_trips: usize,
    pub locality_reads: usize,
    pub locality_violations: usize,
    /// Estimator and controller errors recorded during the run, by kind.
    pub events: BTreeMap<String, usize>,
}

/// Lengths of the maximal runs of `true` in `flags`.
pub fn runs(flags: impl IntoIterator<Item = bool>) -> Vec<usize> {
    let mut out = Vec::new();
    let mut cur = 0;
    for b in flags {
        if b {
            cur += 1;
        } else if cur > 0 {
            out.push(cur);
            cur = 0;
        }
    }
    if cur > 0 {
        out.push(cur);
    }
    out
}
