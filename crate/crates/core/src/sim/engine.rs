//! Fixed-step closed loop: sensing, message rounds, estimation, control,
//! integration and centralized diagnostics.

use std::collections::BTreeMap;

use nalgebra::{DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::scenario::{NoiseParams, Scenario};
use super::trace::{runs, Summary, Trace, TraceRecord};
use crate::controller::{
    check_ready, control_velocity, exogenous_at, saturate, ControlOutput, NeighborTerm,
};
use crate::error::{Error, Result};
use crate::estimators::{
    select_anchors, AgentEstimator, AnchorPayload, AnchorRole, Bus, ConsensusView, LocalData,
    LocalityAudit, NeighborPacket, RigidityEstimatorState,
};
use crate::graph::{Graph, ObstacleSet, PositionMatrix};
use crate::rigidity::{rigidity_report, vertex_block, WeightedFramework, TAU_WEIGHT};
use crate::graph::segment_obstacle_distance;
use crate::weights::{weight_gradient, weighted_framework};

/// Slack allowed on the eigenvector-norm bound for Euler discretization.
pub const VHAT_BOUND_SLACK: f64 = 1e-3;

/// What one agent senses in a tick.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Measurement {
    /// `ℓ_ij` for every neighbor `j`.
    pub ranges: Vec<(usize, f64)>,
    /// `p_j - p_i` for every neighbor, filled in for the special agent only.
    pub relative: Vec<(usize, Vector3<f64>)>,
}

/// Positive-weight neighbor sets and weight rows of a weighted framework.
#[derive(Debug, Clone, PartialEq)]
pub struct Links {
    pub neighbors: Vec<Vec<usize>>,
    pub weights: Vec<Vec<(usize, f64)>>,
    pub n_edges: usize,
}

impl Links {
    pub fn from_framework(wf: &WeightedFramework) -> Self {
        let n = wf.n();
        let mut neighbors = vec![Vec::new(); n];
        let mut weights = vec![Vec::new(); n];
        let mut n_edges = 0;
        for (&(a, b), &w) in wf.graph().edges().iter().zip(wf.weights()) {
            if w > TAU_WEIGHT {
                neighbors[a].push(b);
                neighbors[b].push(a);
                weights[a].push((b, w));
                weights[b].push((a, w));
                n_edges += 1;
            }
        }
        Self {
            neighbors,
            weights,
            n_edges,
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma > 0.0 {
        Normal::new(0.0, sigma)
            .expect("sigma is finite and positive")
            .sample(rng)
    } else {
        0.0
    }
}

/// Range measurements for every agent's neighbors, plus relative positions
/// of the special agent's neighbors. Noise is drawn in agent then neighbor
/// order, and only when its sigma is positive.
pub fn measure(
    positions: &[Vector3<f64>],
    neighbors: &[Vec<usize>],
    special: usize,
    noise: &NoiseParams,
    rng: &mut ChaCha8Rng,
) -> Vec<Measurement> {
    let mut out = Vec::with_capacity(positions.len());
    for (i, nb) in neighbors.iter().enumerate() {
        let mut m = Measurement::default();
        for &j in nb {
            let l = (positions[j] - positions[i]).norm() + gaussian(rng, noise.sigma_range);
            m.ranges.push((j, l));
        }
        if i == special {
            for &j in nb {
                let r = positions[j] - positions[i];
                m.relative.push((j, perturb_relative(r, noise, rng)));
            }
        }
        out.push(m);
    }
    out
}

fn perturb_relative(r: Vector3<f64>, noise: &NoiseParams, rng: &mut ChaCha8Rng) -> Vector3<f64> {
    if noise.sigma_range == 0.0 && noise.sigma_bearing == 0.0 {
        return r;
    }
    let len = r.norm() + gaussian(rng, noise.sigma_range);
    let az = r.y.atan2(r.x) + gaussian(rng, noise.sigma_bearing);
    let el = r.z.atan2(r.xy().norm()) + gaussian(rng, noise.sigma_bearing);
    Vector3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin()) * len
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Oracle {
    lambda7: f64,
    lambda8: f64,
    n_edges: usize,
}

/// Result of [`run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: Trace,
    pub summary: Summary,
}

/// Closed-loop world state.
pub struct Simulation {
    scenario: Scenario,
    graph: Graph,
    obstacles: ObstacleSet,
    positions: Vec<Vector3<f64>>,
    agents: Vec<AgentEstimator>,
    tick: usize,
    noise_rng: ChaCha8Rng,
    audit: LocalityAudit,
    trace: Trace,
    events: BTreeMap<String, usize>,
    clamp_events: usize,
    oracle: Oracle,
    vhat_bound: f64,
    vhat_trips: usize,
}

impl Simulation {
    /// Validates the scenario, draws the initial estimates from its seed and
    /// records the `t = 0` state.
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let graph = scenario.framework.graph()?;
        let obstacles = scenario.framework.obstacles()?;
        let positions = scenario.framework.positions()?.rows().to_vec();
        let n = graph.n();
        let c = scenario.special_agent;
        let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        let v_hat: Vec<Vector3<f64>> = (0..n)
            .map(|_| {
                Vector3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect();
        let delta = scenario.estimate_perturbation;
        let agents = (0..n)
            .map(|i| {
                let mut p_hat = positions[i] - positions[c];
                if delta > 0.0 {
                    for s in 0..3 {
                        p_hat[s] += rng.random_range(-delta..delta);
                    }
                }
                AgentEstimator::new(p_hat, v_hat[i])
            })
            .collect();
        let mut noise_rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        noise_rng.set_stream(1);
        let v0 = v_hat.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt();
        let vhat_bound = v0.max((3.0 * n as f64).sqrt()) + VHAT_BOUND_SLACK;
        let mut sim = Self {
            scenario,
            graph,
            obstacles,
            positions,
            agents,
            tick: 0,
            noise_rng,
            audit: LocalityAudit::new(),
            trace: Trace::default(),
            events: BTreeMap::new(),
            clamp_events: 0,
            oracle: Oracle {
                lambda7: 0.0,
                lambda8: 0.0,
                n_edges: 0,
            },
            vhat_bound,
            vhat_trips: 0,
        };
        sim.oracle = sim.compute_oracle()?;
        let clamped = vec![false; n];
        sim.record(&clamped)?;
        Ok(sim)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 * self.scenario.dt_ctrl
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    pub fn agents(&self) -> &[AgentEstimator] {
        &self.agents
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn audit(&self) -> &LocalityAudit {
        &self.audit
    }

    pub fn events(&self) -> &BTreeMap<String, usize> {
        &self.events
    }

    pub fn is_finished(&self) -> bool {
        self.tick >= self.scenario.ticks()
    }

    fn position_matrix(&self) -> Result<PositionMatrix> {
        PositionMatrix::new(self.positions.clone())
    }

    fn framework(&self) -> Result<WeightedFramework> {
        weighted_framework(
            &self.graph,
            &self.position_matrix()?,
            &self.obstacles,
            &self.scenario.weights,
        )
    }

    fn compute_oracle(&self) -> Result<Oracle> {
        let wf = self.framework()?;
        let report = rigidity_report(&wf);
        Ok(Oracle {
            lambda7: report.lambda7,
            lambda8: report.lambda8,
            n_edges: Links::from_framework(&wf).n_edges,
        })
    }

    fn flag(&mut self, e: &Error) {
        let key = match e {
            Error::MissingNeighborPacket { .. } => "MissingNeighborPacket".to_string(),
            Error::StaleSpecialMeasurement(_) => "StaleSpecialMeasurement".to_string(),
            Error::EstimatorNotReady => "EstimatorNotReady".to_string(),
            other => format!("{other}"),
        };
        *self.events.entry(key).or_default() += 1;
    }

    fn flag_str(&mut self, key: &str) {
        *self.events.entry(key.to_string()).or_default() += 1;
    }

    fn publish(&self, links: &Links, anchors: &[AnchorPayload]) -> Bus {
        let c = self.scenario.special_agent;
        let mut bus = Bus::new(self.agents.len());
        for (i, a) in self.agents.iter().enumerate() {
            let payload = if i == c { anchors.to_vec() } else { Vec::new() };
            bus.publish(NeighborPacket::from_state(
                i,
                a.pos.p_hat,
                &a.rig,
                links.weights[i].clone(),
                payload,
            ));
        }
        bus
    }

    /// Advances the world by one control step and appends its record.
    pub fn step(&mut self) -> Result<()> {
        let sc = self.scenario.clone();
        let n = self.agents.len();
        let c = sc.special_agent;
        let t = self.time();

        // weights and neighbor sets from the true geometry
        let pos = self.position_matrix()?;
        let wf = weighted_framework(&self.graph, &pos, &self.obstacles, &sc.weights)?;
        let links = Links::from_framework(&wf);

        let meas = measure(
            &self.positions,
            &links.neighbors,
            c,
            &sc.noise,
            &mut self.noise_rng,
        );
        let mut roles = vec![AnchorRole::None; n];
        roles[c] = AnchorRole::Center;
        let mut anchors = Vec::new();
        match select_anchors(&meas[c].relative) {
            Some(pair) => {
                for k in [pair.first, pair.second] {
                    roles[k] = AnchorRole::Anchor { center: c };
                }
                if pair.accepted() {
                    for (j, r) in &meas[c].relative {
                        if *j == pair.first || *j == pair.second {
                            anchors.push(AnchorPayload {
                                target: *j,
                                relative: *r,
                            });
                        }
                    }
                }
            }
            None => self.flag_str("NoAnchorPair"),
        }

        for _ in 0..sc.substeps() {
            let bus = self.publish(&links, &anchors);
            let ideal = sc.modes.oracle_consensus.then(|| {
                let v: Vec<_> = self.agents.iter().map(|a| a.rig.v_hat).collect();
                let p: Vec<_> = self.agents.iter().map(|a| a.pos.p_hat).collect();
                ConsensusView::exact(&v, &p)
            });
            let mut next = Vec::with_capacity(n);
            let mut flagged = Vec::new();
            for i in 0..n {
                let inbox = bus.inbox(i, &links.neighbors[i], &self.audit);
                let mut local = LocalData {
                    ranges: &meas[i].ranges,
                    weights: &links.weights[i],
                    role: roles[i],
                    n,
                };
                let agent = self.agents[i];
                let stepped = match agent.step(&inbox, &local, &sc.gains, ideal.as_ref(), sc.dt_est) {
                    Err(e @ Error::StaleSpecialMeasurement(_)) => {
                        flagged.push(e);
                        local.role = AnchorRole::None;
                        agent.step(&inbox, &local, &sc.gains, ideal.as_ref(), sc.dt_est)
                    }
                    other => other,
                };
                next.push(stepped.unwrap_or_else(|e| {
                    flagged.push(e);
                    agent
                }));
            }
            self.agents = next;
            for e in &flagged {
                self.flag(e);
            }
        }

        let mut xi = vec![Vector3::zeros(); n];
        let mut clamped = vec![false; n];
        if sc.modes.control && check_ready(t, sc.warmup).is_ok() {
            let outputs = self.control(&pos, &wf, &links, &anchors)?;
            for (i, out) in outputs.into_iter().enumerate() {
                match out {
                    Ok(o) => {
                        xi[i] = o.xi;
                        clamped[i] = o.clamped;
                    }
                    Err(e) => self.flag(&e),
                }
            }
        }
        self.clamp_events += clamped.iter().filter(|&&b| b).count();

        for ex in &sc.exogenous {
            xi[ex.agent] += exogenous_at(&ex.schedule, t, sc.exo_cap);
        }
        for (p, v) in self.positions.iter_mut().zip(&xi) {
            *p += saturate(*v, sc.v_max) * sc.dt_ctrl;
        }
        self.tick += 1;

        if self.tick.is_multiple_of(sc.oracle_every) {
            self.oracle = self.compute_oracle()?;
        }
        self.record(&clamped)
    }

    fn control(
        &self,
        pos: &PositionMatrix,
        wf: &WeightedFramework,
        links: &Links,
        anchors: &[AnchorPayload],
    ) -> Result<Vec<Result<ControlOutput>>> {
        let sc = &self.scenario;
        let n = self.agents.len();
        let c = sc.special_agent;
        let terms: Vec<Vec<NeighborTerm>> = (0..n)
            .map(|i| {
                links.weights[i]
                    .iter()
                    .map(|&(j, w)| NeighborTerm {
                        neighbor: j,
                        weight: w,
                        weight_grad: weight_gradient(i, j, pos, &self.obstacles, &sc.weights, i),
                    })
                    .collect()
            })
            .collect();

        if sc.modes.oracle_eigenpair {
            let report = rigidity_report(wf);
            let v = DVector::from_column_slice(report.eigvec7.as_slice());
            let mut bus = Bus::new(n);
            for i in 0..n {
                let p_rel = self.positions[i] - self.positions[c];
                let est = RigidityEstimatorState::new(vertex_block(&v, i), p_rel);
                bus.publish(NeighborPacket::from_state(i, p_rel, &est, Vec::new(), Vec::new()));
            }
            return Ok((0..n)
                .map(|i| {
                    let inbox = bus.inbox(i, &links.neighbors[i], &self.audit);
                    control_velocity(
                        report.lambda7,
                        &vertex_block(&v, i),
                        &(self.positions[i] - self.positions[c]),
                        1.0,
                        &inbox,
                        &terms[i],
                        &sc.potential,
                    )
                })
                .collect());
        }

        let bus = self.publish(links, anchors);
        Ok((0..n)
            .map(|i| {
                let a = &self.agents[i];
                let view = ConsensusView::from_filters(&a.rig);
                let inbox = bus.inbox(i, &links.neighbors[i], &self.audit);
                control_velocity(
                    a.rig.lambda7_estimate(&sc.gains),
                    &a.rig.v_hat,
                    &a.pos.p_hat,
                    3.0 * n as f64 * view.v2_scalar(),
                    &inbox,
                    &terms[i],
                    &sc.potential,
                )
            })
            .collect())
    }

    fn breaches(&self) -> Result<Vec<f64>> {
        let n = self.positions.len();
        let l_min = self.scenario.weights.l_min;
        let pos = &self.positions;
        let mut clearance: Vec<f64> = (0..n)
            .map(|i| {
                let agents = (0..n).filter(|&j| j != i).map(|j| (pos[i] - pos[j]).norm());
                let obstacles = self.obstacles.points().iter().map(|o| (pos[i] - o).norm());
                agents.chain(obstacles).fold(f64::INFINITY, f64::min)
            })
            .collect();
        let wf = self.framework()?;
        let links = Links::from_framework(&wf);
        for (i, c) in clearance.iter_mut().enumerate() {
            for &j in &links.neighbors[i] {
                *c = c.min(segment_obstacle_distance(&pos[i], &pos[j], &self.obstacles));
            }
        }
        Ok(clearance.iter().map(|&d| (l_min - d).max(0.0)).collect())
    }

    fn record(&mut self, clamped: &[bool]) -> Result<()> {
        let sc = &self.scenario;
        let c = sc.special_agent;
        let n = self.agents.len();
        let lambda7_hat: Vec<f64> = self
            .agents
            .iter()
            .map(|a| a.rig.lambda7_estimate(&sc.gains))
            .collect();
        let p_hat: Vec<_> = self.agents.iter().map(|a| a.pos.p_hat).collect();
        let pos_err = (0..n)
            .map(|i| (self.positions[i] - self.positions[c] - p_hat[i]).norm())
            .collect();
        let e_lambda = lambda7_hat
            .iter()
            .map(|l| (self.oracle.lambda7 - l).abs())
            .sum::<f64>()
            / n as f64;
        let record = TraceRecord {
            t: self.time(),
            p: self.positions.clone(),
            p_hat,
            v_hat: self.agents.iter().map(|a| a.rig.v_hat).collect(),
            lambda7_hat,
            lambda7: self.oracle.lambda7,
            lambda8: self.oracle.lambda8,
            pos_err,
            e_lambda,
            n_edges: self.oracle.n_edges,
            clamped: clamped.to_vec(),
            breach: self.breaches()?,
        };
        if record.v_hat_norm() > self.vhat_bound {
            self.vhat_trips += 1;
        }
        self.trace.push(record);
        Ok(())
    }

    /// Aggregates the trace so far.
    pub fn summary(&self) -> Summary {
        let sc = &self.scenario;
        let records = &self.trace.records;
        let warm_tick = (sc.warmup / sc.dt_ctrl - 1e-9).ceil().max(0.0) as usize;
        let after = records.get(warm_tick..).unwrap_or(&[]);
        let below: Vec<bool> = after
            .iter()
            .map(|r| r.lambda7 < sc.potential.lambda_min)
            .collect();
        let below_runs = runs(below.iter().copied());
        let longest = below_runs.iter().copied().max().unwrap_or(0);
        let mean = |xs: &[TraceRecord]| {
            (!xs.is_empty()).then(|| xs.iter().map(|r| r.e_lambda).sum::<f64>() / xs.len() as f64)
        };
        let mut hist = BTreeMap::new();
        for r in records {
            *hist.entry(r.n_edges).or_insert(0) += 1;
        }
        let breach_flags: Vec<bool> = records
            .iter()
            .map(|r| r.max_breach() > sc.breach_tolerance)
            .collect();
        let last = records.last();
        let final_pos_err = last.map(|r| r.pos_err.clone()).unwrap_or_default();
        Summary {
            n: self.agents.len(),
            ticks: records.len().saturating_sub(1),
            duration: self.time(),
            lambda_min: sc.potential.lambda_min,
            min_lambda7_after_warmup: after.iter().map(|r| r.lambda7).reduce(f64::min),
            ticks_below_min: below.iter().filter(|&&b| b).count(),
            spikes: below_runs.len(),
            longest_run_below_min: longest,
            lambda_ok: longest <= 1 && below_runs.len() <= sc.spike_tolerance,
            mean_e_lambda: mean(records).unwrap_or(0.0),
            mean_e_lambda_after_warmup: mean(after),
            max_final_pos_err: final_pos_err.iter().copied().fold(0.0, f64::max),
            final_pos_err,
            edge_count_min: hist.keys().next().copied().unwrap_or(0),
            edge_count_max: hist.keys().next_back().copied().unwrap_or(0),
            edge_count_histogram: hist,
            max_breach: records.iter().map(|r| r.max_breach()).fold(0.0, f64::max),
            breach_ticks: breach_flags.iter().filter(|&&b| b).count(),
            longest_breach_run: runs(breach_flags).into_iter().max().unwrap_or(0),
            clamp_events: self.clamp_events,
            vhat_bound_trips: self.vhat_trips,
            locality_reads: self.audit.reads(),
            locality_violations: self.audit.violations(),
            events: self.events.clone(),
        }
    }

    pub fn into_output(self) -> RunOutput {
        let summary = self.summary();
        RunOutput {
            trace: self.trace,
            summary,
        }
    }
}

/// Runs a scenario to completion.
pub fn run(scenario: Scenario) -> Result<RunOutput> {
    let mut sim = Simulation::new(scenario)?;
    while !sim.is_finished() {
        sim.step()?;
    }
    Ok(sim.into_output())
}
