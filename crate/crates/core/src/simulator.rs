//! Fixed-step closed-loop simulation of the broadcast controller.
//!
//! Each tick `k` at `t = k dt`:
//! 1. read `y_r` from the schedule and `y_p = c x_p`,
//! 2. broadcast `e = y_r - y_p`,
//! 3. read every agent's output (faulted agents give 0) and sum them into `u_p`,
//! 4. log the row,
//! 5. advance each phase by explicit Euler and the plant by RK4 with `u_p` held.
//!
//! Event times (reference switches, faults) are snapped to the first tick at
//! or after the event, so `0.2 / 1e-5` lands on tick 20000 regardless of
//! rounding in `k * dt`.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::agents::{agent_output, agent_step, AgentParams, AgentState, GainSchedule};
use crate::error::{Error, Result};
use crate::lti::{rk4_unchecked, second_order_plant, tf_to_statespace, TransferFunction};
use crate::reference::{ur_for_yr, ReferenceSchedule, ReferenceSegment};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultEvent {
    pub t: f64,
    /// 1-based agent indices.
    pub agents: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub passivity: bool,
    /// Acceptable dissipation-inequality violation when reporting passivity.
    pub tol: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            passivity: true,
            tol: 1e-2,
        }
    }
}

pub const DEFAULT_DT: f64 = 1e-5;
pub const DEFAULT_T_END: f64 = 0.4;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub plant: TransferFunction,
    pub dt: f64,
    pub t_end: f64,
    pub agents: Vec<AgentParams>,
    pub reference: ReferenceSchedule,
    pub faults: Vec<FaultEvent>,
    pub initial_plant_state: Vec<f64>,
    pub analysis: AnalysisOptions,
}

/// First tick whose time is at or after `t`.
pub fn tick_at_or_after(t: f64, dt: f64) -> usize {
    let r = t / dt;
    let nearest = r.round();
    if (r - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest.max(0.0) as usize
    } else {
        r.ceil().max(0.0) as usize
    }
}

/// Last tick whose time is at or before `t`.
pub fn tick_at_or_before(t: f64, dt: f64) -> usize {
    let r = t / dt;
    let nearest = r.round();
    if (r - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest.max(0.0) as usize
    } else {
        r.floor().max(0.0) as usize
    }
}

/// Checks `sum u_n <= u_r <= sum u_p` for every reference segment.
pub fn check_feasibility(
    plant: &TransferFunction,
    reference: &ReferenceSchedule,
    agents: &[AgentParams],
) -> Result<()> {
    let lo: f64 = agents.iter().map(|a| a.u_n).sum();
    let hi: f64 = agents.iter().map(|a| a.u_p).sum();
    for (i, seg) in reference.segments().iter().enumerate() {
        let u_r = ur_for_yr(plant, seg.y_r)?;
        let violated = if u_r > hi {
            Some(format!("> Σu_p={hi}"))
        } else if u_r < lo {
            Some(format!("< Σu_n={lo}"))
        } else {
            None
        };
        if let Some(violated) = violated {
            return Err(Error::Infeasible {
                segment: i + 1,
                u_r,
                violated,
            });
        }
    }
    Ok(())
}

impl SimConfig {
    pub fn m(&self) -> usize {
        self.agents.len()
    }

    /// Index of the last logged tick, `floor(t_end / dt)`.
    pub fn last_tick(&self) -> usize {
        tick_at_or_before(self.t_end, self.dt)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= self.dt && self.t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "t_end must be at least dt, got t_end={} dt={}",
                self.t_end, self.dt
            )));
        }
        if self.agents.is_empty() {
            return Err(Error::InvalidArgument("at least one agent is required".into()));
        }
        if !self.plant.is_strictly_proper() {
            return Err(Error::InvalidArgument(
                "plant must be strictly proper (d = 0) for simulation".into(),
            ));
        }
        if self.initial_plant_state.len() != self.plant.order() {
            return Err(Error::DimensionMismatch(format!(
                "initial plant state has {} entries, plant order is {}",
                self.initial_plant_state.len(),
                self.plant.order()
            )));
        }
        for (i, a) in self.agents.iter().enumerate() {
            a.validate(i + 1)?;
        }
        for f in &self.faults {
            if !(f.t >= 0.0 && f.t.is_finite()) {
                return Err(Error::InvalidArgument(format!("fault time must be >= 0, got {}", f.t)));
            }
            if let Some(&bad) = f.agents.iter().find(|&&i| i == 0 || i > self.m()) {
                return Err(Error::InvalidArgument(format!(
                    "fault names agent {bad}, valid range is 1..={}",
                    self.m()
                )));
            }
        }
        if !(self.analysis.tol >= 0.0) {
            return Err(Error::InvalidArgument("analysis tolerance must be >= 0".into()));
        }
        check_feasibility(&self.plant, &self.reference, &self.agents)
    }

    /// Tick at which each agent becomes faulted, if ever.
    pub fn fault_ticks(&self) -> Vec<Option<usize>> {
        let mut ticks = vec![None; self.m()];
        for f in &self.faults {
            let k = tick_at_or_after(f.t, self.dt);
            for &i in &f.agents {
                let slot: &mut Option<usize> = &mut ticks[i - 1];
                *slot = Some(slot.map_or(k, |old| old.min(k)));
            }
        }
        ticks
    }

    /// Start tick and level of every reference segment.
    pub fn reference_ticks(&self) -> Vec<(usize, f64)> {
        self.reference
            .segments()
            .iter()
            .map(|s| (tick_at_or_after(s.t_start, self.dt), s.y_r))
            .collect()
    }
}

/// Column-oriented record of a run. Agent columns are indexed `[agent][tick]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub dt: f64,
    pub t: Vec<f64>,
    pub y_r: Vec<f64>,
    pub y_p: Vec<f64>,
    pub e: Vec<f64>,
    pub u_p: Vec<f64>,
    pub u_agents: Vec<Vec<f64>>,
    pub phi: Vec<Vec<f64>>,
}

impl SimTrace {
    fn with_capacity(m: usize, rows: usize, dt: f64) -> Self {
        let col = || Vec::with_capacity(rows);
        Self {
            dt,
            t: col(),
            y_r: col(),
            y_p: col(),
            e: col(),
            u_p: col(),
            u_agents: (0..m).map(|_| col()).collect(),
            phi: (0..m).map(|_| col()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn m(&self) -> usize {
        self.u_agents.len()
    }

    /// Rows with `t_a <= t <= t_b`.
    pub fn window(&self, t_a: f64, t_b: f64) -> Range<usize> {
        let start = tick_at_or_after(t_a, self.dt).min(self.len());
        let end = (tick_at_or_before(t_b, self.dt) + 1).min(self.len());
        start..end.max(start)
    }

    /// Row sum of agent outputs in agent order, as computed during simulation.
    pub fn agent_sum(&self, k: usize) -> f64 {
        self.u_agents.iter().map(|col| col[k]).sum()
    }
}

pub fn simulate(config: &SimConfig) -> Result<SimTrace> {
    config.validate()?;
    let ss = tf_to_statespace(&config.plant);
    let m = config.m();
    let dt = config.dt;
    let last = config.last_tick();
    let fault_ticks = config.fault_ticks();
    let reference = config.reference_ticks();

    let mut x = DVector::from_column_slice(&config.initial_plant_state);
    let mut states = vec![AgentState::default(); m];
    let mut outputs = vec![0.0; m];
    let mut trace = SimTrace::with_capacity(m, last + 1, dt);
    let mut segment = 0;

    for k in 0..=last {
        while segment + 1 < reference.len() && reference[segment + 1].0 <= k {
            segment += 1;
        }
        let y_r = reference[segment].1;
        let y_p = ss.c.dot(&x.transpose());
        let e = y_r - y_p;

        for (i, state) in states.iter_mut().enumerate() {
            if fault_ticks[i].is_some_and(|f| f <= k) {
                state.faulted = true;
            }
            outputs[i] = agent_output(*state, &config.agents[i]);
        }
        let u_p: f64 = outputs.iter().sum();

        trace.t.push(k as f64 * dt);
        trace.y_r.push(y_r);
        trace.y_p.push(y_p);
        trace.e.push(e);
        trace.u_p.push(u_p);
        for i in 0..m {
            trace.u_agents[i].push(outputs[i]);
            trace.phi[i].push(states[i].phi);
        }

        if k == last {
            break;
        }
        for (state, params) in states.iter_mut().zip(&config.agents) {
            *state = agent_step(*state, params, e, dt);
        }
        x = rk4_unchecked(&ss, &x, u_p, dt);
    }
    Ok(trace)
}

/// The four reproduction scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Two-stage reference 28 -> 10, switching agents.
    AscCond1,
    /// Constant reference 10, agents 1-5 fail at 0.2 s.
    AscCond2,
    /// Two-stage reference with the smooth-switching ramp.
    AsscCond1,
    /// Two-stage reference with saturated integral agents.
    IntegralCond1,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::AscCond1,
        Preset::AscCond2,
        Preset::AsscCond1,
        Preset::IntegralCond1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::AscCond1 => "asc-cond1",
            Preset::AscCond2 => "asc-cond2",
            Preset::AsscCond1 => "assc-cond1",
            Preset::IntegralCond1 => "integral-cond1",
        }
    }

    pub fn config(self) -> SimConfig {
        const M: usize = 10;
        const U_P: f64 = 3.0;
        const U_N: f64 = 0.0;
        let agents: Vec<AgentParams> = (1..=M)
            .map(|i| {
                match self {
                    Preset::AscCond1 | Preset::AscCond2 => {
                        AgentParams::asc(U_P, U_N, GainSchedule::graded(i))
                    }
                    Preset::AsscCond1 => {
                        AgentParams::assc(U_P, U_N, 0.06, 0.0, GainSchedule::graded(i))
                    }
                    Preset::IntegralCond1 => {
                        AgentParams::integral(U_P, U_N, crate::agents::graded_low_gain(i))
                    }
                }
                .expect("preset agents are valid")
            })
            .collect();
        let (reference, faults) = match self {
            Preset::AscCond2 => (
                ReferenceSchedule::constant(10.0),
                vec![FaultEvent {
                    t: 0.2,
                    agents: (1..=5).collect(),
                }],
            ),
            _ => (
                ReferenceSchedule::new(vec![
                    ReferenceSegment { t_start: 0.0, y_r: 28.0 },
                    ReferenceSegment { t_start: 0.2, y_r: 10.0 },
                ])
                .expect("valid schedule"),
                Vec::new(),
            ),
        };
        SimConfig {
            plant: second_order_plant(),
            dt: DEFAULT_DT,
            t_end: DEFAULT_T_END,
            agents,
            reference,
            faults,
            initial_plant_state: vec![0.0; 2],
            analysis: AnalysisOptions::default(),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

pub fn run_preset(name: &str) -> Result<SimTrace> {
    simulate(&name.parse::<Preset>()?.config())
}
