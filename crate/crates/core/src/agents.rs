//! Decentralized agents driven only by the broadcast tracking error.
//!
//! Every agent integrates the error into a private phase `phi` with a
//! sign-dependent gain and maps the phase to its actuator command:
//!
//! * ASC: two-level switch, `u_p` for `phi > 0` and `u_n` otherwise.
//! * ASSC: the same levels joined by a linear ramp on `[phi_n, phi_p]`.
//! * Integral: the phase itself, clamped to `[u_n, u_p]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    Asc,
    Assc,
    Integral,
}

impl ControllerKind {
    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::Asc => "asc",
            ControllerKind::Assc => "assc",
            ControllerKind::Integral => "integral",
        }
    }
}

/// Where the high gain `k_hi` applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoostRegion {
    /// Whenever `phi` and `e` have opposite signs.
    Opposing,
    /// Only while the agent is active (`phi > 0`) and the error is negative;
    /// `k_lo` everywhere else. This is the experiment schedule.
    Release,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainSchedule {
    pub k_lo: f64,
    pub k_hi: f64,
    pub boost: BoostRegion,
}

impl GainSchedule {
    pub fn new(k_lo: f64, k_hi: f64, boost: BoostRegion) -> Result<Self> {
        let s = Self { k_lo, k_hi, boost };
        s.validate().map_err(|reason| Error::InvalidAgent { agent: 0, reason })?;
        Ok(s)
    }

    /// Experiment schedule for agent `i` (1-based):
    /// `k_lo = 5 (2 - 0.2 (i - 1))`, `k_hi = k_lo (1 + 0.2 (i - 1))` applied on release.
    pub fn graded(i: usize) -> Self {
        let k_lo = graded_low_gain(i);
        Self {
            k_lo,
            k_hi: k_lo * (1.0 + (i as f64 - 1.0) / 5.0),
            boost: BoostRegion::Release,
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if !(self.k_lo > 0.0 && self.k_lo.is_finite()) {
            return Err(format!("k_lo must be positive, got {}", self.k_lo));
        }
        if !(self.k_hi >= self.k_lo && self.k_hi.is_finite()) {
            return Err(format!("need k_lo <= k_hi, got {} > {}", self.k_lo, self.k_hi));
        }
        Ok(())
    }

    pub fn eval(&self, phi: f64, e: f64) -> f64 {
        let boosted = match self.boost {
            BoostRegion::Opposing => (phi > 0.0 && e < 0.0) || (phi < 0.0 && e > 0.0),
            BoostRegion::Release => phi > 0.0 && e < 0.0,
        };
        if boosted {
            self.k_hi
        } else {
            self.k_lo
        }
    }
}

/// `5 (2 - 0.2 (i - 1))`, shared by the switching schedule and the integral
/// baseline. Evaluated as `10 - (i - 1)` so the gains are exact integers.
pub fn graded_low_gain(i: usize) -> f64 {
    10.0 - (i as f64 - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gain {
    Scheduled(GainSchedule),
    Fixed(f64),
}

/// What a fault does besides zeroing the agent's output.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultMode {
    /// The phase keeps integrating the error.
    #[default]
    OutputOnly,
    /// The phase is frozen while faulted.
    FreezePhase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentParams {
    pub kind: ControllerKind,
    pub u_p: f64,
    pub u_n: f64,
    pub phi_p: f64,
    pub phi_n: f64,
    pub gain: Gain,
    pub fault_mode: FaultMode,
}

impl AgentParams {
    pub fn asc(u_p: f64, u_n: f64, gains: GainSchedule) -> Result<Self> {
        Self {
            kind: ControllerKind::Asc,
            u_p,
            u_n,
            phi_p: 0.0,
            phi_n: 0.0,
            gain: Gain::Scheduled(gains),
            fault_mode: FaultMode::OutputOnly,
        }
        .validated()
    }

    pub fn assc(u_p: f64, u_n: f64, phi_p: f64, phi_n: f64, gains: GainSchedule) -> Result<Self> {
        Self {
            kind: ControllerKind::Assc,
            u_p,
            u_n,
            phi_p,
            phi_n,
            gain: Gain::Scheduled(gains),
            fault_mode: FaultMode::OutputOnly,
        }
        .validated()
    }

    pub fn integral(u_p: f64, u_n: f64, k: f64) -> Result<Self> {
        Self {
            kind: ControllerKind::Integral,
            u_p,
            u_n,
            phi_p: 0.0,
            phi_n: 0.0,
            gain: Gain::Fixed(k),
            fault_mode: FaultMode::OutputOnly,
        }
        .validated()
    }

    pub fn with_fault_mode(mut self, mode: FaultMode) -> Self {
        self.fault_mode = mode;
        self
    }

    fn validated(self) -> Result<Self> {
        self.validate(0)?;
        Ok(self)
    }

    /// Checks the parameter invariants; `agent` (1-based) labels the error.
    pub fn validate(&self, agent: usize) -> Result<()> {
        let fail = |reason: String| Err(Error::InvalidAgent { agent, reason });
        if !(self.u_p.is_finite() && self.u_n.is_finite()) {
            return fail("non-finite output level".into());
        }
        if !(self.u_n < self.u_p) {
            return fail(format!("need u_n < u_p, got u_n={} u_p={}", self.u_n, self.u_p));
        }
        match (self.kind, self.gain) {
            (ControllerKind::Integral, Gain::Fixed(k)) => {
                if !(k > 0.0 && k.is_finite()) {
                    return fail(format!("integral gain must be positive, got {k}"));
                }
            }
            (ControllerKind::Integral, Gain::Scheduled(_)) => {
                return fail("integral agents take a fixed gain".into())
            }
            (_, Gain::Fixed(_)) => return fail("switching agents take a gain schedule".into()),
            (_, Gain::Scheduled(s)) => {
                if let Err(reason) = s.validate() {
                    return fail(reason);
                }
            }
        }
        if self.kind == ControllerKind::Assc {
            if !(self.phi_n <= 0.0 && 0.0 <= self.phi_p && self.phi_n < self.phi_p) {
                return fail(format!(
                    "need phi_n <= 0 <= phi_p with phi_n < phi_p, got phi_n={} phi_p={}",
                    self.phi_n, self.phi_p
                ));
            }
            if !(self.u_n <= 0.0 && 0.0 <= self.u_p) {
                return fail("smooth switching needs u_n <= 0 <= u_p".into());
            }
            let at_zero = ramp(self, 0.0);
            if at_zero.abs() > 1e-12 * (self.u_p - self.u_n) {
                return fail(format!("ramp must pass through the origin, sigma_c(0) = {at_zero}"));
            }
        }
        Ok(())
    }

    pub fn schedule(&self) -> Option<&GainSchedule> {
        match &self.gain {
            Gain::Scheduled(s) => Some(s),
            Gain::Fixed(_) => None,
        }
    }

    /// Lower gain bound: `k_lo` for switching agents, `K` for integral agents.
    pub fn min_gain(&self) -> f64 {
        match self.gain {
            Gain::Scheduled(s) => s.k_lo,
            Gain::Fixed(k) => k,
        }
    }

    /// Role assignment function `sigma(phi)` of a healthy agent.
    pub fn sigma(&self, phi: f64) -> f64 {
        match self.kind {
            ControllerKind::Asc => asc_output(phi, self),
            ControllerKind::Assc => assc_output(phi, self),
            ControllerKind::Integral => integral_output(phi, self),
        }
    }
}

/// Linear interpolant between `(phi_n, u_n)` and `(phi_p, u_p)`.
pub(crate) fn ramp(params: &AgentParams, phi: f64) -> f64 {
    params.u_n + (params.u_p - params.u_n) * (phi - params.phi_n) / (params.phi_p - params.phi_n)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AgentState {
    pub phi: f64,
    pub faulted: bool,
}

/// Sign-dependent phase gain.
pub fn gain(params: &AgentParams, phi: f64, e: f64) -> Result<f64> {
    match params.gain {
        Gain::Scheduled(s) => Ok(s.eval(phi, e)),
        Gain::Fixed(_) => Err(Error::WrongKind("integral")),
    }
}

pub fn asc_output(phi: f64, params: &AgentParams) -> f64 {
    if phi > 0.0 {
        params.u_p
    } else {
        params.u_n
    }
}

pub fn assc_output(phi: f64, params: &AgentParams) -> f64 {
    if phi >= params.phi_p {
        params.u_p
    } else if phi <= params.phi_n {
        params.u_n
    } else {
        ramp(params, phi).clamp(params.u_n, params.u_p)
    }
}

pub fn integral_output(phi: f64, params: &AgentParams) -> f64 {
    phi.clamp(params.u_n, params.u_p)
}

/// Explicit Euler update `phi += K(phi, e) e dt`, gain taken at the pre-step values.
pub fn agent_step(state: AgentState, params: &AgentParams, e: f64, dt: f64) -> AgentState {
    if state.faulted && params.fault_mode == FaultMode::FreezePhase {
        return state;
    }
    let k = match params.gain {
        Gain::Scheduled(s) => s.eval(state.phi, e),
        Gain::Fixed(k) => k,
    };
    AgentState {
        phi: state.phi + k * e * dt,
        faulted: state.faulted,
    }
}

/// Actuator command; a faulted agent outputs exactly zero.
pub fn agent_output(state: AgentState, params: &AgentParams) -> f64 {
    if state.faulted {
        0.0
    } else {
        params.sigma(state.phi)
    }
}
