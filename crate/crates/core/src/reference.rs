//! Piecewise-constant reference signals and the constant-input reference model.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{StateSpace, TransferFunction};
use crate::poly;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSegment {
    pub t_start: f64,
    pub y_r: f64,
}

/// Left-closed segments: the value of a segment applies from its `t_start`
/// up to (not including) the next one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ReferenceSegment>", into = "Vec<ReferenceSegment>")]
pub struct ReferenceSchedule {
    segments: Vec<ReferenceSegment>,
}

impl ReferenceSchedule {
    pub fn new(segments: Vec<ReferenceSegment>) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| Error::InvalidArgument("reference schedule has no segments".into()))?;
        if first.t_start != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "first reference segment must start at 0, got {}",
                first.t_start
            )));
        }
        if segments.iter().any(|s| !s.y_r.is_finite() || !s.t_start.is_finite()) {
            return Err(Error::InvalidArgument("non-finite reference segment".into()));
        }
        if segments.windows(2).any(|w| w[1].t_start <= w[0].t_start) {
            return Err(Error::InvalidArgument(
                "reference segment start times must be strictly increasing".into(),
            ));
        }
        Ok(Self { segments })
    }

    pub fn constant(y_r: f64) -> Self {
        Self::new(vec![ReferenceSegment { t_start: 0.0, y_r }]).expect("single segment at t = 0")
    }

    pub fn segments(&self) -> &[ReferenceSegment] {
        &self.segments
    }

    /// Index of the segment active at `t`.
    pub fn segment_index(&self, t: f64) -> Result<usize> {
        if !(t >= self.segments[0].t_start) {
            return Err(Error::InvalidArgument(format!("time {t} precedes the reference schedule")));
        }
        Ok(self.segments.partition_point(|s| s.t_start <= t) - 1)
    }
}

impl TryFrom<Vec<ReferenceSegment>> for ReferenceSchedule {
    type Error = Error;

    fn try_from(segments: Vec<ReferenceSegment>) -> Result<Self> {
        Self::new(segments)
    }
}

impl From<ReferenceSchedule> for Vec<ReferenceSegment> {
    fn from(s: ReferenceSchedule) -> Self {
        s.segments
    }
}

pub fn reference_at(schedule: &ReferenceSchedule, t: f64) -> Result<f64> {
    Ok(schedule.segments[schedule.segment_index(t)?].y_r)
}

/// Equilibrium state for a constant input: solves `A x = -b u_r`.
pub fn steady_state_init(ss: &StateSpace, u_r: f64) -> Result<DVector<f64>> {
    let rhs = -&ss.b * u_r;
    ss.a
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("A is singular; constant reference not realizable".into()))
}

pub fn dc_gain(tf: &TransferFunction) -> Result<f64> {
    let den0 = poly::eval(tf.den(), 0.0);
    if den0 == 0.0 {
        return Err(Error::Singular("den(0) = 0: integrating plant has no DC gain".into()));
    }
    Ok(poly::eval(tf.num(), 0.0) / den0)
}

/// Constant plant input that holds the output at `y_r` in steady state.
pub fn ur_for_yr(tf: &TransferFunction, y_r: f64) -> Result<f64> {
    let g = dc_gain(tf)?;
    if g == 0.0 {
        return Err(Error::Singular("zero DC gain".into()));
    }
    Ok(y_r / g)
}

/// Copy of the plant driven by a constant input, started at equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceModel {
    pub ss: StateSpace,
    pub x_r: DVector<f64>,
    pub u_r: f64,
}

impl ReferenceModel {
    pub fn at_equilibrium(ss: StateSpace, u_r: f64) -> Result<Self> {
        let x_r = steady_state_init(&ss, u_r)?;
        Ok(Self { ss, x_r, u_r })
    }

    pub fn output(&self) -> f64 {
        self.ss.output(&self.x_r, self.u_r)
    }

    pub fn step(&mut self, dt: f64) -> Result<()> {
        self.x_r = crate::lti::rk4_step(&self.ss, &self.x_r, self.u_r, dt)?;
        Ok(())
    }
}
