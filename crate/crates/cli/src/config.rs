//! JSON run configuration.

use serde::{Deserialize, Serialize};

use bcast_core::agents::{
    graded_low_gain, AgentParams, BoostRegion, ControllerKind, FaultMode, Gain, GainSchedule,
};
use bcast_core::lti::{spr_test, SprVerdict, TransferFunction};
use bcast_core::reference::{ReferenceSchedule, ReferenceSegment};
use bcast_core::simulator::{AnalysisOptions, FaultEvent, SimConfig};

use crate::error::CliError;

/// Name of the graded experiment schedule in config files.
pub const GRADED_PRESET: &str = "paper-eq16";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub plant: PlantSpec,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_plant_state: Option<Vec<f64>>,
    pub reference: ReferenceSpec,
    pub agents: AgentsSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub faults: Vec<FaultEvent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSpec {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    pub segments: Vec<ReferenceSegment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentsSpec {
    pub kind: ControllerKind,
    pub m: usize,
    pub u_p: f64,
    pub u_n: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_n: Option<f64>,
    pub gains: GainsSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boost: Option<BoostRegion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault_mode: Option<FaultMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GainsSpec {
    Preset { preset: String },
    Schedule { k_lo: Vec<f64>, k_hi_factor: Vec<f64> },
    Fixed { k: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    #[serde(default = "default_true")]
    pub passivity: bool,
    #[serde(default = "default_share")]
    pub u_share: String,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_true() -> bool {
    true
}

fn default_share() -> String {
    "equal".into()
}

fn default_tol() -> f64 {
    AnalysisOptions::default().tol
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| invalid(format!("config does not match the schema: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Builds the simulation config. Checks only what the file layout can
    /// express; [`SimConfig::validate`] covers the rest.
    pub fn to_sim_config(&self) -> Result<SimConfig, CliError> {
        let plant = TransferFunction::new(&self.plant.num, &self.plant.den)?;
        let a = &self.agents;
        if a.m == 0 {
            return Err(invalid("agents.m must be at least 1"));
        }
        let boost = a.boost.unwrap_or(BoostRegion::Release);
        let per_agent_len = |name: &str, v: &[f64]| {
            if v.len() == a.m {
                Ok(())
            } else {
                Err(invalid(format!("agents.gains.{name} has {} entries, m = {}", v.len(), a.m)))
            }
        };
        let gains: Vec<Gain> = match (&a.gains, a.kind) {
            (GainsSpec::Preset { preset }, kind) if preset == GRADED_PRESET => (1..=a.m)
                .map(|i| match kind {
                    ControllerKind::Integral => Gain::Fixed(graded_low_gain(i)),
                    _ => {
                        let g = GainSchedule::graded(i);
                        Gain::Scheduled(GainSchedule { boost, ..g })
                    }
                })
                .collect(),
            (GainsSpec::Preset { preset }, _) => {
                return Err(invalid(format!(
                    "unknown gains preset `{preset}` (expected `{GRADED_PRESET}`)"
                )))
            }
            (GainsSpec::Schedule { k_lo, k_hi_factor }, ControllerKind::Asc | ControllerKind::Assc) => {
                per_agent_len("k_lo", k_lo)?;
                per_agent_len("k_hi_factor", k_hi_factor)?;
                k_lo.iter()
                    .zip(k_hi_factor)
                    .map(|(&lo, &f)| GainSchedule::new(lo, lo * f, boost).map(Gain::Scheduled))
                    .collect::<Result<_, _>>()?
            }
            (GainsSpec::Fixed { k }, ControllerKind::Integral) => {
                per_agent_len("k", k)?;
                k.iter().map(|&k| Gain::Fixed(k)).collect()
            }
            (GainsSpec::Schedule { .. }, _) => {
                return Err(invalid("integral agents take {\"k\": [..]} gains"))
            }
            (GainsSpec::Fixed { .. }, _) => {
                return Err(invalid("switching agents take {\"k_lo\", \"k_hi_factor\"} gains"))
            }
        };
        let (phi_p, phi_n) = match a.kind {
            ControllerKind::Assc => (
                a.phi_p.ok_or_else(|| invalid("agents.phi_p is required for assc agents"))?,
                a.phi_n.ok_or_else(|| invalid("agents.phi_n is required for assc agents"))?,
            ),
            _ => (a.phi_p.unwrap_or(0.0), a.phi_n.unwrap_or(0.0)),
        };
        let agents = gains
            .into_iter()
            .map(|gain| AgentParams {
                kind: a.kind,
                u_p: a.u_p,
                u_n: a.u_n,
                phi_p,
                phi_n,
                gain,
                fault_mode: a.fault_mode.unwrap_or_default(),
            })
            .collect();
        let analysis = match &self.analysis {
            Some(spec) => {
                if spec.u_share != "equal" {
                    return Err(invalid(format!(
                        "analysis.u_share `{}` is not supported (expected `equal`)",
                        spec.u_share
                    )));
                }
                AnalysisOptions {
                    passivity: spec.passivity,
                    tol: spec.tol,
                }
            }
            None => AnalysisOptions::default(),
        };
        let initial_plant_state = self
            .initial_plant_state
            .clone()
            .unwrap_or_else(|| vec![0.0; plant.order()]);
        Ok(SimConfig {
            plant,
            dt: self.dt,
            t_end: self.t_end,
            agents,
            reference: ReferenceSchedule::new(self.reference.segments.clone())?,
            faults: self.faults.clone(),
            initial_plant_state,
            analysis,
        })
    }

    /// Inverse of [`ConfigFile::to_sim_config`] for configs with identical
    /// per-agent levels, thresholds, boost region and fault mode.
    pub fn from_sim_config(config: &SimConfig) -> Result<Self, CliError> {
        let first = config.agents.first().ok_or_else(|| invalid("no agents"))?;
        let same_shape = config.agents.iter().all(|a| {
            a.kind == first.kind
                && a.u_p == first.u_p
                && a.u_n == first.u_n
                && a.phi_p == first.phi_p
                && a.phi_n == first.phi_n
                && a.fault_mode == first.fault_mode
                && a.schedule().map(|s| s.boost) == first.schedule().map(|s| s.boost)
        });
        if !same_shape {
            return Err(invalid("agents differ in more than their gains; not expressible as a config file"));
        }
        let m = config.agents.len();
        let boost = first.schedule().map(|s| s.boost);
        let graded = (1..=m).all(|i| match (config.agents[i - 1].gain, first.kind) {
            (Gain::Fixed(k), ControllerKind::Integral) => k == graded_low_gain(i),
            (Gain::Scheduled(s), _) => {
                let g = GainSchedule::graded(i);
                s.k_lo == g.k_lo && s.k_hi == g.k_hi
            }
            _ => false,
        });
        let gains = if graded {
            GainsSpec::Preset {
                preset: GRADED_PRESET.into(),
            }
        } else if first.kind == ControllerKind::Integral {
            GainsSpec::Fixed {
                k: config.agents.iter().map(|a| a.min_gain()).collect(),
            }
        } else {
            let schedules: Vec<&GainSchedule> = config.agents.iter().filter_map(|a| a.schedule()).collect();
            let spec = GainsSpec::Schedule {
                k_lo: schedules.iter().map(|s| s.k_lo).collect(),
                k_hi_factor: schedules.iter().map(|s| s.k_hi / s.k_lo).collect(),
            };
            // The factor form must reproduce k_hi bit for bit.
            if let GainsSpec::Schedule { k_lo, k_hi_factor } = &spec {
                let exact = schedules
                    .iter()
                    .zip(k_lo.iter().zip(k_hi_factor))
                    .all(|(s, (lo, f))| lo * f == s.k_hi);
                if !exact {
                    return Err(invalid("k_hi is not representable as k_lo * factor"));
                }
            }
            spec
        };
        let is_assc = first.kind == ControllerKind::Assc;
        let defaults = AnalysisOptions::default();
        Ok(Self {
            plant: PlantSpec {
                num: config.plant.num().to_vec(),
                den: config.plant.den().to_vec(),
            },
            dt: config.dt,
            t_end: config.t_end,
            initial_plant_state: Some(config.initial_plant_state.clone()),
            reference: ReferenceSpec {
                segments: config.reference.segments().to_vec(),
            },
            agents: AgentsSpec {
                kind: first.kind,
                m,
                u_p: first.u_p,
                u_n: first.u_n,
                phi_p: is_assc.then_some(first.phi_p),
                phi_n: is_assc.then_some(first.phi_n),
                gains,
                boost: boost.filter(|&b| b != BoostRegion::Release),
                fault_mode: Some(first.fault_mode).filter(|&f| f != FaultMode::default()),
            },
            faults: config.faults.clone(),
            analysis: (config.analysis != defaults).then(|| AnalysisSpec {
                passivity: config.analysis.passivity,
                u_share: default_share(),
                tol: config.analysis.tol,
            }),
        })
    }
}

/// Parses and fully validates a config, including feasibility of every
/// reference segment and (unless `allow_non_spr`) strict positive realness
/// of the plant. `dt` overrides the file's step.
pub fn load_config(text: &str, dt: Option<f64>, allow_non_spr: bool) -> Result<SimConfig, CliError> {
    let mut config = ConfigFile::parse(text)?.to_sim_config()?;
    if let Some(dt) = dt {
        config.dt = dt;
    }
    config.validate()?;
    if !allow_non_spr {
        let cert = spr_test(&config.plant);
        if cert.verdict != SprVerdict::StrictlyPositiveReal {
            return Err(CliError::NotSpr(Box::new(cert)));
        }
    }
    Ok(config)
}
