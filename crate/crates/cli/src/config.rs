//! TOML configuration document.
//!
//! Every section is optional and falls back to the embedded defaults, so an
//! empty file describes the reference installation and its one-day scenario.
//! Unknown keys are rejected.

use std::path::Path;

use ews_sdr::controller::ControllerConfig;
use ews_sdr::linksim::{BatterySetup, FeedbackConfig, Policy, Scenario, SolarSetup};
use ews_sdr::powermodel::{LinkBudget, PowerModel};
use ews_sdr::solar::SizingInput;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub duration_s: f64,
    pub dt_s: f64,
    pub controller_period_s: f64,
    pub snr_noise_std_db: f64,
    pub rng_seed: u64,
    pub tx_power_norm: f64,
    pub shutdown_on_wait: bool,
}

impl Default for SimulationSection {
    fn default() -> Self {
        let s = Scenario::default();
        SimulationSection {
            duration_s: s.duration_s,
            dt_s: s.dt_s,
            controller_period_s: s.controller_period_s,
            snr_noise_std_db: s.snr_noise_std_db,
            rng_seed: s.rng_seed,
            tx_power_norm: s.tx_power_norm,
            shutdown_on_wait: s.shutdown_on_wait,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigDocument {
    pub sizing: SizingInput,
    pub simulation: SimulationSection,
    pub battery: BatterySetup,
    pub power_model: PowerModel,
    pub link_budget: LinkBudget,
    pub controller: ControllerConfig,
    pub solar: SolarSetup,
    pub feedback: FeedbackConfig,
    pub policy: Policy,
}

impl ConfigDocument {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads `path`, or returns the defaults when no path is given.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(ConfigDocument::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                Self::parse(&text).map_err(|e| match e {
                    CliError::Config(msg) => CliError::Config(format!("{}: {msg}", p.display())),
                    other => other,
                })
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    pub fn scenario(&self) -> Scenario {
        let sim = &self.simulation;
        Scenario {
            duration_s: sim.duration_s,
            dt_s: sim.dt_s,
            controller_period_s: sim.controller_period_s,
            snr_noise_std_db: sim.snr_noise_std_db,
            rng_seed: sim.rng_seed,
            tx_power_norm: sim.tx_power_norm,
            shutdown_on_wait: sim.shutdown_on_wait,
            battery: self.battery.clone(),
            power_model: self.power_model.clone(),
            link_budget: self.link_budget.clone(),
            controller: self.controller.clone(),
            solar: self.solar.clone(),
            feedback: self.feedback.clone(),
            policy: self.policy.clone(),
        }
    }
}
