//! Battery state of charge by coulomb counting, and voltage/SoC lookup tables.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Chemistry {
    /// Sealed or flooded lead acid.
    LeadAcid,
    Gel,
    Agm,
}

impl fmt::Display for Chemistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Chemistry::LeadAcid => "lead-acid",
            Chemistry::Gel => "gel",
            Chemistry::Agm => "agm",
        })
    }
}

impl FromStr for Chemistry {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lead-acid" | "sealed-lead-acid" | "flooded-lead-acid" | "lead_acid" => {
                Ok(Chemistry::LeadAcid)
            }
            "gel" => Ok(Chemistry::Gel),
            "agm" => Ok(Chemistry::Agm),
            _ => Err(Error::invalid(
                "chemistry",
                format!("unknown chemistry `{s}`"),
            )),
        }
    }
}

/// Integrator state for coulomb counting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryState {
    capacity_ah: f64,
    soc: f64,
    chemistry: Chemistry,
}

impl BatteryState {
    pub fn new(capacity_ah: f64, soc: f64, chemistry: Chemistry) -> Result<Self> {
        if !capacity_ah.is_finite() || capacity_ah <= 0.0 {
            return Err(Error::invalid(
                "capacity_ah",
                format!("{capacity_ah} must be positive"),
            ));
        }
        check_range("soc", soc, 0.0, 1.0)?;
        Ok(BatteryState {
            capacity_ah,
            soc,
            chemistry,
        })
    }

    pub fn capacity_ah(&self) -> f64 {
        self.capacity_ah
    }

    pub fn soc(&self) -> f64 {
        self.soc
    }

    pub fn chemistry(&self) -> Chemistry {
        self.chemistry
    }

    /// Advances the state by one step of constant current.
    ///
    /// `current_a` is positive when charging and negative when discharging.
    /// The result saturates at empty and full.
    pub fn step(&self, current_a: f64, dt_s: f64) -> Result<Self> {
        if !dt_s.is_finite() || dt_s <= 0.0 {
            return Err(Error::invalid("dt_s", format!("{dt_s} must be positive")));
        }
        if !current_a.is_finite() {
            return Err(Error::invalid("current_a", "must be finite"));
        }
        let delta = current_a * dt_s / 3600.0 / self.capacity_ah;
        Ok(BatteryState {
            soc: (self.soc + delta).clamp(0.0, 1.0),
            ..*self
        })
    }

    /// Charge left above `dod_floor`, in ampere-hours.
    pub fn usable_charge(&self, dod_floor: f64) -> Result<f64> {
        if !dod_floor.is_finite() || !(0.0..1.0).contains(&dod_floor) {
            return Err(Error::invalid(
                "dod_floor",
                format!("{dod_floor} not in [0, 1)"),
            ));
        }
        Ok((self.soc - dod_floor).max(0.0) * self.capacity_ah)
    }
}

pub fn soc_step(state: &BatteryState, current_a: f64, dt_s: f64) -> Result<BatteryState> {
    state.step(current_a, dt_s)
}

pub fn usable_charge(state: &BatteryState, dod_floor: f64) -> Result<f64> {
    state.usable_charge(dod_floor)
}

/// Open-circuit voltage versus state of charge for a 12 V-class battery.
///
/// Rows are stored ascending in SoC; both columns must be strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SocVoltageTable {
    rows: Vec<(f64, f64)>,
}

/// Lookups accept voltages this far outside the tabulated span.
pub const VOLTAGE_SLACK_V: f64 = 0.5;

impl SocVoltageTable {
    /// Rows are `(soc, volts)` pairs in any order.
    pub fn new(mut rows: Vec<(f64, f64)>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::invalid("voltage_table", "needs at least two rows"));
        }
        if rows
            .iter()
            .any(|&(s, v)| !s.is_finite() || !v.is_finite() || !(0.0..=1.0).contains(&s))
        {
            return Err(Error::invalid(
                "voltage_table",
                "soc must lie in [0, 1] and voltages be finite",
            ));
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        if rows
            .windows(2)
            .any(|w| w[1].0 <= w[0].0 || w[1].1 <= w[0].1)
        {
            return Err(Error::invalid(
                "voltage_table",
                "soc and voltage must both be strictly increasing",
            ));
        }
        Ok(SocVoltageTable { rows })
    }

    /// Resting-voltage table for a chemistry. Top rows are thresholds ("12.7 V or more").
    pub fn builtin(chemistry: Chemistry) -> Self {
        let volts = match chemistry {
            Chemistry::LeadAcid => [11.8, 12.0, 12.3, 12.4, 12.7],
            Chemistry::Gel => [11.8, 12.0, 12.35, 12.65, 12.85],
            Chemistry::Agm => [11.8, 12.0, 12.3, 12.6, 12.8],
        };
        let rows = [0.0, 0.25, 0.5, 0.75, 1.0].into_iter().zip(volts).collect();
        SocVoltageTable { rows }
    }

    pub fn rows(&self) -> &[(f64, f64)] {
        &self.rows
    }

    /// State of charge by linear interpolation; flat beyond the table ends.
    pub fn soc_at(&self, voltage: f64) -> Result<f64> {
        let (v_min, v_max) = (self.rows[0].1, self.rows[self.rows.len() - 1].1);
        check_range(
            "voltage",
            voltage,
            v_min - VOLTAGE_SLACK_V,
            v_max + VOLTAGE_SLACK_V,
        )?;
        Ok(interpolate(self.rows.iter().map(|&(s, v)| (v, s)), voltage))
    }

    pub fn voltage_at(&self, soc: f64) -> Result<f64> {
        check_range("soc", soc, 0.0, 1.0)?;
        Ok(interpolate(self.rows.iter().copied(), soc))
    }
}

/// Piecewise-linear through ascending `(x, y)` knots, clamped at both ends.
fn interpolate(knots: impl Iterator<Item = (f64, f64)> + Clone, x: f64) -> f64 {
    let mut prev: Option<(f64, f64)> = None;
    for (xk, yk) in knots.clone() {
        if x <= xk {
            return match prev {
                None => yk,
                Some((x0, y0)) => y0 + (yk - y0) * (x - x0) / (xk - x0),
            };
        }
        prev = Some((xk, yk));
    }
    prev.map(|p| p.1).unwrap_or(f64::NAN)
}

pub fn soc_from_voltage(chemistry: Chemistry, voltage: f64) -> Result<f64> {
    SocVoltageTable::builtin(chemistry).soc_at(voltage)
}

pub fn voltage_from_soc(chemistry: Chemistry, soc: f64) -> Result<f64> {
    SocVoltageTable::builtin(chemistry).voltage_at(soc)
}
