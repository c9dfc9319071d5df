//! Energy-aware modulation selection.
//!
//! Each invocation first gates on the battery: at or below the depth-of-discharge
//! floor the radio waits for charge. Above it, one of two policies runs:
//!
//! - **Connectivity efficient (CE)**: the modulation order follows the state
//!   of charge through a band table. More energy allows a higher order.
//! - **Quality efficient (QE)**: pick the highest order whose available
//!   transmission time (ATT) covers the requested data transmission time (DTT).
//!
//! In both modes the order is capped by what the channel supports
//! ([`modulation_for_snr`]). The SNR handed to the controller is the SNR the
//! link would reach at maximum transmit gain.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::battery::BatteryState;
use crate::error::{check_positive, check_range, Error, Result};
use crate::modem::{ModOrder, SnrRangeTable};
use crate::powermodel::{required_gain, LinkBudget, PowerModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Connectivity efficient.
    Ce,
    /// Quality efficient.
    Qe,
}

/// CE-mode band: at `min_soc` or above, orders up to `max_order` are allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CeBand {
    pub min_soc: f64,
    pub max_order: ModOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub mode: Mode,
    /// Depth-of-discharge floor as a state-of-charge fraction.
    pub dod_floor: f64,
    /// Required data transmission time in seconds (QE mode).
    pub dtt_s: f64,
    /// Multiplier on the DTT when comparing against ATT.
    pub att_margin: f64,
    /// Sorted by descending `min_soc`.
    pub ce_bands: Vec<CeBand>,
    pub snr_table: SnrRangeTable,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            mode: Mode::Ce,
            dod_floor: 0.20,
            dtt_s: 3600.0,
            att_margin: 1.0,
            ce_bands: default_ce_bands(),
            snr_table: SnrRangeTable::reference(),
        }
    }
}

pub fn default_ce_bands() -> Vec<CeBand> {
    [
        (0.80, ModOrder::Psk64),
        (0.65, ModOrder::Psk32),
        (0.50, ModOrder::Psk16),
        (0.35, ModOrder::Psk8),
        (0.0, ModOrder::Qpsk),
    ]
    .into_iter()
    .map(|(min_soc, max_order)| CeBand { min_soc, max_order })
    .collect()
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        check_range("controller.dod_floor", self.dod_floor, 0.0, 1.0)?;
        if self.dod_floor >= 1.0 {
            return Err(Error::invalid("controller.dod_floor", "must be below 1"));
        }
        check_positive("controller.dtt_s", self.dtt_s)?;
        check_range("controller.att_margin", self.att_margin, 1.0, f64::MAX)?;
        let Some(last) = self.ce_bands.last() else {
            return Err(Error::invalid(
                "controller.ce_bands",
                "at least one band is required",
            ));
        };
        for b in &self.ce_bands {
            check_range("controller.ce_bands.min_soc", b.min_soc, 0.0, 1.0)?;
        }
        if self
            .ce_bands
            .windows(2)
            .any(|w| w[1].min_soc >= w[0].min_soc || w[1].max_order > w[0].max_order)
        {
            return Err(Error::invalid(
                "controller.ce_bands",
                "bands must have strictly descending min_soc and non-increasing max_order",
            ));
        }
        if last.min_soc > self.dod_floor {
            return Err(Error::invalid(
                "controller.ce_bands",
                "lowest band must start at or below dod_floor",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action {
    Transmit { modulation: ModOrder, gain_db: f64 },
    WaitForCharge,
}

impl Action {
    pub fn modulation(&self) -> Option<ModOrder> {
        match *self {
            Action::Transmit { modulation, .. } => Some(modulation),
            Action::WaitForCharge => None,
        }
    }

    pub fn gain_db(&self) -> f64 {
        match *self {
            Action::Transmit { gain_db, .. } => gain_db,
            Action::WaitForCharge => 0.0,
        }
    }

    pub fn is_transmit(&self) -> bool {
        matches!(self, Action::Transmit { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Reason {
    DodFloor,
    QeSelected,
    QeFallback,
    CeBand,
    SnrLimited,
    /// Gain pinned by the scenario rather than chosen by the controller.
    FixedGain,
}

impl Reason {
    pub fn as_str(self) -> &'static str {
        match self {
            Reason::DodFloor => "DodFloor",
            Reason::QeSelected => "QeSelected",
            Reason::QeFallback => "QeFallback",
            Reason::CeBand => "CeBand",
            Reason::SnrLimited => "SnrLimited",
            Reason::FixedGain => "FixedGain",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub action: Action,
    /// ATT in seconds for each order considered (QE mode).
    pub att_by_mod: BTreeMap<ModOrder, f64>,
    pub reason: Reason,
}

impl Decision {
    pub fn wait() -> Self {
        Decision {
            action: Action::WaitForCharge,
            att_by_mod: BTreeMap::new(),
            reason: Reason::DodFloor,
        }
    }
}

/// Highest order whose range in `table` contains `snr_db`; BPSK below the table.
pub fn modulation_for_snr(snr_db: f64, table: &SnrRangeTable) -> ModOrder {
    table
        .entries()
        .iter()
        .rev()
        .find(|r| r.contains(snr_db))
        .map_or(ModOrder::Bpsk, |r| r.modulation)
}

/// Seconds the battery can sustain `modulation` at full power before reaching the floor.
///
/// Zero when the order cannot be reached with the available gain. Solar inflow
/// is ignored.
pub fn estimate_att(
    modulation: ModOrder,
    battery: &BatteryState,
    pm: &PowerModel,
    budget: &LinkBudget,
    cfg: &ControllerConfig,
) -> Result<f64> {
    let gain = match required_gain(modulation, budget, &cfg.snr_table, pm.gain_max_db) {
        Ok(g) => g,
        Err(Error::GainInfeasible { .. }) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let draw = pm.current_draw(gain, 1.0)?;
    Ok(battery.usable_charge(cfg.dod_floor)? / draw * 3600.0)
}

/// Transmit at the highest order up to `cap` whose gain is reachable.
fn transmit_at_or_below(
    cap: ModOrder,
    pm: &PowerModel,
    budget: &LinkBudget,
    cfg: &ControllerConfig,
) -> Result<(ModOrder, f64)> {
    let mut order = cap;
    loop {
        match required_gain(order, budget, &cfg.snr_table, pm.gain_max_db) {
            Ok(g) => return Ok((order, g)),
            Err(Error::GainInfeasible { .. }) | Err(Error::NotInTable(_)) => {
                order = order.lower().unwrap_or(ModOrder::Bpsk);
            }
            Err(e) => return Err(e),
        }
    }
}

pub fn select_qe(
    snr_db: f64,
    battery: &BatteryState,
    pm: &PowerModel,
    budget: &LinkBudget,
    cfg: &ControllerConfig,
) -> Result<Decision> {
    let cap = modulation_for_snr(snr_db, &cfg.snr_table);
    let need = cfg.dtt_s * cfg.att_margin;
    let mut att_by_mod = BTreeMap::new();
    for m in ModOrder::ALL.into_iter().filter(|&m| m <= cap) {
        att_by_mod.insert(m, estimate_att(m, battery, pm, budget, cfg)?);
    }
    let chosen = att_by_mod
        .iter()
        .rev()
        .find(|(_, &att)| att >= need)
        .map(|(&m, _)| m);
    let (modulation, reason) = match chosen {
        Some(m) => (m, Reason::QeSelected),
        None => (ModOrder::Bpsk, Reason::QeFallback),
    };
    let gain_db = required_gain(modulation, budget, &cfg.snr_table, pm.gain_max_db)?;
    Ok(Decision {
        action: Action::Transmit {
            modulation,
            gain_db,
        },
        att_by_mod,
        reason,
    })
}

pub fn select_ce(
    snr_db: f64,
    soc: f64,
    pm: &PowerModel,
    budget: &LinkBudget,
    cfg: &ControllerConfig,
) -> Result<Decision> {
    let energy_cap = cfg
        .ce_bands
        .iter()
        .find(|b| b.min_soc <= soc)
        .map_or(ModOrder::Bpsk, |b| b.max_order);
    let snr_cap = modulation_for_snr(snr_db, &cfg.snr_table);
    let (modulation, gain_db) = transmit_at_or_below(energy_cap.min(snr_cap), pm, budget, cfg)?;
    let reason = if modulation < energy_cap {
        Reason::SnrLimited
    } else {
        Reason::CeBand
    };
    Ok(Decision {
        action: Action::Transmit {
            modulation,
            gain_db,
        },
        att_by_mod: BTreeMap::new(),
        reason,
    })
}

/// One controller invocation. Pure: the controller keeps no state between calls.
pub fn ews_sdr_step(
    snr_db: f64,
    battery: &BatteryState,
    pm: &PowerModel,
    budget: &LinkBudget,
    cfg: &ControllerConfig,
) -> Result<Decision> {
    if battery.soc() <= cfg.dod_floor {
        return Ok(Decision::wait());
    }
    match cfg.mode {
        Mode::Qe => select_qe(snr_db, battery, pm, budget, cfg),
        Mode::Ce => select_ce(snr_db, battery.soc(), pm, budget, cfg),
    }
}
