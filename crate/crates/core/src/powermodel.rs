//! Transmitter current draw and the link budget that sets the gain each
//! modulation order needs.
//!
//! The draw is `i_base + g(gain) * p_norm * i_rf_max`. The gain response `g`
//! rises linearly up to the knee and then along a power law to 1 at the
//! maximum gain:
//!
//! ```text
//! g(x) = g_knee * x / knee                                          x <= knee
//! g(x) = g_knee + (1 - g_knee) * ((x - knee) / (max - knee))^shape   x >  knee
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{check_non_negative, check_positive, check_range, Error, Result};
use crate::modem::{ModOrder, SnrRangeTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerModel {
    /// Electronics draw with the transmitter idle, A.
    pub i_base: f64,
    /// Extra RF-chain draw at maximum gain and full power, A.
    pub i_rf_max: f64,
    pub gain_knee_db: f64,
    pub gain_max_db: f64,
    /// Curvature above the knee.
    pub shape_exponent: f64,
    /// Gain response at the knee, in (0, 1).
    pub g_knee: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        PowerModel {
            i_base: 1.3,
            i_rf_max: 2.3,
            gain_knee_db: 15.0,
            gain_max_db: 30.0,
            shape_exponent: 2.0,
            g_knee: 0.35,
        }
    }
}

impl PowerModel {
    pub fn validate(&self) -> Result<()> {
        check_positive("power_model.i_base", self.i_base)?;
        check_positive("power_model.i_rf_max", self.i_rf_max)?;
        check_positive("power_model.gain_knee_db", self.gain_knee_db)?;
        if !(self.gain_max_db.is_finite() && self.gain_max_db > self.gain_knee_db) {
            return Err(Error::invalid(
                "power_model.gain_max_db",
                "must exceed gain_knee_db",
            ));
        }
        if !(self.shape_exponent.is_finite() && self.shape_exponent > 1.0) {
            return Err(Error::invalid(
                "power_model.shape_exponent",
                "must be greater than 1",
            ));
        }
        if !(self.g_knee > 0.0 && self.g_knee < 1.0) {
            return Err(Error::invalid("power_model.g_knee", "must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Normalised gain response in [0, 1].
    pub fn gain_response(&self, gain_db: f64) -> f64 {
        if gain_db <= self.gain_knee_db {
            self.g_knee * gain_db / self.gain_knee_db
        } else {
            let u = (gain_db - self.gain_knee_db) / (self.gain_max_db - self.gain_knee_db);
            self.g_knee + (1.0 - self.g_knee) * u.powf(self.shape_exponent)
        }
    }

    /// Current drawn at `gain_db` with the RF output at `p_norm` of full scale.
    pub fn current_draw(&self, gain_db: f64, p_norm: f64) -> Result<f64> {
        check_range("gain_db", gain_db, 0.0, self.gain_max_db)?;
        check_range("p_norm", p_norm, 0.0, 1.0)?;
        Ok(self.i_base + self.gain_response(gain_db) * p_norm * self.i_rf_max)
    }

    /// Same model with every current multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        PowerModel {
            i_base: self.i_base * k,
            i_rf_max: self.i_rf_max * k,
            ..self.clone()
        }
    }
}

pub fn current_draw(model: &PowerModel, gain_db: f64, p_norm: f64) -> Result<f64> {
    model.current_draw(gain_db, p_norm)
}

/// Static link budget. Received SNR is
/// `tx_power + gain - path_loss - (noise_floor + noise_figure)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkBudget {
    pub tx_power_dbm_at_0_gain: f64,
    pub path_loss_db: f64,
    pub rx_noise_figure_db: f64,
    pub noise_floor_dbm: f64,
    /// Headroom above a modulation's lower SNR edge when choosing its gain.
    pub margin_db: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        LinkBudget {
            tx_power_dbm_at_0_gain: 15.0,
            path_loss_db: 104.0,
            rx_noise_figure_db: 5.0,
            noise_floor_dbm: -100.0,
            margin_db: 1.0,
        }
    }
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        check_non_negative("link_budget.path_loss_db", self.path_loss_db)?;
        check_non_negative("link_budget.rx_noise_figure_db", self.rx_noise_figure_db)?;
        check_non_negative("link_budget.margin_db", self.margin_db)?;
        if !self.tx_power_dbm_at_0_gain.is_finite() || !self.noise_floor_dbm.is_finite() {
            return Err(Error::invalid("link_budget", "powers must be finite"));
        }
        Ok(())
    }

    /// Received SNR with the transmitter at `gain_db`.
    pub fn snr_at_gain(&self, gain_db: f64) -> f64 {
        self.tx_power_dbm_at_0_gain + gain_db
            - self.path_loss_db
            - (self.noise_floor_dbm + self.rx_noise_figure_db)
    }

    /// Copy whose 0-gain SNR is exactly `snr_db`.
    pub fn with_base_snr(&self, snr_db: f64) -> Self {
        LinkBudget {
            path_loss_db: self.path_loss_db + self.snr_at_gain(0.0) - snr_db,
            ..self.clone()
        }
    }
}

/// Transmit gain that lifts the received SNR to `modulation`'s lower edge plus the margin.
///
/// BPSK always runs at 0 dB. The result is clamped to `[0, gain_max_db]`: the
/// margin is soft and is given up first. Only when the lower edge itself is out
/// of reach at maximum gain is the order reported as infeasible.
pub fn required_gain(
    modulation: ModOrder,
    budget: &LinkBudget,
    table: &SnrRangeTable,
    gain_max_db: f64,
) -> Result<f64> {
    if modulation == ModOrder::Bpsk {
        return Ok(0.0);
    }
    let range = table.get(modulation).ok_or(Error::NotInTable(modulation))?;
    let base = budget.snr_at_gain(0.0);
    let to_edge = range.low_db - base;
    if to_edge > gain_max_db {
        return Err(Error::GainInfeasible {
            modulation,
            needed_db: to_edge + budget.margin_db,
            max_db: gain_max_db,
        });
    }
    Ok((to_edge + budget.margin_db).clamp(0.0, gain_max_db))
}
