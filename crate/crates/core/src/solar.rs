//! Off-grid PV sizing and the charge current the array delivers over a day.

use serde::{Deserialize, Serialize};

use crate::error::{check_non_negative, check_positive, check_range, Error, Result};

pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// Watt demand of a DC load.
pub fn watt_demand(i_dc: f64, v_dc: f64) -> Result<f64> {
    check_non_negative("i_dc", i_dc)?;
    check_non_negative("v_dc", v_dc)?;
    Ok(i_dc * v_dc)
}

/// Daily energy of a constant load, watt-hours per day.
pub fn daily_watt_hours(watts: f64, hours: f64) -> Result<f64> {
    check_non_negative("watts", watts)?;
    check_non_negative("hours_per_day", hours)?;
    Ok(watts * hours)
}

/// How the raw parallel panel count becomes an integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PanelRounding {
    /// Round up so the array covers demand.
    #[default]
    Ceiling,
    /// Round down to the nearest whole panel.
    NearestDown,
}

impl PanelRounding {
    fn apply(self, raw: f64) -> u32 {
        match self {
            PanelRounding::Ceiling => raw.ceil() as u32,
            PanelRounding::NearestDown => raw.floor() as u32,
        }
    }
}

/// Inputs of the sizing chain. Defaults reproduce the reference USRP N200 installation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SizingInput {
    /// Load current, A.
    pub i_dc: f64,
    /// Load voltage, V.
    pub v_dc: f64,
    pub hours_per_day: f64,
    /// Static battery-loss multiplier on daily energy.
    pub loss_factor: f64,
    /// Battery bank voltage, V.
    pub system_voltage: f64,
    pub backup_days: f64,
    /// Fraction of the bank that may be drawn between recharges.
    pub usable_fraction: f64,
    /// Direct sun hours per day.
    pub sun_hours_direct: f64,
    pub worst_weather_multiplier: f64,
    pub panel_watts: f64,
    pub panel_nominal_voltage: f64,
    pub panels_in_series: u32,
    pub rounding: PanelRounding,
    /// Battery amp rating (20 h), carried through unchanged.
    pub battery_amp_rating_20h: f64,
    /// Batteries wired in series, carried through unchanged.
    pub batteries_in_series: f64,
}

impl Default for SizingInput {
    fn default() -> Self {
        SizingInput {
            i_dc: 2.3,
            v_dc: 6.0,
            hours_per_day: 24.0,
            loss_factor: 1.02,
            system_voltage: 6.0,
            backup_days: 1.0,
            usable_fraction: 0.5,
            sun_hours_direct: 7.0,
            worst_weather_multiplier: 1.55,
            panel_watts: 100.0,
            panel_nominal_voltage: 16.0,
            panels_in_series: 1,
            rounding: PanelRounding::Ceiling,
            battery_amp_rating_20h: 0.2,
            batteries_in_series: 0.5,
        }
    }
}

impl SizingInput {
    pub fn validate(&self) -> Result<()> {
        check_non_negative("i_dc", self.i_dc)?;
        check_positive("v_dc", self.v_dc)?;
        check_range("hours_per_day", self.hours_per_day, 0.0, 24.0)?;
        check_range("loss_factor", self.loss_factor, 1.0, f64::MAX)?;
        check_positive("system_voltage", self.system_voltage)?;
        check_positive("backup_days", self.backup_days)?;
        check_positive("usable_fraction", self.usable_fraction)?;
        check_range("usable_fraction", self.usable_fraction, 0.0, 1.0)?;
        check_positive("sun_hours_direct", self.sun_hours_direct)?;
        check_range(
            "worst_weather_multiplier",
            self.worst_weather_multiplier,
            1.0,
            f64::MAX,
        )?;
        check_positive("panel_watts", self.panel_watts)?;
        check_positive("panel_nominal_voltage", self.panel_nominal_voltage)?;
        if self.panels_in_series == 0 {
            return Err(Error::invalid("panels_in_series", "must be at least 1"));
        }
        Ok(())
    }
}

/// Every intermediate value of the sizing chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizingReport {
    /// Load power, W.
    pub w_t: f64,
    /// Daily energy, Wh/day.
    pub dw_t: f64,
    /// Daily energy after battery losses, Wh/day.
    pub corrected_wh: f64,
    pub amp_hours_per_day: f64,
    /// Bank capacity needed, Ah.
    pub required_backup_ah: f64,
    /// Effective sun hours after the weather derating.
    pub total_sun_hours: f64,
    /// Daily amp-hours, truncated to a whole number.
    pub amps_required: f64,
    pub panel_peak_amps: f64,
    pub panels_parallel_raw: f64,
    pub panels_parallel: u32,
    pub panels_total: u32,
}

pub fn size_system(input: &SizingInput) -> Result<SizingReport> {
    input.validate()?;
    let w_t = watt_demand(input.i_dc, input.v_dc)?;
    let dw_t = daily_watt_hours(w_t, input.hours_per_day)?;
    let corrected_wh = dw_t * input.loss_factor;
    let amp_hours_per_day = corrected_wh / input.system_voltage;
    let required_backup_ah = amp_hours_per_day * input.backup_days / input.usable_fraction;
    let total_sun_hours = input.sun_hours_direct / input.worst_weather_multiplier;
    let panel_peak_amps = input.panel_watts / input.panel_nominal_voltage;
    let panels_parallel_raw = amp_hours_per_day / (panel_peak_amps * total_sun_hours);
    let panels_parallel = input.rounding.apply(panels_parallel_raw);
    Ok(SizingReport {
        w_t,
        dw_t,
        corrected_wh,
        amp_hours_per_day,
        required_backup_ah,
        total_sun_hours,
        amps_required: amp_hours_per_day.floor(),
        panel_peak_amps,
        panels_parallel_raw,
        panels_parallel,
        panels_total: panels_parallel * input.panels_in_series,
    })
}

/// Irradiance over one day as a fraction of panel peak output.
///
/// Samples are `(seconds since midnight, fraction)`; linear in between and
/// zero outside the sampled span.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct IrradianceProfile {
    samples: Vec<(f64, f64)>,
}

impl IrradianceProfile {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        for &(t, f) in &samples {
            check_range("irradiance.time_s", t, 0.0, SECONDS_PER_DAY)?;
            check_range("irradiance.fraction", f, 0.0, 1.0)?;
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid(
                "irradiance",
                "sample times must be strictly increasing",
            ));
        }
        Ok(IrradianceProfile { samples })
    }

    /// No sun at all.
    pub fn dark() -> Self {
        IrradianceProfile::default()
    }

    /// The same fraction all day.
    pub fn flat(fraction: f64) -> Result<Self> {
        Self::new(vec![(0.0, fraction), (SECONDS_PER_DAY, fraction)])
    }

    /// Half-sine day between `sunrise_s` and `sunset_s`, sampled every `step_s`.
    pub fn half_sine(sunrise_s: f64, sunset_s: f64, step_s: f64) -> Result<Self> {
        check_positive("step_s", step_s)?;
        if !(0.0 <= sunrise_s && sunrise_s < sunset_s && sunset_s <= SECONDS_PER_DAY) {
            return Err(Error::invalid(
                "irradiance",
                "need 0 <= sunrise < sunset <= 86400",
            ));
        }
        let n = ((sunset_s - sunrise_s) / step_s).ceil() as usize;
        let samples = (0..=n)
            .map(|i| {
                let t = (sunrise_s + i as f64 * step_s).min(sunset_s);
                let phase = (t - sunrise_s) / (sunset_s - sunrise_s);
                let f = if phase >= 1.0 {
                    0.0
                } else {
                    (std::f64::consts::PI * phase).sin()
                };
                (t, f.clamp(0.0, 1.0))
            })
            .collect::<Vec<_>>();
        let mut dedup: Vec<(f64, f64)> = Vec::with_capacity(samples.len());
        for s in samples {
            if dedup.last().is_none_or(|p| s.0 > p.0) {
                dedup.push(s);
            }
        }
        Self::new(dedup)
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    /// Irradiance fraction at time of day `t_s`.
    pub fn fraction_at(&self, t_s: f64) -> f64 {
        let s = &self.samples;
        let (Some(first), Some(last)) = (s.first(), s.last()) else {
            return 0.0;
        };
        if t_s < first.0 || t_s > last.0 {
            return 0.0;
        }
        let i = s.partition_point(|p| p.0 <= t_s);
        if i == 0 {
            return first.1;
        }
        if i == s.len() {
            return last.1;
        }
        let ((t0, f0), (t1, f1)) = (s[i - 1], s[i]);
        f0 + (f1 - f0) * (t_s - t0) / (t1 - t0)
    }
}

impl TryFrom<Vec<(f64, f64)>> for IrradianceProfile {
    type Error = Error;
    fn try_from(v: Vec<(f64, f64)>) -> Result<Self> {
        IrradianceProfile::new(v)
    }
}

impl From<IrradianceProfile> for Vec<(f64, f64)> {
    fn from(p: IrradianceProfile) -> Self {
        p.samples
    }
}

/// Array output current at time of day `t_s`.
pub fn charge_current(
    profile: &IrradianceProfile,
    t_s: f64,
    panel_peak_amps: f64,
    panels_parallel: u32,
) -> Result<f64> {
    if !t_s.is_finite() || !(0.0..SECONDS_PER_DAY).contains(&t_s) {
        return Err(Error::invalid("t_s", format!("{t_s} is not a time of day")));
    }
    check_non_negative("panel_peak_amps", panel_peak_amps)?;
    Ok(profile.fraction_at(t_s) * panel_peak_amps * f64::from(panels_parallel))
}
