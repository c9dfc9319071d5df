//! Fixed-step closed-loop simulation of the solar-powered link.
//!
//! Every step the receiver measures SNR and sends it back over the feedback
//! channel. On controller steps the transmitter picks an action from the
//! delivered report. The battery integrates the net current of solar charge
//! minus radio load. The depth-of-discharge gate is re-checked every step, so
//! a transmission never outlives the floor by more than one step.

use std::collections::{BTreeMap, VecDeque};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::battery::{BatteryState, Chemistry, SocVoltageTable};
use crate::controller::{ews_sdr_step, Action, ControllerConfig, Decision, Reason};
use crate::error::{check_non_negative, check_positive, check_range, Error, Result};
use crate::modem::ModOrder;
use crate::powermodel::{LinkBudget, PowerModel};
use crate::rng::{self, SimRng};
use crate::solar::{charge_current, IrradianceProfile, SECONDS_PER_DAY};

/// Length of the reference fixed-gain discharge run, seconds.
///
/// With the default power model and battery, the 0 dB and 30 dB full-power
/// runs end this many seconds later about 3.57 points of SoC apart.
pub const REFERENCE_DISCHARGE_S: f64 = 6300.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatterySetup {
    pub capacity_ah: f64,
    pub initial_soc: f64,
    pub chemistry: Chemistry,
    /// Nominal bank voltage; the 12 V-class lookup table is scaled to it.
    pub bank_voltage_v: f64,
    /// Optional `(soc, volts)` rows replacing the chemistry's built-in table.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub voltage_table: Option<Vec<(f64, f64)>>,
}

impl Default for BatterySetup {
    fn default() -> Self {
        BatterySetup {
            capacity_ah: 112.608,
            initial_soc: 1.0,
            chemistry: Chemistry::Agm,
            bank_voltage_v: 6.0,
            voltage_table: None,
        }
    }
}

impl BatterySetup {
    pub fn state(&self) -> Result<BatteryState> {
        BatteryState::new(self.capacity_ah, self.initial_soc, self.chemistry)
    }

    pub fn table(&self) -> Result<SocVoltageTable> {
        match &self.voltage_table {
            Some(rows) => SocVoltageTable::new(rows.clone()),
            None => Ok(SocVoltageTable::builtin(self.chemistry)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolarSetup {
    pub panel_peak_amps: f64,
    pub panels_parallel: u32,
    /// Time of day at simulation start, seconds after midnight.
    pub start_time_of_day_s: f64,
    pub irradiance: IrradianceProfile,
}

impl Default for SolarSetup {
    fn default() -> Self {
        SolarSetup {
            panel_peak_amps: 6.25,
            panels_parallel: 2,
            start_time_of_day_s: 0.0,
            irradiance: IrradianceProfile::half_sine(21_600.0, 64_800.0, 3600.0)
                .expect("static profile is valid"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeedbackConfig {
    /// Reports reach the transmitter this many steps late.
    pub delay_steps: u32,
    /// Chance that a report is lost; the transmitter then keeps the last one.
    pub loss_probability: f64,
    /// SNR assumed before the first report arrives, referred to 0 dB gain.
    pub initial_snr_db: f64,
}

impl Default for FeedbackConfig {
    fn default() -> Self {
        FeedbackConfig {
            delay_steps: 1,
            loss_probability: 0.05,
            initial_snr_db: 0.0,
        }
    }
}

impl FeedbackConfig {
    pub fn validate(&self) -> Result<()> {
        check_range("feedback.loss_probability", self.loss_probability, 0.0, 1.0)?;
        if self.loss_probability >= 1.0 {
            return Err(Error::invalid(
                "feedback.loss_probability",
                "must be below 1",
            ));
        }
        if !self.initial_snr_db.is_finite() {
            return Err(Error::invalid("feedback.initial_snr_db", "must be finite"));
        }
        Ok(())
    }
}

/// Who sets the transmit gain.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Policy {
    /// The energy-aware controller.
    #[default]
    Adaptive,
    /// Constant gain and power, still subject to the depth-of-discharge gate.
    FixedGain {
        gain_db: f64,
        #[serde(default = "one")]
        p_norm: f64,
        #[serde(default = "qpsk")]
        modulation: ModOrder,
    },
}

fn one() -> f64 {
    1.0
}

fn qpsk() -> ModOrder {
    ModOrder::Qpsk
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub duration_s: f64,
    pub dt_s: f64,
    pub controller_period_s: f64,
    /// Standard deviation of the receiver's SNR estimate, dB.
    pub snr_noise_std_db: f64,
    pub rng_seed: u64,
    /// RF output, as a fraction of full scale, while transmitting adaptively.
    pub tx_power_norm: f64,
    /// Cut the electronics entirely while waiting for charge.
    pub shutdown_on_wait: bool,
    pub battery: BatterySetup,
    pub power_model: PowerModel,
    pub link_budget: LinkBudget,
    pub controller: ControllerConfig,
    pub solar: SolarSetup,
    pub feedback: FeedbackConfig,
    pub policy: Policy,
}

impl Default for Scenario {
    /// One day of adaptive operation from a full battery, starting at midnight.
    fn default() -> Self {
        Scenario {
            duration_s: SECONDS_PER_DAY,
            dt_s: 1.0,
            controller_period_s: 10.0,
            snr_noise_std_db: 1.0,
            rng_seed: 42,
            tx_power_norm: 1.0,
            shutdown_on_wait: false,
            battery: BatterySetup::default(),
            power_model: PowerModel::default(),
            link_budget: LinkBudget::default(),
            controller: ControllerConfig::default(),
            solar: SolarSetup::default(),
            feedback: FeedbackConfig::default(),
            policy: Policy::Adaptive,
        }
    }
}

/// Whole number of `dt` steps in `span`, or an error naming `field`.
fn steps_in(field: &str, span: f64, dt: f64) -> Result<u64> {
    let n = (span / dt).round();
    if (n * dt - span).abs() > 1e-9 * span.max(dt) {
        return Err(Error::invalid(
            field,
            format!("{span} is not a whole number of {dt} s steps"),
        ));
    }
    Ok(n as u64)
}

impl Scenario {
    /// Full-battery, no-sun discharge at a pinned gain and full RF power.
    pub fn fixed_gain_reference(gain_db: f64) -> Self {
        Scenario {
            duration_s: REFERENCE_DISCHARGE_S,
            snr_noise_std_db: 0.0,
            solar: SolarSetup {
                irradiance: IrradianceProfile::dark(),
                ..SolarSetup::default()
            },
            feedback: FeedbackConfig {
                loss_probability: 0.0,
                ..FeedbackConfig::default()
            },
            policy: Policy::FixedGain {
                gain_db,
                p_norm: 1.0,
                modulation: ModOrder::Qpsk,
            },
            ..Scenario::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_non_negative("duration_s", self.duration_s)?;
        check_positive("dt_s", self.dt_s)?;
        check_positive("controller_period_s", self.controller_period_s)?;
        if self.controller_period_s < self.dt_s {
            return Err(Error::invalid(
                "controller_period_s",
                "must be at least dt_s",
            ));
        }
        if self.duration_s > 0.0 && self.duration_s < self.controller_period_s {
            return Err(Error::invalid(
                "duration_s",
                "must be zero or at least controller_period_s",
            ));
        }
        steps_in("duration_s", self.duration_s, self.dt_s)?;
        steps_in("controller_period_s", self.controller_period_s, self.dt_s)?;
        check_non_negative("snr_noise_std_db", self.snr_noise_std_db)?;
        check_range("tx_power_norm", self.tx_power_norm, 0.0, 1.0)?;
        self.battery.state()?;
        self.battery.table()?;
        check_positive("battery.bank_voltage_v", self.battery.bank_voltage_v)?;
        self.power_model.validate()?;
        self.link_budget.validate()?;
        self.controller.validate()?;
        check_non_negative("solar.panel_peak_amps", self.solar.panel_peak_amps)?;
        check_range(
            "solar.start_time_of_day_s",
            self.solar.start_time_of_day_s,
            0.0,
            SECONDS_PER_DAY,
        )?;
        if self.solar.start_time_of_day_s >= SECONDS_PER_DAY {
            return Err(Error::invalid(
                "solar.start_time_of_day_s",
                "must be below 86400",
            ));
        }
        self.feedback.validate()?;
        if let Policy::FixedGain {
            gain_db, p_norm, ..
        } = self.policy
        {
            check_range("policy.gain_db", gain_db, 0.0, self.power_model.gain_max_db)?;
            check_range("policy.p_norm", p_norm, 0.0, 1.0)?;
        }
        Ok(())
    }
}

/// Receiver SNR estimate: the true value plus Gaussian error.
pub fn measure_snr<R: rand::Rng + ?Sized>(true_snr_db: f64, noise_std_db: f64, rng: &mut R) -> f64 {
    true_snr_db + noise_std_db * rng::normal(rng)
}

/// SNR report carried on the feedback link, tagged with the transmit gain it was measured at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Report {
    pub snr_db: f64,
    pub gain_db: f64,
}

/// Delay line with random loss and hold-last-delivered semantics.
#[derive(Debug, Clone)]
pub struct FeedbackChannel {
    delay: usize,
    loss_probability: f64,
    in_flight: VecDeque<Report>,
    last: Report,
}

impl FeedbackChannel {
    pub fn new(cfg: &FeedbackConfig) -> Self {
        FeedbackChannel {
            delay: cfg.delay_steps as usize,
            loss_probability: cfg.loss_probability,
            in_flight: VecDeque::with_capacity(cfg.delay_steps as usize + 1),
            last: Report {
                snr_db: cfg.initial_snr_db,
                gain_db: 0.0,
            },
        }
    }

    /// Sends this step's report and returns what the transmitter now holds.
    pub fn deliver<R: rand::Rng + ?Sized>(&mut self, report: Report, rng: &mut R) -> Report {
        self.in_flight.push_back(report);
        if self.in_flight.len() > self.delay {
            let arriving = self.in_flight.pop_front().expect("queue is non-empty");
            if rng::uniform(rng) >= self.loss_probability {
                self.last = arriving;
            }
        }
        self.last
    }
}

/// One logged step. State values are taken at the start of the step; the
/// currents are held over `[t_s, t_s + dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub t_s: f64,
    pub soc: f64,
    pub battery_voltage_v: f64,
    pub snr_true_db: f64,
    pub snr_reported_db: f64,
    pub action: Action,
    pub current_load_a: f64,
    pub current_charge_a: f64,
    pub reason: Reason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub records: Vec<Record>,
    pub dt_s: f64,
    pub capacity_ah: f64,
    pub initial_soc: f64,
    pub final_soc: f64,
}

pub const CSV_HEADER: &str =
    "t_s,soc,voltage_v,snr_true_db,snr_reported_db,mod,gain_db,i_load_a,i_charge_a,action,reason";

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub final_soc: f64,
    pub duration_s: f64,
    pub seconds_by_mod: BTreeMap<ModOrder, f64>,
    pub wait_fraction: f64,
}

impl TimeSeries {
    /// Writes the log as CSV. Numbers use the shortest representation that
    /// parses back to the same `f64`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.records {
            let (modulation, action) = match r.action {
                Action::Transmit { modulation, .. } => (modulation.name(), "Transmit"),
                Action::WaitForCharge => ("none", "WaitForCharge"),
            };
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.t_s,
                r.soc,
                r.battery_voltage_v,
                r.snr_true_db,
                r.snr_reported_db,
                modulation,
                r.action.gain_db(),
                r.current_load_a,
                r.current_charge_a,
                action,
                r.reason.as_str()
            )?;
        }
        Ok(())
    }

    pub fn summary(&self) -> Summary {
        let mut seconds_by_mod = BTreeMap::new();
        let mut waiting = 0usize;
        for r in &self.records {
            match r.action.modulation() {
                Some(m) => *seconds_by_mod.entry(m).or_insert(0.0) += self.dt_s,
                None => waiting += 1,
            }
        }
        let n = self.records.len();
        Summary {
            final_soc: self.final_soc,
            duration_s: n as f64 * self.dt_s,
            seconds_by_mod,
            wait_fraction: if n == 0 {
                0.0
            } else {
                waiting as f64 / n as f64
            },
        }
    }
}

fn decide(scenario: &Scenario, delivered: Report, battery: &BatteryState) -> Result<Decision> {
    match &scenario.policy {
        Policy::Adaptive => {
            // The controller reasons about what the link reaches at full gain.
            let snr_at_max =
                delivered.snr_db - delivered.gain_db + scenario.power_model.gain_max_db;
            ews_sdr_step(
                snr_at_max,
                battery,
                &scenario.power_model,
                &scenario.link_budget,
                &scenario.controller,
            )
        }
        Policy::FixedGain {
            gain_db,
            modulation,
            ..
        } => {
            if battery.soc() <= scenario.controller.dod_floor {
                return Ok(Decision::wait());
            }
            Ok(Decision {
                action: Action::Transmit {
                    modulation: *modulation,
                    gain_db: *gain_db,
                },
                att_by_mod: BTreeMap::new(),
                reason: Reason::FixedGain,
            })
        }
    }
}

/// Runs the scenario to completion. Deterministic for a given `rng_seed`.
pub fn run(scenario: &Scenario) -> Result<TimeSeries> {
    scenario.validate()?;
    let dt = scenario.dt_s;
    let n_steps = steps_in("duration_s", scenario.duration_s, dt)?;
    let period_steps = steps_in("controller_period_s", scenario.controller_period_s, dt)?;
    let table = scenario.battery.table()?;
    let volt_scale = scenario.battery.bank_voltage_v / 12.0;
    let p_norm = match scenario.policy {
        Policy::Adaptive => scenario.tx_power_norm,
        Policy::FixedGain { p_norm, .. } => p_norm,
    };
    let idle_load = if scenario.shutdown_on_wait {
        0.0
    } else {
        scenario.power_model.i_base
    };

    let mut measure_rng: SimRng = rng::stream(scenario.rng_seed, 1);
    let mut feedback_rng: SimRng = rng::stream(scenario.rng_seed, 2);
    let mut channel = FeedbackChannel::new(&scenario.feedback);

    let mut battery = scenario.battery.state()?;
    let mut decision = Decision::wait();
    let mut gain_now = 0.0;
    let mut records = Vec::with_capacity(n_steps as usize);

    for k in 0..n_steps {
        let t_s = k as f64 * dt;
        let snr_true_db = scenario.link_budget.snr_at_gain(gain_now);
        let measured = measure_snr(snr_true_db, scenario.snr_noise_std_db, &mut measure_rng);
        let delivered = channel.deliver(
            Report {
                snr_db: measured,
                gain_db: gain_now,
            },
            &mut feedback_rng,
        );

        if k % period_steps == 0 {
            decision = decide(scenario, delivered, &battery)?;
        } else if decision.action.is_transmit() && battery.soc() <= scenario.controller.dod_floor {
            decision = Decision::wait();
        }

        let load = match decision.action {
            Action::Transmit { gain_db, .. } => {
                scenario.power_model.current_draw(gain_db, p_norm)?
            }
            Action::WaitForCharge => idle_load,
        };
        let time_of_day = (scenario.solar.start_time_of_day_s + t_s).rem_euclid(SECONDS_PER_DAY);
        let charge = charge_current(
            &scenario.solar.irradiance,
            time_of_day,
            scenario.solar.panel_peak_amps,
            scenario.solar.panels_parallel,
        )?;

        records.push(Record {
            t_s,
            soc: battery.soc(),
            battery_voltage_v: table.voltage_at(battery.soc())? * volt_scale,
            snr_true_db,
            snr_reported_db: delivered.snr_db,
            action: decision.action,
            current_load_a: load,
            current_charge_a: charge,
            reason: decision.reason,
        });

        battery = battery.step(charge - load, dt)?;
        gain_now = decision.action.gain_db();
    }

    Ok(TimeSeries {
        records,
        dt_s: dt,
        capacity_ah: scenario.battery.capacity_ah,
        initial_soc: scenario.battery.initial_soc,
        final_soc: battery.soc(),
    })
}
