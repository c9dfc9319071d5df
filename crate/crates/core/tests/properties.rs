use ews_sdr::battery::{soc_from_voltage, voltage_from_soc, BatteryState, Chemistry};
use ews_sdr::controller::{modulation_for_snr, Mode};
use ews_sdr::linksim::{run, BatterySetup, Policy, Scenario, SolarSetup};
use ews_sdr::modem::{derive_snr_ranges, monte_carlo_ber, q_function, theoretical_ber, ModOrder};
use ews_sdr::powermodel::PowerModel;
use ews_sdr::solar::{charge_current, size_system, IrradianceProfile, SizingInput};
use proptest::prelude::*;

fn chemistry() -> impl Strategy<Value = Chemistry> {
    prop_oneof![
        Just(Chemistry::LeadAcid),
        Just(Chemistry::Gel),
        Just(Chemistry::Agm)
    ]
}

fn mod_order() -> impl Strategy<Value = ModOrder> {
    (0usize..6).prop_map(|i| ModOrder::ALL[i])
}

proptest! {
    #[test]
    fn q_symmetry(x in -8.0f64..8.0) {
        prop_assert!((q_function(x) + q_function(-x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn q_decreasing(x in -8.0f64..8.0, d in 1e-3f64..1.0) {
        prop_assert!(q_function(x + d) < q_function(x));
    }

    #[test]
    fn ber_decreasing_in_snr(m in mod_order(), snr in -5.0f64..20.0, d in 0.01f64..2.0) {
        prop_assert!(theoretical_ber(m, snr + d) < theoretical_ber(m, snr));
    }

    // Dividing the symbol-error approximation by log2(M) breaks order
    // monotonicity only where BER > 0.13 (below about 2.3 dB Eb/N0).
    #[test]
    fn ber_non_decreasing_in_order(i in 1usize..5, snr in 3.0f64..40.0) {
        let (lo, hi) = (ModOrder::ALL[i], ModOrder::ALL[i + 1]);
        prop_assert!(theoretical_ber(hi, snr) >= theoretical_ber(lo, snr));
    }

    #[test]
    fn ranges_contiguous(log_thr in -9.0f64..-0.31) {
        let thr = 10f64.powf(log_thr);
        let t = derive_snr_ranges(thr, &ModOrder::ALL).unwrap();
        let e = t.entries();
        prop_assert!(!e.is_empty());
        prop_assert!(e.last().unwrap().high_db.is_none());
        for w in e.windows(2) {
            prop_assert!(w[0].modulation < w[1].modulation);
            prop_assert_eq!(w[0].high_db, Some(w[1].low_db));
            prop_assert!(w[0].low_db < w[1].low_db);
        }
    }

    #[test]
    fn mc_seed_determinism(m in mod_order(), snr in 0.0f64..20.0, seed in any::<u64>()) {
        let a = monte_carlo_ber(m, snr, 2000, seed).unwrap();
        let b = monte_carlo_ber(m, snr, 2000, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn soc_partition_conservation(
        c in 1.0f64..500.0, soc in 0.3f64..0.7, i in -5.0f64..5.0, parts in 1usize..50,
    ) {
        let total = 3600.0;
        let b = BatteryState::new(c, soc, Chemistry::Agm).unwrap();
        let one = b.step(i, total).unwrap();
        let mut many = b;
        for _ in 0..parts {
            many = many.step(i, total / parts as f64).unwrap();
        }
        prop_assert!((one.soc() - many.soc()).abs() < 1e-12);
    }

    #[test]
    fn soc_reversible(c in 1.0f64..500.0, soc in 0.0f64..=1.0, i in 0.0f64..10.0, dt in 1.0f64..3600.0) {
        let b = BatteryState::new(c, soc, Chemistry::Gel).unwrap();
        let delta = i * dt / 3600.0 / c;
        prop_assume!(soc + delta <= 1.0);
        let back = b.step(i, dt).unwrap().step(-i, dt).unwrap();
        prop_assert!((back.soc() - soc).abs() < 1e-12);
    }

    #[test]
    fn soc_monotone(c in 1.0f64..500.0, soc in 0.0f64..=1.0, i in 0.0f64..100.0, dt in 0.1f64..1e4) {
        let b = BatteryState::new(c, soc, Chemistry::Agm).unwrap();
        prop_assert!(b.step(-i, dt).unwrap().soc() <= soc);
        prop_assert!(b.step(i, dt).unwrap().soc() >= soc);
    }

    #[test]
    fn voltage_roundtrip(chem in chemistry(), soc in 0.001f64..0.999) {
        let v = voltage_from_soc(chem, soc).unwrap();
        prop_assert!((soc_from_voltage(chem, v).unwrap() - soc).abs() < 1e-9);
    }

    #[test]
    fn voltage_monotone(chem in chemistry(), a in 11.3f64..13.2, b in 11.3f64..13.2) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(soc_from_voltage(chem, lo).unwrap() <= soc_from_voltage(chem, hi).unwrap());
    }

    #[test]
    fn sizing_homogeneous(i in 0.01f64..50.0) {
        let a = size_system(&SizingInput { i_dc: i, ..SizingInput::default() }).unwrap();
        let b = size_system(&SizingInput { i_dc: 2.0 * i, ..SizingInput::default() }).unwrap();
        prop_assert_eq!(b.w_t, 2.0 * a.w_t);
        prop_assert_eq!(b.dw_t, 2.0 * a.dw_t);
        prop_assert_eq!(b.corrected_wh, 2.0 * a.corrected_wh);
        prop_assert_eq!(b.amp_hours_per_day, 2.0 * a.amp_hours_per_day);
        prop_assert_eq!(b.required_backup_ah, 2.0 * a.required_backup_ah);
        prop_assert_eq!(b.panels_parallel_raw, 2.0 * a.panels_parallel_raw);
    }

    #[test]
    fn sizing_identity(i in 0.0f64..50.0, sun in 1.0f64..12.0, w in 10.0f64..500.0, usable in 0.05f64..=1.0) {
        let input = SizingInput {
            i_dc: i, sun_hours_direct: sun, panel_watts: w, usable_fraction: usable,
            ..SizingInput::default()
        };
        let r = size_system(&input).unwrap();
        let lhs = r.panels_parallel_raw * r.panel_peak_amps * r.total_sun_hours;
        prop_assert!((lhs - r.amp_hours_per_day).abs() <= 1e-9 * r.amp_hours_per_day.max(1.0));
        prop_assert!(r.required_backup_ah >= r.amp_hours_per_day);
        prop_assert!(r.corrected_wh >= r.dw_t);
    }

    #[test]
    fn charge_current_bounded(t in 0.0f64..86_399.0, peak in 0.0f64..20.0, n in 0u32..5) {
        let p = IrradianceProfile::half_sine(20_000.0, 70_000.0, 1800.0).unwrap();
        let c = charge_current(&p, t, peak, n).unwrap();
        prop_assert!(c >= 0.0 && c <= peak * f64::from(n) + 1e-12);
    }

    #[test]
    fn draw_monotone(g1 in 0.0f64..=30.0, g2 in 0.0f64..=30.0, p1 in 0.0f64..=1.0, p2 in 0.0f64..=1.0) {
        let pm = PowerModel::default();
        let (glo, ghi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        let (plo, phi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
        prop_assert!(pm.current_draw(glo, plo).unwrap() <= pm.current_draw(ghi, plo).unwrap());
        prop_assert!(pm.current_draw(glo, plo).unwrap() <= pm.current_draw(glo, phi).unwrap());
    }

    #[test]
    fn snr_dominance_of_lookup(snr in -20.0f64..60.0) {
        let t = ews_sdr::modem::SnrRangeTable::reference();
        let m = modulation_for_snr(snr, &t);
        if let Some(r) = t.get(m) {
            prop_assert!(r.contains(snr));
        } else {
            prop_assert!(snr < 8.0);
        }
    }
}

fn dark() -> SolarSetup {
    SolarSetup {
        irradiance: IrradianceProfile::dark(),
        ..SolarSetup::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sim_conservation_and_gate(
        soc in 0.1f64..1.0, seed in any::<u64>(), qe in any::<bool>(), loss in 0.0f64..0.5,
        cap in 2.0f64..20.0,
    ) {
        let mut s = Scenario {
            duration_s: 3600.0,
            rng_seed: seed,
            battery: BatterySetup { initial_soc: soc, capacity_ah: cap, ..BatterySetup::default() },
            ..Scenario::default()
        };
        s.controller.mode = if qe { Mode::Qe } else { Mode::Ce };
        s.feedback.loss_probability = loss;
        let ts = run(&s).unwrap();
        let floor = s.controller.dod_floor;
        for (k, r) in ts.records.iter().enumerate() {
            prop_assert!(!(r.action.is_transmit() && r.soc <= floor), "transmit at soc {} step {k}", r.soc);
            prop_assert!((0.0..=1.0).contains(&r.soc));
        }
        prop_assert!(ts.records.windows(2).all(|w| w[1].t_s > w[0].t_s));

        let clamped = ts.records.iter().any(|r| r.soc == 1.0 || r.soc == 0.0) || ts.final_soc == 1.0;
        if !clamped {
            let net: f64 = ts.records.iter().map(|r| (r.current_charge_a - r.current_load_a) * s.dt_s).sum();
            let predicted = soc + net / 3600.0 / cap;
            prop_assert!((ts.final_soc - predicted).abs() < 1e-9, "{} vs {}", ts.final_soc, predicted);
        }
    }

    #[test]
    fn sim_dark_discharge_monotone(soc in 0.1f64..1.0, seed in any::<u64>()) {
        let s = Scenario {
            duration_s: 1800.0,
            rng_seed: seed,
            battery: BatterySetup { initial_soc: soc, ..BatterySetup::default() },
            solar: dark(),
            ..Scenario::default()
        };
        let ts = run(&s).unwrap();
        prop_assert!(ts.records.windows(2).all(|w| w[1].soc <= w[0].soc));
        prop_assert!(ts.final_soc <= ts.records.last().unwrap().soc);
    }

    #[test]
    fn sim_gain_ordering(g1 in 0.0f64..=30.0, g2 in 0.0f64..=30.0) {
        let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        let a = run(&Scenario::fixed_gain_reference(lo)).unwrap();
        let b = run(&Scenario::fixed_gain_reference(hi)).unwrap();
        for (x, y) in a.records.iter().zip(&b.records) {
            prop_assert!(y.soc <= x.soc);
        }
        prop_assert!(b.final_soc <= a.final_soc);
    }

    #[test]
    fn sim_dt_refinement(g in 0.0f64..=30.0, p in 0.0f64..=1.0) {
        let mut s = Scenario::fixed_gain_reference(g);
        s.policy = Policy::FixedGain { gain_db: g, p_norm: p, modulation: ModOrder::Psk16 };
        let coarse = run(&s).unwrap();
        s.dt_s = 0.5;
        let fine = run(&s).unwrap();
        prop_assert!(((coarse.final_soc - fine.final_soc) / coarse.final_soc).abs() < 1e-6);
    }
}

#[test]
fn sim_is_deterministic() {
    let s = Scenario {
        duration_s: 7200.0,
        ..Scenario::default()
    };
    let mut a = Vec::new();
    let mut b = Vec::new();
    run(&s).unwrap().write_csv(&mut a).unwrap();
    run(&s).unwrap().write_csv(&mut b).unwrap();
    assert_eq!(a, b);
}

#[test]
fn feedback_loss_staleness_is_geometric() {
    use ews_sdr::linksim::{FeedbackChannel, FeedbackConfig, Report};
    let p = 0.9;
    let mut ch = FeedbackChannel::new(&FeedbackConfig {
        delay_steps: 0,
        loss_probability: p,
        initial_snr_db: -1.0,
    });
    let mut rng = ews_sdr::rng::stream(99, 0);
    // Age of the held report at each step.
    let n = 400_000;
    let mut total_age = 0u64;
    let mut held_at_least_10 = 0u64;
    for k in 0..n {
        let got = ch.deliver(
            Report {
                snr_db: k as f64,
                gain_db: 0.0,
            },
            &mut rng,
        );
        if got.snr_db >= 0.0 {
            let age = k - got.snr_db as u64;
            total_age += age;
            held_at_least_10 += u64::from(age >= 10);
        }
    }
    // Age ~ Geometric: mean p/(1-p) = 9, P(age >= 10) = p^10.
    let mean = total_age as f64 / n as f64;
    assert!((mean - 9.0).abs() < 0.3, "mean staleness {mean}");
    let tail = held_at_least_10 as f64 / n as f64;
    assert!((tail - p.powi(10)).abs() < 0.01, "tail {tail}");
}
