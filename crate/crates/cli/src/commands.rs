use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use ews_sdr::linksim;
use ews_sdr::modem::{self, ModOrder};
use ews_sdr::solar::{size_system, PanelRounding, SizingReport};

use crate::config::ConfigDocument;
use crate::CliError;

/// Grid coordinate with float noise from `start + i * step` removed.
fn fmt_coord(x: f64) -> String {
    let r = (x * 1e9).round() / 1e9;
    format!("{}", if r == 0.0 { 0.0 } else { r })
}

fn open_out(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn parse_mods(list: &str) -> Result<Vec<ModOrder>, CliError> {
    let mut mods = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect::<Result<Vec<ModOrder>, _>>()?;
    mods.sort();
    mods.dedup();
    Ok(mods)
}

pub fn parse_list(name: &str, list: &str) -> Result<Vec<f64>, CliError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("{name}: `{s}` is not a number")))
        })
        .collect()
}

/// Inclusive `start..=stop` grid. `start == stop` gives a single point.
pub fn linear_grid(name: &str, start: f64, stop: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || stop < start {
        return Err(CliError::Usage(format!(
            "{name} range needs finite start <= stop and a positive step"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    if n > 10_000_000 {
        return Err(CliError::Usage(format!("{name} grid is too large")));
    }
    Ok((0..=n)
        .map(|i| {
            let v = start + i as f64 * step;
            (v * 1e9).round() / 1e9
        })
        .collect())
}

fn report_rows(r: &SizingReport) -> Vec<(&'static str, &'static str, String, &'static str)> {
    vec![
        ("w_t", "Total watts (DC)", format!("{:.3}", r.w_t), "W"),
        ("dw_t", "Daily usage", format!("{:.3}", r.dw_t), "Wh/d"),
        (
            "corrected_wh",
            "Corrected for battery losses",
            format!("{:.3}", r.corrected_wh),
            "Wh/d",
        ),
        (
            "amp_hours_per_day",
            "Amp-hours per day",
            format!("{:.3}", r.amp_hours_per_day),
            "Ah/d",
        ),
        (
            "required_backup_ah",
            "Required battery backup",
            format!("{:.3}", r.required_backup_ah),
            "Ah",
        ),
        (
            "total_sun_hours",
            "Total sun hours per day",
            format!("{:.3}", r.total_sun_hours),
            "h",
        ),
        (
            "amps_required",
            "Amps required from panels",
            format!("{:.0}", r.amps_required),
            "A",
        ),
        (
            "panel_peak_amps",
            "Peak panel amperage",
            format!("{:.3}", r.panel_peak_amps),
            "A",
        ),
        (
            "panels_parallel_raw",
            "Panels in parallel (raw)",
            format!("{:.3}", r.panels_parallel_raw),
            "",
        ),
        (
            "panels_parallel",
            "Panels in parallel",
            r.panels_parallel.to_string(),
            "",
        ),
        (
            "panels_total",
            "Total panels",
            r.panels_total.to_string(),
            "",
        ),
    ]
}

pub fn size(
    config: Option<&Path>,
    csv: bool,
    rounding: Option<PanelRounding>,
) -> Result<(), CliError> {
    let doc = ConfigDocument::load(config)?;
    let mut input = doc.sizing;
    if let Some(r) = rounding {
        input.rounding = r;
    }
    let report = size_system(&input)?;
    let rows = report_rows(&report);
    let mut out = open_out(None)?;
    if csv {
        writeln!(out, "field,value,unit")?;
        for (field, _, value, unit) in &rows {
            writeln!(out, "{field},{value},{unit}")?;
        }
    } else {
        let width = rows.iter().map(|r| r.1.len()).max().unwrap_or(0);
        for (_, label, value, unit) in &rows {
            writeln!(out, "{label:<width$}  {value:>10}  {unit}")?;
        }
        let policy = match input.rounding {
            PanelRounding::Ceiling => "ceiling",
            PanelRounding::NearestDown => "nearest-down",
        };
        writeln!(out, "{:<width$}  {:>10}", "Panel rounding", policy)?;
        writeln!(
            out,
            "{:<width$}  {:>10}  (pass-through)",
            "Battery amp rating (20 h)", input.battery_amp_rating_20h
        )?;
        writeln!(
            out,
            "{:<width$}  {:>10}  (pass-through)",
            "Batteries wired in series", input.batteries_in_series
        )?;
    }
    out.flush()?;
    Ok(())
}

pub struct BerArgs {
    pub mods: Vec<ModOrder>,
    pub grid: Vec<f64>,
    pub monte_carlo: Option<u64>,
    pub seed: u64,
    pub workers: usize,
    pub out: Option<PathBuf>,
}

pub fn ber(args: &BerArgs) -> Result<(), CliError> {
    let rows = modem::ber_curve(&args.mods, &args.grid)?;
    let mut out = open_out(args.out.as_deref())?;
    match args.monte_carlo {
        None => writeln!(out, "mod,snr_db,ber")?,
        Some(_) => writeln!(out, "mod,snr_db,ber,mc_ber,mc_std_err")?,
    }
    for row in rows {
        write!(
            out,
            "{},{},{:e}",
            row.modulation,
            fmt_coord(row.snr_db),
            row.ber
        )?;
        if let Some(n) = args.monte_carlo {
            let est = modem::monte_carlo_ber_split(
                row.modulation,
                row.snr_db,
                n,
                args.seed,
                args.workers,
            )?;
            write!(out, ",{:e},{:e}", est.ber, est.std_err)?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn power(
    config: Option<&Path>,
    gains: &[f64],
    p_grid: &[f64],
    out: Option<&Path>,
) -> Result<(), CliError> {
    let doc = ConfigDocument::load(config)?;
    let model = doc.power_model;
    model.validate()?;
    // Validate the whole grid before writing anything.
    let mut rows = Vec::with_capacity(gains.len() * p_grid.len());
    for &g in gains {
        for &p in p_grid {
            rows.push((g, p, model.current_draw(g, p)?));
        }
    }
    let mut w = open_out(out)?;
    writeln!(w, "gain_db,p_norm,amps")?;
    for (g, p, amps) in rows {
        writeln!(w, "{},{},{}", fmt_coord(g), fmt_coord(p), amps)?;
    }
    w.flush()?;
    Ok(())
}

pub fn simulate(config: Option<&Path>, out: Option<&Path>) -> Result<(), CliError> {
    let doc = ConfigDocument::load(config)?;
    let scenario = doc.scenario();
    let series = linksim::run(&scenario)?;
    {
        let mut w = open_out(out)?;
        series.write_csv(&mut w)?;
        w.flush()?;
    }
    let summary = series.summary();
    let mut err = io::stderr().lock();
    writeln!(
        err,
        "simulated {} s in {} steps",
        summary.duration_s,
        series.records.len()
    )?;
    writeln!(err, "final SoC: {:.6}", summary.final_soc)?;
    for (m, secs) in &summary.seconds_by_mod {
        writeln!(err, "time at {m}: {secs} s")?;
    }
    writeln!(err, "WaitForCharge fraction: {:.6}", summary.wait_fraction)?;
    Ok(())
}
