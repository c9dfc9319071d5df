use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ews-sdr"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().unwrap().iter().map(str::to_owned).collect();
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().map(str::to_owned).collect())
        .collect();
    (header, rows)
}

fn size_field(text: &str, field: &str) -> String {
    let (_, rows) = csv_rows(text);
    rows.into_iter()
        .find(|r| r[0] == field)
        .unwrap_or_else(|| panic!("no {field} row"))[1]
        .clone()
}

#[test]
fn size_table_lists_every_row() {
    let text = stdout(&run(&["size"]));
    for needle in [
        "13.800", "331.200", "337.824", "56.304", "112.608", "4.516", "6.250", "1.995",
    ] {
        assert!(text.contains(needle), "missing {needle} in\n{text}");
    }
    assert!(text.contains("ceiling"));
}

#[test]
fn size_csv_matches_table() {
    let text = stdout(&run(&["size", "--csv"]));
    let (header, rows) = csv_rows(&text);
    assert_eq!(header, ["field", "value", "unit"]);
    assert_eq!(rows.len(), 11);
    assert_eq!(size_field(&text, "w_t"), "13.800");
    assert_eq!(size_field(&text, "panels_parallel"), "2");
    let down = stdout(&run(&["size", "--csv", "--rounding", "nearest-down"]));
    assert_eq!(size_field(&down, "panels_parallel"), "1");
}

#[test]
fn size_with_zero_current() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[sizing]\ni_dc = 0.0\n");
    let text = stdout(&run(&["size", "--csv", "-c", &cfg]));
    for field in [
        "w_t",
        "dw_t",
        "corrected_wh",
        "amp_hours_per_day",
        "required_backup_ah",
    ] {
        assert_eq!(size_field(&text, field), "0.000", "{field}");
    }
    assert_eq!(size_field(&text, "panels_parallel"), "0");
}

#[test]
fn ber_single_point() {
    let text = stdout(&run(&[
        "ber",
        "--mods",
        "qpsk",
        "--snr-start",
        "8",
        "--snr-stop",
        "8",
    ]));
    let (header, rows) = csv_rows(&text);
    assert_eq!(header, ["mod", "snr_db", "ber"]);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "QPSK");
    let ber: f64 = rows[0][2].parse().unwrap();
    assert!((ber - 1.9091e-4).abs() < 1e-7, "{ber}");
}

#[test]
fn ber_default_grid_and_empty_list() {
    let text = stdout(&run(&["ber"]));
    assert_eq!(csv_rows(&text).1.len(), 5 * 61);
    let empty = stdout(&run(&["ber", "--mods", ""]));
    assert_eq!(empty, "mod,snr_db,ber\n");
}

#[test]
fn ber_monte_carlo_columns() {
    let text = stdout(&run(&[
        "ber",
        "--mods",
        "bpsk",
        "--snr-start",
        "2",
        "--snr-stop",
        "2",
        "--monte-carlo",
        "20000",
    ]));
    let (header, rows) = csv_rows(&text);
    assert_eq!(header, ["mod", "snr_db", "ber", "mc_ber", "mc_std_err"]);
    let ber: f64 = rows[0][2].parse().unwrap();
    let mc: f64 = rows[0][3].parse().unwrap();
    let se: f64 = rows[0][4].parse().unwrap();
    assert!((mc - ber).abs() < 4.0 * se);
}

#[test]
fn ber_rejects_bad_input() {
    assert_eq!(
        run(&["ber", "--snr-start", "5", "--snr-stop", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["ber", "--mods", "qam16"]).status.code(), Some(2));
    assert_eq!(run(&["ber", "--monte-carlo", "10"]).status.code(), Some(2));
}

#[test]
fn power_grid() {
    let text = stdout(&run(&["power"]));
    let (header, rows) = csv_rows(&text);
    assert_eq!(header, ["gain_db", "p_norm", "amps"]);
    assert_eq!(rows.len(), 44);
    let cell = |g: &str, p: &str| -> f64 {
        rows.iter().find(|r| r[0] == g && r[1] == p).unwrap()[2]
            .parse()
            .unwrap()
    };
    assert_eq!(cell("0", "0"), 1.3);
    assert!((cell("30", "1") - 3.6).abs() < 1e-12);
    let sweep: Vec<f64> = ["0", "10", "20", "30"]
        .iter()
        .map(|g| cell(g, "1"))
        .collect();
    assert!(sweep.windows(2).all(|w| w[1] > w[0]), "{sweep:?}");
}

#[test]
fn power_rejects_out_of_domain() {
    assert_eq!(run(&["power", "--gains", "40"]).status.code(), Some(2));
    assert_eq!(run(&["power", "--p-stop", "1.5"]).status.code(), Some(2));
}

#[test]
fn simulate_zero_duration_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[simulation]\nduration_s = 0.0\n");
    let out = dir.path().join("out.csv");
    let status = run(&["simulate", "-c", &cfg, "-o", out.to_str().unwrap()]);
    assert!(status.status.success());
    assert_eq!(
        std::fs::read_to_string(&out).unwrap(),
        format!("{}\n", ews_sdr::linksim::CSV_HEADER)
    );
}

#[test]
fn simulate_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[simulation]\nduration_s = 3600.0\n");
    let text = stdout(&run(&["simulate", "-c", &cfg]));
    let scenario = ews_sdr::linksim::Scenario {
        duration_s: 3600.0,
        ..Default::default()
    };
    let series = ews_sdr::linksim::run(&scenario).unwrap();
    let (header, rows) = csv_rows(&text);
    assert_eq!(header.join(","), ews_sdr::linksim::CSV_HEADER);
    assert_eq!(rows.len(), series.records.len());
    for (row, rec) in rows.iter().zip(&series.records) {
        assert_eq!(row[0].parse::<f64>().unwrap(), rec.t_s);
        assert_eq!(row[1].parse::<f64>().unwrap(), rec.soc);
        assert_eq!(row[2].parse::<f64>().unwrap(), rec.battery_voltage_v);
        assert_eq!(row[3].parse::<f64>().unwrap(), rec.snr_true_db);
        assert_eq!(row[4].parse::<f64>().unwrap(), rec.snr_reported_db);
        assert_eq!(row[6].parse::<f64>().unwrap(), rec.action.gain_db());
        assert_eq!(row[7].parse::<f64>().unwrap(), rec.current_load_a);
        assert_eq!(row[8].parse::<f64>().unwrap(), rec.current_charge_a);
    }
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[simulation]\nduration_s = 7200.0\n");
    let a = stdout(&run(&["simulate", "-c", &cfg]));
    let b = stdout(&run(&["simulate", "-c", &cfg]));
    assert_eq!(a, b);
}

#[test]
fn exit_codes_separate_validation_from_io() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "[simulation]\ndt_s = -1.0\n");
    let out = run(&["simulate", "-c", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dt_s"));

    let typo = write_config(dir.path(), "[sizing]\ni_dcc = 1.0\n");
    assert_eq!(run(&["size", "-c", &typo]).status.code(), Some(2));

    let missing = dir.path().join("absent.toml");
    assert_eq!(
        run(&["size", "-c", missing.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );

    let unwritable = dir.path().join("no/such/dir/out.csv");
    assert_eq!(
        run(&["power", "-o", unwritable.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn defaults_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&run(&["defaults"]));
    let cfg = write_config(dir.path(), &text);
    let a = stdout(&run(&["size", "--csv", "-c", &cfg]));
    let b = stdout(&run(&["size", "--csv"]));
    assert_eq!(a, b);
}

#[test]
fn shipped_scenarios_run() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            let out = bin().args(["simulate", "-c"]).arg(&p).output().unwrap();
            assert!(
                out.status.success(),
                "{}: {}",
                p.display(),
                String::from_utf8_lossy(&out.stderr)
            );
            n += 1;
        }
    }
    assert!(n >= 5);
}
