use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use momtunnel::dynamics::{eom_table, Order};
use momtunnel::potential::BarrierPotential;

const REFERENCE: &str = "[packet]\nq0 = -1.8\nenergy = 0.98\n";

fn momtunnel(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_momtunnel"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn summary(path: &Path) -> toml::Table {
    fs::read_to_string(path.with_extension("summary.toml"))
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn unknown_field_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    write_config(
        dir.path(),
        "c.toml",
        "[packet]\nq0 = -2.0\nenergy = 0.98\nsigmo = 0.4\n",
    );
    let out = momtunnel(dir.path(), &["simulate", "--config", "c.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("sigmo"));
    assert!(!dir.path().join("trajectory.csv").exists());
}

#[test]
fn invalid_value_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    write_config(
        dir.path(),
        "c.toml",
        "[packet]\nq0 = -2.0\nenergy = 0.98\nsigma0 = -0.5\n",
    );
    let out = momtunnel(dir.path(), &["simulate", "--config", "c.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("sigma0"), "{}", stderr(&out));

    let out = momtunnel(dir.path(), &["simulate", "--config", "missing.toml"]);
    assert_eq!(out.status.code(), Some(1));
    let out = momtunnel(dir.path(), &["simulate", "--config", "c.toml", "--order", "4"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_writes_table_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "c.toml", REFERENCE);
    let out = momtunnel(dir.path(), &["simulate", "--config", "c.toml", "--out", "runs/ref.csv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = dir.path().join("runs/ref.csv");
    let (header, rows) = read_csv(&table);
    assert_eq!(header.join(","), include_str!("golden/order2_header.csv").trim());
    assert!(rows.len() > 100);
    assert_eq!(rows[0][0], "0");
    assert_eq!(rows[0][1], "-1.8");

    let s = summary(&table);
    assert_eq!(s["outcome"]["tag"].as_str(), Some("Reflected"));
    assert_eq!(s["run"]["termination"].as_str(), Some("escaped"));
    assert!(s["run"]["energy_drift"].as_float().unwrap() < 1e-8);
    // defaults are echoed
    assert_eq!(s["config"]["integrator"]["escape_radius"].as_float(), Some(10.0));
    assert_eq!(s["config"]["classify"]["margin"].as_float(), Some(0.05));
    assert_eq!(s["config"]["model"]["exponent"].as_integer(), Some(4));
    // only the two outputs remain in the directory
    assert_eq!(fs::read_dir(dir.path().join("runs")).unwrap().count(), 2);
}

#[test]
fn order_override_changes_columns() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "c.toml", REFERENCE);
    let out = momtunnel(
        dir.path(),
        &["simulate", "--config", "c.toml", "--order", "3", "--out", "o3.csv"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let (header, _) = read_csv(&dir.path().join("o3.csv"));
    assert_eq!(header.join(","), include_str!("golden/order3_header.csv").trim());
}

#[test]
fn classical_run_has_three_columns() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "c.toml", REFERENCE);
    let out = momtunnel(dir.path(), &["classical", "--config", "c.toml"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let (header, rows) = read_csv(&dir.path().join("classical.csv"));
    assert_eq!(header, ["t", "q", "p"]);
    assert!(rows.iter().all(|r| r.len() == 3));
    assert_eq!(
        summary(&dir.path().join("classical.csv"))["config"]["model"]["order"].as_integer(),
        Some(0)
    );
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{REFERENCE}[sweep]\nparameter = \"q0\"\nstart = -3.0\nstop = -1.5\ncount = 12\n");
    write_config(dir.path(), "c.toml", &cfg);
    for (cmd, name) in [("simulate", "s"), ("sweep", "w")] {
        for k in 0..2 {
            let out_name = format!("{name}{k}.csv");
            let out = momtunnel(dir.path(), &[cmd, "--config", "c.toml", "--out", &out_name]);
            assert!(out.status.success(), "{}", stderr(&out));
        }
        let read = |k: u32, ext: &str| fs::read(dir.path().join(format!("{name}{k}.{ext}"))).unwrap();
        assert_eq!(read(0, "csv"), read(1, "csv"));
        assert_eq!(read(0, "summary.toml"), read(1, "summary.toml"));
    }
}

#[test]
fn single_point_sweep_matches_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{REFERENCE}[sweep]\nparameter = \"q0\"\nstart = -1.8\nstop = -1.8\ncount = 1\n");
    write_config(dir.path(), "c.toml", &cfg);
    assert!(momtunnel(dir.path(), &["sweep", "--config", "c.toml"]).status.success());
    assert!(momtunnel(dir.path(), &["simulate", "--config", "c.toml"])
        .status
        .success());
    let (header, rows) = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(header.join(","), include_str!("golden/sweep_header.csv").trim());
    assert_eq!(rows.len(), 1);
    let col = |name: &str| &rows[0][header.iter().position(|h| h == name).unwrap()];
    let s = summary(&dir.path().join("trajectory.csv"));
    assert_eq!(col("tag"), s["outcome"]["tag"].as_str().unwrap());
    assert_eq!(col("termination"), s["run"]["termination"].as_str().unwrap());
    let final_q: f64 = col("final_q").parse().unwrap();
    assert_eq!(final_q, s["outcome"]["evidence"]["final_q"].as_float().unwrap());
    let drift: f64 = col("energy_drift").parse().unwrap();
    assert_eq!(drift, s["run"]["energy_drift"].as_float().unwrap());
}

#[test]
fn above_barrier_sweep_is_undetermined() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[packet]\nq0 = -3.0\np0 = 1.5\n[sweep]\nparameter = \"p0\"\nstart = 1.5\nstop = 3.0\ncount = 6\n";
    write_config(dir.path(), "c.toml", cfg);
    let out = momtunnel(dir.path(), &["sweep", "--config", "c.toml", "--order", "0"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let (_, rows) = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert_eq!(r[1], "Undetermined");
        assert_eq!(r[2], "above_barrier");
    }
    let s = summary(&dir.path().join("sweep.csv"));
    assert_eq!(s["counts"]["undetermined"].as_integer(), Some(6));
}

#[test]
fn frozen_zero_moments_surface_is_the_bare_potential() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        "{REFERENCE}[surface]\nq_min = -2.0\nq_max = 2.0\nq_count = 41\nt_min = 0.0\nt_max = 1.0\nt_count = 5\n"
    );
    write_config(dir.path(), "c.toml", &cfg);
    let out = momtunnel(dir.path(), &["surface", "--config", "c.toml", "--order", "0"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let (header, rows) = read_csv(&dir.path().join("surface.csv"));
    assert_eq!(header, ["t", "q", "V_eff"]);
    assert_eq!(rows.len(), 41 * 5);
    let pot = BarrierPotential::new(1.0, 1.0, 4).unwrap();
    for r in &rows {
        let q: f64 = r[1].parse().unwrap();
        let v: f64 = r[2].parse().unwrap();
        assert_eq!(v, pot.evaluate(q));
    }
}

#[test]
fn step_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    write_config(
        dir.path(),
        "c.toml",
        &format!("{REFERENCE}[integrator]\nmax_steps = 3\n"),
    );
    let out = momtunnel(dir.path(), &["simulate", "--config", "c.toml"]);
    assert_eq!(out.status.code(), Some(2));
    // the partial trajectory is still written
    let s = summary(&dir.path().join("trajectory.csv"));
    assert_eq!(s["run"]["termination"].as_str(), Some("step_failure"));
}

#[test]
fn algebra_report_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out = momtunnel(dir.path(), &["check-algebra"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("algebra_report.txt")).unwrap();
    assert_eq!(text, include_str!("golden/algebra_report.txt"));
    let toml_text = fs::read_to_string(dir.path().join("algebra_report.summary.toml")).unwrap();
    assert_eq!(toml_text, include_str!("golden/algebra_report.toml"));
}

#[test]
fn supplied_tables_are_checked() {
    let dir = tempfile::tempdir().unwrap();
    let table = eom_table(Order::Second).to_toml();
    fs::write(dir.path().join("good.toml"), &table).unwrap();
    let out = momtunnel(
        dir.path(),
        &["check-algebra", "--eom-table", "good.toml", "--out", "good.txt"],
    );
    assert!(out.status.success(), "{}", stderr(&out));

    // flip the sign of the coupling in dG20/dt
    let tampered = table.replacen("coefficient = \"-2\"", "coefficient = \"2\"", 1);
    assert_ne!(tampered, table);
    fs::write(dir.path().join("bad.toml"), tampered).unwrap();
    let out = momtunnel(
        dir.path(),
        &["check-algebra", "--eom-table", "bad.toml", "--out", "bad.txt"],
    );
    assert_eq!(out.status.code(), Some(3));
    let report = fs::read_to_string(dir.path().join("bad.txt")).unwrap();
    assert!(report.contains("UNEXPECTED"));

    fs::write(dir.path().join("broken.toml"), "order = 5\n").unwrap();
    let out = momtunnel(dir.path(), &["check-algebra", "--eom-table", "broken.toml"]);
    assert_eq!(out.status.code(), Some(1));
}
