//! End-to-end tests of the `slagwall` binary.

use std::path::Path;
use std::process::{Command, Output};

const PI_6: &str = "0.5235987755982988";

fn slagwall(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slagwall"))
        .args(args)
        .current_dir(dir)
        .env_remove("SLAGWALL_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value(report: &str, key: &str) -> String {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in\n{report}"))
        .to_string()
}

fn num(report: &str, key: &str) -> f64 {
    value(report, key).parse().unwrap()
}

fn assert_success(o: &Output) {
    assert_eq!(o.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stderr.is_empty(), "stderr on success: {}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn params_closed_forms_at_pi_over_six() {
    let dir = tempfile::tempdir().unwrap();
    let o = slagwall(dir.path(), &["params", "--n", "2", "--theta", PI_6]);
    assert_success(&o);
    let s = stdout(&o);
    let sqrt3 = 3f64.sqrt();
    assert!((num(&s, "a") - 2.0).abs() < 1e-12);
    assert!((num(&s, "q") + sqrt3).abs() < 1e-12);
    assert!((num(&s, "p") + 2.0 * sqrt3).abs() < 1e-12);
    assert!((num(&s, "ratio") - 4.0).abs() < 1e-12);
    assert!((num(&s, "k") - 0.5773502691896258).abs() < 1e-12);
    assert_eq!(value(&s, "admissible"), "true");
    assert_eq!(value(&s, "same_component"), "true");
    // Nothing is written for `params`.
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn params_from_p_recovers_theta() {
    let dir = tempfile::tempdir().unwrap();
    let o = slagwall(dir.path(), &["params", "--n", "3", "--p", "-1"]);
    assert_success(&o);
    let theta = num(&stdout(&o), "theta");
    assert!((theta - (2.0f64 / 3.0).atan()).abs() < 1e-12, "{theta}");
}

#[test]
fn params_csv_has_fixed_header() {
    let dir = tempfile::tempdir().unwrap();
    let o = slagwall(dir.path(), &["params", "--n", "2", "--theta", PI_6, "--csv"]);
    assert_success(&o);
    let s = stdout(&o);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "n,m,theta,c,q,a,p,ratio,same_component,k,kq,kap");
    assert_eq!(lines[1].split(',').count(), 12);
}

#[test]
fn degrees_flag_converts() {
    let dir = tempfile::tempdir().unwrap();
    let rad = stdout(&slagwall(dir.path(), &["params", "--n", "2", "--theta", PI_6]));
    let deg = stdout(&slagwall(dir.path(), &["params", "--n", "2", "--theta", "30", "--degrees"]));
    assert!((num(&rad, "a") - num(&deg, "a")).abs() < 1e-12);
}

#[test]
fn exit_codes_follow_the_map() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[(&[&str], i32)] = &[
        (&["params", "--n", "2", "--theta", "1.5707963267948966"], 2),
        (&["params", "--n", "1", "--theta", "1"], 64),
        (&["params", "--n", "2"], 64),
        (&["params", "--n", "2", "--theta", "0.5", "--p", "-1"], 64),
        (&["params", "--n", "two", "--theta", "0.5"], 64),
        (&["frobnicate"], 64),
        (&["wall", "--n", "2", "--theta", PI_6, "--bridgeland"], 64),
        (&["flow", "--n", "2", "--theta", PI_6, "--b", "1"], 64),
        (&["levelset", "--n", "3", "--theta", "1", "--c", "1", "--window", "1,0,0,1"], 64),
    ];
    for (args, code) in cases {
        let o = slagwall(dir.path(), args);
        assert_eq!(o.status.code(), Some(*code), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty(), "{args:?} reported nothing");
    }
}

#[test]
fn unwritable_output_directory_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "not a directory").unwrap();
    let out = blocker.join("sub");
    let o = slagwall(
        dir.path(),
        &["levelset", "--n", "2", "--theta", "1", "--c", "1", "--out-dir", out.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(74));
}

#[test]
fn help_documents_csv_schemas() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, column) in [("levelset", "component,x,y"), ("wall", "lambda1"), ("flow", "barrier_ok"), ("bundle", "NAME.csv")] {
        let o = slagwall(dir.path(), &[cmd, "--help"]);
        assert_success(&o);
        assert!(stdout(&o).contains(column), "{cmd} help lacks {column}");
    }
}

#[test]
fn wall_verdicts_flip_at_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = slagwall(dir.path(), &["wall", "--n", "2", "--theta", PI_6, "--b", "0.99,1,1.01"]);
    assert_success(&o);
    let csv = std::fs::read_to_string(dir.path().join("wall.csv")).unwrap();
    let verdicts: Vec<&str> = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(verdicts, ["Stable", "Wall", "Unstable"]);
}

#[test]
fn wall_bridgeland_columns_for_threefolds() {
    let dir = tempfile::tempdir().unwrap();
    let plain = slagwall(dir.path(), &["wall", "--n", "3", "--theta", "1", "--b-range", "0.95,1.05,5", "--name", "plain"]);
    assert_success(&plain);
    let with = slagwall(dir.path(), &["wall", "--n", "3", "--theta", "1", "--b-range", "0.95,1.05,5", "--bridgeland"]);
    assert_success(&with);
    let a = std::fs::read_to_string(dir.path().join("plain.csv")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("wall.csv")).unwrap();
    assert_eq!(a.lines().count(), 6);
    let (ha, hb) = (a.lines().next().unwrap(), b.lines().next().unwrap());
    assert_eq!(hb.split(',').count(), ha.split(',').count() + 4);
    assert!(hb.starts_with(ha.trim_end_matches("verdict")));
}

#[test]
fn levelset_zero_level_is_a_union_of_rays() {
    let dir = tempfile::tempdir().unwrap();
    let o = slagwall(dir.path(), &["levelset", "--n", "2", "--theta", "0", "--c", "0"]);
    assert_success(&o);
    let csv = std::fs::read_to_string(dir.path().join("levelset.csv")).unwrap();
    // Im z² = 0 is the union of the coordinate axes.
    for line in csv.lines().skip(1) {
        let v: Vec<f64> = line.split(',').skip(1).map(|s| s.parse().unwrap()).collect();
        assert!((v[0] * v[1]).abs() < 1e-8, "{line}");
    }
}

#[test]
fn levelset_construction_draws_tangency_lines() {
    let dir = tempfile::tempdir().unwrap();
    let o = slagwall(dir.path(), &["levelset", "--n", "3", "--theta", "0.1", "--construction"]);
    assert_success(&o);
    let s = stdout(&o);
    assert!(s.contains("x = 1: vertical tangent at y = "), "{s}");
    let svg = std::fs::read_to_string(dir.path().join("levelset.svg")).unwrap();
    assert!(svg.contains("x = 1<"));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let runs: &[&[&str]] = &[
        &["levelset", "--n", "3", "--theta", "1", "--c", "3"],
        &["wall", "--n", "3", "--theta", "1", "--b-range", "0.95,1.05,11", "--bridgeland"],
        &["flow", "--n", "2", "--theta", PI_6, "--b", "1.05", "--t-max", "0.2"],
        &["bundle", "--r", "2", "--m", "2", "--xi", "2,-1", "--b", "0.1"],
    ];
    for args in runs {
        let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let (o1, o2) = (slagwall(d1.path(), args), slagwall(d2.path(), args));
        assert_success(&o1);
        assert_success(&o2);
        let mut names: Vec<_> = std::fs::read_dir(d1.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert!(!names.is_empty());
        for name in names {
            let a = std::fs::read(d1.path().join(&name)).unwrap();
            let b = std::fs::read(d2.path().join(&name)).unwrap();
            assert_eq!(a, b, "{args:?}: {name:?} differs");
        }
    }
}

#[test]
fn csv_floats_carry_seventeen_significant_digits() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&slagwall(dir.path(), &["levelset", "--n", "2", "--theta", "1", "--c", "1"]));
    let csv = std::fs::read_to_string(dir.path().join("levelset.csv")).unwrap();
    let field = csv.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    let mantissa = field.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
    assert_eq!(mantissa.len(), 17, "{field}");
}

#[test]
fn flow_with_zero_time_writes_the_initial_snapshot_only() {
    let dir = tempfile::tempdir().unwrap();
    let o = slagwall(dir.path(), &["flow", "--n", "2", "--theta", PI_6, "--b", "1.05", "--t-max", "0"]);
    assert_success(&o);
    assert!(dir.path().join("flow_snapshot_0000.csv").exists());
    assert!(!dir.path().join("flow_snapshot_0001.csv").exists());
}

#[test]
fn unstable_flow_log_has_non_increasing_critical_abscissa() {
    let dir = tempfile::tempdir().unwrap();
    let o = slagwall(dir.path(), &["flow", "--n", "2", "--theta", PI_6, "--b", "1.05", "--t-max", "2"]);
    assert_success(&o);
    let log = std::fs::read_to_string(dir.path().join("flow_log.csv")).unwrap();
    assert_eq!(log.lines().next().unwrap(), "t,x_c,y_c,max_speed,barrier_ok");
    let xs: Vec<f64> = log.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(xs.len() > 10);
    assert!(xs.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{xs:?}");
    assert!(log.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn stable_flow_distance_decreases() {
    let dir = tempfile::tempdir().unwrap();
    let o = slagwall(dir.path(), &["flow", "--n", "2", "--theta", PI_6, "--b", "0.95", "--t-max", "2"]);
    assert_success(&o);
    let log = std::fs::read_to_string(dir.path().join("flow_log.csv")).unwrap();
    let d: Vec<f64> = log.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
}

#[test]
fn bundle_reports_the_vertical_family() {
    let dir = tempfile::tempdir().unwrap();
    let o = slagwall(dir.path(), &["bundle", "--r", "2", "--m", "2", "--xi", "2,-1", "--b", "0.1"]);
    assert_success(&o);
    let s = stdout(&o);
    let target = 0.75f64.atan();
    let family: Vec<f64> = value(&s, "theta_family").split(", ").map(|t| t.parse().unwrap()).collect();
    assert!(family.iter().any(|t| ((t - target) / std::f64::consts::PI).fract().abs() < 1e-12 || ((t - target) / std::f64::consts::PI).fract().abs() > 1.0 - 1e-12));
    for key in ["signs", "expected_signs", "pattern_holds", "q", "q_prime"] {
        value(&s, key);
    }
    let csv = std::fs::read_to_string(dir.path().join("bundle.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "x,y");
}

#[test]
fn bundle_with_real_xi_is_symmetric() {
    let dir = tempfile::tempdir().unwrap();
    let o = slagwall(dir.path(), &["bundle", "--r", "2", "--m", "2", "--xi", "2,0", "--b", "0.1"]);
    assert_success(&o);
    let s = stdout(&o);
    assert!((num(&s, "q") + num(&s, "q_prime")).abs() < 1e-9, "{s}");
}

#[test]
fn config_file_supplies_flags_and_command_line_wins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# parameters\nn = 2\ntheta = 0.5235987755982988  # π/6\n").unwrap();
    let o = slagwall(dir.path(), &["--config", cfg.to_str().unwrap(), "params"]);
    assert_success(&o);
    assert!((num(&stdout(&o), "a") - 2.0).abs() < 1e-12);

    let o = slagwall(dir.path(), &["params", "--config", cfg.to_str().unwrap(), "--theta", "30", "--degrees"]);
    assert_success(&o);
    assert!((num(&stdout(&o), "a") - 2.0).abs() < 1e-12);

    let o = slagwall(dir.path(), &["params", "--config", cfg.to_str().unwrap(), "--theta", "0.3"]);
    assert_success(&o);
    assert!((num(&stdout(&o), "theta") - 0.3).abs() < 1e-15);
}

#[test]
fn config_file_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "n = 2\ntheta = 0.5\ncolour = red\n").unwrap();
    let o = slagwall(dir.path(), &["params", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
    let o = slagwall(dir.path(), &["params", "--config", dir.path().join("missing").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(74));
}

#[test]
fn environment_overrides_output_directory_and_flag_overrides_environment() {
    let dir = tempfile::tempdir().unwrap();
    let env_dir = dir.path().join("from_env");
    let flag_dir = dir.path().join("from_flag");
    let run = |extra: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_slagwall"))
            .args(["levelset", "--n", "2", "--theta", "1", "--c", "1"])
            .args(extra)
            .current_dir(dir.path())
            .env("SLAGWALL_OUT_DIR", &env_dir)
            .output()
            .unwrap()
    };
    assert_success(&run(&[]));
    assert!(env_dir.join("levelset.csv").exists());
    assert_success(&run(&["--out-dir", flag_dir.to_str().unwrap(), "--name", "other"]));
    assert!(flag_dir.join("other.csv").exists());
    assert!(!env_dir.join("other.csv").exists());
}
