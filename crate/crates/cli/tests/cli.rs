use std::fs;
use std::process::Command as Process;

use twomode_cli::{main_with_args, parse_config, CliError, Command, Format, EXIT_IO, EXIT_OK, EXIT_RUN, EXIT_USAGE};

fn argv(line: &str) -> Vec<String> {
    std::iter::once("twomode".to_string())
        .chain(line.split_whitespace().map(String::from))
        .collect()
}

fn usage_message(line: &str) -> String {
    match parse_config(argv(line)) {
        Err(CliError::Usage(msg)) => msg,
        other => panic!("expected usage error, got {other:?}"),
    }
}

#[test]
fn sweep_flags_map_to_grid() {
    let c = parse_config(argv("sweep --lambda-d 1 --beta 1 --dmin 0.01 --dmax 0.1 --points 8")).unwrap();
    let Command::Sweep(s) = c.command else { panic!() };
    assert_eq!((s.grid.lambda_d, s.grid.beta, s.grid.dmin, s.grid.dmax, s.grid.points), (1.0, 1.0, 0.01, 0.1, 8));
    assert_eq!(s.solver.tol, 1e-7);
    assert_eq!(s.out.format, Format::Csv);
    let d = s.grid.grid().distances();
    assert_eq!(d.len(), 8);
    assert!((d[1] / d[0] - d[7] / d[6]).abs() < 1e-12);
}

#[test]
fn defaults() {
    let c = parse_config(argv("ensemble --lambda 0.5 --mu -2")).unwrap();
    let Command::Ensemble(e) = c.command else { panic!() };
    assert_eq!((e.beta, e.solver.tol, e.solver.m_cap, e.out.threads), (1.0, 1e-7, 50_000, 0));
}

#[test]
fn missing_required_flag_is_usage_error() {
    let msg = usage_message("sweep --beta 1");
    assert!(msg.contains("--lambda-d"), "{msg}");
    assert_eq!(main_with_args(argv("sweep --beta 1")), EXIT_USAGE);
}

#[test]
fn bad_values_name_the_flag() {
    assert!(usage_message("ensemble --lambda 0.5 --mu -2 --tol 0.5").contains("--tol"));
    assert!(usage_message("ensemble --lambda 0.5 --mu -2 --tol 0").contains("--tol"));
    assert!(usage_message("ensemble --lambda nan --mu -2").contains("--lambda"));
    assert!(usage_message("ensemble --lambda 0.5 --mu inf").contains("--mu"));
    assert!(usage_message("ensemble --lambda 0.5 --mu -2 --format xml").contains("--format"));
    assert!(usage_message("frobnicate").contains("frobnicate"));
}

#[test]
fn help_is_not_an_error() {
    assert_eq!(main_with_args(argv("--help")), EXIT_OK);
    assert_eq!(main_with_args(argv("sweep --help")), EXIT_OK);
}

#[test]
fn divergent_point_parses_but_fails_to_run() {
    assert!(parse_config(argv("ensemble --lambda 1.2 --mu -1.5")).is_ok());
    assert_eq!(main_with_args(argv("ensemble --lambda 1.2 --mu -1.5")), EXIT_RUN);
}

#[test]
fn config_file_and_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# sweep setup\nlambda-d = 1.5\nbeta = 2\npoints = 3\nwith_f = true\ntol = 1e-9\n").unwrap();
    let c = parse_config(argv(&format!("sweep --config {} --beta 0.5", cfg.display()))).unwrap();
    let Command::Sweep(s) = c.command else { panic!() };
    assert_eq!(s.grid.lambda_d, 1.5);
    assert_eq!(s.grid.beta, 0.5);
    assert_eq!(s.grid.points, 3);
    assert_eq!(s.solver.tol, 1e-9);
    assert!(s.solver.with_f);

    fs::write(&cfg, "lambda-d 1.5\n").unwrap();
    assert!(usage_message(&format!("sweep --config {}", cfg.display())).contains("--config"));
    let missing = dir.path().join("nope.cfg");
    assert_eq!(main_with_args(argv(&format!("sweep --config {}", missing.display()))), EXIT_IO);
}

#[test]
fn one_point_sweep_is_two_csv_lines() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("one.csv");
    let code = main_with_args(argv(&format!(
        "sweep --lambda-d 1.5 --dmin 0.3 --dmax 0.3 --points 1 --output {}",
        out.display()
    )));
    assert_eq!(code, EXIT_OK);
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(
        lines[0],
        "lambda,lambda_d,beta,mu,log_xi,xi,mean_m,energy,mean_f,sigma_m,m_max_used,converged"
    );
    let cells: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(cells.len(), 12);
    assert_eq!(cells[11], "true");
    assert_eq!(cells[8], "", "no <F> without --with-f");
    assert!((cells[0].parse::<f64>().unwrap() - 1.2).abs() < 1e-12);
}

#[test]
fn json_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("a.csv");
    let json = dir.path().join("a.json");
    let base = "ensemble --lambda 0.7 --mu -2.1 --beta 1.3 --with-f";
    assert_eq!(main_with_args(argv(&format!("{base} --output {}", csv.display()))), EXIT_OK);
    assert_eq!(main_with_args(argv(&format!("{base} --format json --output {}", json.display()))), EXIT_OK);

    let parsed: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    let obj = &parsed.as_array().unwrap()[0];
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    for (k, v) in header.iter().zip(row) {
        let j = &obj[*k];
        match *k {
            "converged" => assert_eq!(j.as_bool().unwrap().to_string(), v),
            "m_max_used" => assert_eq!(j.as_u64().unwrap().to_string(), v),
            _ => assert_eq!(j.as_f64().unwrap().to_bits(), v.parse::<f64>().unwrap().to_bits(), "{k}"),
        }
    }
    assert!(obj["mean_f"].as_f64().unwrap() > 0.0);
}

#[test]
fn fit_table_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fit.csv");
    let code = main_with_args(argv(&format!(
        "fit --lambda-d 1.5 --dmin 0.2 --dmax 0.5 --points 5 --output {}",
        out.display()
    )));
    assert_eq!(code, EXIT_OK);
    let text = fs::read_to_string(&out).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    for col in ["exponent", "amplitude", "r_squared", "window_min", "window_max"] {
        assert!(header.contains(&col), "{col} missing from {header:?}");
    }
    assert_eq!(text.lines().count(), 2);
    assert_eq!(
        main_with_args(argv("fit --lambda-d 1.5 --dmin 0.2 --dmax 0.5 --points 4")),
        EXIT_USAGE
    );
}

#[test]
fn identical_runs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let p = dir.path().join(name);
        let code = main_with_args(argv(&format!(
            "sweep --lambda-d 2 --dmin 0.3 --dmax 0.6 --points 3 --with-f --threads 1 --output {}",
            p.display()
        )));
        assert_eq!(code, EXIT_OK);
        fs::read(p).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn unwritable_output_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("missing").join("out.csv");
    let code = main_with_args(argv(&format!("groundstate --m 10 --lambda 0.5 --output {}", bad.display())));
    assert_eq!(code, EXIT_IO);
}

#[test]
fn unconverged_sweep_still_writes_then_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("capped.csv");
    let code = main_with_args(argv(&format!(
        "sweep --lambda-d 1 --points 2 --m-cap 10 --output {}",
        out.display()
    )));
    assert_eq!(code, EXIT_RUN);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",false")));
}

#[test]
fn other_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.csv");
    assert_eq!(main_with_args(argv(&format!("spectrum --m 2 --lambda 0 --vectors --output {}", p.display()))), EXIT_OK);
    let text = fs::read_to_string(&p).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().nth(1).unwrap().ends_with(",1"));

    let p = dir.path().join("g.json");
    assert_eq!(
        main_with_args(argv(&format!("groundstate --m 1000 --lambda 2 --format json --output {}", p.display()))),
        EXIT_OK
    );
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
    assert!((v[0]["e_g"].as_f64().unwrap() + 2.25).abs() < 1e-15);

    let p = dir.path().join("m.json");
    assert_eq!(
        main_with_args(argv(&format!("meanfield --lambda-d 2 --lambda 1.99 --format json --output {}", p.display()))),
        EXIT_OK
    );
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
    assert!((v[0]["coefficient"].as_f64().unwrap() - 8.0 / 7.0).abs() < 1e-14);
    assert_eq!(v[0]["branch"], "gt1");

    assert_eq!(main_with_args(argv("meanfield --mu -0.5")), EXIT_RUN);
}

#[test]
fn cache_dir_persists_spectra() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e.csv");
    let cache = dir.path().join("cache");
    let line = format!(
        "ensemble --lambda 0.5 --mu -2.5 --cache-dir {} --output {}",
        cache.display(),
        out.display()
    );
    assert_eq!(main_with_args(argv(&line)), EXIT_OK);
    let first = fs::read(&out).unwrap();
    assert!(fs::read_dir(&cache).unwrap().count() > 5);
    assert_eq!(main_with_args(argv(&line)), EXIT_OK);
    assert_eq!(fs::read(&out).unwrap(), first);
}

#[test]
fn binary_exit_statuses() {
    let bin = env!("CARGO_BIN_EXE_twomode");
    let status = |args: &[&str]| Process::new(bin).args(args).output().unwrap().status.code();
    assert_eq!(status(&["groundstate", "--m", "4", "--lambda", "0.5"]), Some(EXIT_OK));
    assert_eq!(status(&["sweep"]), Some(EXIT_USAGE));
    assert_eq!(status(&["ensemble", "--lambda", "1.2", "--mu", "-1.5"]), Some(EXIT_RUN));
    let out = Process::new(bin)
        .args(["groundstate", "--m", "4", "--lambda", "0.5"])
        .output()
        .unwrap();
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("m,lambda,theta_1"));
}
