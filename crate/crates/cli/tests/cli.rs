use std::path::Path;
use std::process::{Command, Output};

const SMALL: &[&str] = &["--n-obs", "300", "--budget", "3", "--mc-samples", "256"];

fn pdc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdc")).args(args).output().expect("spawn pdc")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

const HEADER: &str =
    "scenario,strategy,k0,seed,step,x,y,log_bf01,posterior_h0,posterior_h1,posterior_gt,pdc_est,evidence,wall_ms";

#[test]
fn run_writes_one_row_per_step() {
    let mut args = vec!["run", "--scenario", "confounder", "--strategy", "random", "--seed-list", "3"];
    args.extend_from_slice(SMALL);
    let o = pdc(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], HEADER);
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("confounder,random,10.0,3,1,"));
}

#[test]
fn suite_is_reproducible_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let svg = dir.path().join("a.svg");
    for (out, plot) in [(&a, Some(&svg)), (&b, None)] {
        let mut args = vec!["suite", "--scenario", "y_to_x", "--k0", "10", "--k0", "30", "--seeds", "2"];
        args.extend_from_slice(SMALL);
        let out = out.to_str().unwrap();
        args.extend(["--out", out]);
        if let Some(p) = plot {
            args.extend(["--plot", p.to_str().unwrap()]);
        }
        let o = pdc(&args);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    // 3 strategies × 2 thresholds × 2 seeds × 3 steps.
    assert_eq!(String::from_utf8(bytes).unwrap().lines().count(), 1 + 36);
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<svg"));

    let replot = dir.path().join("b.svg");
    let o = pdc(&["plot", "--input", a.to_str().unwrap(), "--out", replot.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read(&svg).unwrap(), std::fs::read(&replot).unwrap());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(
        &cfg,
        "scenario = \"x_to_y\"\nstrategy = \"infogain\"\nbudget = 5\nn_obs = 300\nmc_samples = 256\nseed_list = [9]\nk0 = 30.0\n",
    )
    .unwrap();
    let o = pdc(&["run", "--config", cfg.to_str().unwrap(), "--budget", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(1).unwrap().starts_with("x_to_y,infogain,30.0,9,1,"));
}

#[test]
fn config_errors_exit_two() {
    let mut args = vec!["run", "--n-obs", "20"];
    args.extend_from_slice(&SMALL[2..]);
    assert_eq!(code(&pdc(&args)), 2);
    assert_eq!(code(&pdc(&["run", "--noise-mode", "sideways"])), 2);
    assert_eq!(code(&pdc(&["run", "--bounds", "3", "-3"])), 2);

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    assert_eq!(code(&pdc(&["run", "--config", cfg.to_str().unwrap()])), 2);
    assert_eq!(code(&pdc(&["run", "--config", "/nonexistent/cfg.toml"])), 2);
}

#[test]
fn unwritable_output_is_reported_with_path() {
    let mut args = vec!["run", "--strategy", "random", "--out", "/nonexistent-dir/x.csv"];
    args.extend_from_slice(SMALL);
    let o = pdc(&args);
    assert_ne!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent-dir/x.csv"));
    assert!(!Path::new("/nonexistent-dir").exists());
}
