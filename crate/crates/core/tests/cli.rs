use std::path::Path;
use std::process::{Command, Output};

fn rk2net(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rk2net"))
        .args(args)
        .env("RK2NET_OUT_DIR", out_dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn line_count(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count()
}

#[test]
fn gen_data_writes_256_rows() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d");
    let o = rk2net(
        &["gen-data", "--t-start", "0", "--t-end", "6.283185307179586", "--h", "0.02454369260617026", "--out", data.to_str().unwrap()],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(line_count(&data.join("inputs.csv")), 257);
    assert_eq!(line_count(&data.join("targets.csv")), 257);
    let header = std::fs::read_to_string(data.join("inputs.csv")).unwrap();
    assert!(header.starts_with("x,y,vx,vy,h,one\n"));
}

#[test]
fn gen_data_without_step_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = rk2net(&["gen-data", "--t-start", "0", "--t-end", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gen_data_rejects_non_integer_step_count() {
    let dir = tempfile::tempdir().unwrap();
    let o = rk2net(&["gen-data", "--t-start", "0", "--t-end", "1", "--h", "0.3"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("integer"), "{}", stderr(&o));
}

#[test]
fn rationalize_prints_tableau() {
    let dir = tempfile::tempdir().unwrap();
    let o = rk2net(&["rationalize", "--a21", "0.42307692"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("a21 = 11/26"));
    assert!(stdout(&o).contains("tableau: c2 = 11/26, a21 = 11/26, b1 = -2/11, b2 = 13/11"), "{}", stdout(&o));

    let o = rk2net(&["rationalize", "--a21", "1"], dir.path());
    assert!(stdout(&o).contains("b1 = 1/2, b2 = 1/2"), "{}", stdout(&o));

    let o = rk2net(&["rationalize", "--a21", "0"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nonzero"));
}

#[test]
fn verify_reports_order() {
    let dir = tempfile::tempdir().unwrap();
    let o = rk2net(&["verify", "--tableau", "11/26,11/26,-2/11,13/11"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("order 2: residuals (0, 0); consistent"), "{}", stdout(&o));

    let o = rk2net(&["verify", "--tableau", "0.6,0.6,0.2,1"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("order 0: residuals (1/5, 1/10)"), "{}", stdout(&o));

    let o = rk2net(&["verify", "--tableau", "1/2,1/3,0,1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("inconsistent"));
}

#[test]
fn train_is_deterministic_and_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let trace = dir.path().join(name);
        let o = rk2net(&["train", "--seed", "3", "--max-epochs", "200", "--trace-out", trace.to_str().unwrap()], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
        (stdout(&o), std::fs::read(trace).unwrap())
    };
    let (out_a, trace_a) = run("a.csv");
    let (out_b, trace_b) = run("b.csv");
    let last = |s: &str| s.lines().last().unwrap().to_string();
    assert!(last(&out_a).starts_with("final: a21 = "), "{out_a}");
    assert_eq!(last(&out_a), last(&out_b));
    assert_eq!(trace_a, trace_b);
    let text = String::from_utf8(trace_a).unwrap();
    assert_eq!(text.lines().next(), Some("epoch,loss,lr,a21,b1,b2,accepted"));
    assert_eq!(text.lines().count(), 202);
}

#[test]
fn train_rejects_unknown_config_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("train.cfg");
    std::fs::write(&cfg, "learning_rate_init = 0.01\nmomentun = 0.9\n").unwrap();
    let o = rk2net(&["train", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("momentun"), "{}", stderr(&o));
}

#[test]
fn default_bench_has_24_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.csv");
    let o = rk2net(&["bench", "--out", out.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(line_count(&out), 25);
    assert_eq!(line_count(&dir.path().join("bench_plot.csv")), 7);
}

#[test]
fn integrate_writes_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("traj.csv");
    let o = rk2net(&["integrate", "--tableau", "heun", "--steps", "512", "--out", out.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(line_count(&out), 514);
}

#[test]
fn pipeline_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let o = rk2net(
        &["pipeline", "--out", dir.path().to_str().unwrap(), "--max-epochs", "50", "--t-end", "10", "--steps", "100,200"],
        dir.path(),
    );
    assert!(o.status.success(), "{}\n{}", stdout(&o), stderr(&o));
    for f in ["data/inputs.csv", "data/targets.csv", "trace.csv", "bench.csv", "bench_plot.csv"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    assert!(stdout(&o).contains("== verify"));
}
