use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lowrank::data::{save_image, synthetic_test_image};

fn lowrank(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lowrank"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("LOWRANK_THREADS", t),
        None => cmd.env_remove("LOWRANK_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| l.split(',').nth(k).unwrap().to_string())
        .collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fully_observed_image_is_capped() {
    let dir = tempfile::tempdir().unwrap();
    let image = dir.path().join("tile.ppm");
    save_image(&synthetic_test_image(0, 24, 20, 3).unwrap(), &image).unwrap();
    let out_dir = dir.path().join("out");
    let out = lowrank(
        &[
            "complete",
            "--image",
            s(&image),
            "--sr",
            "1",
            "--delta",
            "0",
            "--out",
            s(&out_dir),
        ],
        None,
    );
    ok(&out);
    let metrics = fs::read_to_string(out_dir.join("metrics.csv")).unwrap();
    assert_eq!(column(&metrics, "method"), ["lr", "lrisd"]);
    for v in column(&metrics, "psnr_db") {
        assert_eq!(v, "99");
    }
    for name in [
        "trace.csv",
        "sve_profile.csv",
        "runs.csv",
        "config.txt",
        "observed_seed0.ppm",
        "recovered_lrisd_seed0.ppm",
    ] {
        assert!(out_dir.join(name).exists(), "{name} missing");
    }
}

#[test]
fn partial_image_completion_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let image = dir.path().join("gray.pgm");
    let mut rgb = synthetic_test_image(1, 32, 32, 5).unwrap();
    rgb.channels.truncate(1);
    save_image(&rgb, &image).unwrap();
    let out_dir = dir.path().join("out");
    ok(&lowrank(
        &[
            "complete",
            "--image",
            s(&image),
            "--sr",
            "0.5",
            "--adjust",
            "--out",
            s(&out_dir),
        ],
        None,
    ));
    let metrics = fs::read_to_string(out_dir.join("metrics.csv")).unwrap();
    assert_eq!(column(&metrics, "method"), ["lr", "lrisd", "lrisd-adjust"]);
    let t: Vec<usize> = column(&metrics, "t_count")
        .iter()
        .map(|v| v.parse().unwrap())
        .collect();
    assert!(t.iter().all(|&t| t == 32 * 32 - 512));
    let psnr: Vec<f64> = column(&metrics, "psnr_db")
        .iter()
        .map(|v| v.parse().unwrap())
        .collect();
    assert!(psnr[2] >= psnr[1]);
    assert!(out_dir.join("recovered_lrisd-adjust_seed0.pgm").exists());
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# small comparison\nm = 24\nn = 20\nrank = 2\nsr = 0.6\nstd = 0.05\ntrials = 3\nseed = 11\nsolver = admm, apgl\n",
    )
    .unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&lowrank(
        &["compare", "--config", s(&cfg), "--out", s(&a)],
        Some("1"),
    ));
    ok(&lowrank(
        &["compare", "--config", s(&cfg), "--out", s(&b)],
        Some("4"),
    ));
    for name in [
        "metrics.csv",
        "runs.csv",
        "trace.csv",
        "sve_profile.csv",
        "summary.csv",
    ] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name} differs"
        );
    }
    let runs = fs::read_to_string(a.join("runs.csv")).unwrap();
    let keys: Vec<String> = column(&runs, "seed")
        .iter()
        .zip(column(&runs, "method"))
        .zip(column(&runs, "solver"))
        .map(|((s, m), v)| format!("{s}/{m}/{v}"))
        .collect();
    assert_eq!(
        keys,
        [
            "11/lr/admm",
            "11/lr/apgl",
            "11/lrisd/admm",
            "11/lrisd/apgl",
            "12/lr/admm",
            "12/lr/apgl",
            "12/lrisd/admm",
            "12/lrisd/apgl",
            "13/lr/admm",
            "13/lr/apgl",
            "13/lrisd/admm",
            "13/lrisd/apgl"
        ]
    );
    let metrics = fs::read_to_string(a.join("metrics.csv")).unwrap();
    assert_eq!(column(&metrics, "method")[..2], ["lr/admm", "lr/apgl"]);
}

#[test]
fn sweep_then_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    ok(&lowrank(
        &[
            "dct-synth",
            "--m",
            "20",
            "--n",
            "20",
            "--rank",
            "2",
            "--sr",
            "0.7,0.4",
            "--std",
            "0.1",
            "--trials",
            "2",
            "--out",
            s(&run),
        ],
        None,
    ));
    let plots = dir.path().join("plots");
    let out = lowrank(
        &[
            "plot-data",
            s(&run.join("runs.csv")),
            s(&run.join("sve_profile.csv")),
            "--out",
            s(&plots),
        ],
        None,
    );
    ok(&out);
    let by_sr = fs::read_to_string(plots.join("reer_vs_sr.csv")).unwrap();
    assert_eq!(
        by_sr.lines().next().unwrap(),
        "solver,method,std,sr,trials,reer_median,reer_mean"
    );
    assert_eq!(column(&by_sr, "sr"), ["0.4", "0.7", "0.4", "0.7"]);
    assert_eq!(column(&by_sr, "method"), ["lr", "lr", "lrisd", "lrisd"]);
    assert!(column(&by_sr, "trials").iter().all(|t| t == "2"));
    let by_std = fs::read_to_string(plots.join("reer_vs_std.csv")).unwrap();
    assert_eq!(by_std.lines().count(), 5);
    let ranks = fs::read_to_string(plots.join("rank_recovery.csv")).unwrap();
    assert_eq!(column(&ranks, "method"), ["lrisd"; 4]);
    assert!(column(&ranks, "rank_true").iter().all(|r| r == "2"));
    let stt = fs::read_to_string(plots.join("stt_vs_index.csv")).unwrap();
    assert!(stt.starts_with("experiment,seed,solver,method,channel,round,index,stt,kappa\n"));
    assert!(stt.lines().count() > 1);
}

#[test]
fn plot_data_rejects_missing_columns() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("runs.csv");
    fs::write(&bad, "experiment,seed,method,reer\nx,0,lr,0.5\n").unwrap();
    let out = lowrank(
        &["plot-data", s(&bad), "--out", s(&dir.path().join("p"))],
        None,
    );
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(
        err.contains("missing column(s): sr, std, rank_true, rank_recovered"),
        "{err}"
    );
}

#[test]
fn sve_trace_reports_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let out = lowrank(
        &[
            "sve-trace",
            "--m",
            "30",
            "--n",
            "30",
            "--rank",
            "3",
            "--sr",
            "0.6",
            "--std",
            "0.01",
            "--kappa",
            "2",
            "--out",
            s(dir.path()),
        ],
        None,
    );
    ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("estimates [0, 3, 3], rank 3 (true 3)"),
        "{stdout}"
    );
    let metrics = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert_eq!(column(&metrics, "method"), ["lrisd"]);
    let profile = fs::read_to_string(dir.path().join("sve_profile.csv")).unwrap();
    assert_eq!(column(&profile, "kappa")[0], "2");
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "m = 10\nwidth = 4\n").unwrap();
    let out = lowrank(&["compare", "--config", s(&cfg)], None);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(
        err.contains("bad.cfg:2") && err.contains("unknown key 'width'"),
        "{err}"
    );

    fs::write(&cfg, "kappa = 3\nkappa_mode = real\n").unwrap();
    assert_eq!(
        lowrank(&["compare", "--config", s(&cfg)], None)
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        lowrank(&["compare", "--kappa", "2", "--kappa-mode", "real"], None)
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        lowrank(&["dct-synth", "--image", "x.pgm"], None)
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        lowrank(&["dct-synth", "--operator", "mask"], None)
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        lowrank(&["compare", "--sr", "0.3,0.5"], None).status.code(),
        Some(2)
    );
    assert_eq!(lowrank(&["complete"], None).status.code(), Some(2));
    assert_eq!(
        lowrank(&["compare", "--solver", "newton"], None)
            .status
            .code(),
        Some(2)
    );
    let out = lowrank(&["compare", "--out", s(dir.path())], Some("0"));
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("LOWRANK_THREADS"));
}
