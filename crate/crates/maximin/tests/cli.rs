use std::path::Path;
use std::process::{Command, Output};

fn maximin(args: &[&str], out_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_maximin"));
    cmd.args(args).env_remove("MAXIMIN_OUT_DIR");
    if let Some(d) = out_dir {
        cmd.env("MAXIMIN_OUT_DIR", d);
    }
    cmd.output().expect("spawn maximin")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let args = |file: &str, jobs: &str| {
        let p = dir.path().join(file).to_string_lossy().into_owned();
        let o = maximin(
            &["cdf", "--game", "lb", "--n", "6", "--adversary", "dp", "--c", "2", "--eps", "0.3", "--m", "40", "--seed", "7",
              "--jobs", jobs, "--output", &p],
            None,
        );
        stdout(&o);
        std::fs::read(p).unwrap()
    };
    let a = args("a.csv", "1");
    let b = args("b.csv", "1");
    let c = args("c.csv", "3");
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert!(String::from_utf8(a).unwrap().starts_with("# schema-version: 1\n"));
}

#[test]
fn different_seeds_differ() {
    let run = |seed: &str| {
        stdout(&maximin(&["simulate", "--game", "pair", "--n", "5", "--partner", "2", "--r", "50", "--seed", seed], None))
    };
    assert_eq!(run("3"), run("3"));
    assert_ne!(run("3"), run("4"));
}

#[test]
fn out_dir_receives_named_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = maximin(&["shapley", "--game", "max-gamma", "--n", "5"], Some(dir.path()));
    assert!(stdout(&o).is_empty());
    let text = std::fs::read_to_string(dir.path().join("shapley.csv")).unwrap();
    assert!(text.lines().any(|l| l == "player,phi,u_max,gamma_i"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# lower-bound game\ngame = lb\nn = 4\nadversary = dp\nc = 1\neps = 0.5\n").unwrap();
    let cfg = cfg.to_string_lossy().into_owned();
    let base = stdout(&maximin(&["dp-table", "--config", &cfg, "--r", "3"], None));
    assert_eq!(base.lines().filter(|l| l.starts_with(|c: char| c.is_ascii_digit())).count(), 3 * 2);
    let over = stdout(&maximin(&["dp-table", "--config", &cfg, "--r", "3", "--set", "c=2"], None));
    assert_eq!(over.lines().filter(|l| l.starts_with(|c: char| c.is_ascii_digit())).count(), 3 * 3);
    let flag = stdout(&maximin(&["dp-table", "--config", &cfg, "--r", "3", "--c", "2"], None));
    assert_eq!(over, flag);
}

#[test]
fn config_errors_exit_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "game = lb\nn = 4\n\neps = -1\n").unwrap();
    let o = maximin(&["shapley", "--config", &cfg.to_string_lossy()], None);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.cfg:4"), "{err}");
    assert!(err.contains("eps"), "{err}");

    let o = maximin(&["simulate", "--game", "lb", "--n", "4", "--adversary", "cyclic"], None);
    assert_eq!(o.status.code(), Some(2));
    let o = maximin(&["shapley", "--no-such-flag"], None);
    assert_eq!(o.status.code(), Some(2));
    let o = maximin(&["shapley", "--set", "bogus=1"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_files_exit_1() {
    let o = maximin(&["shapley", "--config", "/nonexistent/run.cfg"], None);
    assert_eq!(o.status.code(), Some(1));
    let o = maximin(&["shapley", "--game", "hypergraph", "--hypergraph", "/nonexistent/g.hg"], None);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn malformed_hypergraph_exits_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let hg = dir.path().join("g.hg");
    std::fs::write(&hg, "n 3\n1 0 1\n1 0 7\n").unwrap();
    let o = maximin(&["shapley", "--game", "hypergraph", "--hypergraph", &hg.to_string_lossy()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains('3'));
}

#[test]
fn compute_caps_exit_3() {
    let o = maximin(
        &["simulate", "--game", "pair", "--n", "4", "--partner", "1", "--protocol", "naive", "--adversary", "always",
          "--budget", "rate", "--f", "0.5", "--stopping", "unknown", "--hard-cap", "300"],
        None,
    );
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("ms.csv");
    let o = maximin(
        &["min-samples", "--game", "lb", "--n", "6", "--adversary", "dp", "--c", "3", "--eps", "0.05", "--max-r", "5",
          "--output", &p.to_string_lossy()],
        None,
    );
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(p.exists());
}

#[test]
fn large_runs_are_gated_unless_full_scale() {
    let args = ["cdf", "--game", "lb", "--n", "100", "--adversary", "dp", "--c", "200", "--eps", "0.05", "--delta", "0.082",
                "--gamma", "100", "--m", "1000"];
    let o = maximin(&args, None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("full-scale"));
}

#[test]
fn shapley_examples() {
    let lb = stdout(&maximin(&["shapley", "--game", "lb", "--n", "100"], None));
    let row0 = lb.lines().find(|l| l.starts_with("0,")).unwrap();
    assert!(row0.starts_with("0,1,"), "{row0}");

    let dir = tempfile::tempdir().unwrap();
    let hg = dir.path().join("empty.hg");
    std::fs::write(&hg, "n 3\n").unwrap();
    let e = stdout(&maximin(&["shapley", "--game", "hypergraph", "--hypergraph", &hg.to_string_lossy()], None));
    assert_eq!(e.lines().filter(|l| l.ends_with(",0,0,1")).count(), 3, "{e}");
}
