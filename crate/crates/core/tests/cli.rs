//! End-to-end checks of the command-line surface: subcommands, file formats
//! and exit codes (0 success, 1 verification failure, 2 usage error, 3
//! aborted run).

use std::path::Path;
use std::process::{Command, Output};

fn cssgen(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cssgen"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn seed_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = cssgen(
        &[
            "seed", "--P", "4", "--dc", "3", "--dr", "8", "--out-hx", "hx.alist", "--out-hz",
            "hz.alist",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{out:?}");
    let header: Vec<String> = std::fs::read_to_string(dir.path().join("hx.alist"))
        .unwrap()
        .lines()
        .take(2)
        .map(str::to_string)
        .collect();
    assert_eq!(header, vec!["32 12", "3 8"]);

    let out = cssgen(
        &["verify", "--hx", "hx.alist", "--hz", "hz.alist"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{out:?}");
    assert!(String::from_utf8_lossy(&out.stdout).contains("orthogonality: pass"));
}

#[test]
fn verify_rejects_a_corrupted_pair() {
    let dir = tempfile::tempdir().unwrap();
    cssgen(
        &[
            "seed", "--P", "2", "--dc", "2", "--dr", "4", "--format", "dense", "--out-hx",
            "hx.txt", "--out-hz", "hz.txt",
        ],
        dir.path(),
    );
    let hz = dir.path().join("hz.txt");
    let mut text = std::fs::read_to_string(&hz).unwrap();
    // Flip the first bit; the column it lands in meets dc rows of the
    // partner, each overlap parity turning odd.
    text.replace_range(0..1, if text.starts_with('1') { "0" } else { "1" });
    std::fs::write(&hz, text).unwrap();

    let out = cssgen(&["verify", "--hx", "hx.txt", "--hz", "hz.txt"], dir.path());
    assert_eq!(code(&out), 1, "{out:?}");
    assert!(String::from_utf8_lossy(&out.stdout).contains("orthogonality: FAIL"));
}

#[test]
fn randomize_from_params_writes_everything() {
    let dir = tempfile::tempdir().unwrap();
    let out = cssgen(
        &[
            "randomize",
            "--P",
            "4",
            "--dc",
            "3",
            "--dr",
            "8",
            "--iterations",
            "20",
            "--rng-seed",
            "7",
            "--max-nodes",
            "20000",
            "--out-hx",
            "hx.alist",
            "--out-hz",
            "hz.alist",
            "--manifest",
            "run.toml",
            "--stats-json",
            "stats.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{out:?}");

    let out = cssgen(
        &["verify", "--hx", "hx.alist", "--hz", "hz.alist"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{out:?}");

    let manifest = std::fs::read_to_string(dir.path().join("run.toml")).unwrap();
    assert!(manifest.contains("rng_seed = 7"));
    assert!(manifest.contains("iterations_completed = 20"));
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("stats.json")).unwrap())
            .unwrap();
    assert_eq!(stats["iterations"].as_array().unwrap().len(), 20);
}

#[test]
fn randomize_accepts_loaded_pairs() {
    let dir = tempfile::tempdir().unwrap();
    cssgen(
        &[
            "seed", "--P", "4", "--dc", "3", "--dr", "8", "--out-hx", "hx.alist", "--out-hz",
            "hz.alist",
        ],
        dir.path(),
    );
    let out = cssgen(
        &[
            "randomize",
            "--hx",
            "hx.alist",
            "--hz",
            "hz.alist",
            "--iterations",
            "5",
            "--max-nodes",
            "20000",
            "--out-hx",
            "hx2.alist",
            "--out-hz",
            "hz2.alist",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{out:?}");
    let out = cssgen(
        &["verify", "--hx", "hx2.alist", "--hz", "hz2.alist"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{out:?}");
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    // Unknown flag (clap) and a missing pair source (ours) both use code 2.
    let out = cssgen(&["seed", "--nonsense"], dir.path());
    assert_eq!(code(&out), 2, "{out:?}");
    let out = cssgen(
        &[
            "randomize",
            "--iterations",
            "1",
            "--out-hx",
            "a",
            "--out-hz",
            "b",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 2, "{out:?}");
    let out = cssgen(
        &["verify", "--hx", "missing.alist", "--hz", "missing.alist"],
        dir.path(),
    );
    assert_eq!(code(&out), 2, "{out:?}");
}

#[test]
fn aborted_run_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // A one-node prove-optimal budget rejects every violating swap, and a
    // zero reject cap turns the first rejection into an abort.
    let out = cssgen(
        &[
            "randomize",
            "--P",
            "4",
            "--dc",
            "3",
            "--dr",
            "8",
            "--iterations",
            "50",
            "--max-nodes",
            "1",
            "--mode",
            "prove-optimal",
            "--max-rejects",
            "0",
            "--out-hx",
            "hx.alist",
            "--out-hz",
            "hz.alist",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 3, "{out:?}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("aborted"));
}

#[test]
fn export_ilp_writes_lp_format() {
    let dir = tempfile::tempdir().unwrap();
    cssgen(
        &[
            "seed", "--P", "4", "--dc", "3", "--dr", "8", "--out-hx", "hx.alist", "--out-hz",
            "hz.alist",
        ],
        dir.path(),
    );
    let out = cssgen(
        &[
            "export-ilp",
            "--hx",
            "hx.alist",
            "--hz",
            "hz.alist",
            "--swap",
            "10,6,7,23",
            "--out",
            "repair.lp",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{out:?}");
    let lp = std::fs::read_to_string(dir.path().join("repair.lp")).unwrap();
    assert!(lp.contains("Minimize"));
    assert!(lp.contains("Subject To"));
    assert!(lp.contains("Binary"));
    assert!(lp.ends_with("End\n"));
    assert!(String::from_utf8_lossy(&out.stdout).contains("96 variables"));
}

#[test]
fn stats_emits_parseable_json() {
    let dir = tempfile::tempdir().unwrap();
    cssgen(
        &[
            "seed", "--P", "4", "--dc", "3", "--dr", "8", "--out-hx", "hx.alist", "--out-hz",
            "hz.alist",
        ],
        dir.path(),
    );
    let out = cssgen(
        &["stats", "--hx", "hx.alist", "--hz", "hz.alist", "--json"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{out:?}");
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["rank_x"], 4);
    assert_eq!(doc["rank_z"], 4);
    assert_eq!(doc["css_dimension"], 24);
    assert_eq!(doc["four_cycles_x"], 336);
}

#[test]
fn dense_format_flows_through_randomize() {
    let dir = tempfile::tempdir().unwrap();
    let out = cssgen(
        &[
            "randomize",
            "--P",
            "2",
            "--dc",
            "2",
            "--dr",
            "4",
            "--iterations",
            "4",
            "--max-nodes",
            "20000",
            "--format",
            "dense",
            "--out-hx",
            "hx.txt",
            "--out-hz",
            "hz.txt",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{out:?}");
    let text = std::fs::read_to_string(dir.path().join("hx.txt")).unwrap();
    assert!(text.lines().all(|l| l.chars().all(|c| c == '0' || c == '1')));
    assert_eq!(text.lines().count(), 4);
}
