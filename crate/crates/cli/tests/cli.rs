//! End-to-end runs of the `affinity` binary: exit-code contract, violation
//! listing, report emission, and thread-count determinism.

use std::path::Path;
use std::process::{Command, Output};

fn affinity(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_affinity"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

const SYNTH_CONFIG: &str = r#"
seed = 9
noise_rate = 0.1
senator_follow_intensity = 3.0

[senate]
democrats = 4
republicans = 5
independents = 1

[[candidates]]
handle = "cand_r"
party = "Republican"
base_follow_probability = 0.6

[[candidates]]
handle = "cand_d"
party = "Democrat"
base_follow_probability = 0.5

[[states]]
code = "AA"
n_users = 300
lean = 0.5

[[states]]
code = "BB"
n_users = 300
lean = -0.5

[[teams]]
handle = "team_a1"
league = "NBA"
state = "AA"

[[teams]]
handle = "team_b1"
league = "NBA"
state = "BB"

[[teams]]
handle = "team_a2"
league = "NFL"
state = "AA"

[[teams]]
handle = "team_b2"
league = "NFL"
state = "BB"
"#;

fn synth_dataset(dir: &Path) -> std::path::PathBuf {
    let config = dir.join("synth.toml");
    std::fs::write(&config, SYNTH_CONFIG).unwrap();
    let data = dir.join("data");
    let out = affinity(&[
        "synth",
        "--config",
        config.to_str().unwrap(),
        "--out",
        data.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    data
}

#[test]
fn shipped_sample_config_produces_a_valid_dataset() {
    let sample = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../sample/synth_small.toml");
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let out = affinity(&[
        "synth",
        "--config",
        sample.to_str().unwrap(),
        "--out",
        data.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let out = affinity(&["validate", "--manifest", data.join("manifest.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert_eq!(stdout(&out).trim(), "[]");
}

#[test]
fn synth_then_validate_is_clean() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_dataset(dir.path());
    assert!(data.join("manifest.toml").is_file());
    assert!(data.join("ground_truth.csv").is_file());

    let out = affinity(&["validate", "--manifest", data.join("manifest.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert_eq!(stdout(&out).trim(), "[]");
}

#[test]
fn synth_seed_flag_changes_dataset_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("synth.toml");
    std::fs::write(&config, SYNTH_CONFIG).unwrap();
    let run = |out_name: &str, seed: Option<&str>| {
        let out_dir = dir.path().join(out_name);
        let mut args = vec![
            "synth".to_string(),
            "--config".into(),
            config.to_str().unwrap().into(),
            "--out".into(),
            out_dir.to_str().unwrap().into(),
        ];
        if let Some(seed) = seed {
            args.push("--seed".into());
            args.push(seed.into());
        }
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        assert_eq!(affinity(&args).status.code(), Some(0));
        std::fs::read(out_dir.join("manifest.toml")).unwrap()
    };
    let base = run("d1", None);
    let same = run("d2", None);
    let other = run("d3", Some("77"));
    assert_eq!(base, same);
    assert_ne!(base, other);
}

#[test]
fn invalid_synth_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("synth.toml");
    std::fs::write(&config, SYNTH_CONFIG.replace("noise_rate = 0.1", "noise_rate = 7.0")).unwrap();
    let out = affinity(&[
        "synth",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    let text = stdout(&out);
    assert!(text.contains("invalid_field"), "{text}");
    assert!(text.contains("noise_rate"), "{text}");
}

#[test]
fn validate_names_missing_file_and_digest_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_dataset(dir.path());
    let manifest = data.join("manifest.toml");

    // tamper with one follower file
    let victim = data.join("followers/cand_r.txt");
    let mut bytes = std::fs::read(&victim).unwrap();
    bytes.extend_from_slice(b"123456\n");
    std::fs::write(&victim, bytes).unwrap();
    let out = affinity(&["validate", "--manifest", manifest.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("digest_mismatch"), "{text}");
    assert!(text.contains("cand_r"), "{text}");

    // remove another
    std::fs::remove_file(data.join("followers/team_a1.txt")).unwrap();
    let out = affinity(&["validate", "--manifest", manifest.to_str().unwrap()]);
    let text = stdout(&out);
    assert!(text.contains("missing_file"), "{text}");
    assert!(text.contains("team_a1"), "{text}");
}

#[test]
fn report_emits_parseable_tables() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_dataset(dir.path());
    let reports = dir.path().join("reports");
    let out = affinity(&[
        "report",
        "--manifest",
        data.join("manifest.toml").to_str().unwrap(),
        "--out",
        reports.to_str().unwrap(),
        "--level",
        "state",
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(stdout(&out).contains("candidate engagement"));

    for name in ["ratios.csv", "senator_breakdown.csv", "cdr_state.csv"] {
        let path = reports.join(name);
        let mut reader = csv::Reader::from_path(&path).unwrap();
        let width = reader.headers().unwrap().len();
        for record in reader.records() {
            assert_eq!(record.unwrap().len(), width, "{name} is ragged");
        }
    }

    // text mode alongside
    let text_reports = dir.path().join("reports_txt");
    let out = affinity(&[
        "report",
        "--manifest",
        data.join("manifest.toml").to_str().unwrap(),
        "--out",
        text_reports.to_str().unwrap(),
        "--format",
        "text",
        "--level",
        "sport",
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(text_reports.join("cdr_sport.txt").is_file());
}

#[test]
fn report_output_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_dataset(dir.path());
    let manifest = data.join("manifest.toml");
    let mut blobs: Vec<Vec<u8>> = Vec::new();
    for threads in ["1", "4", "8"] {
        let reports = dir.path().join(format!("reports_{threads}"));
        let out = affinity(&[
            "report",
            "--manifest",
            manifest.to_str().unwrap(),
            "--out",
            reports.to_str().unwrap(),
            "--level",
            "team",
            "--threads",
            threads,
        ]);
        assert_eq!(out.status.code(), Some(0), "{out:?}");
        let mut all = Vec::new();
        for name in ["ratios.csv", "senator_breakdown.csv", "cdr_team.csv"] {
            all.extend(std::fs::read(reports.join(name)).unwrap());
        }
        blobs.push(all);
    }
    assert_eq!(blobs[0], blobs[1]);
    assert_eq!(blobs[1], blobs[2]);
}

#[test]
fn runtime_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_dataset(dir.path());
    // --out collides with an existing file: report dies with a runtime error
    let blocker = dir.path().join("blocked");
    std::fs::write(&blocker, b"file").unwrap();
    let out = affinity(&[
        "report",
        "--manifest",
        data.join("manifest.toml").to_str().unwrap(),
        "--out",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn collect_demo_writes_binary_files_and_fragment() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_dataset(dir.path());
    let collected = dir.path().join("collected");
    let out = affinity(&[
        "collect",
        "--manifest",
        data.join("manifest.toml").to_str().unwrap(),
        "--out",
        collected.to_str().unwrap(),
        "--concurrency",
        "3",
        "--followers",
        "100",
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(collected.join("digests.toml").is_file());
    let one = std::fs::read(collected.join("followers/cand_r.txt")).unwrap();
    assert_eq!(&one[..4], b"IDS1");
}
