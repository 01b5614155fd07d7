use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_scholarchain"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/scenarios")
        .join(name)
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("scholarchain-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn run(args: &[&str], out: &Path) -> Output {
    bin()
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn biased_publication_game_has_only_mutual_defection() {
    let out = temp_dir("table3");
    let res = run(
        &["analyze", scenario("table3.json").to_str().unwrap()],
        &out,
    );
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let eq = std::fs::read_to_string(out.join("table3_equilibria.csv")).unwrap();
    let pure: Vec<_> = eq.lines().filter(|l| l.starts_with("pure,")).collect();
    assert_eq!(pure, ["pure,D,D"]);
}

#[test]
fn missing_seed_fails_without_outputs() {
    let out = temp_dir("noseed");
    let file = std::env::temp_dir().join(format!("noseed-{}.json", std::process::id()));
    std::fs::write(
        &file,
        r#"{"kind": "game-analysis", "output": "x", "parameters": {}}"#,
    )
    .unwrap();
    let res = run(&["analyze", file.to_str().unwrap()], &out);
    assert!(!res.status.success());
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("seed") && err.contains("line"), "{err}");
    assert!(!out.exists());
}

#[test]
fn wrong_verb_is_rejected() {
    let out = temp_dir("verb");
    let res = run(&["market", scenario("table3.json").to_str().unwrap()], &out);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("market-demo"));
}

#[test]
fn sweep_flips_at_one_half() {
    let out = temp_dir("sweep");
    let res = run(
        &["sweep", scenario("delta_sweep.json").to_str().unwrap()],
        &out,
    );
    assert!(res.status.success());
    let csv = std::fs::read_to_string(out.join("delta_sweep_sweep.csv")).unwrap();
    let flags: Vec<(&str, &str)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0], f[3])
        })
        .collect();
    for (delta, sustained) in flags {
        let d: f64 = delta.parse().unwrap();
        assert_eq!(sustained == "true", d >= 0.5, "delta {delta}");
    }
}

#[test]
fn protocol_export_verifies_and_tamper_fails() {
    let out = temp_dir("protocol");
    let res = run(
        &[
            "protocol",
            scenario("protocol_publish.json").to_str().unwrap(),
        ],
        &out,
    );
    assert!(res.status.success());
    let chain = out.join("protocol_publish_chain.jsonl");
    assert!(run(&["verify", chain.to_str().unwrap()], &out)
        .status
        .success());

    let text = std::fs::read_to_string(&chain).unwrap();
    let tampered = out.join("protocol_publish_tampered.jsonl");
    std::fs::write(&tampered, text.replacen("\"PUBLISH\"", "\"REVISE\"", 1)).unwrap();
    let genesis = out.join("protocol_publish_genesis.json");
    let res = bin()
        .args([
            "verify",
            tampered.to_str().unwrap(),
            "--genesis",
            genesis.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn same_seed_same_bytes() {
    let (a, b) = (temp_dir("det-a"), temp_dir("det-b"));
    let file = scenario("population.json");
    assert!(run(&["analyze", file.to_str().unwrap()], &a)
        .status
        .success());
    assert!(run(&["--parallel", "analyze", file.to_str().unwrap()], &b)
        .status
        .success());
    for name in ["population_rounds.csv", "population_summary.json"] {
        assert_eq!(
            std::fs::read(a.join(name)).unwrap(),
            std::fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn seed_flag_overrides_scenario_seed() {
    let out = temp_dir("seed");
    let res = run(
        &[
            "--seed",
            "7",
            "analyze",
            scenario("population.json").to_str().unwrap(),
        ],
        &out,
    );
    assert!(res.status.success());
    let summary = std::fs::read_to_string(out.join("population_summary.json")).unwrap();
    assert!(summary.contains("\"seed\": 7"));
}
