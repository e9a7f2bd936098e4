use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use forensica_core::wire::{parse_world, Game, GroundTruth};
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_forensica"));
    c.env_remove("FORENSICA_TEST");
    c
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().expect("binary runs")
}

fn play(world: &Path, script: &str, extra: &[&str], test_mode: bool) -> Output {
    let mut c = bin();
    c.arg("play").arg(world).args(extra).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped());
    if test_mode {
        c.env("FORENSICA_TEST", "1");
    }
    let mut child = c.spawn().expect("binary runs");
    child.stdin.take().unwrap().write_all(script.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn text(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn generate(dir: &Path, game: &str, seed: &str) -> PathBuf {
    let o = run(&["generate", game, "--seed", seed], dir);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    dir.join(format!("{game}-{}.forensica.json", seed.parse::<u64>().unwrap_or(0)))
}

#[test]
fn generate_village_writes_a_parseable_village() {
    let dir = TempDir::new().unwrap();
    let path = generate(dir.path(), "village", "7");
    let b = parse_world(&std::fs::read(path).unwrap()).unwrap();
    assert_eq!(b.game, Game::Village);
    assert_eq!(b.seed.0, 7);
}

#[test]
fn generate_station_twice_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    run(&["generate", "station", "--seed", "7", "--out", "a.forensica.json"], dir.path());
    run(&["generate", "station", "--seed", "7", "--out", "b.forensica.json"], dir.path());
    let a = std::fs::read(dir.path().join("a.forensica.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.forensica.json")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn hex_seed_matches_decimal() {
    let dir = TempDir::new().unwrap();
    run(&["generate", "village", "--seed", "0x1f", "--out", "hex.json"], dir.path());
    run(&["generate", "village", "--seed", "31", "--out", "dec.json"], dir.path());
    assert_eq!(std::fs::read(dir.path().join("hex.json")).unwrap(), std::fs::read(dir.path().join("dec.json")).unwrap());
}

#[test]
fn invalid_config_exits_2_naming_the_field() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"station":{"crew_size":{"min":9,"max":4}}}"#).unwrap();
    let o = run(&["generate", "station", "--seed", "1", "--config", "bad.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("station.crew_size"));

    std::fs::write(dir.path().join("typo.json"), r#"{"village":{"birth_rat":0.1}}"#).unwrap();
    let o = run(&["calibrate", "village", "--runs", "3", "--config", "typo.json", "--json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_str(text(&o).trim()).unwrap();
    assert!(v["error"].as_str().unwrap().contains("village.birth_rat"));
}

#[test]
fn usage_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run(&["generate", "moon", "--seed", "1"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["generate", "village", "--seed", "banana"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["calibrate", "village", "--runs", "0"], dir.path()).status.code(), Some(2));
}

#[test]
fn calibrate_single_run_has_one_ending() {
    let dir = TempDir::new().unwrap();
    let o = run(&["calibrate", "village", "--runs", "1", "--json"], dir.path());
    assert!(o.status.success());
    let v: Value = serde_json::from_str(text(&o).trim()).unwrap();
    let counts: Vec<u64> = v["report"]["rows"].as_array().unwrap().iter().map(|r| r["count"].as_u64().unwrap()).collect();
    assert_eq!(counts.iter().sum::<u64>(), 1);
    assert_eq!(counts.iter().filter(|c| **c == 1).count(), 1);
}

#[test]
fn calibrate_default_config_is_balanced_and_repeatable() {
    let dir = TempDir::new().unwrap();
    let a = run(&["calibrate", "village", "--runs", "500", "--json"], dir.path());
    let b = run(&["calibrate", "village", "--runs", "500", "--json"], dir.path());
    assert_eq!(text(&a), text(&b));
    let v: Value = serde_json::from_str(text(&a).trim()).unwrap();
    for row in v["report"]["rows"].as_array().unwrap() {
        let f = row["frequency"].as_f64().unwrap();
        assert!((0.20..=0.47).contains(&f), "{row}");
    }
}

#[test]
fn calibrate_text_table_and_station_tally() {
    let dir = TempDir::new().unwrap();
    let o = run(&["calibrate", "village", "--runs", "20"], dir.path());
    let t = text(&o);
    for key in ["ecosystem_collapse", "overrun_by_predators", "famine"] {
        assert!(t.contains(key), "{t}");
    }
    let o = run(&["calibrate", "station", "--runs", "4", "--json"], dir.path());
    assert!(o.status.success());
    let v: Value = serde_json::from_str(text(&o).trim()).unwrap();
    assert_eq!(v["report"]["failed"], 0);
}

#[test]
fn calibrate_nudge_writes_a_loadable_config() {
    let dir = TempDir::new().unwrap();
    let o = run(&["calibrate", "village", "--runs", "30", "--nudge", "1", "--write-config", "tuned.json", "--json"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(text(&o).trim()).unwrap();
    assert!(v["nudges"].is_array());
    let g = run(&["generate", "village", "--seed", "3", "--config", "tuned.json"], dir.path());
    assert!(g.status.success());
}

#[test]
fn validate_accepts_good_and_rejects_corrupt() {
    let dir = TempDir::new().unwrap();
    let path = generate(dir.path(), "station", "11");
    let o = run(&["validate", path.to_str().unwrap(), "--json"], dir.path());
    assert!(o.status.success());
    let v: Value = serde_json::from_str(text(&o).trim()).unwrap();
    assert_eq!(v["ok"], true);

    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(dir.path().join("cut.json"), &bytes[..bytes.len() / 2]).unwrap();
    let o = run(&["validate", "cut.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("parse error"));
}

#[test]
fn trace_emits_json_lines() {
    let dir = TempDir::new().unwrap();
    for game in ["station", "village"] {
        let o = run(&["trace", game, "--seed", "5"], dir.path());
        assert!(o.status.success());
        let t = text(&o);
        assert!(t.lines().count() > 3);
        for line in t.lines() {
            serde_json::from_str::<Value>(line).unwrap();
        }
    }
    let o = run(&["trace", "station", "--seed", "5", "--out", "t.jsonl", "--json"], dir.path());
    let v: Value = serde_json::from_str(text(&o).trim()).unwrap();
    assert!(v["lines"].as_u64().unwrap() > 3);
}

#[test]
fn scripted_play_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let path = generate(dir.path(), "station", "7");
    let script = "look\nd\nd\nface 0 1\ns\ns\nface -1 0\na\nread\ninspect 0 0\nhelp\nfly\ndraft\nquit\n";
    let a = play(&path, script, &[], false);
    let b = play(&path, script, &[], false);
    assert!(a.status.success());
    assert_eq!(text(&a), text(&b));
    assert!(text(&a).contains("Explored:"));

    let ja = play(&path, script, &["--json"], false);
    let jb = play(&path, script, &["--json"], false);
    assert_eq!(text(&ja), text(&jb));
    for line in text(&ja).lines() {
        serde_json::from_str::<Value>(line).unwrap();
    }
}

#[test]
fn script_file_matches_stdin() {
    let dir = TempDir::new().unwrap();
    let path = generate(dir.path(), "village", "4");
    let script = "s\ns\ne\nlook\nquit\n";
    std::fs::write(dir.path().join("moves.txt"), script).unwrap();
    let from_file = run(&["play", path.to_str().unwrap(), "--script", "moves.txt"], dir.path());
    let from_stdin = play(&path, script, &[], false);
    assert_eq!(text(&from_file), text(&from_stdin));
}

#[test]
fn revealed_answers_score_full_marks() {
    let dir = TempDir::new().unwrap();
    let path = generate(dir.path(), "station", "7");
    let crew = match parse_world(&std::fs::read(&path).unwrap()).unwrap().ground_truth {
        Some(GroundTruth::Station(t)) => t.crew.len(),
        _ => unreachable!(),
    };
    let o = play(&path, "answers\nreport\n", &["--reveal"], true);
    assert!(text(&o).contains(&format!("Score: {crew} / {crew}")), "{}", text(&o));

    let o = play(&path, "report\n", &[], false);
    assert!(text(&o).contains(&format!("Score: 0 / {crew}")));
}

#[test]
fn reveal_is_refused_outside_test_mode() {
    let dir = TempDir::new().unwrap();
    let path = generate(dir.path(), "station", "7");
    let o = play(&path, "answers\n", &["--reveal"], false);
    assert_eq!(o.status.code(), Some(2));
    let o = play(&path, "answers\nreport\n", &[], false);
    assert!(text(&o).contains("unknown command \"answers\""));
}

#[test]
fn village_quit_prints_summary() {
    let dir = TempDir::new().unwrap();
    let path = generate(dir.path(), "village", "7");
    let o = play(&path, "w\ns\ns\nquit\n", &[], false);
    let t = text(&o);
    assert!(t.contains("bump:"));
    assert!(t.contains("Explored: 2 moves"), "{t}");
}

#[test]
fn pre_report_json_play_hides_answers() {
    let dir = TempDir::new().unwrap();
    let path = generate(dir.path(), "station", "12");
    let o = play(&path, "sync\nd\nd\nface 0 1\ns\nread\n", &["--json"], false);
    for line in text(&o).lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert!(forensica_core::session::sealed_keys_in(&v).is_empty(), "{line}");
        assert!(!line.contains("crew-"));
    }
}
