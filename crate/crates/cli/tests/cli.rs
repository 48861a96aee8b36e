use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output};
use std::sync::{Arc, Mutex};
use std::thread;

use serde_json::Value;

fn mafia(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mafia")).args(args).env_remove("MAFIA_API_KEY").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn manifest_paths(dir: &Path) -> Vec<String> {
    let m: Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    m["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| {
            let path = f["path"].as_str().unwrap().to_string();
            let len = fs::metadata(dir.join(&path)).unwrap().len();
            assert_eq!(f["bytes"].as_u64(), Some(len), "{path}");
            path
        })
        .collect()
}

#[test]
fn play_then_replay() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m");
    let o = mafia(&["play", "--seed", "11", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("won after"));
    assert_eq!(manifest_paths(&out), ["match.json", "transcript.jsonl"]);

    let t = out.join("transcript.jsonl");
    let o = mafia(&["replay", "--transcript", t.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("valid"));

    // Same seed, same bytes.
    let again = dir.path().join("again");
    assert!(mafia(&["play", "--seed", "11", "--out", again.to_str().unwrap()]).status.success());
    assert_eq!(fs::read(&t).unwrap(), fs::read(again.join("transcript.jsonl")).unwrap());

    let text = fs::read_to_string(&t).unwrap();
    let cut: Vec<&str> = text.lines().collect();
    let bad = dir.path().join("cut.jsonl");
    fs::write(&bad, cut[..cut.len() - 1].join("\n") + "\n").unwrap();
    let o = mafia(&["replay", "--transcript", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).starts_with("INVALID"));
}

#[test]
fn tournament_writes_leaderboard_and_games() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t");
    let o = mafia(&[
        "tournament",
        "--agents",
        "strong=scripted:strong,scripted:random,revac8",
        "--games",
        "12",
        "--seed",
        "5",
        "--workers",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("12 games played, 0 failed"));
    let board: Value = serde_json::from_str(&fs::read_to_string(out.join("leaderboard.json")).unwrap()).unwrap();
    assert_eq!(board["entries"].as_array().unwrap().len(), 3);
    assert_eq!(fs::read_to_string(out.join("games.jsonl")).unwrap().lines().count(), 12);
    let files = manifest_paths(&out);
    assert_eq!(files.iter().filter(|p| p.starts_with("games/")).count(), 12);
    assert!(files.contains(&"leaderboard.json".to_string()));
}

#[test]
fn bench_score_floor_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b");
    let o = mafia(&["bench", "--agent", "oracle", "--min-score", "1.0", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(out.join("results.jsonl")).unwrap().lines().count(), 14);
    assert_eq!(manifest_paths(&out), ["results.jsonl"]);

    let o = mafia(&["bench", "--agent", "constant:villager", "--min-score", "0.5"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(mafia(&["bench", "--agent", "revac8", "--min-score", "0.5"]).status.success());
}

#[test]
fn bad_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "seed = 1\nplayers = 9\n").unwrap();
    let o = mafia(&["play", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("players"));
    assert_eq!(mafia(&["tournament", "--agents", "gpt9"]).status.code(), Some(2));
    assert_eq!(mafia(&["replay", "--transcript", "/nonexistent.jsonl"]).status.code(), Some(1));
}

/// Serves one canned chat completion per connection and records auth headers.
fn fake_endpoint(reply: &'static str) -> (String, Arc<Mutex<Vec<String>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let mut stream = stream.unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            let mut auth = String::new();
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let lower = line.to_ascii_lowercase();
                if let Some(v) = lower.strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                if lower.starts_with("authorization:") {
                    auth = line.trim().to_string();
                }
                if line == "\r\n" || line.is_empty() {
                    break;
                }
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            log.lock().unwrap().push(auth);
            let json = serde_json::json!({"choices": [{"message": {"content": reply}}]}).to_string();
            let resp = format!(
                "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{json}",
                json.len()
            );
            stream.write_all(resp.as_bytes()).unwrap();
        }
    });
    (url, seen)
}

#[test]
fn http_judge_scores_through_an_openai_style_endpoint() {
    let (url, seen) = fake_endpoint("Careful reasoning.\nScore: 4");
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("arena.toml");
    fs::write(
        &cfg,
        format!(
            "[agent.retry]\nmax_retries = 0\nbase_delay_ms = 0\njitter = 0.0\n\n[backends.remote]\nkind = \"http\"\nbase_url = \"{url}\"\nmodel = \"judge-model\"\ntimeout_secs = 10\n"
        ),
    )
    .unwrap();
    let out = dir.path().join("b");
    let o = Command::new(env!("CARGO_BIN_EXE_mafia"))
        .args(["bench", "--config", cfg.to_str().unwrap(), "--agent", "oracle", "--judge", "remote"])
        .args(["--out", out.to_str().unwrap()])
        .env("MAFIA_API_KEY", "test-key")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("0 judge fallbacks"), "{}", stdout(&o));
    let lines: Vec<Value> = fs::read_to_string(out.join("results.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines[13]["metric_b_norm"], 0.8);
    let seen = seen.lock().unwrap();
    assert_eq!(seen.len(), 13);
    assert!(seen.iter().all(|a| a == "authorization: Bearer test-key"), "{seen:?}");
    assert!(!stdout(&o).contains("test-key"));
}

#[test]
fn unreachable_backend_still_finishes_the_match() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("arena.toml");
    fs::write(
        &cfg,
        "seats = [\"revac8@remote\", \"revac8@remote\", \"revac2_1\", \"revac\", \"scripted:random\", \"scripted:strong\"]\n\
         [agent.retry]\nmax_retries = 1\nbase_delay_ms = 0\njitter = 0.0\n\n\
         [backends.remote]\nkind = \"http\"\nbase_url = \"http://127.0.0.1:9/v1\"\nmodel = \"m\"\ntimeout_secs = 2\n",
    )
    .unwrap();
    let out = dir.path().join("m");
    let o = mafia(&["play", "--config", cfg.to_str().unwrap(), "--seed", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("match.json")).unwrap()).unwrap();
    assert!(report["winner"].is_string());
    let failures = report["seats"][0]["pipeline"]["backend_failures"].as_u64().unwrap();
    assert!(failures > 0);
}
