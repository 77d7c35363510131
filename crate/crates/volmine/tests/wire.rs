use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::process::{Command, Stdio};

use serde_json::{json, Value};
use volmine::wire::{serve_tcp, Session};
use volmine_core::mempool::GrowthFn;
use volmine_core::sim_env::{honest_agent, EnvConfig, EnvState, FeeSource, RewardSpec};
use volmine_core::MiningConfig;

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/honest_session.ndjson")
}

fn config() -> EnvConfig {
    EnvConfig::new(
        MiningConfig {
            max_fork_len: 4,
            ..MiningConfig::new(0.3, 0.5)
        },
        FeeSource::TimeFee {
            curve: GrowthFn::Log {
                a: 0.05,
                b: 1.0,
                c: 0.0,
            },
        },
        RewardSpec::pre_dam(1.0, 0.0),
    )
}

fn reset_line(seed: u64) -> String {
    json!({"v": 1, "type": "reset", "config": config(), "seed": seed}).to_string()
}

/// Honest session: reset, then `legal` and the honest action for 12 blocks.
fn record_honest_session(seed: u64) -> Vec<(String, String)> {
    let mut session = Session::new();
    let mut out = Vec::new();
    let mut ask = |s: &mut Session, req: String| {
        let reply = s.handle_line(&req);
        out.push((req, reply.clone()));
        serde_json::from_str::<Value>(&reply).unwrap()
    };
    let mut state: EnvState = serde_json::from_value(ask(&mut session, reset_line(seed))["state"].clone()).unwrap();
    for _ in 0..12 {
        ask(&mut session, json!({"type": "legal"}).to_string());
        let a = honest_agent(&state);
        let mut req = json!({"type": "act", "kind": a.kind});
        if a.depth > 0 {
            req["depth"] = json!(a.depth);
        }
        let reply = ask(&mut session, req.to_string());
        state = serde_json::from_value(reply["state"].clone()).unwrap();
    }
    out
}

fn parse_golden(text: &str) -> Vec<(String, String)> {
    let lines: Vec<&str> = text.lines().collect();
    lines
        .chunks(2)
        .map(|c| {
            let req = c[0].strip_prefix("> ").expect("request line");
            let rep = c[1].strip_prefix("< ").expect("reply line");
            (req.to_string(), rep.to_string())
        })
        .collect()
}

#[test]
fn honest_transcript_matches_golden() {
    let recorded = record_honest_session(42);
    let path = golden_path();
    if std::env::var_os("VOLMINE_BLESS").is_some() {
        let text: String = recorded.iter().map(|(q, r)| format!("> {q}\n< {r}\n")).collect();
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, text).unwrap();
    }
    let golden = parse_golden(&std::fs::read_to_string(&path).expect("golden transcript present"));
    assert_eq!(golden.len(), recorded.len());
    for (i, (g, r)) in golden.iter().zip(&recorded).enumerate() {
        assert_eq!(g.0, r.0, "request {i}");
        assert_eq!(g.1, r.1, "reply {i}");
    }
}

#[test]
fn golden_replays_through_stdio_server() {
    let golden = parse_golden(&std::fs::read_to_string(golden_path()).unwrap());
    let mut child = Command::new(env!("CARGO_BIN_EXE_volmine"))
        .args(["env", "serve"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    {
        let stdin = child.stdin.as_mut().unwrap();
        for (req, _) in &golden {
            writeln!(stdin, "{req}").unwrap();
        }
    }
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let expected: String = golden.iter().map(|(_, r)| format!("{r}\n")).collect();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), expected);
}

#[test]
fn reset_reply_carries_schema_version() {
    let mut s = Session::new();
    let v: Value = serde_json::from_str(&s.handle_line(&reset_line(1))).unwrap();
    assert_eq!(v["v"], 1);
    assert_eq!(v["type"], "state");
    assert_eq!(v["state"]["l_a"], 0);
}

fn error_code(reply: &str) -> String {
    let v: Value = serde_json::from_str(reply).unwrap();
    assert_eq!(v["type"], "error", "{reply}");
    v["code"].as_str().unwrap().to_string()
}

#[test]
fn errors_are_structured_and_keep_the_session() {
    let mut s = Session::new();
    assert_eq!(error_code(&s.handle_line(r#"{"type":"legal"}"#)), "no_session");
    assert_eq!(error_code(&s.handle_line("not json")), "malformed");
    assert_eq!(error_code(&s.handle_line(r#"{"type":"launch"}"#)), "malformed");
    let bad_version = reset_line(1).replace(r#""v":1"#, r#""v":2"#);
    assert_eq!(error_code(&s.handle_line(&bad_version)), "unsupported_version");
    let bad_alpha = reset_line(1).replace(r#""alpha":0.3"#, r#""alpha":1.5"#);
    assert_eq!(error_code(&s.handle_line(&bad_alpha)), "invalid_config");
    assert!(s.env().is_none());

    s.handle_line(&reset_line(1));
    let before = s.env().unwrap().state.clone();
    assert_eq!(
        error_code(&s.handle_line(r#"{"type":"act","kind":"override"}"#)),
        "illegal_action"
    );
    assert_eq!(
        error_code(&s.handle_line(r#"{"type":"act","kind":"adopt","depth":2}"#)),
        "illegal_action"
    );
    assert_eq!(
        error_code(&s.handle_line(r#"{"type":"set_rho","rho":-1}"#)),
        "invalid_config"
    );
    assert_eq!(error_code(&s.handle_line("{")), "malformed");
    assert_eq!(s.env().unwrap().state, before);

    let v: Value = serde_json::from_str(&s.handle_line(r#"{"type":"act","kind":"wait"}"#)).unwrap();
    assert_eq!(v["type"], "transition");
    assert_eq!(v["info"]["total"], 1);
}

#[test]
fn set_rho_and_block_time_are_acknowledged() {
    let mut s = Session::new();
    let post = json!({"v": 1, "type": "reset", "seed": 3, "config": EnvConfig {
        reward: RewardSpec::post_dam(0.0),
        ..config()
    }});
    s.handle_line(&post.to_string());
    let v: Value = serde_json::from_str(&s.handle_line(r#"{"type":"set_rho","rho":0.25}"#)).unwrap();
    assert_eq!(v, json!({"v": 1, "type": "ack", "rho": 0.25}));
    assert_eq!(s.env().unwrap().config.reward.rho, 0.25);
    let v: Value = serde_json::from_str(&s.handle_line(r#"{"type":"set_block_time","t_b":8.0}"#)).unwrap();
    assert_eq!(v["type"], "ack");
    assert_eq!(s.env().unwrap().block_time(), 8.0);
}

#[test]
fn legal_reply_lists_actions() {
    let mut s = Session::new();
    s.handle_line(&reset_line(5));
    let v: Value = serde_json::from_str(&s.handle_line(r#"{"type":"legal"}"#)).unwrap();
    assert_eq!(v["type"], "actions");
    let kinds: Vec<&str> = v["actions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["kind"].as_str().unwrap())
        .collect();
    assert!(kinds.contains(&"wait"));
    assert!(!kinds.contains(&"override"));
}

fn tcp_session(addr: std::net::SocketAddr, requests: &[String]) -> Vec<String> {
    let stream = TcpStream::connect(addr).unwrap();
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut writer = stream;
    requests
        .iter()
        .map(|r| {
            writeln!(writer, "{r}").unwrap();
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            line.trim_end().to_string()
        })
        .collect()
}

#[test]
fn tcp_sessions_are_independent() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let server = std::thread::spawn(move || serve_tcp(listener, Some(2)));
    let golden = parse_golden(&std::fs::read_to_string(golden_path()).unwrap());
    let requests: Vec<String> = golden.iter().map(|(q, _)| q.clone()).collect();
    let expected: Vec<String> = golden.iter().map(|(_, r)| r.clone()).collect();

    // Two interleaved connections: each must see exactly the golden replies.
    let a = std::thread::spawn({
        let requests = requests.clone();
        move || tcp_session(addr, &requests)
    });
    let b = tcp_session(addr, &requests);
    assert_eq!(a.join().unwrap(), expected);
    assert_eq!(b, expected);
    server.join().unwrap().unwrap();
}
