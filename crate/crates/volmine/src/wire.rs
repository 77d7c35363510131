//! Newline-delimited JSON protocol for driving simulator sessions.
//!
//! Schema version 1. Every request is one JSON object per line and gets
//! exactly one reply line. Replies carry `"v": 1`.
//!
//! | request | reply |
//! |---|---|
//! | `{"v":1,"type":"reset","config":EnvConfig,"seed":u64}` | `{"v":1,"type":"state","state":EnvState}` |
//! | `{"type":"legal"}` | `{"v":1,"type":"actions","actions":[EnvAction,...]}` |
//! | `{"type":"act","kind":"wait","depth":0,"duration":5.0}` | `{"v":1,"type":"transition","state":EnvState,"info":{"r_a","canon","total","elapsed"},"reward":f64}` |
//! | `{"type":"set_rho","rho":f64}` | `{"v":1,"type":"ack","rho":f64}` |
//! | `{"type":"set_block_time","t_b":f64}` | `{"v":1,"type":"ack","t_b":f64}` |
//!
//! `depth` (the `i` of `adopt_i`) and `duration` (minutes, undercut kinds
//! only) are optional. A request may carry `"v"`; any value other than 1 is
//! rejected. Failures reply `{"v":1,"type":"error","code":...,"message":...}`
//! with code `malformed`, `unsupported_version`, `no_session`,
//! `invalid_config` or `illegal_action`; the session is left as it was.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use volmine_core::sim_env::{ActionKind, Env, EnvAction, EnvConfig};

pub const VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Request {
    Reset {
        #[serde(default)]
        v: Option<u32>,
        config: EnvConfig,
        #[serde(default)]
        seed: u64,
    },
    Legal {
        #[serde(default)]
        v: Option<u32>,
    },
    Act {
        #[serde(default)]
        v: Option<u32>,
        kind: ActionKind,
        #[serde(default)]
        depth: usize,
        #[serde(default)]
        duration: Option<f64>,
    },
    SetRho {
        #[serde(default)]
        v: Option<u32>,
        rho: f64,
    },
    SetBlockTime {
        #[serde(default)]
        v: Option<u32>,
        t_b: f64,
    },
}

impl Request {
    fn version(&self) -> Option<u32> {
        match self {
            Request::Reset { v, .. }
            | Request::Legal { v }
            | Request::Act { v, .. }
            | Request::SetRho { v, .. }
            | Request::SetBlockTime { v, .. } => *v,
        }
    }
}

#[derive(Debug, Serialize)]
struct WireInfo {
    r_a: f64,
    canon: u32,
    total: u32,
    elapsed: f64,
}

fn error(code: &str, message: impl std::fmt::Display) -> Value {
    json!({"v": VERSION, "type": "error", "code": code, "message": message.to_string()})
}

/// One environment session; replies are a pure function of the requests.
#[derive(Debug, Default)]
pub struct Session {
    env: Option<Env>,
}

impl Session {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn env(&self) -> Option<&Env> {
        self.env.as_ref()
    }

    /// Handles one request line and returns the reply line (no newline).
    pub fn handle_line(&mut self, line: &str) -> String {
        self.handle(line).to_string()
    }

    fn handle(&mut self, line: &str) -> Value {
        let req: Request = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => return error("malformed", e),
        };
        if let Some(v) = req.version() {
            if v != VERSION {
                return error(
                    "unsupported_version",
                    format!("schema version {v} is not supported (expected {VERSION})"),
                );
            }
        }
        if let Request::Reset { config, seed, .. } = req {
            return match Env::reset(config, seed) {
                Ok(env) => {
                    let reply = json!({"v": VERSION, "type": "state", "state": env.state});
                    self.env = Some(env);
                    reply
                }
                Err(e) => error("invalid_config", e),
            };
        }
        let Some(env) = self.env.as_mut() else {
            return error("no_session", "send reset first");
        };
        match req {
            Request::Reset { .. } => unreachable!(),
            Request::Legal { .. } => json!({"v": VERSION, "type": "actions", "actions": env.legal_actions()}),
            Request::Act {
                kind, depth, duration, ..
            } => {
                let action = EnvAction { kind, depth, duration };
                match env.step(action) {
                    Ok(t) => json!({
                        "v": VERSION,
                        "type": "transition",
                        "state": env.state,
                        "info": WireInfo {
                            r_a: t.info.reward_adv,
                            canon: t.info.canonical_blocks,
                            total: t.info.total_blocks,
                            elapsed: t.info.elapsed,
                        },
                        "reward": t.reward,
                    }),
                    Err(e) => error("illegal_action", e),
                }
            }
            Request::SetRho { rho, .. } => match env.set_rho(rho) {
                Ok(()) => json!({"v": VERSION, "type": "ack", "rho": rho}),
                Err(e) => error("invalid_config", e),
            },
            Request::SetBlockTime { t_b, .. } => match env.set_block_time(t_b) {
                Ok(()) => json!({"v": VERSION, "type": "ack", "t_b": t_b}),
                Err(e) => error("invalid_config", e),
            },
        }
    }
}

/// Runs one session over a line reader and writer until end of input.
/// Blank lines are ignored.
pub fn serve_stream<R: BufRead, W: Write>(reader: R, mut writer: W) -> std::io::Result<()> {
    let mut session = Session::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        writeln!(writer, "{}", session.handle_line(&line))?;
        writer.flush()?;
    }
    Ok(())
}

fn serve_connection(stream: TcpStream) -> std::io::Result<()> {
    let reader = BufReader::new(stream.try_clone()?);
    serve_stream(reader, stream)
}

/// Accepts connections forever, one thread and one session per connection.
/// `max_connections` stops accepting after that many (used by tests).
pub fn serve_tcp(listener: TcpListener, max_connections: Option<usize>) -> std::io::Result<()> {
    std::thread::scope(|scope| {
        for (i, stream) in listener.incoming().enumerate() {
            let stream = stream?;
            scope.spawn(move || {
                if let Err(e) = serve_connection(stream) {
                    eprintln!("connection closed: {e}");
                }
            });
            if max_connections.is_some_and(|m| i + 1 >= m) {
                break;
            }
        }
        Ok(())
    })
}
