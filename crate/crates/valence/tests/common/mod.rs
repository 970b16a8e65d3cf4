//! Helpers for tests that drive the `valence` binary and its HTTP service.

#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Child, Command, Stdio};

use serde_json::Value;

pub const BIN: &str = env!("CARGO_BIN_EXE_valence");

pub fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(BIN).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("`valence {}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)))
    }
}

/// Generates `episodes` episodes and builds annotation dataset `demo` from
/// their train split under `data_dir`.
pub fn prepare_data(work: &Path, data_dir: &Path, episodes: usize) -> Result<(), String> {
    let gen = work.join("gen");
    run_cli(&["generate", "--episodes", &episodes.to_string(), "--out", gen.to_str().unwrap()])?;
    run_cli(&[
        "build-annotation",
        "--dataset",
        gen.join("tracks.txt").to_str().unwrap(),
        "--name",
        "demo",
        "--split",
        "train",
        "--data-dir",
        data_dir.to_str().unwrap(),
    ])
}

/// A `valence serve` child on a free port, killed with SIGKILL on drop.
pub struct Server {
    pub child: Child,
    pub base: String,
}

impl Server {
    pub fn start(data_dir: &Path) -> Result<Server, String> {
        let mut child = Command::new(BIN)
            .args(["serve", "--port", "0", "--data-dir"])
            .arg(data_dir)
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| e.to_string())?;
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).map_err(|e| e.to_string())?;
        let base =
            line.trim().strip_prefix("listening on ").ok_or_else(|| format!("unexpected banner `{line}`"))?.to_string();
        Ok(Server { child, base })
    }

    pub fn kill(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        self.kill();
    }
}

pub fn new_agent() -> ureq::Agent {
    ureq::Agent::config_builder().http_status_as_error(false).build().into()
}

pub fn get(agent: &ureq::Agent, url: &str) -> Result<(u16, Value), String> {
    let mut r = agent.get(url).call().map_err(|e| e.to_string())?;
    Ok((r.status().as_u16(), r.body_mut().read_json().map_err(|e| e.to_string())?))
}

pub fn post(agent: &ureq::Agent, url: &str, body: &Value) -> Result<(u16, Value), String> {
    let mut r = agent.post(url).send_json(body).map_err(|e| e.to_string())?;
    Ok((r.status().as_u16(), r.body_mut().read_json().map_err(|e| e.to_string())?))
}
