//! Shared helpers for driving the `flowids` binary in tests.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn flowids() -> Command {
    Command::new(env!("CARGO_BIN_EXE_flowids"))
}

pub fn run_ok(args: &[&str]) -> Output {
    let output = flowids().args(args).output().expect("spawn flowids");
    assert!(
        output.status.success(),
        "flowids {:?} failed with {:?}\nstdout: {}\nstderr: {}",
        args,
        output.status.code(),
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr),
    );
    output
}

#[allow(dead_code)] // not every test target uses every helper
pub fn run_expect_code(args: &[&str], code: i32) -> Output {
    let output = flowids().args(args).output().expect("spawn flowids");
    assert_eq!(
        output.status.code(),
        Some(code),
        "flowids {:?} exited {:?}, expected {code}\nstderr: {}",
        args,
        output.status.code(),
        String::from_utf8_lossy(&output.stderr),
    );
    output
}

pub const SMALL_SCENARIO: &str = "\
seed = 11
start = 2017-03-17 08:00:00.000
duration = 3600
benign_rate = 1.0
clients = 192.168.100.5, 192.168.100.6
servers = 192.168.100.3, 192.168.100.4
external_server = 10.10.0.10
external_clients = 203.0.113.5
attackers = 172.31.9.20, 172.31.9.21
attack = port_scan, 2017-03-17 08:05:00.000, 300, 172.31.9.20, 192.168.100.3, 200
attack = dos, 2017-03-17 08:20:00.000, 120, 172.31.9.21, 192.168.100.4, 400
attack = port_scan, 2017-03-17 08:45:00.000, 300, 172.31.9.20, 192.168.100.3, 150
attack = dos, 2017-03-17 08:52:00.000, 120, 172.31.9.21, 192.168.100.4, 300
";

pub fn write_scenario(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("scenario.conf");
    fs::write(&path, text).expect("write scenario config");
    path
}

/// Generates SMALL_SCENARIO into `<dir>/gen` and returns the flows path.
pub fn generate_small(dir: &Path) -> PathBuf {
    let scenario = write_scenario(dir, SMALL_SCENARIO);
    let out = dir.join("gen");
    run_ok(&[
        "generate",
        "--config",
        scenario.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    out.join("flows.csv")
}

pub fn read_bytes(path: &Path) -> Vec<u8> {
    fs::read(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}
