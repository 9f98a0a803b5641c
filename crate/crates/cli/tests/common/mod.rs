#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

pub const BIN: &str = env!("CARGO_BIN_EXE_proxburden");
pub const ROADS_TUPLE: &str = "layer=industrial_roads&radius_m=1609.344&scale=community_area&method=natural_breaks&k=4";

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/synthetic")
}

pub fn fixture_config() -> PathBuf {
    fixture_dir().join("config.json")
}

pub fn golden_dir() -> PathBuf {
    fixture_dir().join("golden")
}

pub fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env("RUST_LOG", "warn").output().expect("spawn proxburden")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Copies the fixture inputs into a scratch directory so tests can break them.
pub fn scratch_fixture() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(fixture_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.is_file() {
            std::fs::copy(&path, dir.path().join(path.file_name().unwrap())).unwrap();
        }
    }
    dir
}

/// `validate`, then `compute` on the fixture tuple and both reports, into `out`.
pub fn run_fixture(out: &Path, threads: Option<&str>) {
    let cfg = fixture_config();
    let mut base = vec![];
    if let Some(t) = threads {
        base.extend(["--threads", t]);
    }
    let tuple = ["--config", p(&cfg), "--layer", "industrial_roads", "--radius-m", "1609.344", "--out-dir", p(out)];
    let runs: [Vec<&str>; 4] = [
        vec!["validate", "--config", p(&cfg), "--out-dir", p(out)],
        [&base[..], &["compute"], &tuple[..], &["--scale", "community_area", "--method", "natural_breaks", "--k", "4"]].concat(),
        [&base[..], &["report", "--kind", "maup"], &tuple[..]].concat(),
        [&base[..], &["report", "--kind", "demographics"], &tuple[..]].concat(),
    ];
    for args in runs {
        let o = run(&args);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

pub struct Http {
    pub status: u16,
    pub headers: String,
    pub body: String,
}

fn dechunk(mut raw: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    loop {
        let eol = raw.windows(2).position(|w| w == b"\r\n").expect("chunk size line");
        let size = usize::from_str_radix(std::str::from_utf8(&raw[..eol]).unwrap().trim(), 16).unwrap();
        raw = &raw[eol + 2..];
        if size == 0 {
            return out;
        }
        out.extend_from_slice(&raw[..size]);
        raw = &raw[size + 2..];
    }
}

/// One HTTP/1.1 GET over a fresh connection.
pub fn http_get(addr: &str, path: &str) -> Http {
    let mut stream = TcpStream::connect(addr).unwrap();
    stream.set_read_timeout(Some(Duration::from_secs(30))).unwrap();
    write!(stream, "GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").unwrap();
    let mut raw = Vec::new();
    stream.read_to_end(&mut raw).unwrap();
    let split = raw.windows(4).position(|w| w == b"\r\n\r\n").expect("header terminator");
    let headers = String::from_utf8(raw[..split].to_vec()).unwrap();
    let status = headers.split(' ').nth(1).unwrap().parse().unwrap();
    let body = &raw[split + 4..];
    let body = if headers.to_ascii_lowercase().contains("transfer-encoding: chunked") { dechunk(body) } else { body.to_vec() };
    Http { status, headers, body: String::from_utf8(body).unwrap() }
}

pub struct Server {
    pub child: Child,
    pub addr: String,
}

impl Server {
    pub fn start(config: &Path, port: u16) -> Result<Server, Output> {
        let mut child = Command::new(BIN)
            .args(["serve", "--config", p(config), "--port", &port.to_string()])
            .env("RUST_LOG", "warn")
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .unwrap();
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
        match line.trim().strip_prefix("listening on http://") {
            Some(addr) => Ok(Server { addr: addr.to_owned(), child }),
            None => Err(child.wait_with_output().unwrap()),
        }
    }

    pub fn get(&self, path: &str) -> Http {
        http_get(&self.addr, path)
    }

    /// Sends SIGINT and waits for the exit status.
    pub fn interrupt(mut self) -> Option<i32> {
        unsafe { libc::kill(self.child.id() as libc::pid_t, libc::SIGINT) };
        let start = Instant::now();
        while start.elapsed() < Duration::from_secs(20) {
            if let Some(status) = self.child.try_wait().unwrap() {
                return status.code();
            }
            std::thread::sleep(Duration::from_millis(20));
        }
        let _ = self.child.kill();
        panic!("server ignored SIGINT");
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub const GOLDEN_FILES: [&str; 6] =
    ["validation.json", "scores.csv", "burden.geojson", "run.json", "maup.json", "demographics.json"];

/// Files in `out` that differ from the committed snapshots. With
/// `UPDATE_GOLDEN` set the snapshots are rewritten instead.
pub fn golden_mismatches(out: &Path) -> Vec<String> {
    let golden = golden_dir();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(&golden).unwrap();
        for f in GOLDEN_FILES {
            std::fs::copy(out.join(f), golden.join(f)).unwrap();
        }
    }
    GOLDEN_FILES
        .iter()
        .filter(|f| std::fs::read(out.join(f)).ok() != std::fs::read(golden.join(f)).ok())
        .map(|f| f.to_string())
        .collect()
}
