use std::io::{Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

use proxysync_core::relay::{codec, ClientFrame, ClientRegistration, Role, ServerFrame};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_proxysync"))
}

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn run_writes_report_matching_the_golden() {
    let dir = tempfile::tempdir().unwrap();
    let script = repo().join("scenarios/tictactoe.json");
    let stdout = ok(bin().arg("run").arg("--script").arg(&script).arg("--out").arg(dir.path()).output().unwrap());
    assert!(stdout.contains("illusion breaks 0"), "{stdout}");

    let metrics = std::fs::read_to_string(dir.path().join("metrics.json")).unwrap();
    let golden = std::fs::read_to_string(repo().join("scenarios/golden/tictactoe.json")).unwrap();
    assert_eq!(metrics.trim_end(), golden.trim_end());

    let moves = std::fs::read_to_string(dir.path().join("moves.csv")).unwrap();
    assert_eq!(moves.lines().count(), 82);

    let json = ok(bin()
        .args(["export", "--format", "json", "--report"])
        .arg(dir.path().join("report.json"))
        .output()
        .unwrap());
    assert_eq!(json.trim_end(), golden.trim_end());

    let csv = ok(bin().args(["export", "--report"]).arg(dir.path().join("report.json")).output().unwrap());
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let values: Vec<&str> = lines.next().unwrap().split(',').collect();
    let breaks = header.iter().position(|h| *h == "metrics.illusion_breaks").expect("dotted keys");
    assert_eq!(values[breaks], "0");
}

#[test]
fn sweep_prints_rows_and_threshold() {
    let out = bin()
        .args(["sweep", "--scenario", "tictactoe", "--parameter", "artificial-latency", "--values", "0,1500"])
        .output()
        .unwrap();
    let stderr = String::from_utf8_lossy(&out.stderr).into_owned();
    let stdout = ok(out);
    let rows: Vec<&str> = stdout.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("scenario,parameter,value,illusion_breaks"));
    assert!(stderr.contains("= 1500"), "{stderr}");
}

#[test]
fn invalid_scripts_report_each_problem() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let mut script: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(repo().join("scenarios/telekinesis.json")).unwrap()).unwrap();
    script["parameters"]["dt"] = 0.into();
    script["parameters"]["hand_speed"] = (-1.0).into();
    std::fs::write(&path, script.to_string()).unwrap();
    let out = bin().arg("run").arg("--script").arg(&path).output().unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("dt must be positive") && stderr.contains("hand_speed"), "{stderr}");

    let out = bin().args(["run", "--scenario", "chess"]).output().unwrap();
    assert!(!out.status.success());
}

struct Killed(Child);

impl Drop for Killed {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

#[test]
fn serve_relay_answers_registration() {
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let addr = format!("127.0.0.1:{port}");
    let _server = Killed(
        bin()
            .args(["serve-relay", "--address", &addr])
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .unwrap(),
    );
    let deadline = Instant::now() + Duration::from_secs(10);
    let mut stream = loop {
        match TcpStream::connect(&addr) {
            Ok(s) => break s,
            Err(_) if Instant::now() < deadline => std::thread::sleep(Duration::from_millis(20)),
            Err(e) => panic!("relay never came up: {e}"),
        }
    };
    stream.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    let register = ClientFrame::Register {
        registration: ClientRegistration {
            client_id: "ui".into(),
            namespaces: ["tictactoe".to_string()].into(),
            role: Role::Sink,
            site: "a".into(),
        },
    };
    stream.write_all(&codec::encode(&register).unwrap()).unwrap();
    let mut decoder = codec::FrameDecoder::new();
    let mut frames = Vec::new();
    let mut buf = [0u8; 4096];
    while frames.len() < 2 {
        let n = stream.read(&mut buf).unwrap();
        assert!(n > 0, "relay closed the connection");
        decoder.extend(&buf[..n]);
        while let Some(f) = decoder.next_frame::<ServerFrame>().unwrap() {
            frames.push(f);
        }
    }
    assert!(matches!(frames[0], ServerFrame::Registered { .. }), "{frames:?}");
    assert!(matches!(&frames[1], ServerFrame::Snapshot { messages } if messages.is_empty()));
}
