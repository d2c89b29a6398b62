use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ctxsearch"))
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed: {}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn index_then_simulate_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let index = dir.path().join("corpus.idx");
    let out = run(bin()
        .args(["index"])
        .arg(fixtures().join("corpus"))
        .arg("--out")
        .arg(&index)
        .arg("--stopwords")
        .arg(fixtures().join("stopwords.txt")));
    assert!(String::from_utf8_lossy(&out.stdout).contains("indexed 100 documents"));
    assert!(std::fs::read(&index).unwrap().starts_with(b"CTXIDX1\n"));

    let mut row_files = Vec::new();
    for phase in ["OS1", "OS2", "OS3"] {
        let rows = dir.path().join(format!("{phase}.jsonl"));
        run(bin()
            .args(["simulate", "--phase", phase, "--seed", "42", "--config"])
            .arg(fixtures().join("simulation.toml"))
            .arg("--out")
            .arg(&rows));
        assert_eq!(std::fs::read_to_string(&rows).unwrap().lines().count(), 60);
        row_files.push(rows);
    }
    // determinism across processes
    let again = dir.path().join("again.jsonl");
    run(bin()
        .args(["simulate", "--phase", "OS2", "--seed", "42", "--config"])
        .arg(fixtures().join("simulation.toml"))
        .arg("--out")
        .arg(&again));
    assert_eq!(std::fs::read(&again).unwrap(), std::fs::read(&row_files[1]).unwrap());

    let report = dir.path().join("report.json");
    let out = run(bin().arg("eval").arg("--rows").args(&row_files).arg("--out").arg(&report));
    let table = String::from_utf8_lossy(&out.stdout);
    for h in ["H1.1", "H1.2", "H1.3", "H1.4", "H1.5"] {
        assert!(table.contains(h), "{table}");
    }
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["tests"].as_array().unwrap().len(), 5);
    assert_eq!(json["rows"].as_array().unwrap().len(), 180);

    let out = bin().arg("eval").arg("--rows").arg(&row_files[0]).arg("--out").arg(&report).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn profile_export_import() {
    let dir = tempfile::tempdir().unwrap();
    let exported = dir.path().join("p.jsonl");
    run(bin()
        .args(["profile", "export", "--user", "os1-s01", "--store"])
        .arg(fixtures().join("store"))
        .arg("--out")
        .arg(&exported));
    let text = std::fs::read_to_string(&exported).unwrap();
    assert_eq!(text.lines().count(), 5);

    let store = dir.path().join("store");
    let out = run(bin()
        .args(["profile", "import", "--user", "os1-s01", "--store"])
        .arg(&store)
        .arg("--from")
        .arg(&exported));
    assert!(String::from_utf8_lossy(&out.stdout).contains("imported 5 entries"));
    let out = run(bin().args(["profile", "export", "--user", "os1-s01", "--store"]).arg(&store));
    assert_eq!(String::from_utf8_lossy(&out.stdout), text);

    // wrong user in the file
    let out = bin()
        .args(["profile", "import", "--user", "someone-else", "--store"])
        .arg(&store)
        .arg("--from")
        .arg(&exported)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let out = bin().args(["profile", "export", "--user", "ghost", "--store"]).arg(&store).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn bad_phase_is_rejected() {
    let out = bin()
        .args(["simulate", "--phase", "OS7", "--config", "x.toml", "--out", "y"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown phase"));
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

#[test]
fn serve_answers_http() {
    let dir = tempfile::tempdir().unwrap();
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let f = fixtures();
    let _server = Server(
        bin()
            .args(["serve", "--port", &port.to_string(), "--sckb", "off", "--corpus"])
            .arg(f.join("corpus"))
            .arg("--lexicon")
            .arg(f.join("lexicon.tsv"))
            .arg("--ontology")
            .arg(f.join("ontology.tsv"))
            .arg("--stopwords")
            .arg(f.join("stopwords.txt"))
            .arg("--store")
            .arg(dir.path().join("store"))
            .stderr(Stdio::null())
            .spawn()
            .unwrap(),
    );
    let url = format!("http://127.0.0.1:{port}/sckb/stats");
    let deadline = Instant::now() + Duration::from_secs(20);
    let body: serde_json::Value = loop {
        match reqwest::blocking::get(&url) {
            Ok(resp) => break resp.json().unwrap(),
            Err(_) if Instant::now() < deadline => std::thread::sleep(Duration::from_millis(100)),
            Err(e) => panic!("server did not come up: {e}"),
        }
    };
    assert_eq!(body["enabled"], false);
    assert_eq!(body["schema_version"], 1);

    let client = reqwest::blocking::Client::new();
    let resp = client
        .post(format!("http://127.0.0.1:{port}/sessions"))
        .json(&serde_json::json!({"user_id": "u1", "phase": "OS2", "task_id": "t"}))
        .send()
        .unwrap();
    assert_eq!(resp.status().as_u16(), 400, "OS2 needs the shared base");
}
