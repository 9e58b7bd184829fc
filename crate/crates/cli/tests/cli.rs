use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use figoa_core::forwarder::Mode;
use figoa_sim::scenarios;
use rand::RngCore;

fn figoa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_figoa")).args(args).output().expect("spawn figoa")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn frag_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

/// Key pair plus a fragmented random file of `size` bytes.
fn setup(size: usize, mtu: usize) -> (tempfile::TempDir, PathBuf) {
    let tmp = tempfile::tempdir().unwrap();
    let key = tmp.path().join("key");
    assert!(figoa(&["keygen", "--out", p(&key), "--seed", "7"]).status.success());
    let mut data = vec![0u8; size];
    rand::thread_rng().fill_bytes(&mut data);
    let input = tmp.path().join("in.bin");
    fs::write(&input, &data).unwrap();
    let out = tmp.path().join("frags");
    let o = figoa(&[
        "fragment",
        "--in",
        p(&input),
        "--name",
        "/x/file",
        "--key",
        p(&key),
        "--mtu",
        &mtu.to_string(),
        "--out-dir",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    (tmp, out)
}

#[test]
fn latency_table_defaults() {
    let o = figoa(&["latency-table"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "metric,5,10,20,30,50,100");
    assert!(lines[3].starts_with("e2e_reassembly_ms,105.79,"));
    assert!(lines[5].ends_with(",407.03"));
}

#[test]
fn latency_table_single_fragment() {
    let s = stdout(&figoa(&["latency-table", "-k", "1", "--flows", "5"]));
    let cell = |row: &str| -> f64 {
        s.lines().find(|l| l.starts_with(row)).unwrap().split(',').nth(1).unwrap().parse().unwrap()
    };
    let tf = 1300.0 * 8.0 / 100e6 * 1e3;
    assert!((cell("e2e_reassembly_ms") - (cell("e2e_cut_through_ms") + 7.0 * tf)).abs() < 0.011);
}

#[test]
fn fragment_counts() {
    let (_t, dir) = setup(4096, 1500);
    assert_eq!(frag_files(&dir).len(), 4);
    let (_t, dir) = setup(500, 1500);
    assert_eq!(frag_files(&dir).len(), 1);
    let name = frag_files(&dir)[0].file_name().unwrap().to_str().unwrap().to_string();
    assert!(name.ends_with(".0000000000.frag") && name.len() == 64 + 1 + 10 + 5, "{name}");
}

#[test]
fn fragment_mtu_too_small() {
    let (tmp, _) = setup(100, 1500);
    let o = figoa(&[
        "fragment",
        "--in",
        p(&tmp.path().join("in.bin")),
        "--name",
        "/x",
        "--key",
        p(&tmp.path().join("key")),
        "--mtu",
        "80",
        "--out-dir",
        p(&tmp.path().join("o")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("MtuTooSmall"));
}

#[test]
fn verify_round_trip_any_order() {
    let (tmp, dir) = setup(20_000, 1000);
    for seed in 0..5 {
        let o = figoa(&[
            "verify",
            "--frags",
            p(&dir),
            "--shuffle",
            &seed.to_string(),
            "--key",
            p(&tmp.path().join("key.pub")),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        assert!(stdout(&o).contains("AcceptComplete /x/file"));
    }
    let out = tmp.path().join("out.bin");
    assert!(figoa(&["verify", "--frags", p(&dir), "--out", p(&out)]).status.success());
    assert_eq!(fs::read(out).unwrap(), fs::read(tmp.path().join("in.bin")).unwrap());
}

#[test]
fn verify_truncated_fragment_rejects() {
    let (_t, dir) = setup(5000, 1500);
    let f = &frag_files(&dir)[1];
    let mut bytes = fs::read(f).unwrap();
    bytes.pop();
    fs::write(f, bytes).unwrap();
    let o = figoa(&["verify", "--frags", p(&dir)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("Reject"));
}

#[test]
fn verify_missing_fragment_rejects() {
    let (_t, dir) = setup(5000, 1500);
    fs::remove_file(&frag_files(&dir)[2]).unwrap();
    let o = figoa(&["verify", "--frags", p(&dir)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("Incomplete"), "{}", stdout(&o));
}

#[test]
fn verify_flipped_bit_rejects() {
    let (_t, dir) = setup(5000, 1500);
    let f = &frag_files(&dir)[1];
    let mut bytes = fs::read(f).unwrap();
    let n = bytes.len();
    bytes[n - 10] ^= 0x10;
    fs::write(f, bytes).unwrap();
    assert_eq!(figoa(&["verify", "--frags", p(&dir)]).status.code(), Some(1));
}

#[test]
fn verify_wrong_key_rejects() {
    let (tmp, dir) = setup(3000, 1500);
    let other = tmp.path().join("other");
    assert!(figoa(&["keygen", "--out", p(&other), "--seed", "8"]).status.success());
    let o = figoa(&["verify", "--frags", p(&dir), "--key", p(&tmp.path().join("other.pub"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn refragmented_pieces_still_verify() {
    let (tmp, dir) = setup(6000, 1500);
    let files = frag_files(&dir);
    let small = tmp.path().join("small");
    for f in &files {
        let o = figoa(&["refragment", "--in", p(f), "--mtu", "700", "--out-dir", p(&small)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert!(frag_files(&small).len() > files.len());
    let o = figoa(&["verify", "--frags", p(&small), "--shuffle", "11"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(figoa(&["latency-table", "--bogus"]).status.code(), Some(2));
    assert_eq!(figoa(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(figoa(&["verify", "--frags", "/nonexistent/dir"]).status.code(), Some(2));
    assert_eq!(figoa(&["simulate", "--scenario", "nope"]).status.code(), Some(2));
}

#[test]
fn simulate_three_node_accepts() {
    let o = figoa(&["simulate", "--config", p(&configs().join("three-node.conf"))]);
    assert!(o.status.success());
    let s = stdout(&o);
    let row = s.lines().nth(1).unwrap();
    assert!(row.starts_with("c,/demo/obj,0.00,") && row.ends_with(",accept"), "{row}");
}

#[test]
fn simulate_trace_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a.csv"), tmp.path().join("b.csv"));
    let cfg = configs().join("mumtu.conf");
    for t in [&a, &b] {
        assert!(figoa(&["simulate", "--config", p(&cfg), "--seed", "5", "--trace", p(t)]).status.success());
    }
    let ta = fs::read(&a).unwrap();
    assert_eq!(ta, fs::read(&b).unwrap());
    assert!(String::from_utf8_lossy(&ta).starts_with("time,node,kind,name,offset,size,face\n"));
}

#[test]
fn simulate_corrupt_link_reports_reject() {
    let o = figoa(&["simulate", "--config", p(&configs().join("corrupt.conf"))]);
    assert!(stdout(&o).lines().nth(1).unwrap().ends_with(",reject@r1"), "{}", stdout(&o));
}

#[test]
fn shipped_configs_match_builtin_scenarios() {
    let parse = |f: &str| figoa_sim::parse_scenario(&fs::read_to_string(configs().join(f)).unwrap()).unwrap();
    assert_eq!(parse("three-node.conf"), scenarios::three_node(Mode::CutThrough));
    assert_eq!(parse("line8.conf"), scenarios::line8(5, Mode::CutThrough));
    assert_eq!(parse("mumtu.conf"), scenarios::mumtu_line(Mode::CutThrough));
    assert_eq!(parse("corrupt.conf"), scenarios::corrupt(1.0, Mode::CutThrough));
}

#[test]
fn overhead_and_curve_csv() {
    let s = stdout(&figoa(&["overhead", "--objects", "4096", "--mtu", "1500", "--sig-bytes", "64,128"]));
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "object_bytes,mtu,sig_bytes,segments,overhead_pct");
    assert_eq!(lines.len(), 3);
    let s = stdout(&figoa(&["latency-curve", "--objects", "8400", "--k-max", "6"]));
    assert_eq!(s.lines().count(), 7);
}
