use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const TOY: &str = "custom:n=24,m=11,nk=8,d=2,r=3,variant=qc3";

fn mcnie(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcnie")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).display().to_string()
}

fn keygen(dir: &TempDir, param: &str, seed: &str) -> Output {
    mcnie(&["keygen", "--param", param, "--seed", seed, "--out-pub", &p(dir, "k.pub"), "--out-priv", &p(dir, "k.key")])
}

#[test]
fn params_lists_named_sets() {
    let o = mcnie(&["params"]);
    assert!(o.status.success());
    let out = stdout(&o);
    for (name, bytes) in [("qc3-128", 795), ("qc3-192", 1156), ("qc3-256", 1385), ("qc4-128", 849), ("qc4-192", 1173), ("qc4-256", 1460)] {
        let line = out.lines().find(|l| l.contains(name)).unwrap();
        assert!(line.contains(&bytes.to_string()), "{line}");
    }
    assert_eq!(out.lines().count(), 7);
}

#[test]
fn keygen_reports_size_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let o = keygen(&dir, "qc3-128", "0102");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("public key: 795 bytes"));
    let (a_pub, a_key) = (fs::read(p(&dir, "k.pub")).unwrap(), fs::read(p(&dir, "k.key")).unwrap());
    keygen(&dir, "qc3-128", "0102");
    assert_eq!(fs::read(p(&dir, "k.pub")).unwrap(), a_pub);
    assert_eq!(fs::read(p(&dir, "k.key")).unwrap(), a_key);
    keygen(&dir, "qc3-128", "0103");
    assert_ne!(fs::read(p(&dir, "k.pub")).unwrap(), a_pub);
}

#[test]
fn keygen_toy_custom_set() {
    let dir = TempDir::new().unwrap();
    let o = keygen(&dir, TOY, "07");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"));
    assert!(Path::new(&p(&dir, "k.pub")).exists());
}

#[test]
fn invalid_params_exit_2_without_writing() {
    let dir = TempDir::new().unwrap();
    let o = keygen(&dir, "custom:n=24,m=11,nk=8,l=8,d=2,r=3,variant=general", "01");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("l must exceed n-k"), "{}", stderr(&o));
    assert!(!Path::new(&p(&dir, "k.pub")).exists());
    assert_eq!(keygen(&dir, "no-such-set", "01").status.code(), Some(2));
    assert_eq!(keygen(&dir, "qc3-128", "zz").status.code(), Some(2));
}

#[test]
fn io_errors_exit_3() {
    let dir = TempDir::new().unwrap();
    let missing = p(&dir, "missing/k.pub");
    let o = mcnie(&["keygen", "--param", TOY, "--seed", "01", "--out-pub", &missing, "--out-priv", &p(&dir, "k.key")]);
    assert_eq!(o.status.code(), Some(3));
    let o = mcnie(&["cca-decrypt", "--priv", &p(&dir, "nope.key"), "--in", &p(&dir, "c"), "--out", &p(&dir, "m")]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn cca_file_round_trip_and_tamper() {
    let dir = TempDir::new().unwrap();
    assert!(keygen(&dir, "qc3-128", "aa").status.success());
    let msg: Vec<u8> = (0..1000u32).map(|i| (i * 7 + 3) as u8).collect();
    fs::write(p(&dir, "m.bin"), &msg).unwrap();
    let enc = ["cca-encrypt", "--pub", &p(&dir, "k.pub"), "--in", &p(&dir, "m.bin"), "--out", &p(&dir, "c.bin"), "--seed", "bb"];
    assert!(mcnie(&enc).status.success());
    let first = fs::read(p(&dir, "c.bin")).unwrap();
    assert!(mcnie(&enc).status.success());
    assert_eq!(fs::read(p(&dir, "c.bin")).unwrap(), first);

    let dec = ["cca-decrypt", "--priv", &p(&dir, "k.key"), "--in", &p(&dir, "c.bin"), "--out", &p(&dir, "out.bin")];
    let o = mcnie(&dec);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(fs::read(p(&dir, "out.bin")).unwrap(), msg);

    let mut tampered = first.clone();
    let last = tampered.len() - 5;
    tampered[last] ^= 0x01;
    fs::write(p(&dir, "c.bin"), &tampered).unwrap();
    assert_eq!(mcnie(&dec).status.code(), Some(1));

    fs::write(p(&dir, "c.bin"), &first[..first.len() - 1]).unwrap();
    assert_eq!(mcnie(&dec).status.code(), Some(2));
}

#[test]
fn raw_mode_pads_with_warning() {
    let dir = TempDir::new().unwrap();
    assert!(keygen(&dir, "qc3-128", "cc").status.success());
    fs::write(p(&dir, "m.bin"), b"short").unwrap();
    let o = mcnie(&["encrypt", "--pub", &p(&dir, "k.pub"), "--in", &p(&dir, "m.bin"), "--out", &p(&dir, "c.bin"), "--seed", "dd"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("zero-padded"));
    let o = mcnie(&["decrypt", "--priv", &p(&dir, "k.key"), "--in", &p(&dir, "c.bin"), "--out", &p(&dir, "out.bin")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = fs::read(p(&dir, "out.bin")).unwrap();
    assert_eq!(out.len(), 80 * 7);
    assert_eq!(&out[..5], b"short");
    assert!(out[5..].iter().all(|&b| b == 0));

    fs::write(p(&dir, "m.bin"), vec![0u8; 80 * 7 + 1]).unwrap();
    let o = mcnie(&["encrypt", "--pub", &p(&dir, "k.pub"), "--in", &p(&dir, "m.bin"), "--out", &p(&dir, "c.bin")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn audit_key_values_and_exit_status() {
    let o = mcnie(&["audit", "--param", "qc3-128", "--include-reduced=false", "--format", "kv"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("comb.c1 = 266.349546"), "{out}");
    assert!(out.contains("alg.c2 = 312.965784"));
    assert!(out.contains("comb.c1_reduced = "));
    let o = mcnie(&["audit", "--param", "custom:n=10,m=11,k=2,l=9,d=2,r=1"]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn simulate_is_deterministic() {
    let args = ["simulate", "--param", TOY, "--trials", "300", "--seed", "05"];
    let a = mcnie(&args);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&mcnie(&args)));
    assert!(stdout(&a).contains("predicted = 0.125000"));
    assert_eq!(mcnie(&["simulate", "--param", TOY, "--trials", "0"]).status.code(), Some(2));
}

#[test]
fn simulate_rank_zero_never_fails() {
    let o = mcnie(&["simulate", "--param", "custom:n=24,m=11,nk=8,d=2,r=0,variant=qc3", "--trials", "200"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("failures = 0"));
}

#[test]
fn simulate_toy_rate_in_factor_two_band() {
    let o = mcnie(&["simulate", "--param", TOY, "--trials", "10000", "--seed", "01"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let rate: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("rate = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((0.0625..=0.25).contains(&rate), "observed rate {rate}\n{out}");
}

#[test]
fn param_dir_registry() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("toy.params"), "# toy set\nn = 24\nm = 11\nnk = 8\nd = 2\nr = 3\nvariant = qc3\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_mcnie"))
        .env("MCNIE_PARAM_DIR", dir.path())
        .args(["keygen", "--param", "toy", "--seed", "01", "--out-pub", &p(&dir, "k.pub"), "--out-priv", &p(&dir, "k.key")])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("public key: 33 bytes"));
}
