use std::path::{Path, PathBuf};
use std::process::Command;

use tempfile::TempDir;

const DOUBLING: &str = r#"{
  "field": {"kind": "rational"},
  "states": ["q0"], "alphabet": ["a"],
  "initial": {"state": "q0", "weight": "1"},
  "delta0": [{"from": "q0", "on": "a", "to": "q0", "ce": 1, "weight": "2"}],
  "delta1": [{"from": "q0", "on": "a", "to": "q0", "ce": 1, "weight": "2"}],
  "final": {"q0": "1"}
}"#;

struct Sandbox {
    dir: TempDir,
}

impl Sandbox {
    fn new() -> Self {
        let s = Sandbox {
            dir: tempfile::tempdir().unwrap(),
        };
        s.write("e1.json", DOUBLING);
        s.write("e1b.json", &DOUBLING.replace(r#""weight": "2""#, r#""weight": "3""#));
        s.write(
            "dec.json",
            &DOUBLING.replacen(r#""ce": 1"#, r#""ce": -1"#, 1),
        );
        s.write("multi.json", r#"{
          "field": {"kind": "gf", "p": 7},
          "states": ["s"], "alphabet": ["up", "down"],
          "initial": {"state": "s", "weight": "3"},
          "delta0": [{"from": "s", "on": "up", "to": "s", "ce": 1, "weight": "2"}],
          "delta1": [{"from": "s", "on": "up", "to": "s", "ce": 1, "weight": "2"},
                     {"from": "s", "on": "down", "to": "s", "ce": -1, "weight": "4"}],
          "final": {"s": "1"}
        }"#);
        s
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).to_string_lossy().into_owned()
    }

    fn run(&self, args: &[&str]) -> (i32, String, String) {
        let mut full = vec!["wroca".to_string()];
        for a in args {
            full.push(match a.strip_prefix('@') {
                Some(name) => self.path(name),
                None => a.to_string(),
            });
        }
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = wroca_cli::run(full, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }
}

#[test]
fn validate_exit_codes() {
    let s = Sandbox::new();
    let (code, out, _) = s.run(&["validate", "@e1.json"]);
    assert_eq!((code, out.trim()), (0, "OK"));
    let (code, out, _) = s.run(&["validate", "@dec.json"]);
    assert_eq!(code, 1);
    assert!(out.contains("zero-test decrement at delta0 (q0,a)"), "{out}");
    let (code, _, err) = s.run(&["validate", "@missing.json"]);
    assert_eq!(code, 2, "{err}");
    s.write("junk.json", "{\"states\": [");
    assert_eq!(s.run(&["validate", "@junk.json"]).0, 2);
}

#[test]
fn eval_prints_weights() {
    let s = Sandbox::new();
    assert_eq!(s.run(&["eval", "@e1.json", "a,a,a"]).1.trim(), "8");
    assert_eq!(s.run(&["eval", "@e1.json", "aaa", "--letters"]).1.trim(), "8");
    assert_eq!(s.run(&["eval", "@e1.json", "--empty"]).1.trim(), "1");
    assert_eq!(s.run(&["eval", "@e1.json", "a,b"]).0, 3);
    // s0 = 3, up then down: 3 * 2 * 4 = 24 = 3 (mod 7)
    assert_eq!(s.run(&["eval", "@multi.json", "up,down"]).1.trim(), "3");
    assert_eq!(s.run(&["eval", "@multi.json", "down"]).1.trim(), "undefined -> 0");
    let (code, out, _) = s.run(&["--format", "json", "eval", "@multi.json", "down"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["defined"], false);
    assert_eq!(v["weight"], "0");
}

#[test]
fn conflicting_flags_are_rejected() {
    let s = Sandbox::new();
    assert_eq!(s.run(&["eval", "@e1.json", "a", "--empty"]).0, 2);
    assert_eq!(s.run(&["eval", "@e1.json"]).0, 2);
    assert_eq!(s.run(&["equiv", "@e1.json", "@e1.json", "--max-len", "3"]).0, 2);
    assert_eq!(s.run(&["equiv", "@e1.json", "@e1.json", "--method", "oracle", "--bound", "3"]).0, 2);
    assert_eq!(s.run(&["bounds", "--k", "2", "@e1.json", "@e1.json"]).0, 2);
    assert_eq!(s.run(&["bounds"]).0, 2);
    assert_eq!(s.run(&["frobnicate"]).0, 2);
    assert_eq!(s.run(&["--help"]).0, 0);
}

#[test]
fn equiv_exit_codes_and_json() {
    let s = Sandbox::new();
    assert_eq!(s.run(&["equiv", "@e1.json", "@e1.json"]).0, 0);
    let (code, out, _) = s.run(&["--format", "json", "equiv", "@e1.json", "@e1b.json"]);
    assert_eq!(code, 1);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["outcome"], "not_equivalent");
    assert_eq!(v["witness"], "a");
    assert_eq!((v["f1"].as_str(), v["f2"].as_str()), (Some("2"), Some("3")));
    assert_eq!(v["mode"], "theoretical");

    let (code, out, _) = s.run(&["--format", "json", "equiv", "@e1.json", "@e1.json", "--method", "oracle", "--max-len", "6"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["mode"], "bounded");
    assert_eq!(v["outcome"], "equivalent");

    let (code, out, _) = s.run(&["--format", "json", "equiv", "@e1.json", "@e1.json", "--bound", "5"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!((v["mode"].as_str(), v["bound"].as_str()), (Some("bounded"), Some("5")));

    assert_eq!(s.run(&["equiv", "@e1.json", "@multi.json"]).0, 2);
}

#[test]
fn budget_exhaustion_has_its_own_exit_code() {
    let s = Sandbox::new();
    s.write(
        "flat.json",
        &DOUBLING
            .replacen(r#""ce": 1"#, r#""ce": 0"#, 1)
            .replace(r#""delta1": [{"from": "q0", "on": "a", "to": "q0", "ce": 1, "weight": "2"}]"#, r#""delta1": []"#),
    );
    let (code, _, err) = s.run(&["equiv", "@e1.json", "@flat.json", "--budget", "40"]);
    assert_eq!(code, 4, "{err}");
    assert_eq!(s.run(&["equiv", "@e1.json", "@flat.json", "--bound", "30"]).0, 0);
}

#[test]
fn unfold_writes_dwa_files() {
    let s = Sandbox::new();
    let out = s.path("u.json");
    let (code, _, _) = s.run(&["unfold", "@e1.json", "--bound", "1", "-o", &out]);
    assert_eq!(code, 0);
    let b = wroca::format::dwa_from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(b.states(), ["q0#0", "q0#1"]);
    assert_eq!(b.transitions().count(), 1);

    let (_, text, _) = s.run(&["unfold", "@e1.json", "--bound", "0"]);
    let b = wroca::format::dwa_from_json(&text).unwrap();
    assert_eq!(b.size(), 1);
    assert_eq!(b.transitions().count(), 0);

    let (code, _, err) = s.run(&["unfold", "@e1.json", "--bound", "100000000000000000000000"]);
    assert_eq!(code, 5, "{err}");
}

#[test]
fn state_cap_comes_from_the_environment() {
    let s = Sandbox::new();
    let status = Command::new(env!("CARGO_BIN_EXE_wroca"))
        .args(["unfold", &s.path("e1.json"), "--bound", "10"])
        .env("WROCA_STATE_CAP", "5")
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(5));
    let status = Command::new(env!("CARGO_BIN_EXE_wroca"))
        .args(["unfold", &s.path("e1.json"), "--bound", "4"])
        .env("WROCA_STATE_CAP", "5")
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));
}

#[test]
fn bounds_report() {
    let s = Sandbox::new();
    let (code, out, _) = s.run(&["--format", "json", "bounds", "--k", "2"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["P3"], "295810");
    assert_eq!(v["P0"], "700028448800");
    let (_, from_files, _) = s.run(&["--format", "json", "bounds", "@e1.json", "@e1b.json"]);
    assert_eq!(from_files, out);
    let (_, k1, _) = s.run(&["bounds", "--k", "1"]);
    assert!(k1.lines().all(|l| !l.ends_with("= 0")), "{k1}");
    let (_, custom, _) = s.run(&["--format", "json", "bounds", "--k", "2", "--p1-coeff", "1", "--p1-exp", "1"]);
    let v: serde_json::Value = serde_json::from_str(&custom).unwrap();
    assert_eq!(v["P1"], "2");
}

#[test]
fn random_is_reproducible() {
    let s = Sandbox::new();
    let (a, b) = (s.path("r1.json"), s.path("r2.json"));
    assert_eq!(s.run(&["random", "--seed", "42", "--field", "gf:7", "-o", &a]).0, 0);
    assert_eq!(s.run(&["random", "--seed", "42", "--field", "gf:7", "-o", &b]).0, 0);
    let (x, y) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(x, y);
    assert_eq!(s.run(&["validate", &a]).0, 0);
    assert_eq!(s.run(&["random", "--seed", "1", "--field", "gf:8"]).0, 2);
}

#[test]
fn pumpcheck_exit_codes() {
    let s = Sandbox::new();
    assert_eq!(s.run(&["pumpcheck", "@e1.json", "aaa", "--letters"]).0, 0);
    assert_eq!(s.run(&["pumpcheck", "@e1.json", "aaa", "--letters", "-i", "1:2"]).0, 0);
    assert_eq!(s.run(&["pumpcheck", "@e1.json", "aaa", "--letters", "-i", "0:0"]).0, 1);
    assert_eq!(s.run(&["pumpcheck", "@e1.json", "aaa", "--letters", "-i", "2:5"]).0, 2);
    assert_eq!(s.run(&["pumpcheck", "@e1.json", "ab", "--letters"]).0, 3);
    // position 0 is the only zero-test; cutting it is never a pumping
    assert_eq!(s.run(&["pumpcheck", "@multi.json", "up,up,down", "-i", "1:2"]).0, 0);
    assert_eq!(s.run(&["pumpcheck", "@multi.json", "up,up,down", "-i", "0:0"]).0, 1);
}

#[test]
fn json_output_is_deterministic() {
    let s = Sandbox::new();
    for args in [
        vec!["--format", "json", "equiv", "@e1.json", "@e1b.json"],
        vec!["--format", "json", "equiv", "@multi.json", "@multi.json", "--bound", "9"],
        vec!["--format", "json", "validate", "@dec.json"],
        vec!["--format", "json", "unfold", "@multi.json", "--bound", "3"],
    ] {
        assert_eq!(s.run(&args), s.run(&args));
    }
}

#[test]
fn binary_matches_the_library() {
    let s = Sandbox::new();
    let out = Command::new(env!("CARGO_BIN_EXE_wroca"))
        .args(["--format", "json", "equiv", &s.path("e1.json"), &s.path("e1b.json")])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let (_, lib_out, _) = s.run(&["--format", "json", "equiv", "@e1.json", "@e1b.json"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), lib_out);
    assert!(Path::new(env!("CARGO_BIN_EXE_wroca")).exists());
}
