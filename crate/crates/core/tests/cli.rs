use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hagedorn_kit::grid::GridFunction;
use hagedorn_kit::hermite::{hermite_fn_eval, HermiteContext, MultiIndex};
use hagedorn_kit::random::{Profile, Sampler};
use hagedorn_kit::symplectic::NormalizedPair;
use serde_json::Value;

fn kit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hagedorn-kit")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

const STANDARD_1D: &str = r#"{"hbar": 1.0, "d": 1, "Q": {"re": [[1.0]], "im": [[0.0]]},
  "P": {"re": [[0.0]], "im": [[1.0]]}, "q": [0.0], "p": [0.0]}"#;

#[test]
fn validate_standard_pair() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "std.json", STANDARD_1D);
    let o = kit(&["validate", &p]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert_eq!(r["valid"], true);
    assert_eq!(r["residuals"]["symmetry"], 0.0);
    assert_eq!(r["residuals"]["normalization"], 0.0);
    assert_eq!(r["symplectic_residual"], 0.0);
}

#[test]
fn validate_rejects_unnormalized_pair() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "bad.json",
        r#"{"hbar": 1.0, "d": 1, "Q": {"re": [[1.0]], "im": [[0.0]]}, "P": {"re": [[1.0]], "im": [[0.0]]}, "q": [0.0], "p": [0.0]}"#,
    );
    let o = kit(&["validate", &p]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Q*P − P*Q ≠ 2iI"));
    assert_eq!(json(&o)["valid"], false);
}

#[test]
fn validate_random_pairs_and_malformed_json() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = Sampler::new(5, Profile::broad());
    for d in 1..=3 {
        let (pair, _) = s.pair(d);
        let p = write(dir.path(), &format!("p{d}.json"), &pair.to_json());
        let o = kit(&["validate", &p]);
        assert_eq!(code(&o), 0);
        let r = json(&o);
        assert!(r["residuals"]["symmetry"].as_f64().unwrap() < 1e-12);
        assert!(r["residuals"]["normalization"].as_f64().unwrap() < 1e-12);
    }
    let p = write(dir.path(), "broken.json", "{\"hbar\": 1.0, ");
    let o = kit(&["validate", &p]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("malformed JSON"));
    assert_eq!(code(&kit(&["validate", "/nonexistent/file.json"])), 2);
}

#[test]
fn eval_standard_pair_matches_hermite_functions() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "std.json", STANDARD_1D);
    let pts = write(dir.path(), "pts.csv", "x\n-0.7\n0.0\n1.3\n");
    let o = kit(&["eval", &p, "--order", "2", "--points", &pts, "--format", "csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "x1,re_0,im_0,re_1,im_1,re_2,im_2");
    let ctx = HermiteContext::new(1, 1.0, 2).unwrap();
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        for k in 0..=2u32 {
            let want = hermite_fn_eval(&ctx, &MultiIndex(vec![k]), &[v[0]]).unwrap();
            assert!((v[1 + 2 * k as usize] - want).abs() < 1e-14);
            assert!(v[2 + 2 * k as usize].abs() < 1e-14);
        }
    }
}

#[test]
fn eval_is_deterministic_and_gram_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = Sampler::new(11, Profile::broad());
    let (pair, _) = s.pair(2);
    let p = write(dir.path(), "pair.json", &pair.to_json());
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = kit(&["eval", &p, "--order", "4", "--quadrature", "10", "--output", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let o = kit(&["validate", a.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(json(&o)["gram_residual"].as_f64().unwrap() < 1e-8);

    // Too few nodes: the Gram check fails with exit 1.
    let c = dir.path().join("c.json");
    kit(&["eval", &p, "--order", "4", "--quadrature", "3", "--output", c.to_str().unwrap()]);
    assert_eq!(code(&kit(&["validate", c.to_str().unwrap()])), 1);
}

#[test]
fn eval_grid_binary_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let pair = NormalizedPair::standard(1, 0.5);
    let p = write(dir.path(), "pair.json", &pair.to_json());
    let out = dir.path().join("g.bin");
    let o = kit(&["eval", &p, "--order", "1", "--grid", "64:6", "--format", "bin", "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let bytes = fs::read(&out).unwrap();
    let mut r = &bytes[..];
    let mut count = [0u8; 8];
    std::io::Read::read_exact(&mut r, &mut count).unwrap();
    assert_eq!(u64::from_le_bytes(count), 2);
    let f0 = GridFunction::read_binary(&mut r).unwrap();
    let f1 = GridFunction::read_binary(&mut r).unwrap();
    assert!(r.is_empty());
    assert!((f0.norm() - 1.0).abs() < 1e-10 && (f1.norm() - 1.0).abs() < 1e-10);
    assert_eq!(f0.hbar, 0.5);

    // A narrow grid cuts the packet off: a warning, fatal under --strict.
    assert_eq!(code(&kit(&["eval", &p, "--grid", "64:1", "--format", "csv"])), 0);
    assert_eq!(code(&kit(&["eval", &p, "--grid", "64:1", "--format", "csv", "--strict"])), 1);
    assert_eq!(code(&kit(&["eval", &p, "--points", &p, "--format", "bin"])), 2);
}

#[test]
fn verify_examples() {
    let o = kit(&["verify", "--suite", "ladder", "--d", "2", "--trials", "100", "--seed", "7"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["passed"], true);

    let o = kit(&["verify", "uncertainty", "--d", "3"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    let product = r["suites"][0]["checks"].as_array().unwrap().iter().find(|c| c["name"] == "product.d3").unwrap();
    assert!(product["residual"].as_f64().unwrap() <= 1e-10);

    let o = kit(&["verify", "correspondence", "--d", "1", "--trials", "3"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    let packets = r["suites"][0]["checks"].as_array().unwrap().iter().find(|c| c["name"] == "packets.d1").unwrap();
    assert!(packets["residual"].as_f64().unwrap() < 1e-6);
    assert_eq!(packets["signs"].as_array().unwrap().len(), 3);
}

#[test]
fn verify_exit_codes() {
    assert_eq!(code(&kit(&["verify", "ladder", "--d", "1", "--trials", "5", "--tol", "1e-30"])), 1);
    assert_eq!(code(&kit(&["verify", "nonsense"])), 2);
    assert_eq!(code(&kit(&["verify", "fourier", "--d", "3"])), 2);
    assert_eq!(code(&kit(&["verify", "ladder", "--trials", "0"])), 2);
    assert_eq!(code(&kit(&["verify", "ladder", "--tol", "-1"])), 2);
    assert_eq!(code(&kit(&["frobnicate"])), 2);
}

#[test]
fn uncertainty_and_genfun_reports() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "std.json", STANDARD_1D);
    let o = kit(&["uncertainty", &p]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert!((r["axes"][0]["product"].as_f64().unwrap() - 0.25).abs() < 1e-14);
    assert!(r["U"].is_array() && r["V"].is_array());

    let o = kit(&["genfun", &p, "--w", "0.1+0.05i", "--x", "0.3", "--order", "30"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    let err = r["series"]["error"].as_f64().unwrap();
    assert!(err < 1e-12);
    assert!(err <= r["series"]["tail_bound"].as_f64().unwrap() + 1e-15);
    assert_eq!(code(&kit(&["genfun", &p, "--w", "0.1,0.2", "--x", "0.3"])), 2);
    assert_eq!(code(&kit(&["genfun", &p, "--w", "abc", "--x", "0.3"])), 2);
}
