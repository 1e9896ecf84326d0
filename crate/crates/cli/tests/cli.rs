use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use smabp::abp::AbpJson;
use smabp::gen::{random_smabp, SmabpParams};
use smabp::poly::PolyJson;
use smabp::{Abp, AbpBuilder, MultilinearPoly, PrimeField};

fn smabp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smabp")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn write(dir: &TempDir, name: &str, v: &impl serde::Serialize) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, serde_json::to_string(v).unwrap()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn diamond() -> Abp {
    let mut b = AbpBuilder::new(PrimeField::default(), 2);
    let src = b.source();
    let (a, c, t) = (b.node(1), b.node(1), b.node(2));
    b.var_edge(src, a, 1).var_edge(a, t, 2).var_edge(src, c, 2).var_edge(c, t, 1);
    b.build().unwrap()
}

#[test]
fn gen_fullrank_matches_hand_unroll_and_is_reproducible() {
    let a = smabp(&["gen", "fullrank", "--n", "4", "--seed", "5"]);
    let b = smabp(&["gen", "fullrank", "--n", "4", "--seed", "5"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let doc = json(&a);
    let w_rows = doc["w"].as_array().unwrap();
    assert_eq!(w_rows.len(), 1);
    let f = PrimeField::default();
    let w = f.parse(w_rows[0][3].as_str().unwrap()).unwrap();
    let poly: PolyJson = serde_json::from_value(doc["polynomial"].clone()).unwrap();
    let g = MultilinearPoly::from_json(&poly).unwrap();
    let term = |vars: Vec<usize>| (vars, f.elem(1));
    let pair = |i, j| MultilinearPoly::from_terms(f, 4, [term(vec![]), term(vec![i, j])]).unwrap();
    let expect = pair(1, 4).mul(&pair(2, 3)).unwrap().add(&pair(1, 2).mul(&pair(3, 4)).unwrap().scale(w)).unwrap();
    assert_eq!(g, expect);
}

#[test]
fn random_smabp_generator_is_multilinear() {
    let dir = TempDir::new().unwrap();
    for seed in 0..10 {
        let out = dir.path().join("p.json");
        let o = smabp(&["gen", "random-smabp", "--n", "8", "--nodes", "30", "--seed", &seed.to_string(), "--out", s(&out)]);
        assert_eq!(code(&o), 0);
        let c = smabp(&["check", "smabp", "--input", s(&out)]);
        assert_eq!(code(&c), 0);
    }
    // The same generator, in-process, over many draws.
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
    for i in 0..1000 {
        let n = 1 + i % 12;
        let p = random_smabp(PrimeField::default(), SmabpParams::new(n, 3 + i % 40), &mut rng).unwrap();
        assert!(p.is_syntactic_multilinear().multilinear);
    }
}

#[test]
fn gen_output_round_trips() {
    let o = smabp(&["gen", "random-smabp", "--n", "5", "--nodes", "15", "--seed", "9"]);
    let j: AbpJson = serde_json::from_slice(&o.stdout).unwrap();
    // Reports are written through `serde_json::Value`, whose keys are sorted.
    let canonical = serde_json::to_value(Abp::from_json(&j).unwrap().to_json()).unwrap();
    let again = serde_json::to_string_pretty(&canonical).unwrap() + "\n";
    assert_eq!(String::from_utf8(o.stdout).unwrap(), again);
}

#[test]
fn roabp_passes_and_diamond_fails_order_check() {
    let dir = TempDir::new().unwrap();
    let mut b = AbpBuilder::new(PrimeField::default(), 2);
    let src = b.source();
    let (a, t) = (b.node(1), b.node(2));
    b.var_edge(src, a, 1).const_edge(src, a, 3).var_edge(a, t, 2);
    let roabp = write(&dir, "roabp.json", &b.build().unwrap().to_json());
    assert_eq!(code(&smabp(&["check", "roabp", "--input", s(&roabp)])), 0);

    let d = write(&dir, "diamond.json", &diamond().to_json());
    let o = smabp(&["check", "ordered", "--input", s(&d), "--orders", "1,2"]);
    assert_eq!(code(&o), 1);
    let doc = json(&o);
    assert_eq!(doc["result"]["witness"]["vars"], serde_json::json!([2, 1]));
    assert_eq!(doc["config"]["seed"].as_u64().is_some(), true);
    assert_eq!(code(&smabp(&["check", "ordered", "--input", s(&d), "--orders", "1,2;2,1"])), 0);
}

#[test]
fn order_to_pass_on_unordered_input_reports_witness() {
    let dir = TempDir::new().unwrap();
    let d = write(&dir, "diamond.json", &diamond().to_json());
    let o = smabp(&["transform", "order-to-pass", "--input", s(&d), "--orders", "1,2"]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["result"]["witness"]["vars"], serde_json::json!([2, 1]));
    let ok = smabp(&["transform", "order-to-pass", "--input", s(&d), "--orders", "1,2;2,1"]);
    assert_eq!(code(&ok), 0);
    assert_eq!(json(&ok)["result"]["report"]["passes"], 2);
}

#[test]
fn interval_counterexample_fails_with_triple() {
    let dir = TempDir::new().unwrap();
    let mut b = AbpBuilder::new(PrimeField::default(), 6);
    let src = b.source();
    let (a, t) = (b.node(1), b.node(2));
    b.var_edge(src, a, 1).var_edge(src, a, 3).var_edge(a, t, 2).var_edge(a, t, 5);
    let p = write(&dir, "cx.json", &b.build().unwrap().to_json());
    let o = smabp(&["check", "circular-interval", "--input", s(&p), "--pi", "1,2,3,4,5,6"]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["result"]["witness"]["triple"], serde_json::json!([0, 1, 2]));
}

#[test]
fn rank_reports() {
    let dir = TempDir::new().unwrap();
    let g = dir.path().join("g6.json");
    assert_eq!(code(&smabp(&["gen", "fullrank", "--n", "6", "--out", s(&g)])), 0);
    let o = smabp(&["rank", "--input", s(&g), "--samples", "50", "--expect-rank", "8"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["result"]["histogram"]["8"], 50);

    let c = MultilinearPoly::constant(PrimeField::default(), 4, PrimeField::default().elem(3));
    let cp = write(&dir, "const.json", &c.to_json());
    let o = smabp(&["rank", "--input", s(&cp), "--samples", "10", "--expect-rank", "1"]);
    assert_eq!(code(&o), 0);
    let o = smabp(&["rank", "--input", s(&cp), "--explicit", "y1,z1,y2,z2"]);
    assert_eq!(json(&o)["result"]["max"], 1);
}

#[test]
fn pipeline_runs_green() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("ordered.json");
    let args = ["gen", "random-smabp", "--n", "6", "--nodes", "12", "--orders", "3", "--seed", "4", "--out", s(&p)];
    assert_eq!(code(&smabp(&args)), 0);
    for pass in ["decompose", "to-formula", "to-depth4", "order-to-pass"] {
        let o = smabp(&["transform", pass, "--input", s(&p)]);
        assert_eq!(code(&o), 0, "{pass}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(code(&smabp(&["check", "ordered", "--input", s(&p)])), 0);
    assert_eq!(code(&smabp(&["rank", "--input", s(&p), "--samples", "5"])), 0);
}

#[test]
fn exit_codes_for_bad_input_and_budget() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(code(&smabp(&["check", "smabp", "--input", s(&bad)])), 3);
    assert_eq!(code(&smabp(&["check", "smabp", "--input", "/nonexistent/file.json"])), 3);
    assert_eq!(code(&smabp(&["no-such-command"])), 3);
    assert_eq!(code(&smabp(&["gen", "fullrank", "--n", "22"])), 2);
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
    let big = random_smabp(PrimeField::default(), SmabpParams::new(9, 30), &mut rng).unwrap();
    let p = write(&dir, "big.json", &big.to_json());
    assert_eq!(code(&smabp(&["transform", "to-formula", "--input", s(&p), "--budget-gates", "2"])), 2);
}

#[test]
fn corpus_single_criterion() {
    let o = smabp(&["corpus", "--criterion", "8", "--format", "text"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8(o.stdout).unwrap().contains("criterion 8"));
}
