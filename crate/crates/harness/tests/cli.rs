mod common;

use std::process::{Command, Output};

fn mindstate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mindstate"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn fixture(name: &str) -> String {
    common::fixture(name).to_string_lossy().into_owned()
}

#[test]
fn exit_codes_separate_validation_from_runtime_errors() {
    assert_eq!(code(&mindstate(&["ingest", &fixture("empty.jsonl")])), 0);
    assert_eq!(code(&mindstate(&["ingest", &fixture("bad_gold.jsonl")])), 1);
    assert_eq!(code(&mindstate(&["ingest", &fixture("absent.jsonl")])), 2);
    assert_eq!(code(&mindstate(&["replay", &fixture("infeasible_gold.jsonl")])), 1);
    assert_eq!(
        code(&mindstate(&[
            "replay",
            "--mode",
            "lenient",
            &fixture("infeasible_gold.jsonl")
        ])),
        0
    );
    assert_eq!(code(&mindstate(&["no-such-command"])), 1);
    assert_eq!(code(&mindstate(&["--help"])), 0);
}

#[test]
fn ingest_json_lists_all_splits() {
    let o = mindstate(&["ingest", "--json", &fixture("valid.jsonl")]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["total"], 2);
    assert_eq!(v["counts"]["seen_test"], 1);
    assert_eq!(v["counts"]["unseen_test"], 0);
}

#[test]
fn parse_prints_the_initial_graph() {
    let o = mindstate(&["parse", &fixture("palace.setting")]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.lines().any(|l| l == "carrying(king, scepter)"));
}

#[test]
fn play_reads_commands_from_stdin() {
    use std::io::Write;
    let mut child = Command::new(env!("CARGO_BIN_EXE_mindstate"))
        .args(["play", &fixture("palace.setting")])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"do give crown to servant\ndo get crown\nquit\n")
        .unwrap();
    let o = child.wait_with_output().unwrap();
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("rejected: not carrying"), "{out}");
    assert!(out.contains("ADD(king, crown, carrying)"), "{out}");
}

#[test]
fn generate_train_and_eval_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_string_lossy().into_owned();
    std::fs::write(
        p("small.toml"),
        "[model]\ndim = 8\ntext_hidden = 8\nlayers = 2\nnodes = 16\nupdater_hidden = 8\nscorer_hidden = 16\n\
         [train]\nepochs = 2\nbatch_size = 4\n[utility]\nscorer = \"heuristic\"\n",
    )
    .unwrap();
    let gen = |n: &str, seed: &str, split: &str| {
        let o = mindstate(&[
            "generate",
            "-n",
            n,
            "--seed",
            seed,
            "--split",
            split,
            "--candidates",
            "6",
            "-o",
            &p(&format!("{split}.jsonl")),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    };
    gen("12", "0", "train");
    gen("6", "1", "valid");
    let o = mindstate(&[
        "--config",
        &p("small.toml"),
        "train",
        "--train",
        &p("train.jsonl"),
        "--valid",
        &p("valid.jsonl"),
        "-o",
        &p("model.json"),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let eval = || {
        let o = mindstate(&[
            "--config",
            &p("small.toml"),
            "eval",
            "--checkpoint",
            &p("model.json"),
            &p("valid.jsonl"),
            "--mask",
            "both",
            "--utility",
            "both",
            "--graph",
            "discrete,hybrid",
            "--json",
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        String::from_utf8(o.stdout).unwrap()
    };
    let first = eval();
    assert_eq!(first.lines().count(), 8);
    assert_eq!(first, eval());

    // a checkpoint whose fused layout differs is rejected as invalid input
    let ck = std::fs::read_to_string(p("model.json")).unwrap();
    assert!(ck.contains(mindstate_nn::FUSED_LAYOUT));
    std::fs::write(p("other.json"), ck.replace(mindstate_nn::FUSED_LAYOUT, "other-layout")).unwrap();
    let o = mindstate(&["eval", "--checkpoint", &p("other.json"), &p("valid.jsonl")]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("checkpoint mismatch"));
    let o = mindstate(&["eval", "--checkpoint", &p("absent.json"), &p("valid.jsonl")]);
    assert_eq!(code(&o), 2);
}

#[test]
fn score_utility_prints_three_scores() {
    let o = mindstate(&[
        "score-utility",
        "--context",
        "The knight is wounded.",
        "kick the knight",
        "bandage the knight",
        "look around",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let s: Vec<f64> = serde_json::from_value(v["scores"].clone()).unwrap();
    assert_eq!(s.len(), 3);
    assert!(s[1] > s[2] && s[2] > s[0]);
}
