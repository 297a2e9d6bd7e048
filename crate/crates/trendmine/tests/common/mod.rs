#![allow(dead_code)]

use std::path::{Path, PathBuf};

pub fn run(args: &[&str]) -> i32 {
    trendmine::cli::run_subcommand(std::iter::once("trendmine").chain(args.iter().copied()))
}

pub fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

pub struct Data {
    pub dir: PathBuf,
    pub tweets: String,
    pub polls: String,
    pub labeled: String,
    pub truth: String,
}

/// A small synthetic corpus written by the `synth` command.
pub fn synth(root: &Path, seed: &str) -> Data {
    let dir = root.join("data");
    let code = run(&[
        "synth", "--out", &s(&dir), "--seed", seed, "--records-per-state", "40",
        "--base-volume", "80", "--labeled-count", "2000",
    ]);
    assert_eq!(code, 0);
    Data {
        tweets: s(&dir.join("tweets.tsv")),
        polls: s(&dir.join("polls.csv")),
        labeled: s(&dir.join("labeled.tsv")),
        truth: s(&dir.join("truth.json")),
        dir,
    }
}

/// A full `report` run into `root/<name>`.
pub fn report(root: &Path, data: &Data, name: &str) -> PathBuf {
    let out = root.join(name);
    let code = run(&[
        "report", "--in", &data.tweets, "--polls", &data.polls, "--labeled", &data.labeled,
        "--truth", &data.truth, "--out", &s(&out), "--iters", "20", "--sample-size", "200",
    ]);
    assert_eq!(code, 0);
    out
}
