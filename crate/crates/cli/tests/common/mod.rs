#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nlid_core::corpus::{write_corpus, CorpusPaths};
use nlid_core::Corpus;

/// An 11-class test-set confusion matrix (919 of 1100 correct): gold rows ×
/// predicted columns, in this label order.
pub const REFERENCE_LABELS: [&str; 11] = [
    "CHI", "JPN", "KOR", "HIN", "TEL", "FRE", "ITA", "SPA", "GER", "ARA", "TUR",
];

#[rustfmt::skip]
pub const REFERENCE_CONFUSION: [[u64; 11]; 11] = [
    [91,  3,  2,  0,  0,  0,  2,  0,  0,  1,  1],
    [ 2, 93,  2,  0,  1,  1,  0,  0,  1,  0,  0],
    [ 4, 14, 77,  0,  0,  1,  1,  1,  0,  1,  1],
    [ 1,  0,  1, 80, 18,  0,  0,  0,  0,  0,  0],
    [ 0,  0,  1, 18, 78,  0,  0,  1,  0,  2,  0],
    [ 2,  0,  0,  2,  1, 87,  5,  0,  2,  1,  0],
    [ 0,  0,  0,  1,  0,  6, 85,  3,  3,  2,  0],
    [ 1,  1,  2,  2,  1,  4,  7, 77,  2,  2,  1],
    [ 0,  1,  0,  3,  0,  3,  2,  1, 90,  0,  0],
    [ 2,  2,  2,  3,  2,  7,  1,  2,  1, 77,  1],
    [ 1,  2,  0,  3,  0,  2,  3,  1,  1,  3, 84],
];

/// The reference confusion matrix expanded into `(gold, predicted)` pairs, one per test item.
pub fn reference_stream() -> Vec<(String, String)> {
    let mut out = Vec::new();
    for (g, row) in REFERENCE_CONFUSION.iter().enumerate() {
        for (p, &n) in row.iter().enumerate() {
            for _ in 0..n {
                out.push((REFERENCE_LABELS[g].to_owned(), REFERENCE_LABELS[p].to_owned()));
            }
        }
    }
    out
}

pub fn nlid() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nlid"))
}

pub fn run(args: &[&str]) -> Output {
    nlid().args(args).output().expect("spawn nlid")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Value of `key` in `key<TAB>value` output.
pub fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('\t')))
        .unwrap_or_else(|| panic!("no `{key}` in:\n{text}"))
        .to_owned()
}

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// `id<TAB>label` lines with a header.
pub fn label_file(dir: &Path, name: &str, rows: &[(String, String)]) -> PathBuf {
    let mut text = String::from("id\tlabel\n");
    for (id, l) in rows {
        text.push_str(&format!("{id}\t{l}\n"));
    }
    write(dir, name, &text)
}

pub fn save_corpus(c: &Corpus, dir: &Path, stem: &str) -> CorpusPaths {
    write_corpus(c, dir, stem).unwrap()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// `--essays .. --transcripts .. [--ivectors ..] --labels ..` for `train`.
pub fn corpus_flags(p: &CorpusPaths) -> Vec<String> {
    let mut v = vec![
        "--essays".to_owned(),
        s(&p.essays).to_owned(),
        "--transcripts".to_owned(),
        s(&p.transcripts).to_owned(),
        "--labels".to_owned(),
        s(&p.labels).to_owned(),
    ];
    if let Some(iv) = &p.ivectors {
        v.push("--ivectors".to_owned());
        v.push(s(iv).to_owned());
    }
    v
}
