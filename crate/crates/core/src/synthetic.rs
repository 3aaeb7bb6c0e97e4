//! Seeded synthetic corpora for tests, benchmarks and demos.
//!
//! [`planted_corpus`] hides one class-specific marker word in every essay and
//! transcript among shared filler words. [`windowed_corpus`] places its class
//! signal so that only character n-grams of length 6 to 8 can pick it up:
//! shorter grams see identical statistics in every class, longer ones
//! (and word n-grams) see only unrepeated context.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::{Corpus, Instance, Views};
use crate::error::Result;

/// Eleven native-language codes, in sorted order.
pub const NLI_LABELS: [&str; 11] = [
    "ARA", "CHI", "FRE", "GER", "HIN", "ITA", "JPN", "KOR", "SPA", "TEL", "TUR",
];

const FILLER: [&str; 48] = [
    "the",
    "a",
    "to",
    "of",
    "and",
    "in",
    "is",
    "that",
    "it",
    "for",
    "people",
    "think",
    "because",
    "students",
    "can",
    "more",
    "important",
    "than",
    "young",
    "older",
    "life",
    "time",
    "learn",
    "with",
    "their",
    "they",
    "should",
    "have",
    "this",
    "many",
    "not",
    "be",
    "enjoy",
    "ideas",
    "products",
    "better",
    "advertisements",
    "facts",
    "understand",
    "community",
    "help",
    "travel",
    "group",
    "guide",
    "agree",
    "successful",
    "things",
    "know",
];

const SPOKEN: [&str; 6] = ["um", "uh", "yeah", "so", "like", "well"];

const ESSAY_MARKERS: [&str; 11] = [
    "qazwsxed", "plmoknij", "zxcvbnmq", "wqpeorit", "mnbvcxzl", "hjgkfldq", "ytrewqpo", "kjhgfdsz",
    "vbnmzxqw", "ouiypqwz", "jklzmxnq",
];

const TRANSCRIPT_MARKERS: [&str; 11] = [
    "xqzjvkwb", "bwqkzjvx", "kvxbqwzj", "zjwxvqkb", "qbkvjzxw", "wvjqbxkz", "jxkwzbqv", "vzqbwkjx",
    "xbjkqvwz", "kwzvxjbq", "bqxzkwvj",
];

/// Settings for [`planted_corpus`].
#[derive(Debug, Clone)]
pub struct PlantedConfig {
    /// Class labels; at most eleven (one marker pair per class).
    pub labels: Vec<String>,
    pub per_class: usize,
    pub essay_words: usize,
    pub transcript_words: usize,
    /// Dimension of the class-dependent Gaussian vectors, if any.
    pub ivector_dim: Option<usize>,
    pub id_prefix: String,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            labels: NLI_LABELS.iter().map(|s| s.to_string()).collect(),
            per_class: 20,
            essay_words: 30,
            transcript_words: 20,
            ivector_dim: Some(8),
            id_prefix: "doc".into(),
            seed: 0,
        }
    }
}

/// Marker words planted for each class: `(essay marker, transcript marker)`.
pub fn planted_markers(labels: &[String]) -> BTreeMap<String, (String, String)> {
    assert!(labels.len() <= ESSAY_MARKERS.len(), "at most 11 classes");
    labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            (
                l.clone(),
                (ESSAY_MARKERS[i].to_owned(), TRANSCRIPT_MARKERS[i].to_owned()),
            )
        })
        .collect()
}

fn filler_text(rng: &mut ChaCha8Rng, words: usize, marker: &str, spoken: bool) -> String {
    let mut tokens: Vec<&str> = (0..words)
        .map(|_| {
            if spoken && rng.gen_bool(0.2) {
                SPOKEN[rng.gen_range(0..SPOKEN.len())]
            } else {
                FILLER[rng.gen_range(0..FILLER.len())]
            }
        })
        .collect();
    let at = rng.gen_range(0..=tokens.len());
    tokens.insert(at, marker);
    tokens.join(" ")
}

fn class_vector(rng: &mut ChaCha8Rng, class: usize, dim: usize) -> Vec<f64> {
    let noise = Normal::new(0.0, 1.0).expect("valid normal");
    (0..dim)
        .map(|d| {
            let mean = if d == class % dim { 2.0 } else { 0.0 };
            mean + noise.sample(rng)
        })
        .collect()
}

pub fn planted_corpus(cfg: &PlantedConfig) -> Result<Corpus> {
    let markers = planted_markers(&cfg.labels);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut instances = Vec::new();
    for j in 0..cfg.per_class {
        for (c, label) in cfg.labels.iter().enumerate() {
            let (em, tm) = &markers[label];
            let essay = filler_text(&mut rng, cfg.essay_words, em, false);
            let transcript = filler_text(&mut rng, cfg.transcript_words, tm, true);
            let ivector = cfg.ivector_dim.map(|d| class_vector(&mut rng, c, d));
            instances.push(Instance {
                id: format!("{}-{label}-{j:04}", cfg.id_prefix),
                views: Views {
                    essay,
                    transcript,
                    ivector,
                },
                label: label.clone(),
            });
        }
    }
    Corpus::new(instances)
}

/// Settings for [`windowed_corpus`].
#[derive(Debug, Clone)]
pub struct WindowedConfig {
    pub labels: Vec<String>,
    pub per_class: usize,
    /// How many copies of the class fragment set each document carries.
    pub repeats: usize,
    pub ivector_dim: Option<usize>,
    pub id_prefix: String,
    pub seed: u64,
}

impl Default for WindowedConfig {
    fn default() -> Self {
        WindowedConfig {
            labels: NLI_LABELS.iter().map(|s| s.to_string()).collect(),
            per_class: 100,
            repeats: 1,
            ivector_dim: Some(8),
            id_prefix: "win".into(),
            seed: 0,
        }
    }
}

const WINDOW: usize = 8;
const MARKER_ALPHABET: &[u8] = b"qrstuvwxyz";
// Noise is drawn from a wide block of CJK ideographs, so any gram that
// reaches past a fragment into the noise is almost never repeated.
const NOISE_BASE: u32 = 0x4E00;
const NOISE_SPAN: u32 = 0x5000;
const MAX_GAP: usize = 2;

/// Eight-character class markers over an alphabet disjoint from the noise.
pub fn window_markers(n: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut out: Vec<String> = Vec::with_capacity(n);
    while out.len() < n {
        let m: String = (0..WINDOW)
            .map(|_| MARKER_ALPHABET[rng.gen_range(0..MARKER_ALPHABET.len())] as char)
            .collect();
        if !out.contains(&m) {
            out.push(m);
        }
    }
    out
}

/// Fragments a document carries for one marker: the whole marker plus its
/// inner four-character pieces for the document's own class, otherwise all
/// five-character pieces. Both sets start at offsets 0..=3 and end at 5..=8,
/// so every substring of length at most five, and the way it meets the
/// surrounding noise, occurs equally often on either side.
pub fn window_fragments(marker: &str, own: bool) -> Vec<&str> {
    let last = WINDOW - 5;
    if own {
        std::iter::once(marker)
            .chain((1..=last).map(|i| &marker[i..i + 4]))
            .collect()
    } else {
        (0..=last).map(|i| &marker[i..i + 5]).collect()
    }
}

fn noise(rng: &mut ChaCha8Rng, out: &mut String) {
    for _ in 0..rng.gen_range(1..=MAX_GAP) {
        let c = NOISE_BASE + rng.gen_range(0..NOISE_SPAN);
        out.push(char::from_u32(c).expect("CJK block is valid"));
    }
}

/// One unbroken token per document: for every class, that class's fragment
/// set (see [`window_fragments`]) in shuffled order, separated by noise.
pub fn windowed_corpus(cfg: &WindowedConfig) -> Result<Corpus> {
    let markers = window_markers(cfg.labels.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut instances = Vec::new();
    for j in 0..cfg.per_class {
        for (c, label) in cfg.labels.iter().enumerate() {
            let make = |rng: &mut ChaCha8Rng| {
                let mut fragments: Vec<&str> = Vec::new();
                for _ in 0..cfg.repeats {
                    for (d, m) in markers.iter().enumerate() {
                        fragments.extend(window_fragments(m, d == c));
                    }
                }
                fragments.shuffle(rng);
                let mut text = String::new();
                noise(rng, &mut text);
                for f in &fragments {
                    text.push_str(f);
                    noise(rng, &mut text);
                }
                text
            };
            let essay = make(&mut rng);
            let transcript = make(&mut rng);
            let ivector = cfg.ivector_dim.map(|d| class_vector(&mut rng, c, d));
            instances.push(Instance {
                id: format!("{}-{label}-{j:04}", cfg.id_prefix),
                views: Views {
                    essay,
                    transcript,
                    ivector,
                },
                label: label.clone(),
            });
        }
    }
    Corpus::new(instances)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_corpus_shape() {
        let c = planted_corpus(&PlantedConfig::default()).unwrap();
        assert_eq!(c.len(), 220);
        assert_eq!(c.labels().len(), 11);
        assert_eq!(c.ivector_dim(), Some(8));
        let markers = planted_markers(c.labels());
        for inst in c.instances() {
            let (em, tm) = &markers[&inst.label];
            assert!(inst.views.essay.contains(em.as_str()));
            assert!(inst.views.transcript.contains(tm.as_str()));
        }
        assert_eq!(c, planted_corpus(&PlantedConfig::default()).unwrap());
    }

    #[test]
    fn short_substrings_of_fragment_pairs_agree() {
        // `#` stands for one noise character; noise is iid, so a gram is
        // characterised by where it overlaps the fragment.
        fn grams(frags: &[&str], n: usize) -> BTreeMap<String, usize> {
            let mut all = BTreeMap::new();
            for f in frags {
                let pad = "#".repeat(n - 1);
                let chars: Vec<char> = format!("{pad}{f}{pad}").chars().collect();
                for w in chars.windows(n) {
                    if w.iter().any(|&c| c != '#') {
                        *all.entry(w.iter().collect::<String>()).or_insert(0) += 1;
                    }
                }
            }
            all
        }
        let m = &window_markers(1)[0];
        let own = window_fragments(m, true);
        let other = window_fragments(m, false);
        for n in 1..=5 {
            assert_eq!(grams(&own, n), grams(&other, n), "n = {n}");
        }
        for n in 6..=8 {
            let inner = |f: &[&str]| grams(f, n).into_keys().filter(|g| !g.contains('#')).count();
            assert_eq!(inner(&other), 0);
            assert_eq!(inner(&own), 9 - n, "n = {n}");
        }
    }

    #[test]
    fn windowed_documents_are_single_tokens() {
        let cfg = WindowedConfig {
            per_class: 2,
            ..Default::default()
        };
        let c = windowed_corpus(&cfg).unwrap();
        assert_eq!(c.len(), 22);
        let markers = window_markers(11);
        for inst in c.instances() {
            assert!(!inst.views.essay.contains(' '));
            let own = c.labels().iter().position(|l| l == &inst.label).unwrap();
            for (d, m) in markers.iter().enumerate() {
                assert_eq!(inst.views.essay.contains(m.as_str()), d == own);
            }
        }
    }
}
