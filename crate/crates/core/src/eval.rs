//! Accuracy, per-class and macro-averaged F1, confusion matrices, the
//! uniform random baseline and McNemar's paired test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Binomial, DiscreteCDF};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Rows are gold labels, columns are predictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    labels: Vec<String>,
    counts: Vec<Vec<u64>>,
    total: u64,
}

impl ConfusionMatrix {
    pub fn from_counts(labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidArgument("empty label set".into()));
        }
        if counts.len() != labels.len() || counts.iter().any(|r| r.len() != labels.len()) {
            return Err(Error::InvalidArgument("confusion counts must be L x L".into()));
        }
        let total = counts.iter().flatten().sum();
        if total == 0 {
            return Err(Error::InvalidArgument("confusion matrix is empty".into()));
        }
        Ok(ConfusionMatrix {
            labels,
            counts,
            total,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn trace(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }
}

pub fn confusion<G, P>(gold: &[G], pred: &[P], label_set: &[String]) -> Result<ConfusionMatrix>
where
    G: AsRef<str>,
    P: AsRef<str>,
{
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch {
            left: gold.len(),
            right: pred.len(),
        });
    }
    if gold.is_empty() {
        return Err(Error::InvalidArgument("no predictions to score".into()));
    }
    let index = |l: &str| {
        label_set
            .iter()
            .position(|x| x == l)
            .ok_or_else(|| Error::UnknownLabel(l.to_owned()))
    };
    let n = label_set.len();
    let mut counts = vec![vec![0u64; n]; n];
    for (g, p) in gold.iter().zip(pred) {
        counts[index(g.as_ref())?][index(p.as_ref())?] += 1;
    }
    ConfusionMatrix::from_counts(label_set.to_vec(), counts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class: Vec<ClassMetrics>,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Precision/recall/F1 use 0/0 = 0; macro-F1 is the plain mean of per-class F1.
pub fn score(m: &ConfusionMatrix) -> EvalReport {
    let n = m.labels.len();
    let per_class: Vec<ClassMetrics> = (0..n)
        .map(|i| {
            let tp = m.counts[i][i] as f64;
            let gold: u64 = m.counts[i].iter().sum();
            let predicted: u64 = m.counts.iter().map(|r| r[i]).sum();
            let precision = ratio(tp, predicted as f64);
            let recall = ratio(tp, gold as f64);
            ClassMetrics {
                label: m.labels[i].clone(),
                precision,
                recall,
                f1: ratio(2.0 * precision * recall, precision + recall),
                support: gold,
            }
        })
        .collect();
    EvalReport {
        accuracy: m.trace() as f64 / m.total as f64,
        macro_f1: per_class.iter().map(|c| c.f1).sum::<f64>() / n as f64,
        per_class,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMode {
    /// Closed-form expectation for uniform guessing over balanced gold labels.
    Expected,
    /// `n` balanced gold labels scored against seeded uniform guesses.
    Sampled { n: usize, seed: u64 },
}

pub fn random_baseline(label_set: &[String], mode: BaselineMode) -> Result<EvalReport> {
    let l = label_set.len();
    if l == 0 {
        return Err(Error::InvalidArgument("empty label set".into()));
    }
    match mode {
        BaselineMode::Expected => {
            let p = 1.0 / l as f64;
            Ok(EvalReport {
                accuracy: p,
                macro_f1: p,
                per_class: label_set
                    .iter()
                    .map(|label| ClassMetrics {
                        label: label.clone(),
                        precision: p,
                        recall: p,
                        f1: p,
                        support: 0,
                    })
                    .collect(),
            })
        }
        BaselineMode::Sampled { n, seed } => {
            if n == 0 {
                return Err(Error::InvalidArgument("sample size must be positive".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let gold: Vec<&String> = (0..n).map(|i| &label_set[i % l]).collect();
            let pred: Vec<&String> = (0..n).map(|_| &label_set[rng.gen_range(0..l)]).collect();
            Ok(score(&confusion(&gold, &pred, label_set)?))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McNemarVariant {
    /// χ² with one degree of freedom and continuity correction.
    ContinuityCorrected,
    /// Two-sided exact binomial test on the discordant pairs.
    ExactBinomial,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McNemarResult {
    /// A correct, B wrong.
    pub b: u64,
    /// A wrong, B correct.
    pub c: u64,
    /// Continuity-corrected χ² statistic (reported for both variants).
    pub statistic: f64,
    pub p_value: f64,
}

/// `(max(|b − c| − 1, 0))² / (b + c)`, or 0 when there are no discordant pairs.
pub fn mcnemar_statistic(b: u64, c: u64) -> f64 {
    if b + c == 0 {
        return 0.0;
    }
    let d = (b.abs_diff(c) as f64 - 1.0).max(0.0);
    d * d / (b + c) as f64
}

/// Upper tail of χ²₁ at `x`.
pub fn chi2_1_sf(x: f64) -> f64 {
    erfc((x / 2.0).sqrt()).clamp(0.0, 1.0)
}

pub fn mcnemar_counts(b: u64, c: u64, variant: McNemarVariant) -> McNemarResult {
    let statistic = mcnemar_statistic(b, c);
    let p_value = match variant {
        McNemarVariant::ContinuityCorrected => chi2_1_sf(statistic),
        McNemarVariant::ExactBinomial => {
            let n = b + c;
            if n == 0 {
                1.0
            } else {
                let tail = Binomial::new(0.5, n).expect("valid binomial").cdf(b.min(c));
                (2.0 * tail).min(1.0)
            }
        }
    };
    McNemarResult {
        b,
        c,
        statistic,
        p_value,
    }
}

pub fn mcnemar<G, A, B>(gold: &[G], pred_a: &[A], pred_b: &[B]) -> Result<McNemarResult>
where
    G: AsRef<str>,
    A: AsRef<str>,
    B: AsRef<str>,
{
    mcnemar_with(gold, pred_a, pred_b, McNemarVariant::ContinuityCorrected)
}

pub fn mcnemar_with<G, A, B>(
    gold: &[G],
    pred_a: &[A],
    pred_b: &[B],
    variant: McNemarVariant,
) -> Result<McNemarResult>
where
    G: AsRef<str>,
    A: AsRef<str>,
    B: AsRef<str>,
{
    if gold.len() != pred_a.len() || gold.len() != pred_b.len() {
        return Err(Error::LengthMismatch {
            left: gold.len(),
            right: if gold.len() != pred_a.len() {
                pred_a.len()
            } else {
                pred_b.len()
            },
        });
    }
    if gold.is_empty() {
        return Err(Error::InvalidArgument("no predictions to compare".into()));
    }
    let (mut b, mut c) = (0, 0);
    for ((g, a), p) in gold.iter().zip(pred_a).zip(pred_b) {
        let a_ok = g.as_ref() == a.as_ref();
        let b_ok = g.as_ref() == p.as_ref();
        match (a_ok, b_ok) {
            (true, false) => b += 1,
            (false, true) => c += 1,
            _ => {}
        }
    }
    Ok(mcnemar_counts(b, c, variant))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("L{i:02}")).collect()
    }

    #[test]
    fn perfect_predictions() {
        let l = labels(3);
        let g = ["L00", "L01", "L02", "L01", "L00"];
        let m = confusion(&g, &g, &l).unwrap();
        assert_eq!(m.trace(), 5);
        assert_eq!(m.total(), 5);
        let r = score(&m);
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.macro_f1, 1.0);
    }

    #[test]
    fn unpredicted_class_scores_zero() {
        let l = labels(3);
        let m = confusion(&["L00", "L01"], &["L00", "L00"], &l).unwrap();
        let r = score(&m);
        assert_eq!(r.per_class[1].f1, 0.0);
        assert_eq!(r.per_class[2].f1, 0.0);
        assert_eq!(r.per_class[2].precision, 0.0);
        // F1 for L00: P = 1/2, R = 1 -> 2/3.
        assert!((r.macro_f1 - (2.0 / 3.0) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn confusion_errors() {
        let l = labels(2);
        assert!(matches!(
            confusion(&["L00"], &["L00", "L01"], &l),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            confusion(&["L00"], &["XX"], &l),
            Err(Error::UnknownLabel(_))
        ));
    }

    #[test]
    fn baselines() {
        let r = random_baseline(&labels(11), BaselineMode::Expected).unwrap();
        assert_eq!(format!("{:.4}", r.accuracy), "0.0909");
        assert_eq!(
            random_baseline(&labels(1), BaselineMode::Expected)
                .unwrap()
                .accuracy,
            1.0
        );
        let r = random_baseline(&labels(11), BaselineMode::Sampled { n: 11000, seed: 3 }).unwrap();
        assert!((r.accuracy - 1.0 / 11.0).abs() < 0.01, "{}", r.accuracy);
        let one = random_baseline(&labels(1), BaselineMode::Sampled { n: 10, seed: 0 }).unwrap();
        assert_eq!(one.accuracy, 1.0);
    }

    #[test]
    fn mcnemar_fixtures() {
        let r = mcnemar_counts(10, 2, McNemarVariant::ContinuityCorrected);
        assert!((r.statistic - 49.0 / 12.0).abs() < 1e-12);
        assert!((r.p_value - 0.0433).abs() < 1e-3, "{}", r.p_value);

        let g = ["a", "b", "a"];
        let r = mcnemar(&g, &g, &g).unwrap();
        assert_eq!((r.b, r.c, r.statistic, r.p_value), (0, 0, 0.0, 1.0));

        let exact = mcnemar_counts(10, 2, McNemarVariant::ExactBinomial);
        // 2 * (1 + 12 + 66) / 4096
        assert!((exact.p_value - 158.0 / 4096.0).abs() < 1e-12);
        assert_eq!(mcnemar_counts(0, 0, McNemarVariant::ExactBinomial).p_value, 1.0);
    }

    #[test]
    fn mcnemar_counts_discordant_pairs() {
        let gold = ["x", "x", "y", "y", "x"];
        let a = ["x", "x", "x", "y", "y"];
        let b = ["x", "y", "y", "x", "y"];
        let r = mcnemar(&gold, &a, &b).unwrap();
        assert_eq!((r.b, r.c), (2, 1));
        let s = mcnemar(&gold, &b, &a).unwrap();
        assert_eq!((s.b, s.c), (1, 2));
        assert_eq!(r.statistic, s.statistic);
        assert_eq!(r.p_value, s.p_value);
        assert!(mcnemar(&gold, &a, &b[..3]).is_err());
    }

    proptest! {
        #[test]
        fn accuracy_is_match_rate(pairs in proptest::collection::vec((0usize..4, 0usize..4), 1..60)) {
            let l = labels(4);
            let g: Vec<&String> = pairs.iter().map(|p| &l[p.0]).collect();
            let p: Vec<&String> = pairs.iter().map(|p| &l[p.1]).collect();
            let direct = pairs.iter().filter(|p| p.0 == p.1).count() as f64 / pairs.len() as f64;
            prop_assert_eq!(score(&confusion(&g, &p, &l).unwrap()).accuracy, direct);
        }

        #[test]
        fn macro_f1_ignores_relabeling(
            pairs in proptest::collection::vec((0usize..4, 0usize..4), 1..60),
            perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle(),
        ) {
            let l = labels(4);
            let g: Vec<&String> = pairs.iter().map(|p| &l[p.0]).collect();
            let p: Vec<&String> = pairs.iter().map(|p| &l[p.1]).collect();
            let gp: Vec<&String> = pairs.iter().map(|p| &l[perm[p.0]]).collect();
            let pp: Vec<&String> = pairs.iter().map(|p| &l[perm[p.1]]).collect();
            let a = score(&confusion(&g, &p, &l).unwrap()).macro_f1;
            let b = score(&confusion(&gp, &pp, &l).unwrap()).macro_f1;
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn mcnemar_symmetric_and_monotone(n in 1u64..200, b in 0u64..200) {
            prop_assume!(b <= n);
            let c = n - b;
            let r = mcnemar_counts(b, c, McNemarVariant::ContinuityCorrected);
            let s = mcnemar_counts(c, b, McNemarVariant::ContinuityCorrected);
            prop_assert_eq!(r.statistic, s.statistic);
            prop_assert_eq!(r.p_value, s.p_value);
            if c >= 1 && b >= c {
                // Moving one discordant pair from c to b widens |b - c| by 2.
                let wider = mcnemar_counts(b + 1, c - 1, McNemarVariant::ContinuityCorrected);
                prop_assert!(wider.p_value <= r.p_value);
            }
        }
    }
}
