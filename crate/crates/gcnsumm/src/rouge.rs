//! ROUGE-N scoring, summary truncation, per-sentence training targets, and
//! the Welch two-sample t-test used for significance reporting.
//!
//! Multi-reference scores are the arithmetic mean over references.
//! Jackknifing and bootstrap resampling are deliberately omitted: scores
//! here are point estimates.

use std::collections::HashMap;

use thiserror::Error;

use crate::corpus::Cluster;
use crate::nn::softmax;
use crate::stem::porter_stem;

#[derive(Debug, Error)]
pub enum RougeError {
    #[error("n-gram order must be at least 1")]
    ZeroOrder,
    #[error("at least one reference summary is required")]
    NoReferences,
    #[error("cluster {0:?} has no reference summaries")]
    ClusterWithoutReferences(String),
    #[error("welch t-test needs two samples with >= 2 elements and nonzero variance")]
    DegenerateSamples,
}

/// Recall / precision / F1 triple for ROUGE-N.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RougeScore {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
}

impl RougeScore {
    fn from_counts(matches: f64, ref_total: f64, cand_total: f64) -> Self {
        let recall = if ref_total > 0.0 { matches / ref_total } else { 0.0 };
        let precision = if cand_total > 0.0 { matches / cand_total } else { 0.0 };
        let f1 = if recall + precision > 0.0 {
            2.0 * recall * precision / (recall + precision)
        } else {
            0.0
        };
        RougeScore { recall, precision, f1 }
    }
}

/// Contiguous n-grams with multiplicity. Empty when the token list is
/// shorter than n.
pub fn ngrams(tokens: &[String], n: usize) -> Result<HashMap<Vec<String>, usize>, RougeError> {
    if n == 0 {
        return Err(RougeError::ZeroOrder);
    }
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *counts.entry(window.to_vec()).or_insert(0) += 1;
        }
    }
    Ok(counts)
}

fn stemmed(tokens: &[String]) -> Vec<String> {
    tokens.iter().map(|t| porter_stem(t)).collect()
}

/// ROUGE-N of a candidate against one or more references. With `stem` set,
/// all tokens pass through the Porter stemmer first. Clipped counts: each
/// candidate n-gram matches at most its multiplicity in the reference.
pub fn rouge_n(
    candidate: &[String],
    references: &[Vec<String>],
    n: usize,
    stem: bool,
) -> Result<RougeScore, RougeError> {
    if references.is_empty() {
        return Err(RougeError::NoReferences);
    }
    let cand_tokens = if stem { stemmed(candidate) } else { candidate.to_vec() };
    let cand_grams = ngrams(&cand_tokens, n)?;
    let cand_total: usize = cand_grams.values().sum();

    let mut acc = RougeScore::default();
    for reference in references {
        let ref_tokens = if stem { stemmed(reference) } else { reference.clone() };
        let ref_grams = ngrams(&ref_tokens, n)?;
        let ref_total: usize = ref_grams.values().sum();
        let mut matches = 0usize;
        for (gram, &ref_count) in &ref_grams {
            if let Some(&cand_count) = cand_grams.get(gram) {
                matches += ref_count.min(cand_count);
            }
        }
        let score = RougeScore::from_counts(matches as f64, ref_total as f64, cand_total as f64);
        acc.recall += score.recall;
        acc.precision += score.precision;
        acc.f1 += score.f1;
    }
    let k = references.len() as f64;
    Ok(RougeScore {
        recall: acc.recall / k,
        precision: acc.precision / k,
        f1: acc.f1 / k,
    })
}

/// Keeps the first `limit` whitespace-delimited words. Under the limit the
/// text is returned unchanged.
pub fn truncate_words(text: &str, limit: usize) -> String {
    assert!(limit > 0, "word limit must be positive");
    let words: Vec<&str> = text.split_whitespace().collect();
    if words.len() <= limit {
        text.to_string()
    } else {
        words[..limit].join(" ")
    }
}

/// Longest UTF-8-valid prefix of at most `limit` bytes.
pub fn truncate_bytes(text: &str, limit: usize) -> String {
    assert!(limit > 0, "byte limit must be positive");
    if text.len() <= limit {
        return text.to_string();
    }
    let mut end = limit;
    while !text.is_char_boundary(end) {
        end -= 1;
    }
    text[..end].to_string()
}

/// Per-sentence target probabilities for one cluster: the ROUGE-1 F1 of
/// every sentence against the cluster references, softmax-normalized over
/// all sentences of all documents.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetDistribution {
    probs: Vec<f64>,
}

impl TargetDistribution {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Shannon entropy, the analytic minimum of the training loss.
    pub fn entropy(&self) -> f64 {
        -self
            .probs
            .iter()
            .filter(|p| **p > 0.0)
            .map(|p| p * p.ln())
            .sum::<f64>()
    }
}

pub fn compute_targets(cluster: &Cluster, stem: bool) -> Result<TargetDistribution, RougeError> {
    if cluster.references.is_empty() {
        return Err(RougeError::ClusterWithoutReferences(cluster.id.clone()));
    }
    let references = cluster.tokenized_references();
    let mut raw = Vec::with_capacity(cluster.sentence_count());
    for sentence in cluster.sentences() {
        raw.push(rouge_n(&sentence.tokens, &references, 1, stem)?.f1);
    }
    let probs = softmax(&raw).expect("cluster has at least one sentence");
    Ok(TargetDistribution { probs })
}

/// Unequal-variance t statistic with Welch-Satterthwaite degrees of freedom
/// and a two-sided p-value.
pub fn welch_t_test(sample_a: &[f64], sample_b: &[f64]) -> Result<(f64, f64), RougeError> {
    if sample_a.len() < 2 || sample_b.len() < 2 {
        return Err(RougeError::DegenerateSamples);
    }
    let (mean_a, var_a) = mean_and_var(sample_a);
    let (mean_b, var_b) = mean_and_var(sample_b);
    if var_a == 0.0 || var_b == 0.0 {
        return Err(RougeError::DegenerateSamples);
    }
    let na = sample_a.len() as f64;
    let nb = sample_b.len() as f64;
    let sa = var_a / na;
    let sb = var_b / nb;
    let se2 = sa + sb;
    let t = (mean_a - mean_b) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let p = students_t_two_sided_p(t, df);
    Ok((t, p))
}

fn mean_and_var(sample: &[f64]) -> (f64, f64) {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let var = sample.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Two-sided p-value of Student's t via the regularized incomplete beta
/// identity p = I_{df/(df+t^2)}(df/2, 1/2).
pub fn students_t_two_sided_p(t: f64, df: f64) -> f64 {
    let x = df / (df + t * t);
    regularized_incomplete_beta(df / 2.0, 0.5, x)
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos approximation
    const COF: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let mut y = x;
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut ser = 1.000000000190015;
    for c in COF {
        y += 1.0;
        ser += c / y;
    }
    -tmp + (2.5066282746310005 * ser / x).ln()
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 3e-14;
    const FPMIN: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let bt =
        (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln()).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        bt * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - bt * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}
