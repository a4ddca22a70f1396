//! ROUGE-N scoring: n-gram overlap with and without stemming, budget
//! truncation, per-sentence training targets, and a Welch t-test.
//!
//! ```sh
//! cargo run --example rouge_scoring
//! ```

use std::path::Path;

use gcnsumm::corpus::{load_corpus, tokenize};
use gcnsumm::rouge::{compute_targets, rouge_n, truncate_bytes, truncate_words, welch_t_test};

fn main() -> anyhow::Result<()> {
    let candidate = tokenize("The running cats sat on the mat.");
    let reference = tokenize("A cat runs and sits on the mat.");

    let refs = vec![reference.clone()];
    let plain = rouge_n(&candidate, &refs, 1, false)?;
    let stemmed = rouge_n(&candidate, &refs, 1, true)?;
    println!("ROUGE-1 without stemming: recall {:.4}  f1 {:.4}", plain.recall, plain.f1);
    println!("ROUGE-1 with stemming:    recall {:.4}  f1 {:.4}", stemmed.recall, stemmed.f1);

    let bigrams = rouge_n(&candidate, &refs, 2, true)?;
    println!("ROUGE-2 with stemming:    recall {:.4}", bigrams.recall);

    let text = "one two three four five six seven eight nine ten";
    println!();
    println!("truncate_words(.., 4)  = {:?}", truncate_words(text, 4));
    println!("truncate_bytes(.., 13) = {:?}", truncate_bytes(text, 13));

    // training targets: softmax over per-sentence ROUGE-1 F1 scores
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let clusters = load_corpus(&fixtures.join("tiny_duc.jsonl"))?;
    let targets = compute_targets(&clusters[0], true)?;
    println!();
    println!("targets for cluster {}: {:?}", clusters[0].id, targets.probs());
    println!("target entropy (training-loss minimum): {:.6}", targets.entropy());

    let (t, p) = welch_t_test(&[0.41, 0.39, 0.44, 0.40], &[0.33, 0.31, 0.35, 0.30])?;
    println!();
    println!("welch t = {t:.4}, two-sided p = {p:.6}");
    Ok(())
}
