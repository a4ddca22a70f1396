//! End to end: train on the bundled corpus, then build a 100-word summary
//! for one cluster and print the greedy selection trace.
//!
//! ```sh
//! cargo run --example train_and_summarize
//! ```

use std::path::Path;

use gcnsumm::corpus::{load_corpus, SentenceEmbeddingProvider, WordEmbeddingTable};
use gcnsumm::summarizer::{generate, SummaryBudget};
use gcnsumm::trainer::{prepare_batch, train, TrainConfig};

fn main() -> anyhow::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let words = WordEmbeddingTable::load(&fixtures.join("mini_glove.txt"))?;
    let provider = SentenceEmbeddingProvider::word_average(&words);
    // small in-sample demo: the corpus serves as both train and validation
    let train_clusters = load_corpus(&fixtures.join("smoke_corpus.jsonl"))?;

    let cfg = TrainConfig {
        gcn_hidden: 16,
        max_epochs: 40,
        t_sim_g: 0.0,
        ..TrainConfig::default()
    };
    let outcome = train(&train_clusters, &train_clusters, &cfg, &words, &provider, None)?;
    println!(
        "trained {} epochs; best validation loss {:.6} at epoch {}",
        outcome.history.epochs.len(),
        outcome
            .history
            .epochs
            .iter()
            .map(|e| e.valid_loss)
            .fold(f64::INFINITY, f64::min),
        outcome.best_epoch
    );

    let cluster = &train_clusters[0];
    let model_config = cfg.model_config(words.dimension);
    let batch = prepare_batch(cluster, &cfg, &model_config, &words, &provider, false)?;
    let scores = outcome.model.predict(&batch)?;

    let summary = generate(
        cluster,
        &scores,
        &provider,
        &words,
        SummaryBudget::standard_words(),
        0.8,
        9,
    )?;

    println!();
    println!("greedy trace for cluster {}:", cluster.id);
    for entry in &summary.trace {
        println!(
            "  {} score {:.4} cosine {} -> {}",
            entry.candidate_id,
            entry.score,
            entry
                .cosine_to_summary
                .map(|c| format!("{c:.4}"))
                .unwrap_or_else(|| "   -  ".to_string()),
            if entry.accepted { "accept" } else { "reject" }
        );
    }
    println!();
    println!("summary ({} words):", summary.text.split_whitespace().count());
    println!("{}", summary.text);
    Ok(())
}
