//! Train all four model variants on one configuration and compare their
//! ROUGE scores: the full model, the model without the trainable sentence
//! encoder, without the graph convolution, and without both.
//!
//! ```sh
//! cargo run --example ablation_study
//! ```

use std::path::Path;

use gcnsumm::corpus::{load_corpus, tokenize, SentenceEmbeddingProvider, WordEmbeddingTable};
use gcnsumm::model::ModelVariant;
use gcnsumm::rouge::rouge_n;
use gcnsumm::summarizer::{generate, SummaryBudget};
use gcnsumm::trainer::{prepare_batch, train, TrainConfig};

fn main() -> anyhow::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let words = WordEmbeddingTable::load(&fixtures.join("mini_glove.txt"))?;
    let provider = SentenceEmbeddingProvider::word_average(&words);
    let clusters = load_corpus(&fixtures.join("smoke_corpus.jsonl"))?;

    println!("{:<16} {:>10} {:>10}", "variant", "rouge1", "rouge2");
    for variant in ModelVariant::ALL {
        let cfg = TrainConfig {
            variant,
            gcn_hidden: 8,
            max_epochs: 10,
            patience: 10,
            t_sim_g: 0.0,
            ..TrainConfig::default()
        };
        let outcome = train(&clusters, &clusters, &cfg, &words, &provider, None)?;
        let model_config = cfg.model_config(words.dimension);

        let mut r1 = 0.0;
        let mut r2 = 0.0;
        for cluster in &clusters {
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
            let candidate = tokenize(&summary.text);
            let refs = cluster.tokenized_references();
            r1 += rouge_n(&candidate, &refs, 1, true)?.recall;
            r2 += rouge_n(&candidate, &refs, 2, true)?.recall;
        }
        let n = clusters.len() as f64;
        println!("{:<16} {:>10.4} {:>10.4}", variant.name(), r1 / n, r2 / n);
    }
    Ok(())
}
