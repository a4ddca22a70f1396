//! Mini version of the graph-method study: two methods across the standard
//! threshold grid, scored with ROUGE-1 recall and compared with a Welch
//! t-test against the cosine / 0.5 reference cell.
//!
//! ```sh
//! cargo run --example threshold_sweep
//! ```

use std::path::Path;

use gcnsumm::corpus::{load_corpus, tokenize, SentenceEmbeddingProvider, WordEmbeddingTable};
use gcnsumm::graph::GraphMethod;
use gcnsumm::rouge::{rouge_n, welch_t_test};
use gcnsumm::summarizer::{generate, SummaryBudget};
use gcnsumm::trainer::{prepare_batch, train, TrainConfig};

fn score_cell(
    method: GraphMethod,
    t_sim_g: f64,
    clusters: &[gcnsumm::corpus::Cluster],
    words: &WordEmbeddingTable,
    provider: &SentenceEmbeddingProvider,
) -> anyhow::Result<Vec<f64>> {
    let cfg = TrainConfig {
        graph_method: method,
        t_sim_g,
        gcn_hidden: 8,
        max_epochs: 8,
        patience: 8,
        ..TrainConfig::default()
    };
    let outcome = train(clusters, clusters, &cfg, words, provider, None)?;
    let model_config = cfg.model_config(words.dimension);

    let mut recalls = Vec::new();
    for cluster in clusters {
        let batch = prepare_batch(cluster, &cfg, &model_config, words, provider, false)?;
        let scores = outcome.model.predict(&batch)?;
        let summary = generate(
            cluster,
            &scores,
            provider,
            words,
            SummaryBudget::standard_words(),
            0.8,
            9,
        )?;
        let candidate = tokenize(&summary.text);
        recalls.push(rouge_n(&candidate, &cluster.tokenized_references(), 1, true)?.recall);
    }
    Ok(recalls)
}

fn main() -> anyhow::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let words = WordEmbeddingTable::load(&fixtures.join("mini_glove.txt"))?;
    let provider = SentenceEmbeddingProvider::word_average(&words);
    let clusters = load_corpus(&fixtures.join("smoke_corpus.jsonl"))?;

    let thresholds = [0.0, 0.25, 0.5, 0.75];
    let baseline = score_cell(GraphMethod::Cosine, 0.5, &clusters, &words, &provider)?;

    println!("{:<10} {:>7} {:>10} {:>12}", "method", "tsim_g", "rouge1", "p vs base");
    for method in [GraphMethod::Cosine, GraphMethod::Tfidf] {
        for &t in &thresholds {
            let recalls = score_cell(method, t, &clusters, &words, &provider)?;
            let mean = recalls.iter().sum::<f64>() / recalls.len() as f64;
            let p = if recalls == baseline {
                "1 (self)".to_string()
            } else {
                match welch_t_test(&baseline, &recalls) {
                    Ok((_, p)) => format!("{p:.4}"),
                    Err(_) => "na".to_string(),
                }
            };
            println!("{:<10} {:>7} {:>10.4} {:>12}", method.name(), t, mean, p);
        }
    }
    Ok(())
}
