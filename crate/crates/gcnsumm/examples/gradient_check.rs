//! Verify every hand-derived backward pass against central finite
//! differences on the bundled three-sentence fixture.
//!
//! ```sh
//! cargo run --example gradient_check
//! ```

use std::path::Path;

use gcnsumm::corpus::{load_corpus, SentenceEmbeddingProvider, WordEmbeddingTable};
use gcnsumm::graph::{build_graph, GraphMethod};
use gcnsumm::model::{
    gradcheck_model, AdjacencyMode, ClusterBatch, ModelConfig, ModelVariant, GcnSumModel,
};
use gcnsumm::rouge::compute_targets;

fn main() -> anyhow::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let words = WordEmbeddingTable::load(&fixtures.join("mini_glove.txt"))?;
    let provider = SentenceEmbeddingProvider::word_average(&words);
    let cluster = &load_corpus(&fixtures.join("tiny_duc.jsonl"))?[0];

    let config = ModelConfig {
        embed_dim: words.dimension,
        gcn_hidden: 16,
        variant: ModelVariant::Full,
        dropout: 0.0,
        feature_norm: true,
        adjacency: AdjacencyMode::Raw,
        max_encoder_tokens: 100,
    };
    let graph = build_graph(cluster, GraphMethod::Cosine, 0.0, &provider, &words)?;
    let targets = compute_targets(cluster, true)?;
    let batch = ClusterBatch::build(cluster, &words, &provider, &graph, &config, None)?;
    let mut model = GcnSumModel::new(config, 11);

    let report = gradcheck_model(&mut model, &batch, &targets, 1e-5, None)?;
    println!("{:<12} {:>8} {:>14}", "group", "coords", "max_rel_err");
    for group in &report.groups {
        println!("{:<12} {:>8} {:>14.6e}", group.name, group.coords, group.max_rel_err);
    }
    println!();
    println!(
        "max relative error {:.6e} at h = {:e} -> {}",
        report.max_rel_err,
        report.step,
        if report.passes(1e-3) { "PASS" } else { "FAIL" }
    );
    Ok(())
}
