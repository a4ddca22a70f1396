//! Use precomputed sentence embeddings from a file instead of the
//! word-average fallback, and show how the two modes change the cosine
//! graph. File-backed mode refuses to serve a sentence id it has no vector
//! for; there is no silent fallback.
//!
//! ```sh
//! cargo run --example file_backed_embeddings
//! ```

use std::path::Path;

use gcnsumm::corpus::{load_corpus, SentenceEmbeddingProvider, WordEmbeddingTable};
use gcnsumm::graph::{build_cosine, build_graph, GraphMethod};

fn main() -> anyhow::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let words = WordEmbeddingTable::load(&fixtures.join("mini_glove.txt"))?;
    let clusters = load_corpus(&fixtures.join("tiny_duc.jsonl"))?;
    let cluster = &clusters[0];

    let file_backed = SentenceEmbeddingProvider::from_file(&fixtures.join("tiny_sent_embeddings.txt"))?;
    let fallback = SentenceEmbeddingProvider::word_average(&words);
    println!(
        "file-backed: mode {} dimension {}",
        file_backed.mode, file_backed.dimension
    );
    println!("fallback:    mode {} dimension {}", fallback.mode, fallback.dimension);

    for (label, provider) in [("file-backed", &file_backed), ("word-average", &fallback)] {
        let graph = build_cosine(cluster, provider, &words)?;
        println!();
        println!("{label} cosine weights for {}:", cluster.id);
        for u in 0..graph.len() {
            for v in (u + 1)..graph.len() {
                println!(
                    "  {} ~ {} = {:.4}",
                    graph.node_ids[u],
                    graph.node_ids[v],
                    graph.weights.get(u, v)
                );
            }
        }
    }

    // a corpus the file does not cover is rejected
    let uncovered = gcnsumm::corpus::Cluster::from_texts(
        "not-in-the-file",
        &[vec!["Completely new sentence the embedding file never saw.".to_string()]],
        &[],
    )?;
    let err = build_graph(&uncovered, GraphMethod::Cosine, 0.0, &file_backed, &words).unwrap_err();
    println!();
    println!("uncovered cluster {} -> {err}", uncovered.id);
    Ok(())
}
