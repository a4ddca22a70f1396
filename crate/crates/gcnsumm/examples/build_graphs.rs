//! Build the sentence semantic relation graph of one cluster with all six
//! methods, prune at the standard threshold, and dump one edge list.
//!
//! ```sh
//! cargo run --example build_graphs
//! ```

use std::path::Path;

use gcnsumm::corpus::{load_corpus, SentenceEmbeddingProvider, WordEmbeddingTable};
use gcnsumm::graph::{build_graph, GraphMethod};

fn main() -> anyhow::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let words = WordEmbeddingTable::load(&fixtures.join("mini_glove.txt"))?;
    let provider = SentenceEmbeddingProvider::word_average(&words);
    let cluster = &load_corpus(&fixtures.join("smoke_corpus.jsonl"))?[0];

    println!(
        "cluster {} with {} sentences; edges counted as directed nonzero pairs",
        cluster.id,
        cluster.sentence_count()
    );
    println!("{:<10} {:>12} {:>14} {:>12}", "method", "edges(t=0)", "edges(t=0.25)", "max weight");
    for method in GraphMethod::ALL {
        let unpruned = build_graph(cluster, method, 0.0, &provider, &words)?;
        let pruned = unpruned.prune(0.25);
        let max = unpruned.weights.data.iter().cloned().fold(0.0, f64::max);
        println!(
            "{:<10} {:>12} {:>14} {:>12.4}",
            method.name(),
            unpruned.edge_count(),
            pruned.edge_count(),
            max
        );
    }

    let cosine = build_graph(cluster, GraphMethod::Cosine, 0.5, &provider, &words)?;
    let mut buf = Vec::new();
    cosine.write_edge_list(&mut buf)?;
    println!();
    println!("cosine edges above 0.5:");
    print!("{}", String::from_utf8(buf)?);
    Ok(())
}
