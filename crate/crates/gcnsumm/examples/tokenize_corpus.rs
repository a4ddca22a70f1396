//! Load the bundled corpus and show the cluster / document / sentence
//! structure along with tokenization.
//!
//! ```sh
//! cargo run --example tokenize_corpus
//! ```

use std::path::Path;

use gcnsumm::corpus::{load_corpus, tokenize};

fn main() -> anyhow::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let clusters = load_corpus(&fixtures.join("tiny_duc.jsonl"))?;

    for cluster in &clusters {
        println!(
            "cluster {} ({} documents, {} sentences, {} references)",
            cluster.id,
            cluster.documents.len(),
            cluster.sentence_count(),
            cluster.references.len()
        );
        for sentence in cluster.sentences() {
            println!("  [{}] {}", sentence.id, sentence.text);
            println!("        tokens: {:?}", sentence.tokens);
        }
    }

    // punctuation handling: interior periods survive, everything else splits
    println!();
    println!(
        "tokenize(\"U.S. budget\u{2014}cuts\") = {:?}",
        tokenize("U.S. budget\u{2014}cuts")
    );
    Ok(())
}
