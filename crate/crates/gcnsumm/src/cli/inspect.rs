use std::process::ExitCode;

use super::{load_corpus_file, InspectArgs};

pub fn run(args: &InspectArgs) -> anyhow::Result<ExitCode> {
    let clusters = load_corpus_file(&args.corpus)?;
    let mut docs = 0usize;
    let mut sentences = 0usize;
    let mut tokens = 0usize;
    let mut references = 0usize;

    println!("{:<12} {:>6} {:>10} {:>8} {:>12}", "cluster", "docs", "sentences", "refs", "tokens");
    for c in &clusters {
        let c_tokens: usize = c.sentences().map(|s| s.tokens.len()).sum();
        println!(
            "{:<12} {:>6} {:>10} {:>8} {:>12}",
            c.id,
            c.documents.len(),
            c.sentence_count(),
            c.references.len(),
            c_tokens
        );
        docs += c.documents.len();
        sentences += c.sentence_count();
        tokens += c_tokens;
        references += c.references.len();
    }
    println!(
        "{:<12} {:>6} {:>10} {:>8} {:>12}",
        format!("total ({})", clusters.len()),
        docs,
        sentences,
        references,
        tokens
    );
    Ok(ExitCode::SUCCESS)
}
