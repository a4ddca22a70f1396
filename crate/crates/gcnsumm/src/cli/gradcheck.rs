use std::process::ExitCode;

use crate::corpus::{load_corpus_str, SentenceEmbeddingProvider, WordEmbeddingTable};
use crate::graph::{build_graph, GraphMethod};
use crate::model::{gradcheck_model, AdjacencyMode, ClusterBatch, ModelConfig, GcnSumModel};
use crate::rouge::compute_targets;

use super::GradcheckArgs;

const EMBEDDED_CORPUS: &str = include_str!("../../fixtures/tiny_duc.jsonl");
const EMBEDDED_WORDS: &str = include_str!("../../fixtures/mini_glove.txt");

/// Undocumented negative-control hook for the test suite: when set, one
/// analytic gradient entry is damaged before checking, so the command must
/// exit nonzero.
const CORRUPT_ENV: &str = "GCNSUMM_GRADCHECK_CORRUPT";

pub fn run(args: &GradcheckArgs) -> anyhow::Result<ExitCode> {
    let words = match &args.words {
        Some(path) => WordEmbeddingTable::load(path)?,
        None => WordEmbeddingTable::load_str(EMBEDDED_WORDS, "<builtin>".to_string())?,
    };
    let clusters = match &args.corpus {
        Some(path) => crate::corpus::load_corpus(path)?,
        None => load_corpus_str(EMBEDDED_CORPUS)?,
    };
    let cluster = clusters
        .first()
        .ok_or_else(|| anyhow::anyhow!("corpus contains no clusters"))?;
    let provider = SentenceEmbeddingProvider::word_average(&words);

    let config = ModelConfig {
        embed_dim: words.dimension,
        gcn_hidden: args.gcn_hidden,
        variant: args.variant,
        dropout: 0.0,
        feature_norm: !args.no_feature_norm,
        adjacency: AdjacencyMode::Raw,
        max_encoder_tokens: 100,
    };
    let graph = build_graph(cluster, GraphMethod::Cosine, args.tsim_g, &provider, &words)?;
    let targets = compute_targets(cluster, true)?;
    let batch = ClusterBatch::build(cluster, &words, &provider, &graph, &config, None)?;
    let mut model = GcnSumModel::new(config, args.seed);

    let corrupt_active = std::env::var(CORRUPT_ENV).is_ok_and(|v| v == "1");
    let corrupt = |grads: &mut std::collections::BTreeMap<String, crate::nn::Matrix>| {
        grads.get_mut("sal_w").expect("sal_w gradient").data[0] += 0.5;
    };

    let report = gradcheck_model(
        &mut model,
        &batch,
        &targets,
        args.h,
        if corrupt_active { Some(&corrupt) } else { None },
    )?;

    println!(
        "gradient check: cluster {:?}, {} sentences, variant {}, h = {}, seed = {}",
        cluster.id,
        cluster.sentence_count(),
        args.variant,
        args.h,
        args.seed
    );
    println!("{:<12} {:>8} {:>14} {:>8}", "group", "coords", "max_rel_err", "status");
    for group in &report.groups {
        println!(
            "{:<12} {:>8} {:>14.6e} {:>8}",
            group.name,
            group.coords,
            group.max_rel_err,
            if group.max_rel_err < args.tolerance { "ok" } else { "FAIL" }
        );
    }
    println!(
        "max relative error {:.6e} (tolerance {:.1e})",
        report.max_rel_err, args.tolerance
    );

    if report.passes(args.tolerance) {
        println!("gradcheck: PASS");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("gradcheck: FAIL");
        Ok(ExitCode::FAILURE)
    }
}
