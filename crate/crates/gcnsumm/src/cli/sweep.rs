use std::fs;
use std::process::ExitCode;

use crate::corpus::{tokenize, Cluster, SentenceEmbeddingProvider, WordEmbeddingTable};
use crate::rouge::{rouge_n, welch_t_test};
use crate::summarizer::{generate, SummaryBudget};
use crate::trainer::{self, TrainConfig};

use super::{
    load_corpus_file, load_inputs, parse_method_list, parse_threshold_list, RunManifest, SweepArgs,
};

/// Per-cluster recall samples of one trained configuration on the test set.
pub(super) struct CellScores {
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
}

impl CellScores {
    pub fn r1_mean(&self) -> f64 {
        self.r1.iter().sum::<f64>() / self.r1.len() as f64
    }

    pub fn r2_mean(&self) -> f64 {
        self.r2.iter().sum::<f64>() / self.r2.len() as f64
    }
}

/// Trains one configuration and scores its summaries on the test clusters.
#[allow(clippy::too_many_arguments)]
pub(super) fn score_cell(
    train_clusters: &[Cluster],
    valid_clusters: &[Cluster],
    test_clusters: &[Cluster],
    cfg: &TrainConfig,
    words: &WordEmbeddingTable,
    provider: &SentenceEmbeddingProvider,
    budget: SummaryBudget,
    t_sim_s: f64,
    min_words: usize,
) -> anyhow::Result<CellScores> {
    let outcome = trainer::train(train_clusters, valid_clusters, cfg, words, provider, None)?;
    let model_config = cfg.model_config(words.dimension);

    let mut r1 = Vec::with_capacity(test_clusters.len());
    let mut r2 = Vec::with_capacity(test_clusters.len());
    for cluster in test_clusters {
        let batch = trainer::prepare_batch(cluster, cfg, &model_config, words, provider, false)?;
        let scores = outcome.model.predict(&batch)?;
        let summary = generate(cluster, &scores, provider, words, budget, t_sim_s, min_words)?;
        let candidate = tokenize(&summary.text);
        let references = cluster.tokenized_references();
        r1.push(rouge_n(&candidate, &references, 1, cfg.stem_targets)?.recall);
        r2.push(rouge_n(&candidate, &references, 2, cfg.stem_targets)?.recall);
    }
    Ok(CellScores { r1, r2 })
}

/// Two-sided Welch p-value of a cell against the baseline samples, with the
/// degenerate cases pinned: identical samples compare equal (p = 1), and
/// zero-variance samples are reported as "na".
pub(super) fn p_value_vs(baseline: &[f64], cell: &[f64]) -> String {
    if baseline == cell {
        return "1".to_string();
    }
    match welch_t_test(baseline, cell) {
        Ok((_, p)) => format!("{p}"),
        Err(_) => "na".to_string(),
    }
}

pub fn run(args: &SweepArgs) -> anyhow::Result<ExitCode> {
    let inputs = load_inputs(&args.words, args.sent_embeddings.as_deref())?;
    let train_clusters = load_corpus_file(&args.corpus)?;
    let valid_clusters = load_corpus_file(&args.valid)?;
    let test_clusters = load_corpus_file(&args.test)?;

    let methods = parse_method_list(&args.methods)?;
    let thresholds = parse_threshold_list(&args.thresholds)?;

    let base_cfg = TrainConfig {
        learning_rate: args.lr,
        dropout: args.dropout,
        patience: args.patience,
        max_epochs: args.max_epochs,
        seed: args.seed,
        variant: args.variant,
        gcn_hidden: args.gcn_hidden,
        stem_targets: !args.no_stem,
        feature_norm: !args.no_feature_norm,
        adjacency: if args.normalize_adjacency {
            crate::model::AdjacencyMode::SymNormalized
        } else {
            crate::model::AdjacencyMode::Raw
        },
        ..TrainConfig::default()
    };

    let mut cells = Vec::new();
    for &method in &methods {
        for &t in &thresholds {
            let cfg = TrainConfig {
                graph_method: method,
                t_sim_g: t,
                ..base_cfg.clone()
            };
            let scores = score_cell(
                &train_clusters,
                &valid_clusters,
                &test_clusters,
                &cfg,
                &inputs.words,
                &inputs.provider,
                args.budget,
                args.tsim_s,
                args.min_words,
            )?;
            println!(
                "{:<9} tsim_g={:<5} rouge1={:.4} rouge2={:.4}",
                method.name(),
                t,
                scores.r1_mean(),
                scores.r2_mean()
            );
            cells.push((method, t, scores));
        }
    }

    // significance against the cosine / 0.5 reference cell when it exists
    let baseline = cells
        .iter()
        .find(|(m, t, _)| *m == crate::graph::GraphMethod::Cosine && *t == 0.5)
        .map(|(_, _, s)| (s.r1.clone(), s.r2.clone()));

    let mut csv = format!("# embedding_mode: {}\n", inputs.mode);
    csv.push_str("method,tsim_g,rouge1_recall,rouge2_recall,p_rouge1,p_rouge2\n");
    for (method, t, scores) in &cells {
        let (p1, p2) = match &baseline {
            Some((b1, b2)) => (p_value_vs(b1, &scores.r1), p_value_vs(b2, &scores.r2)),
            None => ("na".to_string(), "na".to_string()),
        };
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            method.name(),
            t,
            scores.r1_mean(),
            scores.r2_mean(),
            p1,
            p2
        ));
    }

    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("sweep.csv"), &csv)?;

    let mut manifest = RunManifest::new(
        "sweep",
        args.seed,
        inputs.mode,
        serde_json::json!({
            "methods": methods.iter().map(|m| m.name()).collect::<Vec<_>>(),
            "thresholds": thresholds,
            "budget": args.budget.to_string(),
            "t_sim_s": args.tsim_s,
            "min_words": args.min_words,
            "train": serde_json::to_value(&base_cfg)?,
        }),
    );
    manifest.add_input(&args.corpus)?;
    manifest.add_input(&args.valid)?;
    manifest.add_input(&args.test)?;
    manifest.add_input(&args.words)?;
    if let Some(path) = &args.sent_embeddings {
        manifest.add_input(path)?;
    }
    manifest.write(&args.out)?;

    println!(
        "{} cells -> {}",
        cells.len(),
        args.out.join("sweep.csv").display()
    );
    Ok(ExitCode::SUCCESS)
}
