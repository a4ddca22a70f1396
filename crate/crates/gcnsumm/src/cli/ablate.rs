use std::fs;
use std::process::ExitCode;

use crate::model::ModelVariant;
use crate::trainer::TrainConfig;

use super::sweep::{p_value_vs, score_cell};
use super::{load_corpus_file, load_inputs, AblateArgs, RunManifest};

pub fn run(args: &AblateArgs) -> anyhow::Result<ExitCode> {
    let inputs = load_inputs(&args.words, args.sent_embeddings.as_deref())?;
    let train_clusters = load_corpus_file(&args.corpus)?;
    let valid_clusters = load_corpus_file(&args.valid)?;
    let test_clusters = load_corpus_file(&args.test)?;

    let base_cfg = TrainConfig {
        learning_rate: args.lr,
        dropout: args.dropout,
        patience: args.patience,
        max_epochs: args.max_epochs,
        seed: args.seed,
        graph_method: args.graph,
        t_sim_g: args.tsim_g,
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

    let mut rows = Vec::new();
    for variant in ModelVariant::ALL {
        let cfg = TrainConfig {
            variant,
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
            "{:<15} rouge1={:.4} rouge2={:.4}",
            variant.name(),
            scores.r1_mean(),
            scores.r2_mean()
        );
        rows.push((variant, scores));
    }

    let baseline = rows
        .iter()
        .find(|(v, _)| *v == ModelVariant::Full)
        .map(|(_, s)| (s.r1.clone(), s.r2.clone()))
        .expect("full variant always runs");

    let mut csv = format!("# embedding_mode: {}\n", inputs.mode);
    csv.push_str("variant,rouge1_recall,rouge2_recall,p_rouge1,p_rouge2\n");
    for (variant, scores) in &rows {
        let p1 = p_value_vs(&baseline.0, &scores.r1);
        let p2 = p_value_vs(&baseline.1, &scores.r2);
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            variant.name(),
            scores.r1_mean(),
            scores.r2_mean(),
            p1,
            p2
        ));
    }

    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("ablation.csv"), &csv)?;

    let mut manifest = RunManifest::new(
        "ablate",
        args.seed,
        inputs.mode,
        serde_json::json!({
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

    println!("4 variants -> {}", args.out.join("ablation.csv").display());
    Ok(ExitCode::SUCCESS)
}
