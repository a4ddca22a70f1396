use std::fs;
use std::process::ExitCode;

use crate::graph::build_graph;
use crate::trainer;

use super::{load_corpus_file, load_inputs, RunManifest, TrainArgs};

pub fn run(args: &TrainArgs) -> anyhow::Result<ExitCode> {
    let inputs = load_inputs(&args.words, args.sent_embeddings.as_deref())?;
    let train_clusters = load_corpus_file(&args.corpus)?;
    let valid_clusters = load_corpus_file(&args.valid)?;
    let cfg = args.to_config();

    fs::create_dir_all(&args.out)?;

    if args.dump_graphs {
        let graph_dir = args.out.join("graphs");
        fs::create_dir_all(&graph_dir)?;
        for cluster in train_clusters.iter().chain(valid_clusters.iter()) {
            let graph = build_graph(
                cluster,
                cfg.graph_method,
                cfg.t_sim_g,
                &inputs.provider,
                &inputs.words,
            )?;
            let mut buf = Vec::new();
            graph.write_edge_list(&mut buf)?;
            fs::write(graph_dir.join(format!("{}.edges", cluster.id)), buf)?;
        }
    }

    let outcome = trainer::train(
        &train_clusters,
        &valid_clusters,
        &cfg,
        &inputs.words,
        &inputs.provider,
        Some(&args.out.join("checkpoints")),
    )?;

    fs::write(args.out.join("history.csv"), outcome.history.to_csv())?;
    outcome.best_checkpoint.save(&args.out.join("model.json"))?;

    let mut manifest = RunManifest::new(
        "train",
        cfg.seed,
        inputs.mode,
        serde_json::to_value(&cfg)?,
    );
    manifest.add_input(&args.corpus)?;
    manifest.add_input(&args.valid)?;
    manifest.add_input(&args.words)?;
    if let Some(path) = &args.sent_embeddings {
        manifest.add_input(path)?;
    }
    manifest.write(&args.out)?;

    let last = outcome.history.epochs.last().expect("at least one epoch");
    println!(
        "trained {} epochs (best epoch {}, valid loss {:.6}); outputs in {}",
        last.epoch,
        outcome.best_epoch,
        outcome
            .history
            .epochs
            .iter()
            .find(|e| e.epoch == outcome.best_epoch)
            .expect("best epoch recorded")
            .valid_loss,
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}
