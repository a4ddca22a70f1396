use std::fs;
use std::io::Write;
use std::process::ExitCode;

use crate::graph::{build_graph, GraphMethod};
use crate::model::{ClusterBatch, GcnSumModel};
use crate::nn::Checkpoint;
use crate::summarizer::generate;

use super::{load_corpus_file, load_inputs, RunManifest, SummarizeArgs};

pub fn run(args: &SummarizeArgs) -> anyhow::Result<ExitCode> {
    let inputs = load_inputs(&args.words, args.sent_embeddings.as_deref())?;
    let clusters = load_corpus_file(&args.corpus)?;

    let ckpt = Checkpoint::load(&args.checkpoint)?;
    let (model, _) = GcnSumModel::from_checkpoint(&ckpt)?;
    if model.config.embed_dim != inputs.words.dimension {
        anyhow::bail!(
            "checkpoint expects {}-dimensional word vectors, file has {}",
            model.config.embed_dim,
            inputs.words.dimension
        );
    }

    // graph settings: explicit flags win, then the checkpoint's record
    let graph_method: GraphMethod = match args.graph {
        Some(m) => m,
        None => ckpt
            .extra
            .get("graph_method")
            .and_then(|v| serde_json::from_value(v.clone()).ok())
            .unwrap_or(GraphMethod::Cosine),
    };
    let t_sim_g = match args.tsim_g {
        Some(t) => t,
        None => ckpt
            .extra
            .get("t_sim_g")
            .and_then(|v| v.as_f64())
            .unwrap_or(0.5),
    };

    fs::create_dir_all(&args.out)?;
    let mut trace_file = fs::File::create(args.out.join("trace.jsonl"))?;

    for cluster in &clusters {
        let graph = build_graph(cluster, graph_method, t_sim_g, &inputs.provider, &inputs.words)?;
        let batch = ClusterBatch::build(
            cluster,
            &inputs.words,
            &inputs.provider,
            &graph,
            &model.config,
            None,
        )?;
        let scores = model.predict(&batch)?;
        let summary = generate(
            cluster,
            &scores,
            &inputs.provider,
            &inputs.words,
            args.budget,
            args.tsim_s,
            args.min_words,
        )?;

        fs::write(args.out.join(format!("{}.txt", cluster.id)), &summary.text)?;
        for entry in &summary.trace {
            let line = serde_json::json!({
                "cluster": cluster.id,
                "candidate_id": entry.candidate_id,
                "score": entry.score,
                "cosine_to_summary": entry.cosine_to_summary,
                "accepted": entry.accepted,
            });
            writeln!(trace_file, "{line}")?;
        }
    }

    let mut manifest = RunManifest::new(
        "summarize",
        args.seed,
        inputs.mode,
        serde_json::json!({
            "budget": args.budget.to_string(),
            "t_sim_s": args.tsim_s,
            "min_words": args.min_words,
            "graph_method": graph_method,
            "t_sim_g": t_sim_g,
            "variant": model.config.variant,
        }),
    );
    manifest.add_input(&args.corpus)?;
    manifest.add_input(&args.checkpoint)?;
    manifest.add_input(&args.words)?;
    if let Some(path) = &args.sent_embeddings {
        manifest.add_input(path)?;
    }
    manifest.write(&args.out)?;

    println!(
        "wrote {} summaries ({}) to {}",
        clusters.len(),
        args.budget,
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}
