use std::fs;
use std::process::ExitCode;

use crate::corpus::tokenize;
use crate::rouge::rouge_n;

use super::{load_corpus_file, EvaluateArgs, RunManifest};

struct Row {
    cluster: String,
    r1_recall: f64,
    r1_precision: f64,
    r1_f1: f64,
    r2_recall: f64,
    r2_precision: f64,
    r2_f1: f64,
}

pub fn run(args: &EvaluateArgs) -> anyhow::Result<ExitCode> {
    let clusters = load_corpus_file(&args.corpus)?;

    let txt_count = fs::read_dir(&args.summaries)?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "txt"))
        .count();
    if txt_count == 0 {
        anyhow::bail!(
            "no .txt summaries found in {}",
            args.summaries.display()
        );
    }

    // scores are only comparable within one embedding mode; surface the mode
    // recorded by the summarizer when it is available
    let embedding_mode = fs::read_to_string(args.summaries.join("manifest.json"))
        .ok()
        .and_then(|text| serde_json::from_str::<serde_json::Value>(&text).ok())
        .and_then(|v| v.get("embedding_mode").cloned())
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_else(|| "unknown".to_string());

    let stem = !args.no_stem;
    let mut rows = Vec::new();
    for cluster in &clusters {
        let path = args.summaries.join(format!("{}.txt", cluster.id));
        let text = fs::read_to_string(&path).map_err(|e| {
            anyhow::anyhow!("missing summary for cluster {}: {e}", cluster.id)
        })?;
        let truncated = args.budget.truncate(&text);
        let candidate = tokenize(&truncated);
        let references = cluster.tokenized_references();
        if references.is_empty() {
            anyhow::bail!("cluster {} has no reference summaries", cluster.id);
        }
        let r1 = rouge_n(&candidate, &references, 1, stem)?;
        let r2 = rouge_n(&candidate, &references, 2, stem)?;
        rows.push(Row {
            cluster: cluster.id.clone(),
            r1_recall: r1.recall,
            r1_precision: r1.precision,
            r1_f1: r1.f1,
            r2_recall: r2.recall,
            r2_precision: r2.precision,
            r2_f1: r2.f1,
        });
    }

    let n = rows.len() as f64;
    let mean = |f: fn(&Row) -> f64| rows.iter().map(f).sum::<f64>() / n;
    let m_r1 = mean(|r| r.r1_recall);
    let m_r2 = mean(|r| r.r2_recall);

    println!("embedding mode: {embedding_mode}  budget: {}", args.budget);
    println!(
        "{:<12} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "cluster", "R1-recall", "R1-prec", "R1-F1", "R2-recall", "R2-prec", "R2-F1"
    );
    for r in &rows {
        println!(
            "{:<12} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            r.cluster, r.r1_recall, r.r1_precision, r.r1_f1, r.r2_recall, r.r2_precision, r.r2_f1
        );
    }
    println!(
        "{:<12} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
        "mean",
        m_r1,
        mean(|r| r.r1_precision),
        mean(|r| r.r1_f1),
        m_r2,
        mean(|r| r.r2_precision),
        mean(|r| r.r2_f1)
    );

    if let Some(out) = &args.out {
        fs::create_dir_all(out)?;
        let mut csv = format!("# embedding_mode: {embedding_mode}\n");
        csv.push_str(
            "cluster,rouge1_recall,rouge1_precision,rouge1_f1,rouge2_recall,rouge2_precision,rouge2_f1\n",
        );
        for r in &rows {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.cluster, r.r1_recall, r.r1_precision, r.r1_f1, r.r2_recall, r.r2_precision, r.r2_f1
            ));
        }
        csv.push_str(&format!(
            "mean,{},{},{},{},{},{}\n",
            m_r1,
            mean(|r| r.r1_precision),
            mean(|r| r.r1_f1),
            m_r2,
            mean(|r| r.r2_precision),
            mean(|r| r.r2_f1)
        ));
        fs::write(out.join("report.csv"), csv)?;

        let mut manifest = RunManifest::new(
            "evaluate",
            args.seed,
            match embedding_mode.as_str() {
                "file-backed" => crate::corpus::EmbeddingMode::FileBacked,
                _ => crate::corpus::EmbeddingMode::WordAverage,
            },
            serde_json::json!({
                "budget": args.budget.to_string(),
                "stem": stem,
                "summaries": args.summaries.display().to_string(),
            }),
        );
        manifest.add_input(&args.corpus)?;
        manifest.write(out)?;
    }

    Ok(ExitCode::SUCCESS)
}
