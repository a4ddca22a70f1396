//! End-to-end training over clusters: Adam with gradient clipping and L2,
//! one cluster per step, seeded shuffling, early stopping on the validation
//! metric, and epoch-stamped checkpoints of every improvement.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Cluster, CorpusError, SentenceEmbeddingProvider, WordEmbeddingTable};
use crate::graph::{build_graph, GraphMethod};
use crate::model::{
    cross_entropy, AdjacencyMode, ClusterBatch, ModelConfig, ModelError, ModelVariant,
    GcnSumModel,
};
use crate::nn::{adam_step, clip_global_norm, AdamState, Checkpoint, NnError};
use crate::rouge::{compute_targets, rouge_n, RougeError};
use crate::summarizer::{generate, SummaryBudget, SummaryError};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyTrain,
    #[error("validation set is empty")]
    EmptyValid,
    #[error("non-finite loss on cluster {0:?}")]
    NonFiniteLoss(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Rouge(#[from] RougeError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Summary(#[from] SummaryError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EarlyMetric {
    /// Mean validation cross-entropy (the default).
    Loss,
    /// Mean validation ROUGE-1 recall of generated 100-word summaries.
    Rouge1,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Clusters per optimizer step.
    pub batch_size: usize,
    pub dropout: f64,
    pub clip_norm: f64,
    pub weight_decay: f64,
    /// Consecutive non-improving epochs tolerated before stopping.
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
    pub graph_method: GraphMethod,
    pub t_sim_g: f64,
    pub variant: ModelVariant,
    pub gcn_hidden: usize,
    /// Apply Porter stemming when computing training targets.
    pub stem_targets: bool,
    pub feature_norm: bool,
    pub adjacency: AdjacencyMode,
    pub early_metric: EarlyMetric,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.0075,
            batch_size: 1,
            dropout: 0.2,
            clip_norm: 1.0,
            weight_decay: 1e-12,
            patience: 10,
            max_epochs: 100,
            seed: 42,
            graph_method: GraphMethod::Cosine,
            t_sim_g: 0.5,
            variant: ModelVariant::Full,
            gcn_hidden: 128,
            stem_targets: true,
            feature_norm: true,
            adjacency: AdjacencyMode::Raw,
            early_metric: EarlyMetric::Loss,
        }
    }
}

impl TrainConfig {
    pub fn model_config(&self, embed_dim: usize) -> ModelConfig {
        ModelConfig {
            embed_dim,
            gcn_hidden: self.gcn_hidden,
            variant: self.variant,
            dropout: self.dropout,
            feature_norm: self.feature_norm,
            adjacency: self.adjacency,
            max_encoder_tokens: 100,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_loss: f64,
    pub valid_rouge1: Option<f64>,
    pub is_best: bool,
}

#[derive(Debug, Clone, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
}

impl TrainHistory {
    /// `epoch,train_loss,valid_loss,best_flag` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,valid_loss,best_flag\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{}\n",
                e.epoch,
                e.train_loss,
                e.valid_loss,
                if e.is_best { 1 } else { 0 }
            ));
        }
        out
    }
}

pub struct TrainOutcome {
    /// The best-validation model, never the last epoch's.
    pub model: GcnSumModel,
    pub history: TrainHistory,
    pub best_epoch: usize,
    pub best_checkpoint: Checkpoint,
}

/// Prepares one cluster for training or evaluation: builds and prunes its
/// graph, computes targets when references exist, and assembles the batch.
pub fn prepare_batch(
    cluster: &Cluster,
    cfg: &TrainConfig,
    model_config: &ModelConfig,
    words: &WordEmbeddingTable,
    provider: &SentenceEmbeddingProvider,
    with_targets: bool,
) -> Result<ClusterBatch, TrainError> {
    let graph = build_graph(cluster, cfg.graph_method, cfg.t_sim_g, provider, words)?;
    let targets = if with_targets {
        Some(compute_targets(cluster, cfg.stem_targets)?)
    } else {
        None
    };
    Ok(ClusterBatch::build(
        cluster,
        words,
        provider,
        &graph,
        model_config,
        targets,
    )?)
}

fn mean_valid_loss(model: &GcnSumModel, batches: &[ClusterBatch]) -> Result<f64, TrainError> {
    let mut total = 0.0;
    for batch in batches {
        let probs = model.predict(batch)?;
        let targets = batch.targets.as_ref().expect("validation batch has targets");
        total += cross_entropy(&probs, targets.probs())?;
    }
    Ok(total / batches.len() as f64)
}

fn mean_valid_rouge1(
    model: &GcnSumModel,
    clusters: &[Cluster],
    batches: &[ClusterBatch],
    words: &WordEmbeddingTable,
    provider: &SentenceEmbeddingProvider,
    stem: bool,
) -> Result<f64, TrainError> {
    let mut total = 0.0;
    for (cluster, batch) in clusters.iter().zip(batches) {
        let scores = model.predict(batch)?;
        let summary = generate(
            cluster,
            &scores,
            provider,
            words,
            SummaryBudget::standard_words(),
            crate::summarizer::DEFAULT_REDUNDANCY_THRESHOLD,
            crate::summarizer::DEFAULT_MIN_WORDS,
        )?;
        let candidate = crate::corpus::tokenize(&summary.text);
        let refs = cluster.tokenized_references();
        total += rouge_n(&candidate, &refs, 1, stem)?.recall;
    }
    Ok(total / clusters.len() as f64)
}

pub fn train(
    train_clusters: &[Cluster],
    valid_clusters: &[Cluster],
    cfg: &TrainConfig,
    words: &WordEmbeddingTable,
    provider: &SentenceEmbeddingProvider,
    checkpoint_dir: Option<&Path>,
) -> Result<TrainOutcome, TrainError> {
    if train_clusters.is_empty() {
        return Err(TrainError::EmptyTrain);
    }
    if valid_clusters.is_empty() {
        return Err(TrainError::EmptyValid);
    }

    let model_config = cfg.model_config(words.dimension);
    let train_batches: Vec<ClusterBatch> = train_clusters
        .iter()
        .map(|c| prepare_batch(c, cfg, &model_config, words, provider, true))
        .collect::<Result<_, _>>()?;
    let valid_batches: Vec<ClusterBatch> = valid_clusters
        .iter()
        .map(|c| prepare_batch(c, cfg, &model_config, words, provider, true))
        .collect::<Result<_, _>>()?;

    let mut model = GcnSumModel::new(model_config, cfg.seed);
    let mut adam = AdamState::new(cfg.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut history = TrainHistory::default();
    let mut best_metric = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut best_checkpoint: Option<Checkpoint> = None;
    let mut bad_epochs = 0usize;

    if let Some(dir) = checkpoint_dir {
        fs::create_dir_all(dir)
            .map_err(|e| NnError::Io(dir.display().to_string(), e))?;
    }

    for epoch in 1..=cfg.max_epochs {
        let mut order: Vec<usize> = (0..train_batches.len()).collect();
        order.shuffle(&mut rng);

        let mut train_loss_sum = 0.0;
        let mut since_step = 0usize;
        model.zero_grads();
        for &idx in &order {
            let batch = &train_batches[idx];
            let targets = batch.targets.as_ref().expect("training batch has targets");

            let (probs, cache) = model.forward_train(batch, &mut rng)?;
            let loss = cross_entropy(&probs, targets.probs())?;
            if !loss.is_finite() {
                return Err(TrainError::NonFiniteLoss(batch.cluster_id.clone()));
            }
            train_loss_sum += loss;
            model.backward(batch, &cache, targets)?;
            since_step += 1;

            if since_step == cfg.batch_size {
                let mut params = model.params_mut();
                clip_global_norm(&mut params, cfg.clip_norm);
                adam_step(&mut params, &mut adam, cfg.weight_decay);
                model.zero_grads();
                since_step = 0;
            }
        }
        if since_step > 0 {
            let mut params = model.params_mut();
            clip_global_norm(&mut params, cfg.clip_norm);
            adam_step(&mut params, &mut adam, cfg.weight_decay);
            model.zero_grads();
        }
        let train_loss = train_loss_sum / train_batches.len() as f64;

        let valid_loss = mean_valid_loss(&model, &valid_batches)?;
        let valid_rouge1 = match cfg.early_metric {
            EarlyMetric::Loss => None,
            EarlyMetric::Rouge1 => Some(mean_valid_rouge1(
                &model,
                valid_clusters,
                &valid_batches,
                words,
                provider,
                cfg.stem_targets,
            )?),
        };
        let metric = match cfg.early_metric {
            EarlyMetric::Loss => valid_loss,
            EarlyMetric::Rouge1 => -valid_rouge1.unwrap(),
        };

        let improved = metric < best_metric;
        if improved {
            best_metric = metric;
            best_epoch = epoch;
            let mut ckpt = model.to_checkpoint(Some(&adam));
            // record the graph construction settings so inference rebuilds
            // the same adjacency
            ckpt.extra = serde_json::json!({
                "graph_method": cfg.graph_method,
                "t_sim_g": cfg.t_sim_g,
                "stem_targets": cfg.stem_targets,
            });
            if let Some(dir) = checkpoint_dir {
                let path = dir.join(format!("checkpoint-epoch-{epoch:04}.json"));
                ckpt.save(&path)?;
            }
            best_checkpoint = Some(ckpt);
            bad_epochs = 0;
        } else {
            bad_epochs += 1;
        }

        history.epochs.push(EpochStats {
            epoch,
            train_loss,
            valid_loss,
            valid_rouge1,
            is_best: improved,
        });

        if bad_epochs >= cfg.patience {
            break;
        }
    }

    let best_checkpoint = best_checkpoint.expect("at least one epoch ran");
    if let Some(dir) = checkpoint_dir {
        let manifest = serde_json::json!({
            "best_epoch": best_epoch,
            "file": format!("checkpoint-epoch-{best_epoch:04}.json"),
        });
        fs::write(dir.join("best.json"), manifest.to_string())
            .map_err(|e| NnError::Io(dir.display().to_string(), e))?;
    }

    let (model, _) = GcnSumModel::from_checkpoint(&best_checkpoint)?;
    Ok(TrainOutcome {
        model,
        history,
        best_epoch,
        best_checkpoint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::load_corpus_str;

    fn words() -> WordEmbeddingTable {
        let mut t = WordEmbeddingTable::new(2);
        for (i, w) in [
            "storm", "flood", "coast", "alert", "crews", "power", "homes", "roads", "rain",
            "wind", "calm", "sun",
        ]
        .iter()
        .enumerate()
        {
            let a = (i as f64 * 0.77).sin() * 0.6;
            let b = (i as f64 * 1.31).cos() * 0.6;
            t.insert(w, vec![a, b]);
        }
        t
    }

    fn tiny_cluster() -> Cluster {
        load_corpus_str(
            r#"{"id":"c0","documents":[["storm flood coast alert crews power homes roads rain.","calm sun coast homes."],["wind rain flood alert crews storm power roads homes."]],"references":["storm flood coast alert crews power homes roads rain."]}"#,
        )
        .unwrap()
        .remove(0)
    }

    fn quick_cfg() -> TrainConfig {
        TrainConfig {
            gcn_hidden: 3,
            dropout: 0.0,
            t_sim_g: 0.0,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn empty_sets_are_rejected() {
        let cfg = quick_cfg();
        let w = words();
        let provider = SentenceEmbeddingProvider::word_average(&w);
        assert!(matches!(
            train(&[], &[tiny_cluster()], &cfg, &w, &provider, None),
            Err(TrainError::EmptyTrain)
        ));
        assert!(matches!(
            train(&[tiny_cluster()], &[], &cfg, &w, &provider, None),
            Err(TrainError::EmptyValid)
        ));
    }

    #[test]
    fn overfit_single_cluster_approaches_target_entropy() {
        let cluster = tiny_cluster();
        let mut cfg = quick_cfg();
        cfg.max_epochs = 200;
        cfg.patience = 200;
        let w = words();
        let provider = SentenceEmbeddingProvider::word_average(&w);
        let train_set = vec![cluster.clone()];
        let outcome = train(&train_set, &train_set, &cfg, &w, &provider, None).unwrap();

        let entropy = compute_targets(&cluster, cfg.stem_targets).unwrap().entropy();
        let best = outcome
            .history
            .epochs
            .iter()
            .map(|e| e.valid_loss)
            .fold(f64::INFINITY, f64::min);
        assert!(
            best - entropy < 1e-3,
            "best loss {best} vs entropy {entropy}"
        );
    }

    #[test]
    fn patience_one_stops_after_two_epochs_when_loss_worsens() {
        // learning rate large enough to overshoot immediately on a tiny
        // problem is hard to force; instead drive the rule directly with
        // patience 1 and max_epochs high, then check the stopping bound:
        // the run always ends within patience+1 epochs of the best epoch.
        let cluster = tiny_cluster();
        let mut cfg = quick_cfg();
        cfg.patience = 1;
        cfg.max_epochs = 50;
        cfg.learning_rate = 2.0; // overshoots badly on purpose
        let w = words();
        let provider = SentenceEmbeddingProvider::word_average(&w);
        let train_set = vec![cluster.clone()];
        let outcome = train(&train_set, &train_set, &cfg, &w, &provider, None).unwrap();
        let ran = outcome.history.epochs.len();
        assert!(
            ran <= outcome.best_epoch + 1,
            "ran {ran} epochs, best at {}",
            outcome.best_epoch
        );
    }

    #[test]
    fn identical_seeds_reproduce_bitwise() {
        let cluster = tiny_cluster();
        let mut cfg = quick_cfg();
        cfg.max_epochs = 5;
        cfg.patience = 10;
        cfg.dropout = 0.2;
        let w = words();
        let provider = SentenceEmbeddingProvider::word_average(&w);
        let train_set = vec![cluster.clone()];

        let a = train(&train_set, &train_set, &cfg, &w, &provider, None).unwrap();
        let b = train(&train_set, &train_set, &cfg, &w, &provider, None).unwrap();
        assert_eq!(a.history.to_csv(), b.history.to_csv());
        assert_eq!(a.best_checkpoint.to_json(), b.best_checkpoint.to_json());
    }

    #[test]
    fn returned_model_is_best_not_last() {
        let cluster = tiny_cluster();
        let mut cfg = quick_cfg();
        cfg.max_epochs = 30;
        cfg.patience = 5;
        cfg.learning_rate = 1.0; // enough to oscillate
        let w = words();
        let provider = SentenceEmbeddingProvider::word_average(&w);
        let train_set = vec![cluster.clone()];
        let outcome = train(&train_set, &train_set, &cfg, &w, &provider, None).unwrap();

        let model_config = cfg.model_config(w.dimension);
        let batch = prepare_batch(&cluster, &cfg, &model_config, &w, &provider, true).unwrap();
        let loss = cross_entropy(
            &outcome.model.predict(&batch).unwrap(),
            batch.targets.as_ref().unwrap().probs(),
        )
        .unwrap();
        let best_recorded = outcome
            .history
            .epochs
            .iter()
            .find(|e| e.epoch == outcome.best_epoch)
            .unwrap()
            .valid_loss;
        assert!((loss - best_recorded).abs() < 1e-12);
    }

    #[test]
    fn validation_does_not_mutate_parameters() {
        let cluster = tiny_cluster();
        let cfg = quick_cfg();
        let w = words();
        let provider = SentenceEmbeddingProvider::word_average(&w);
        let model_config = cfg.model_config(w.dimension);
        let batch = prepare_batch(&cluster, &cfg, &model_config, &w, &provider, true).unwrap();

        let model = GcnSumModel::new(model_config, 7);
        let before = model.to_checkpoint(None).to_json();
        for _ in 0..3 {
            mean_valid_loss(&model, std::slice::from_ref(&batch)).unwrap();
        }
        let after = model.to_checkpoint(None).to_json();
        assert_eq!(before, after);
    }

    #[test]
    fn train_loss_monotone_after_warmup_smoothed() {
        let cluster = tiny_cluster();
        let mut cfg = quick_cfg();
        cfg.max_epochs = 40;
        cfg.patience = 40;
        let w = words();
        let provider = SentenceEmbeddingProvider::word_average(&w);
        let train_set = vec![cluster.clone()];
        let outcome = train(&train_set, &train_set, &cfg, &w, &provider, None).unwrap();

        let losses: Vec<f64> = outcome.history.epochs.iter().map(|e| e.train_loss).collect();
        let window = 3;
        let smoothed: Vec<f64> = (0..=losses.len() - window)
            .map(|i| losses[i..i + window].iter().sum::<f64>() / window as f64)
            .collect();
        for i in 5..smoothed.len() - 1 {
            assert!(
                smoothed[i + 1] <= smoothed[i] + 1e-9,
                "smoothed loss rose at {i}: {} -> {}",
                smoothed[i],
                smoothed[i + 1]
            );
        }
    }

    #[test]
    fn checkpoints_written_with_best_manifest() {
        let cluster = tiny_cluster();
        let mut cfg = quick_cfg();
        cfg.max_epochs = 3;
        let w = words();
        let provider = SentenceEmbeddingProvider::word_average(&w);
        let dir = tempfile::tempdir().unwrap();
        let train_set = vec![cluster.clone()];
        let outcome = train(
            &train_set,
            &train_set,
            &cfg,
            &w,
            &provider,
            Some(dir.path()),
        )
        .unwrap();

        let best: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("best.json")).unwrap())
                .unwrap();
        assert_eq!(best["best_epoch"], outcome.best_epoch);
        let file = best["file"].as_str().unwrap();
        assert!(dir.path().join(file).exists());
    }

    #[test]
    fn rouge_early_metric_runs() {
        let cluster = tiny_cluster();
        let mut cfg = quick_cfg();
        cfg.max_epochs = 2;
        cfg.early_metric = EarlyMetric::Rouge1;
        let w = words();
        let provider = SentenceEmbeddingProvider::word_average(&w);
        let train_set = vec![cluster.clone()];
        let outcome = train(&train_set, &train_set, &cfg, &w, &provider, None).unwrap();
        assert!(outcome.history.epochs[0].valid_rouge1.is_some());
    }
}
