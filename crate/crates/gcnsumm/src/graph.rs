//! Sentence semantic relation graphs: one weighted adjacency matrix per
//! cluster, built by one of six methods and pruned by a similarity
//! threshold. Edge weights are static; they never change during training.

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::{Cluster, CorpusError, Sentence, SentenceEmbeddingProvider, WordEmbeddingTable};
use crate::nn::{cosine, Matrix};

pub const DAMPING: f64 = 0.85;
pub const POWER_TOL: f64 = 1e-6;
pub const POWER_MAX_ITERS: usize = 100;
/// Classic LexRank cutoff applied to the tf-idf base graph.
pub const LEXRANK_BASE_THRESHOLD: f64 = 0.1;

const ADG_ALPHA: f64 = 1.0;
const ADG_BETA: f64 = 0.5;
const ADG_GAMMA: f64 = 0.5;
const ADG_SHARED_CAP: usize = 3;

/// Discourse cue words: an edge target starting with one of these is more
/// plausible as a follow-on sentence.
const CUE_WORDS: &[&str] = &["also", "but", "however", "moreover", "then", "thus"];

const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "been", "being", "but", "by", "can", "did", "do",
    "does", "for", "from", "had", "has", "have", "he", "her", "his", "i", "if", "in", "is", "it",
    "its", "just", "no", "not", "of", "on", "or", "she", "so", "than", "that", "the", "their",
    "them", "then", "these", "they", "this", "those", "to", "too", "very", "was", "we", "were",
    "will", "with", "you",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphMethod {
    Cosine,
    Tfidf,
    Textrank,
    Lexrank,
    Adg,
    Padg,
}

impl GraphMethod {
    pub const ALL: [GraphMethod; 6] = [
        GraphMethod::Cosine,
        GraphMethod::Tfidf,
        GraphMethod::Textrank,
        GraphMethod::Lexrank,
        GraphMethod::Adg,
        GraphMethod::Padg,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            GraphMethod::Cosine => "cosine",
            GraphMethod::Tfidf => "tfidf",
            GraphMethod::Textrank => "textrank",
            GraphMethod::Lexrank => "lexrank",
            GraphMethod::Adg => "adg",
            GraphMethod::Padg => "padg",
        }
    }
}

impl std::fmt::Display for GraphMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl std::str::FromStr for GraphMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GraphMethod::ALL
            .iter()
            .find(|m| m.name() == s)
            .copied()
            .ok_or_else(|| format!("unknown graph method {s:?}"))
    }
}

/// Weighted adjacency over a cluster's sentences, in flattened cluster
/// order. The diagonal stays zero until self-loops are injected for the GCN.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    pub node_ids: Vec<String>,
    pub weights: Matrix,
    pub method: GraphMethod,
    pub threshold: f64,
}

impl SimilarityGraph {
    fn new(cluster: &Cluster, weights: Matrix, method: GraphMethod) -> Self {
        let node_ids = cluster.sentences().map(|s| s.id.clone()).collect();
        SimilarityGraph {
            node_ids,
            weights,
            method,
            threshold: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }

    /// Removes every edge whose weight does not exceed `t`.
    pub fn prune(&self, t: f64) -> SimilarityGraph {
        assert!((0.0..1.0).contains(&t), "threshold must be in [0, 1)");
        let mut out = self.clone();
        for w in &mut out.weights.data {
            if *w <= t {
                *w = 0.0;
            }
        }
        out.threshold = t;
        out
    }

    /// Number of directed nonzero off-diagonal entries.
    pub fn edge_count(&self) -> usize {
        let n = self.len();
        let mut count = 0;
        for u in 0..n {
            for v in 0..n {
                if u != v && self.weights.get(u, v) > 0.0 {
                    count += 1;
                }
            }
        }
        count
    }

    /// Adjacency with self-connections: A + I.
    pub fn self_loop_adjacency(&self) -> Matrix {
        let n = self.len();
        let mut a = self.weights.clone();
        for i in 0..n {
            let w = a.get(i, i);
            a.set(i, i, w + 1.0);
        }
        a
    }

    /// Edge-list dump, one `u_id v_id weight` line per nonzero entry.
    pub fn write_edge_list(&self, out: &mut impl Write) -> std::io::Result<()> {
        let n = self.len();
        for u in 0..n {
            for v in 0..n {
                let w = self.weights.get(u, v);
                if u != v && w > 0.0 {
                    writeln!(out, "{} {} {}", self.node_ids[u], self.node_ids[v], w)?;
                }
            }
        }
        Ok(())
    }
}

/// Cosine similarity of pre-trained sentence embeddings; negative values
/// clamp to zero so the adjacency stays non-negative.
pub fn build_cosine(
    cluster: &Cluster,
    provider: &SentenceEmbeddingProvider,
    words: &WordEmbeddingTable,
) -> Result<SimilarityGraph, CorpusError> {
    let embeddings: Result<Vec<Vec<f64>>, CorpusError> = cluster
        .sentences()
        .map(|s| provider.embedding(s, words))
        .collect();
    let embeddings = embeddings?;
    let n = embeddings.len();
    let mut weights = Matrix::zeros(n, n);
    for u in 0..n {
        for v in (u + 1)..n {
            let w = cosine(&embeddings[u], &embeddings[v]).max(0.0);
            weights.set(u, v, w);
            weights.set(v, u, w);
        }
    }
    Ok(SimilarityGraph::new(cluster, weights, GraphMethod::Cosine))
}

/// tf-idf vectors per sentence over the cluster vocabulary: tf is the raw
/// in-sentence count, idf = ln(n_sentences / df) with document frequency
/// counted over the cluster's sentences.
fn tfidf_vectors(cluster: &Cluster) -> Vec<Vec<f64>> {
    let sentences: Vec<&Sentence> = cluster.sentences().collect();
    let n = sentences.len();
    let vocab: BTreeSet<&str> = sentences
        .iter()
        .flat_map(|s| s.tokens.iter().map(String::as_str))
        .collect();
    let vocab: Vec<&str> = vocab.into_iter().collect();

    let mut df = vec![0usize; vocab.len()];
    for (j, term) in vocab.iter().enumerate() {
        df[j] = sentences
            .iter()
            .filter(|s| s.tokens.iter().any(|t| t == term))
            .count();
    }
    let idf: Vec<f64> = df.iter().map(|&d| (n as f64 / d as f64).ln()).collect();

    sentences
        .iter()
        .map(|s| {
            vocab
                .iter()
                .enumerate()
                .map(|(j, term)| {
                    let tf = s.tokens.iter().filter(|t| t.as_str() == *term).count();
                    tf as f64 * idf[j]
                })
                .collect()
        })
        .collect()
}

fn tfidf_cosine_matrix(cluster: &Cluster) -> Matrix {
    let vectors = tfidf_vectors(cluster);
    let n = vectors.len();
    let mut weights = Matrix::zeros(n, n);
    for u in 0..n {
        for v in (u + 1)..n {
            let w = cosine(&vectors[u], &vectors[v]).max(0.0);
            weights.set(u, v, w);
            weights.set(v, u, w);
        }
    }
    weights
}

pub fn build_tfidf(cluster: &Cluster) -> SimilarityGraph {
    SimilarityGraph::new(cluster, tfidf_cosine_matrix(cluster), GraphMethod::Tfidf)
}

/// Damped power iteration over a non-negative weight matrix, normalizing
/// each node's outgoing mass. Nodes without outgoing weight contribute
/// nothing; their own rank comes from the damping term.
pub fn power_iterate(weights: &Matrix, damping: f64, tol: f64, max_iters: usize) -> Vec<f64> {
    let n = weights.rows;
    if n == 0 {
        return Vec::new();
    }
    let out_sums: Vec<f64> = (0..n).map(|j| weights.row(j).iter().sum()).collect();
    let mut ranks = vec![1.0 / n as f64; n];
    for _ in 0..max_iters {
        let mut next = vec![(1.0 - damping) / n as f64; n];
        for j in 0..n {
            if out_sums[j] <= 0.0 {
                continue;
            }
            let share = damping * ranks[j] / out_sums[j];
            for i in 0..n {
                next[i] += share * weights.get(j, i);
            }
        }
        let diff = ranks
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        ranks = next;
        if diff < tol {
            break;
        }
    }
    ranks
}

/// Word-overlap graph with PageRank-style node ranks folded back into the
/// edges: refined(u,v) = overlap(u,v) * (rank_u + rank_v) / 2, rescaled to
/// [0, 1] by the matrix maximum.
pub fn build_textrank(cluster: &Cluster) -> SimilarityGraph {
    let sentences: Vec<&Sentence> = cluster.sentences().collect();
    let n = sentences.len();
    let token_sets: Vec<BTreeSet<&str>> = sentences
        .iter()
        .map(|s| s.tokens.iter().map(String::as_str).collect())
        .collect();

    // length-1 sentences use ln 2 so the denominator stays positive
    let log_len = |s: &Sentence| (s.tokens.len().max(2) as f64).ln();

    let mut overlap = Matrix::zeros(n, n);
    for u in 0..n {
        for v in (u + 1)..n {
            let shared = token_sets[u].intersection(&token_sets[v]).count();
            if shared > 0 {
                let w = shared as f64 / (log_len(sentences[u]) + log_len(sentences[v]));
                overlap.set(u, v, w);
                overlap.set(v, u, w);
            }
        }
    }

    let ranks = power_iterate(&overlap, DAMPING, POWER_TOL, POWER_MAX_ITERS);
    let mut weights = Matrix::zeros(n, n);
    for u in 0..n {
        for v in 0..n {
            if u != v {
                weights.set(u, v, overlap.get(u, v) * (ranks[u] + ranks[v]) / 2.0);
            }
        }
    }
    rescale_by_max(&mut weights);
    SimilarityGraph::new(cluster, weights, GraphMethod::Textrank)
}

/// Damped row-stochastic transition matrix over a non-negative base graph.
/// Rows without outgoing weight become uniform.
pub fn lexrank_transition(base: &Matrix, damping: f64) -> Matrix {
    let n = base.rows;
    let mut p = Matrix::zeros(n, n);
    for i in 0..n {
        let row_sum: f64 = base.row(i).iter().sum();
        for j in 0..n {
            let v = if row_sum > 0.0 {
                (1.0 - damping) / n as f64 + damping * base.get(i, j) / row_sum
            } else {
                1.0 / n as f64
            };
            p.set(i, j, v);
        }
    }
    p
}

/// Stationary distribution of a row-stochastic matrix by left power
/// iteration: p' = p P.
pub fn stationary_distribution(transition: &Matrix, tol: f64, max_iters: usize) -> Vec<f64> {
    let n = transition.rows;
    if n == 0 {
        return Vec::new();
    }
    let mut p = vec![1.0 / n as f64; n];
    for _ in 0..max_iters {
        let mut next = vec![0.0; n];
        for i in 0..n {
            let pi = p[i];
            if pi == 0.0 {
                continue;
            }
            for j in 0..n {
                next[j] += pi * transition.get(i, j);
            }
        }
        let diff = p
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        p = next;
        if diff < tol {
            break;
        }
    }
    p
}

/// Eigenvector-centrality edges: tf-idf cosine base graph cut at 0.1,
/// stationary distribution of its damped transition matrix, and edge
/// weights base(u,v) * (p_u + p_v) / 2 rescaled by the maximum.
pub fn build_lexrank(cluster: &Cluster) -> SimilarityGraph {
    let mut base = tfidf_cosine_matrix(cluster);
    for w in &mut base.data {
        if *w <= LEXRANK_BASE_THRESHOLD {
            *w = 0.0;
        }
    }
    let transition = lexrank_transition(&base, DAMPING);
    let p = stationary_distribution(&transition, POWER_TOL, POWER_MAX_ITERS);

    let n = base.rows;
    let mut weights = Matrix::zeros(n, n);
    for u in 0..n {
        for v in 0..n {
            if u != v {
                weights.set(u, v, base.get(u, v) * (p[u] + p[v]) / 2.0);
            }
        }
    }
    rescale_by_max(&mut weights);
    SimilarityGraph::new(cluster, weights, GraphMethod::Lexrank)
}

fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

/// Heuristic stand-in for noun-likeness: a content word is at least three
/// characters, contains a letter, and is not a stopword.
fn is_content_token(token: &str) -> bool {
    token.len() >= 3 && token.chars().any(|c| c.is_alphabetic()) && !is_stopword(token)
}

/// Directed coherence weights before any rescaling:
/// alpha for "v immediately follows u in the same document", beta scaled by
/// the capped shared content-word count, gamma when v opens with a
/// discourse cue word.
pub fn adg_raw_weights(cluster: &Cluster) -> Matrix {
    let sentences: Vec<&Sentence> = cluster.sentences().collect();
    let n = sentences.len();
    let content: Vec<BTreeSet<&str>> = sentences
        .iter()
        .map(|s| {
            s.tokens
                .iter()
                .map(String::as_str)
                .filter(|t| is_content_token(t))
                .collect()
        })
        .collect();
    let cue: Vec<bool> = sentences
        .iter()
        .map(|s| CUE_WORDS.contains(&s.tokens[0].as_str()))
        .collect();

    let mut w = Matrix::zeros(n, n);
    for u in 0..n {
        for v in 0..n {
            if u == v {
                continue;
            }
            let (su, sv) = (sentences[u], sentences[v]);
            let adjacent =
                su.doc_index == sv.doc_index && sv.sent_index == su.sent_index + 1;
            let shared = content[u].intersection(&content[v]).count().min(ADG_SHARED_CAP);
            let mut weight = ADG_BETA * shared as f64 / ADG_SHARED_CAP as f64;
            if adjacent {
                weight += ADG_ALPHA;
            }
            if cue[v] {
                weight += ADG_GAMMA;
            }
            w.set(u, v, weight);
        }
    }
    w
}

fn rescale_by_max(weights: &mut Matrix) {
    let max = weights.data.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        weights.scale_assign(1.0 / max);
    }
}

fn symmetrize(weights: &Matrix) -> Matrix {
    let wt = weights.transpose();
    weights.add(&wt).scale(0.5)
}

/// Approximate discourse graph, symmetrized for the undirected adjacency.
pub fn build_adg(cluster: &Cluster) -> SimilarityGraph {
    let mut w = adg_raw_weights(cluster);
    rescale_by_max(&mut w);
    let sym = symmetrize(&w);
    SimilarityGraph::new(cluster, sym, GraphMethod::Adg)
}

/// ADG with each column divided by its incoming-edge sum plus one, then
/// symmetrized.
pub fn build_padg(cluster: &Cluster) -> SimilarityGraph {
    let mut w = adg_raw_weights(cluster);
    rescale_by_max(&mut w);
    let n = w.rows;
    for v in 0..n {
        let incoming: f64 = (0..n).map(|u| w.get(u, v)).sum();
        let denom = incoming + 1.0;
        for u in 0..n {
            let x = w.get(u, v);
            w.set(u, v, x / denom);
        }
    }
    let sym = symmetrize(&w);
    SimilarityGraph::new(cluster, sym, GraphMethod::Padg)
}

/// Builds a graph by method and prunes it at `threshold`.
pub fn build_graph(
    cluster: &Cluster,
    method: GraphMethod,
    threshold: f64,
    provider: &SentenceEmbeddingProvider,
    words: &WordEmbeddingTable,
) -> Result<SimilarityGraph, CorpusError> {
    let graph = match method {
        GraphMethod::Cosine => build_cosine(cluster, provider, words)?,
        GraphMethod::Tfidf => build_tfidf(cluster),
        GraphMethod::Textrank => build_textrank(cluster),
        GraphMethod::Lexrank => build_lexrank(cluster),
        GraphMethod::Adg => build_adg(cluster),
        GraphMethod::Padg => build_padg(cluster),
    };
    Ok(graph.prune(threshold))
}
