//! Data model for document clusters plus loaders for corpora, word-embedding
//! tables, and precomputed sentence embeddings.
//!
//! Corpus files are JSON Lines, one cluster per line:
//!
//! ```text
//! {"id": "c1", "documents": [["First sentence.", "Second."], ["Other doc."]], "references": ["..."]}
//! ```
//!
//! Sentence ids are synthesized as `<cluster-id>:<doc-index>:<sent-index>`.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error on {0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate cluster id {id:?}")]
    DuplicateClusterId { line: usize, id: String },
    #[error("cluster {cluster}: document {doc} sentence {sent} has no tokens")]
    EmptySentence {
        cluster: String,
        doc: usize,
        sent: usize,
    },
    #[error("cluster {cluster}: {message}")]
    InvalidCluster { cluster: String, message: String },
    #[error("embedding file {path}, line {line}: {message}")]
    BadEmbeddingLine {
        path: String,
        line: usize,
        message: String,
    },
    #[error("no sentence embedding stored for id {0:?}")]
    MissingSentenceEmbedding(String),
}

/// Lowercases and splits on whitespace and punctuation. Interior periods are
/// kept (so abbreviations like "u.s." survive as "u.s"), boundary periods are
/// stripped, and punctuation-only fragments are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| c.is_whitespace() || (!c.is_alphanumeric() && c != '.'))
        .map(|piece| piece.trim_matches('.'))
        .filter(|piece| !piece.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    /// Unique within the cluster: `<cluster-id>:<doc-index>:<sent-index>`.
    pub id: String,
    pub doc_index: usize,
    pub sent_index: usize,
    /// Original text, kept verbatim for byte-accurate output.
    pub text: String,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub sentences: Vec<Sentence>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub id: String,
    pub documents: Vec<Document>,
    pub references: Vec<String>,
}

impl Cluster {
    /// Builds a cluster from raw sentence texts, tokenizing each sentence and
    /// validating the structural invariants.
    pub fn from_texts(
        id: &str,
        documents: &[Vec<String>],
        references: &[String],
    ) -> Result<Self, CorpusError> {
        if documents.is_empty() {
            return Err(CorpusError::InvalidCluster {
                cluster: id.to_string(),
                message: "cluster has no documents".to_string(),
            });
        }
        let mut docs = Vec::with_capacity(documents.len());
        for (di, doc) in documents.iter().enumerate() {
            if doc.is_empty() {
                return Err(CorpusError::InvalidCluster {
                    cluster: id.to_string(),
                    message: format!("document {di} has no sentences"),
                });
            }
            let mut sentences = Vec::with_capacity(doc.len());
            for (si, text) in doc.iter().enumerate() {
                let tokens = tokenize(text);
                if tokens.is_empty() {
                    return Err(CorpusError::EmptySentence {
                        cluster: id.to_string(),
                        doc: di,
                        sent: si,
                    });
                }
                sentences.push(Sentence {
                    id: format!("{id}:{di}:{si}"),
                    doc_index: di,
                    sent_index: si,
                    text: text.clone(),
                    tokens,
                });
            }
            docs.push(Document { sentences });
        }
        Ok(Cluster {
            id: id.to_string(),
            documents: docs,
            references: references.to_vec(),
        })
    }

    /// All sentences flattened in document order. This ordering defines the
    /// node order of the similarity graph and of every score vector.
    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> {
        self.documents.iter().flat_map(|d| d.sentences.iter())
    }

    pub fn sentence_count(&self) -> usize {
        self.documents.iter().map(|d| d.sentences.len()).sum()
    }

    pub fn tokenized_references(&self) -> Vec<Vec<String>> {
        self.references.iter().map(|r| tokenize(r)).collect()
    }
}

/// On-disk shape of one corpus line.
#[derive(Debug, Serialize, Deserialize)]
struct RawCluster {
    id: String,
    documents: Vec<Vec<String>>,
    #[serde(default)]
    references: Vec<String>,
}

pub fn load_corpus(path: &Path) -> Result<Vec<Cluster>, CorpusError> {
    let text =
        fs::read_to_string(path).map_err(|e| CorpusError::Io(path.display().to_string(), e))?;
    load_corpus_str(&text)
}

pub fn load_corpus_str(text: &str) -> Result<Vec<Cluster>, CorpusError> {
    let mut clusters = Vec::new();
    let mut seen_ids: HashMap<String, usize> = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawCluster = serde_json::from_str(line).map_err(|e| CorpusError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if seen_ids.insert(raw.id.clone(), line_no).is_some() {
            return Err(CorpusError::DuplicateClusterId {
                line: line_no,
                id: raw.id,
            });
        }
        clusters.push(Cluster::from_texts(&raw.id, &raw.documents, &raw.references)?);
    }
    Ok(clusters)
}

pub fn save_corpus(clusters: &[Cluster], path: &Path) -> Result<(), CorpusError> {
    let mut out = Vec::new();
    for c in clusters {
        let raw = RawCluster {
            id: c.id.clone(),
            documents: c
                .documents
                .iter()
                .map(|d| d.sentences.iter().map(|s| s.text.clone()).collect())
                .collect(),
            references: c.references.clone(),
        };
        serde_json::to_writer(&mut out, &raw).expect("corpus serialization");
        out.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| CorpusError::Io(path.display().to_string(), e))?;
    f.write_all(&out)
        .map_err(|e| CorpusError::Io(path.display().to_string(), e))
}

/// Frozen table of word vectors in the usual text layout, one
/// `word v1 v2 ... vD` per line. Unknown words map to the zero vector.
#[derive(Debug, Clone)]
pub struct WordEmbeddingTable {
    pub dimension: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl WordEmbeddingTable {
    pub fn new(dimension: usize) -> Self {
        WordEmbeddingTable {
            dimension,
            vectors: HashMap::new(),
        }
    }

    pub fn insert(&mut self, word: &str, vector: Vec<f64>) {
        assert_eq!(vector.len(), self.dimension, "vector length mismatch");
        self.vectors.insert(word.to_string(), vector);
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text =
            fs::read_to_string(path).map_err(|e| CorpusError::Io(path.display().to_string(), e))?;
        Self::load_str(&text, path.display().to_string())
    }

    pub fn load_str(text: &str, origin: String) -> Result<Self, CorpusError> {
        let mut dimension = 0usize;
        let mut vectors = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let word = parts.next().ok_or_else(|| CorpusError::BadEmbeddingLine {
                path: origin.clone(),
                line: line_no,
                message: "empty line".to_string(),
            })?;
            let values: Result<Vec<f64>, _> = parts.map(str::parse::<f64>).collect();
            let values = values.map_err(|e| CorpusError::BadEmbeddingLine {
                path: origin.clone(),
                line: line_no,
                message: e.to_string(),
            })?;
            if values.is_empty() {
                return Err(CorpusError::BadEmbeddingLine {
                    path: origin.clone(),
                    line: line_no,
                    message: "no vector components".to_string(),
                });
            }
            if dimension == 0 {
                dimension = values.len();
            } else if values.len() != dimension {
                return Err(CorpusError::BadEmbeddingLine {
                    path: origin.clone(),
                    line: line_no,
                    message: format!("expected {dimension} components, found {}", values.len()),
                });
            }
            vectors.insert(word.to_string(), values);
        }
        if dimension == 0 {
            return Err(CorpusError::BadEmbeddingLine {
                path: origin,
                line: 0,
                message: "embedding file contains no vectors".to_string(),
            });
        }
        Ok(WordEmbeddingTable { dimension, vectors })
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(|v| v.as_slice())
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingMode {
    FileBacked,
    WordAverage,
}

impl std::fmt::Display for EmbeddingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EmbeddingMode::FileBacked => write!(f, "file-backed"),
            EmbeddingMode::WordAverage => write!(f, "word-average"),
        }
    }
}

/// Source of the pre-trained sentence embeddings used for graph edges and
/// summary redundancy checks. File-backed mode serves vectors from a
/// `<sentence-id> v1 ... vD` file and refuses to fall back silently;
/// word-average mode returns the mean of the sentence's word vectors.
#[derive(Debug, Clone)]
pub struct SentenceEmbeddingProvider {
    pub mode: EmbeddingMode,
    pub dimension: usize,
    store: HashMap<String, Vec<f64>>,
}

impl SentenceEmbeddingProvider {
    pub fn word_average(words: &WordEmbeddingTable) -> Self {
        SentenceEmbeddingProvider {
            mode: EmbeddingMode::WordAverage,
            dimension: words.dimension,
            store: HashMap::new(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, CorpusError> {
        let table = WordEmbeddingTable::load(path)?;
        Ok(SentenceEmbeddingProvider {
            mode: EmbeddingMode::FileBacked,
            dimension: table.dimension,
            store: table.vectors,
        })
    }

    pub fn embedding(
        &self,
        sentence: &Sentence,
        words: &WordEmbeddingTable,
    ) -> Result<Vec<f64>, CorpusError> {
        match self.mode {
            EmbeddingMode::FileBacked => self
                .store
                .get(&sentence.id)
                .cloned()
                .ok_or_else(|| CorpusError::MissingSentenceEmbedding(sentence.id.clone())),
            EmbeddingMode::WordAverage => {
                let mut acc = vec![0.0; words.dimension];
                for token in &sentence.tokens {
                    if let Some(vec) = words.get(token) {
                        for (a, v) in acc.iter_mut().zip(vec) {
                            *a += v;
                        }
                    }
                }
                let n = sentence.tokens.len() as f64;
                for a in &mut acc {
                    *a /= n;
                }
                Ok(acc)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_simple() {
        assert_eq!(tokenize("The cat sat."), vec!["the", "cat", "sat"]);
    }

    #[test]
    fn tokenize_empty() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  ... !! ").is_empty());
    }

    #[test]
    fn tokenize_keeps_interior_periods_and_splits_dashes() {
        assert_eq!(
            tokenize("U.S. budget\u{2014}cuts"),
            vec!["u.s", "budget", "cuts"]
        );
    }

    #[test]
    fn tokenize_numbers_and_apostrophes() {
        assert_eq!(tokenize("rates rose 3.5 percent"), vec!["rates", "rose", "3.5", "percent"]);
        assert_eq!(tokenize("don't"), vec!["don", "t"]);
    }

    #[test]
    fn load_counts_structure() {
        let line = r#"{"id":"c1","documents":[["One sentence here.","Two for the show."],["Three makes a doc.","Four is plenty.","Five closes it."]],"references":["One sentence here."]}"#;
        let clusters = load_corpus_str(line).unwrap();
        assert_eq!(clusters.len(), 1);
        let c = &clusters[0];
        assert_eq!(c.documents.len(), 2);
        assert_eq!(c.sentence_count(), 5);
        assert_eq!(c.sentences().count(), 5);
        let first = c.sentences().next().unwrap();
        assert_eq!(first.id, "c1:0:0");
        assert_eq!(first.doc_index, 0);
        assert_eq!(first.sent_index, 0);
    }

    #[test]
    fn bundled_fixture_has_three_clusters() {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("fixtures")
            .join("tiny_duc.jsonl");
        let clusters = load_corpus(&path).unwrap();
        assert_eq!(clusters.len(), 3);
        assert!(clusters.iter().all(|c| !c.references.is_empty()));
        assert_eq!(clusters[0].sentence_count(), 3);
    }

    #[test]
    fn missing_documents_key_reports_line() {
        let text = "{\"id\":\"a\",\"documents\":[[\"ok fine here.\"]]}\n{\"id\":\"b\",\"references\":[]}";
        let err = load_corpus_str(text).unwrap_err();
        match err {
            CorpusError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn duplicate_cluster_id_rejected() {
        let text = "{\"id\":\"a\",\"documents\":[[\"one two.\"]]}\n{\"id\":\"a\",\"documents\":[[\"three four.\"]]}";
        assert!(matches!(
            load_corpus_str(text).unwrap_err(),
            CorpusError::DuplicateClusterId { line: 2, .. }
        ));
    }

    #[test]
    fn punctuation_only_sentence_rejected() {
        let text = "{\"id\":\"a\",\"documents\":[[\"...\"]]}";
        assert!(matches!(
            load_corpus_str(text).unwrap_err(),
            CorpusError::EmptySentence { .. }
        ));
    }

    #[test]
    fn round_trip_preserves_clusters() {
        let text = r#"{"id":"c1","documents":[["Alpha beta gamma.","Delta epsilon."],["Zeta eta theta."]],"references":["Alpha beta gamma."]}"#;
        let clusters = load_corpus_str(text).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.jsonl");
        save_corpus(&clusters, &path).unwrap();
        let back = load_corpus(&path).unwrap();
        assert_eq!(back, clusters);
    }

    #[test]
    fn word_table_load_and_lookup() {
        let table = WordEmbeddingTable::load_str("cat 1.0 0.0\ndog 0.0 1.0\n", "test".into()).unwrap();
        assert_eq!(table.dimension, 2);
        assert_eq!(table.get("cat"), Some(&[1.0, 0.0][..]));
        assert_eq!(table.get("unknown"), None);
    }

    #[test]
    fn word_table_rejects_ragged_lines() {
        let err = WordEmbeddingTable::load_str("cat 1.0 0.0\ndog 0.5\n", "test".into()).unwrap_err();
        assert!(matches!(err, CorpusError::BadEmbeddingLine { line: 2, .. }));
    }

    fn sentence_with(tokens: &str) -> Sentence {
        Sentence {
            id: "t:0:0".into(),
            doc_index: 0,
            sent_index: 0,
            text: tokens.to_string(),
            tokens: tokenize(tokens),
        }
    }

    #[test]
    fn word_average_embedding() {
        let mut table = WordEmbeddingTable::new(2);
        table.insert("a", vec![1.0, 0.0]);
        table.insert("b", vec![0.0, 1.0]);
        let provider = SentenceEmbeddingProvider::word_average(&table);

        let s = sentence_with("a");
        assert_eq!(provider.embedding(&s, &table).unwrap(), vec![1.0, 0.0]);

        let s = sentence_with("a b");
        assert_eq!(provider.embedding(&s, &table).unwrap(), vec![0.5, 0.5]);

        let s = sentence_with("zz yy xx");
        assert_eq!(provider.embedding(&s, &table).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn word_average_is_deterministic() {
        let mut table = WordEmbeddingTable::new(2);
        table.insert("a", vec![0.25, -0.5]);
        let provider = SentenceEmbeddingProvider::word_average(&table);
        let s = sentence_with("a a b");
        let e1 = provider.embedding(&s, &table).unwrap();
        let e2 = provider.embedding(&s, &table).unwrap();
        assert_eq!(e1, e2);
    }

    #[test]
    fn file_backed_missing_id_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sent.txt");
        std::fs::write(&path, "t:0:0 0.1 0.2 0.3\n").unwrap();
        let provider = SentenceEmbeddingProvider::from_file(&path).unwrap();
        assert_eq!(provider.mode, EmbeddingMode::FileBacked);
        assert_eq!(provider.dimension, 3);

        let table = WordEmbeddingTable::new(3);
        let known = sentence_with("anything at all");
        assert_eq!(
            provider.embedding(&known, &table).unwrap(),
            vec![0.1, 0.2, 0.3]
        );

        let mut missing = sentence_with("other words");
        missing.id = "t:9:9".into();
        assert!(matches!(
            provider.embedding(&missing, &table).unwrap_err(),
            CorpusError::MissingSentenceEmbedding(_)
        ));
    }
}
