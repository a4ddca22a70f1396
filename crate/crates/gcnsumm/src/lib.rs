//! Extractive multi-document summarization with a sentence-graph GCN:
//! pre-trained sentence embeddings build a similarity graph per cluster,
//! a trainable LSTM encoder provides node features, a two-map graph
//! convolution mixes them, and a softmax saliency head is trained against
//! ROUGE-1 F1 targets. Training, summary generation, ROUGE scoring, and a
//! finite-difference gradient checker are all built in; there is no
//! autodiff anywhere.

// index-heavy matrix kernels read more clearly as explicit loops
#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod corpus;
pub mod graph;
pub mod model;
pub mod nn;
pub mod rouge;
pub mod stem;
pub mod summarizer;
pub mod trainer;
