//! Code-embedding delta representation and anchor-based semi-supervised
//! label propagation.
//!
//! A commit is represented by a message embedding fused with a normalized
//! code-delta vector (the direction of evolution from pre- to post-change
//! code). Human-labeled anchors act as centroids; unlabeled commits take the
//! label of the nearest anchor when the cosine-derived confidence clears a
//! threshold, and centroids are re-estimated from seeds plus assignments
//! until the labeling stabilizes.
//!
//! The default embedding provider is a deterministic hashed bag-of-tokens
//! vectorizer so the whole pipeline runs offline; plug a real encoder in via
//! [`EmbeddingProvider`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EmbedError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("anchor set is empty")]
    EmptyAnchorSet,
    #[error("propagation requires rounds >= 1")]
    ZeroRounds,
}

/// Fixed-length real vector with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        EmbeddingVector { values }
    }

    pub fn zeros(dim: usize) -> Self {
        EmbeddingVector {
            values: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Cosine similarity; zero when either vector has zero norm.
    pub fn cosine(&self, other: &Self) -> f64 {
        let na = self.norm();
        let nb = other.norm();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            self.dot(other) / (na * nb)
        }
    }
}

/// Normalized difference of post- and pre-change code embeddings; the zero
/// vector when nothing changed.
pub fn embedding_delta(
    pre: &EmbeddingVector,
    post: &EmbeddingVector,
) -> Result<EmbeddingVector, EmbedError> {
    if pre.dim() != post.dim() {
        return Err(EmbedError::DimensionMismatch {
            left: pre.dim(),
            right: post.dim(),
        });
    }
    let diff: Vec<f64> = post
        .values
        .iter()
        .zip(&pre.values)
        .map(|(a, b)| a - b)
        .collect();
    let norm = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok(EmbeddingVector::new(diff));
    }
    Ok(EmbeddingVector::new(
        diff.into_iter().map(|v| v / norm).collect(),
    ))
}

/// Concatenate text and delta vectors, text first.
pub fn fuse(text_vec: &EmbeddingVector, delta_vec: &EmbeddingVector) -> EmbeddingVector {
    let mut values = Vec::with_capacity(text_vec.dim() + delta_vec.dim());
    values.extend_from_slice(&text_vec.values);
    values.extend_from_slice(&delta_vec.values);
    EmbeddingVector::new(values)
}

/// Joint textual-structural representation of one commit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommitRepresentation {
    pub text_vec: EmbeddingVector,
    pub delta_vec: EmbeddingVector,
    pub fused: EmbeddingVector,
}

impl CommitRepresentation {
    pub fn new(text_vec: EmbeddingVector, delta_vec: EmbeddingVector) -> Self {
        let fused = fuse(&text_vec, &delta_vec);
        CommitRepresentation {
            text_vec,
            delta_vec,
            fused,
        }
    }
}

/// A labeled centroid in the fused space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub id: String,
    pub centroid: EmbeddingVector,
    pub member_count: usize,
}

/// Label decision for one commit. The label is present exactly when the
/// confidence cleared the propagation threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub commit_id: String,
    pub label: Option<String>,
    pub confidence: f64,
}

/// Assign a commit to its nearest anchor by cosine similarity. Confidence is
/// `(1 + cos) / 2`; ties break toward the lexicographically smallest id.
pub fn assign_to_anchor(
    commit_id: &str,
    rep: &CommitRepresentation,
    anchors: &[Anchor],
    threshold: f64,
) -> Result<Assignment, EmbedError> {
    if anchors.is_empty() {
        return Err(EmbedError::EmptyAnchorSet);
    }
    let mut best: Option<(&Anchor, f64)> = None;
    for anchor in anchors {
        let cos = rep.fused.cosine(&anchor.centroid);
        best = match best {
            None => Some((anchor, cos)),
            Some((cur, cur_cos)) => {
                if cos > cur_cos || (cos == cur_cos && anchor.id < cur.id) {
                    Some((anchor, cos))
                } else {
                    Some((cur, cur_cos))
                }
            }
        };
    }
    let (anchor, cos) = best.expect("non-empty anchors");
    let confidence = (1.0 + cos) / 2.0;
    Ok(Assignment {
        commit_id: commit_id.to_string(),
        label: (confidence >= threshold).then(|| anchor.id.clone()),
        confidence,
    })
}

/// Iterative nearest-anchor propagation.
///
/// Each round assigns every commit against the current centroids, then
/// re-estimates each centroid as the mean of its seed members plus the
/// commits assigned to it this round. Terminates early once assignments stop
/// changing. The whole procedure is deterministic: fixed iteration order,
/// fixed tie-break.
pub fn propagate_labels(
    reps: &[(String, CommitRepresentation)],
    anchors: &[Anchor],
    threshold: f64,
    rounds: usize,
) -> Result<(Vec<Assignment>, Vec<Anchor>), EmbedError> {
    if rounds == 0 {
        return Err(EmbedError::ZeroRounds);
    }
    if anchors.is_empty() {
        return Err(EmbedError::EmptyAnchorSet);
    }

    // Seed sums stay fixed: the original centroid times its member count.
    let seeds: Vec<(Vec<f64>, usize)> = anchors
        .iter()
        .map(|a| {
            let sum: Vec<f64> = a
                .centroid
                .values
                .iter()
                .map(|v| v * a.member_count as f64)
                .collect();
            (sum, a.member_count)
        })
        .collect();

    let mut current: Vec<Anchor> = anchors.to_vec();
    let mut assignments: Vec<Assignment> = Vec::new();
    for _ in 0..rounds {
        let next: Vec<Assignment> = reps
            .iter()
            .map(|(id, rep)| assign_to_anchor(id, rep, &current, threshold))
            .collect::<Result<_, _>>()?;
        let converged = !assignments.is_empty()
            && assignments
                .iter()
                .zip(&next)
                .all(|(a, b)| a.label == b.label);
        assignments = next;

        let mut updated = Vec::with_capacity(current.len());
        for (anchor, (seed_sum, seed_count)) in anchors.iter().zip(&seeds) {
            let members: Vec<&EmbeddingVector> = reps
                .iter()
                .zip(&assignments)
                .filter(|(_, a)| a.label.as_deref() == Some(anchor.id.as_str()))
                .map(|((_, rep), _)| &rep.fused)
                .collect();
            if members.is_empty() {
                // Keep the original centroid bit-for-bit.
                updated.push(anchor.clone());
                continue;
            }
            let total = *seed_count + members.len();
            let mut sum = seed_sum.clone();
            for m in &members {
                for (acc, v) in sum.iter_mut().zip(&m.values) {
                    *acc += v;
                }
            }
            updated.push(Anchor {
                id: anchor.id.clone(),
                centroid: EmbeddingVector::new(
                    sum.into_iter().map(|v| v / total as f64).collect(),
                ),
                member_count: total,
            });
        }
        current = updated;
        if converged {
            break;
        }
    }
    Ok((assignments, current))
}

/// Maps commit text and code regions into the embedding space.
pub trait EmbeddingProvider {
    fn dim(&self) -> usize;
    fn embed_text(&self, text: &str) -> EmbeddingVector;
    fn embed_code(&self, code: &str) -> EmbeddingVector;

    /// Build the fused representation for one commit.
    fn represent(
        &self,
        message: &str,
        pre_code: &str,
        post_code: &str,
    ) -> Result<CommitRepresentation, EmbedError> {
        let text_vec = self.embed_text(message);
        let delta = embedding_delta(&self.embed_code(pre_code), &self.embed_code(post_code))?;
        Ok(CommitRepresentation::new(text_vec, delta))
    }
}

/// Deterministic hashed bag-of-tokens vectorizer. Tokens are lowercased
/// alphanumeric runs; each token adds ±1 to an FNV-chosen bucket and the
/// result is L2-normalized. Offline stand-in for external encoder models.
#[derive(Debug, Clone)]
pub struct HashedTokenEmbedder {
    dim: usize,
}

impl HashedTokenEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        HashedTokenEmbedder { dim }
    }

    fn embed(&self, text: &str) -> EmbeddingVector {
        let mut values = vec![0.0f64; self.dim];
        for token in text
            .split(|c: char| !c.is_ascii_alphanumeric() && c != '_')
            .filter(|t| !t.is_empty())
        {
            let h = fnv1a(token.to_ascii_lowercase().as_bytes());
            let bucket = (h % self.dim as u64) as usize;
            let sign = if (h >> 63) & 1 == 0 { 1.0 } else { -1.0 };
            values[bucket] += sign;
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut values {
                *v /= norm;
            }
        }
        EmbeddingVector::new(values)
    }
}

impl Default for HashedTokenEmbedder {
    fn default() -> Self {
        HashedTokenEmbedder::new(64)
    }
}

impl EmbeddingProvider for HashedTokenEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_text(&self, text: &str) -> EmbeddingVector {
        self.embed(text)
    }

    fn embed_code(&self, code: &str) -> EmbeddingVector {
        self.embed(code)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x1_0000_0000_01b3);
    }
    hash
}
