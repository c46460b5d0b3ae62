//! Desk-scale toolkit for kernel-driver co-evolution: mine commit pairs into
//! executable case packs, validate and apply unified-diff patches, score
//! generated patches against references via syntax-tree deltas and a
//! weighted composite metric, propagate taxonomy labels through code
//! embeddings, and drive a bounded generate-gate-build-classify-retry
//! adaptation loop with pluggable generator and build executors.
//!
//! Start with the runnable examples (`cargo run --example <name>`), one per
//! capability; the `coevo` binary wires the same functions into the batch
//! pipeline (`mine`, `score`, `run`, `report`, `validate`).

pub mod astcmp;
pub mod casepack;
pub mod cli;
pub mod embedcluster;
pub mod localize;
pub mod looporch;
pub mod mining;
pub mod report;
pub mod udiff;
