//! Propagate taxonomy labels from a few human-labeled anchors to unlabeled
//! commits via fused message/code-delta embeddings.
//!
//! The embedding provider here is the offline hashed bag-of-tokens
//! vectorizer; swap in a real encoder by implementing EmbeddingProvider.
//!
//! Run with: cargo run -p coevo --example propagate_labels

use coevo::embedcluster::{
    propagate_labels, Anchor, CommitRepresentation, EmbeddingProvider, HashedTokenEmbedder,
};

fn main() -> anyhow::Result<()> {
    let embedder = HashedTokenEmbedder::default();

    // Two human-labeled seed commits define the anchors.
    let seeds = [
        (
            "api_migration",
            "widget: rename widget_old_alloc to widget_alloc api",
            "return widget_old_alloc(16);",
            "return widget_alloc(16);",
        ),
        (
            "regression",
            "widget: fix probe regression after kernel update",
            "return widget_alloc(16);",
            "return widget_alloc(16) > 0 ? 0 : -1;",
        ),
    ];
    let anchors: Vec<Anchor> = seeds
        .iter()
        .map(|(label, message, pre, post)| {
            let rep = embedder.represent(message, pre, post)?;
            Ok(Anchor {
                id: label.to_string(),
                centroid: rep.fused,
                member_count: 1,
            })
        })
        .collect::<anyhow::Result<_>>()?;

    // Unlabeled commits, phrased near one seed or the other.
    let unlabeled = [
        ("c01", "gadget: rename gadget_old_alloc to gadget_alloc api", "gadget_old_alloc(8);", "gadget_alloc(8);"),
        ("c02", "sensor: rename legacy alloc api helper", "legacy_alloc(4);", "sensor_alloc(4);"),
        ("c03", "probe: fix regression after kernel update", "x = 1;", "x = probe_ok() ? 0 : -1;"),
        ("c04", "unrelated: refresh build notes", "a", "b"),
    ];
    let reps: Vec<(String, CommitRepresentation)> = unlabeled
        .iter()
        .map(|(id, message, pre, post)| {
            Ok((id.to_string(), embedder.represent(message, pre, post)?))
        })
        .collect::<anyhow::Result<_>>()?;

    let (assignments, updated) = propagate_labels(&reps, &anchors, 0.6, 4)?;
    println!("{:<6} {:<16} confidence", "commit", "label");
    for a in &assignments {
        println!(
            "{:<6} {:<16} {:.3}",
            a.commit_id,
            a.label.as_deref().unwrap_or("(unlabeled)"),
            a.confidence
        );
    }
    println!("\nanchor membership after propagation:");
    for anchor in &updated {
        println!("  {:<16} {} member(s)", anchor.id, anchor.member_count);
    }
    Ok(())
}
