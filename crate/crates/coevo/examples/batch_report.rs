//! Aggregate adaptation sessions into per-category funnel counts, score
//! distributions, and a two-sample comparison (Welch's t and Cohen's d).
//!
//! Run with: cargo run -p coevo --example batch_report

use std::collections::BTreeMap;

use coevo::casepack::{CasePack, FineLabel, TaxonomyLabel};
use coevo::looporch::{run_adaptation_loop, FixedOutcomeExecutor, LoopConfig, ScriptedBackend};
use coevo::report::{aggregate, cohens_d, distribution, render_counts_table, welch_t};

fn small_case(seed: char, fine: FineLabel) -> CasePack {
    let path = "drivers/widget/widget.c";
    let baseline = "int widget_probe(void)\n{\n    return old_alloc(16);\n}\n";
    let patch = format!(
        "--- a/{path}\n+++ b/{path}\n@@ -3 +3 @@\n-    return old_alloc(16);\n+    return new_alloc(16);\n"
    );
    let mut contents = BTreeMap::new();
    contents.insert(path.to_string(), baseline.to_string());
    CasePack {
        message: format!("widget {seed}: rename old_alloc"),
        files: vec![path.to_string()],
        patch,
        hash: seed.to_string().repeat(40),
        kernel_hash: "f".repeat(40),
        type_label: TaxonomyLabel::human(fine),
        contents,
        link: None,
        description: None,
    }
}

fn main() -> anyhow::Result<()> {
    let config = LoopConfig::default();
    let executor = FixedOutcomeExecutor::default();

    let mut sessions = Vec::new();
    for (seed, fine, script) in [
        ('a', FineLabel::Rename, vec!["echo-reference"]),
        ('b', FineLabel::Rename, vec!["garbage only"]),
        ('c', FineLabel::Regression, vec!["echo-reference"]),
    ] {
        let case = small_case(seed, fine);
        let replies: Vec<String> = script
            .into_iter()
            .map(|s| {
                if s == "echo-reference" {
                    case.patch.clone()
                } else {
                    s.to_string()
                }
            })
            .collect();
        let mut backend = ScriptedBackend::replies(replies);
        sessions.push(run_adaptation_loop(&case, &mut backend, &executor, &config, "")?);
    }

    let batch = aggregate(&sessions, &[]);
    println!("{}", render_counts_table(&batch));

    // Compare two hypothetical composite-score samples.
    let backend_a = [0.91, 0.78, 0.83, 0.88, 0.69, 0.95, 0.81];
    let backend_b = [0.72, 0.70, 0.66, 0.81, 0.59, 0.77, 0.74];
    let dist_a = distribution(&backend_a)?;
    println!(
        "sample A: mean {:.3}, median {:.3}, p25 {:.3}, p75 {:.3}",
        dist_a.mean, dist_a.median, dist_a.p25, dist_a.p75
    );
    let (t, dof) = welch_t(&backend_a, &backend_b)?;
    let d = cohens_d(&backend_a, &backend_b)?;
    println!("Welch t = {t:.3} (dof {dof:.2}), Cohen's d = {d:.3}");
    Ok(())
}
