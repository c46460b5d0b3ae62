//! Score a generated patch against a reference patch with the syntax-tree
//! delta metrics and the weighted composite.
//!
//! The scenario is a canonical allocator-API migration: the reference drops
//! the obsolete range arguments; one candidate matches it exactly, another
//! keeps the stale arguments and loses score.
//!
//! Run with: cargo run -p coevo --example score_patch_pair

use std::collections::BTreeMap;

use coevo::astcmp::{score_patch_pair, CSourceParser};
use coevo::udiff::parse_diff;

const BASELINE: &str = "\
#include <linux/idr.h>

static int widget_get_id(struct ida *ida)
{
    int id;

    id = ida_simple_get(ida, 0, 0, GFP_KERNEL);
    if (id < 0)
        return id;
    return id;
}
";

fn patch_with(line: &str) -> String {
    format!(
        "--- a/drivers/widget.c\n+++ b/drivers/widget.c\n@@ -7 +7 @@\n-    id = ida_simple_get(ida, 0, 0, GFP_KERNEL);\n+{line}\n"
    )
}

fn main() -> anyhow::Result<()> {
    let mut baseline = BTreeMap::new();
    baseline.insert("drivers/widget.c".to_string(), BASELINE.to_string());

    let reference = parse_diff(&patch_with("    id = ida_alloc(ida, GFP_KERNEL);"))?;
    let exact = parse_diff(&patch_with("    id = ida_alloc(ida, GFP_KERNEL);"))?;
    let stale = parse_diff(&patch_with("    id = ida_alloc(ida, 0, 0, GFP_KERNEL);"))?;

    let mut parser = CSourceParser::new()?;
    let good = score_patch_pair(&mut parser, &baseline, &reference, &exact, 20)?;
    let bad = score_patch_pair(&mut parser, &baseline, &reference, &stale, 20)?;

    println!("exact migration:");
    println!("{}", serde_json::to_string_pretty(&good)?);
    println!("\nstale arguments retained:");
    println!(
        "ast_sim {:.3}, composite {:.3}",
        bad.ast_sim, bad.composite
    );
    println!("\nper-type deltas of the divergent candidate:");
    for (kind, weight) in &bad.profile.weights {
        println!(
            "  {kind}: ref {} gen {} weight {weight} sim {:.2}",
            bad.profile.delta_ref[kind], bad.profile.delta_gen[kind], bad.profile.node_sims[kind]
        );
    }
    Ok(())
}
