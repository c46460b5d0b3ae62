//! Parse a unified diff, validate it, apply it with fuzz, and recover a
//! stale-numbered hunk via context-anchored reconstruction.
//!
//! Run with: cargo run -p coevo --example parse_apply_diff

use std::collections::BTreeMap;

use coevo::udiff::{
    apply_diff, parse_diff, reconstruct_hunks, render_diff, validate_diff_syntax,
};

const BASELINE: &str = "\
static int widget_ids;

static int widget_old_alloc(int size)
{
    widget_ids += size;
    return widget_ids;
}

int widget_probe(void)
{
    return widget_old_alloc(16);
}
";

// Escaped form keeps the single-space context line for the blank baseline
// line visible and safe from editor whitespace trimming.
const PATCH: &str = concat!(
    "--- a/drivers/widget/widget.c\n",
    "+++ b/drivers/widget/widget.c\n",
    "@@ -1,6 +1,6 @@\n",
    " static int widget_ids;\n",
    " \n",
    "-static int widget_old_alloc(int size)\n",
    "+static int widget_alloc(int size)\n",
    " {\n",
    "     widget_ids += size;\n",
    "     return widget_ids;\n",
    "@@ -9,4 +9,4 @@\n",
    " int widget_probe(void)\n",
    " {\n",
    "-    return widget_old_alloc(16);\n",
    "+    return widget_alloc(16);\n",
    " }\n",
);

fn main() -> anyhow::Result<()> {
    let diff = parse_diff(PATCH)?;
    println!(
        "parsed {} file(s), {} hunk(s)",
        diff.file_diffs.len(),
        diff.total_hunks()
    );

    let verdict = validate_diff_syntax(&diff);
    println!("syntax violations: {}", verdict.violations.len());

    let mut baseline = BTreeMap::new();
    baseline.insert("drivers/widget/widget.c".to_string(), BASELINE.to_string());

    // Exact application.
    let patched = apply_diff(&baseline, &diff, 0)?;
    println!("\n--- patched file ---\n{}", patched["drivers/widget/widget.c"]);

    // Shift the baseline by two lines; fuzz absorbs the offset.
    let mut shifted = BTreeMap::new();
    shifted.insert(
        "drivers/widget/widget.c".to_string(),
        format!("/* new header */\n/* second line */\n{BASELINE}"),
    );
    let patched = apply_diff(&shifted, &diff, 20)?;
    println!(
        "fuzzy apply against a shifted baseline worked: {} lines",
        patched["drivers/widget/widget.c"].lines().count()
    );

    // Sabotage the headers far beyond any fuzz window, then reconstruct.
    let mut stale = diff.clone();
    for hunk in &mut stale.file_diffs[0].hunks {
        hunk.old_start += 400;
        hunk.new_start += 400;
    }
    assert!(apply_diff(&baseline, &stale, 20).is_err());
    let reconstructed = reconstruct_hunks(&baseline, &stale)?;
    let patched = apply_diff(&baseline, &reconstructed, 0)?;
    println!(
        "reconstruction re-anchored the hunks; corrected diff:\n{}",
        render_diff(&reconstructed)
    );
    assert_eq!(
        patched["drivers/widget/widget.c"],
        apply_diff(&baseline, &diff, 0)?["drivers/widget/widget.c"]
    );
    println!("reconstructed result matches the clean apply");
    Ok(())
}
