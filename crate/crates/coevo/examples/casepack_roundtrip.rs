//! Build a case pack, serialize it to the canonical JSON form, and parse it
//! back; also show the fine-to-coarse label consolidation.
//!
//! Run with: cargo run -p coevo --example casepack_roundtrip

use std::collections::BTreeMap;

use coevo::casepack::{
    consolidate_label, parse_case_pack, serialize_case_pack, CasePack, FineLabel, TaxonomyLabel,
};

fn main() -> anyhow::Result<()> {
    let path = "drivers/widget/widget.c";
    let baseline = "int widget_probe(void)\n{\n    return old_alloc(16);\n}\n";
    let patch = format!(
        "--- a/{path}\n+++ b/{path}\n@@ -3 +3 @@\n-    return old_alloc(16);\n+    return new_alloc(16);\n"
    );
    let mut contents = BTreeMap::new();
    contents.insert(path.to_string(), baseline.to_string());

    let pack = CasePack {
        message: "widget: switch to new_alloc\n\nKernel-Hash: ".to_string() + &"b".repeat(40),
        files: vec![path.to_string()],
        patch,
        hash: "a".repeat(40),
        kernel_hash: "b".repeat(40),
        type_label: TaxonomyLabel::human(FineLabel::Rename),
        contents,
        link: Some("https://lore.example/widget-thread".to_string()),
        description: None,
    };
    pack.validate()?;

    let bytes = serialize_case_pack(&pack);
    println!("--- canonical pack JSON ---");
    println!("{}", String::from_utf8_lossy(&bytes));

    let back = parse_case_pack(&bytes)?;
    assert_eq!(back, pack);
    println!("round-trip: parse(serialize(pack)) == pack");

    println!("\nfine-to-coarse consolidation:");
    for fine in FineLabel::ALL {
        println!("  {fine:<14} -> {}", consolidate_label(fine));
    }
    Ok(())
}
