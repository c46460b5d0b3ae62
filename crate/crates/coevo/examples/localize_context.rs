//! Index symbols in driver sources, find the symbols a diff touches, and
//! extract merged context windows for prompt assembly.
//!
//! Run with: cargo run -p coevo --example localize_context

use std::collections::BTreeMap;

use coevo::localize::{affected_symbols, enclosing_definitions, extract_context, index_symbols};
use coevo::udiff::parse_diff;

const SOURCE: &str = "\
#include <linux/idr.h>

struct widget_state {
    int id;
};

static int widget_get_id(struct ida *ida)
{
    return ida_simple_get(ida, 0, 0, GFP_KERNEL);
}

static void widget_log(int id)
{
    pr_info(\"widget %d\\n\", id);
}

int widget_probe(struct ida *ida)
{
    int id = widget_get_id(ida);

    widget_log(id);
    return id < 0 ? id : 0;
}
";

const KERNEL_DELTA: &str = concat!(
    "--- a/lib/idr.c\n",
    "+++ b/lib/idr.c\n",
    "@@ -10,5 +10,5 @@\n",
    " /* allocation entry points */\n",
    "-int ida_simple_get(struct ida *ida, unsigned int start, unsigned int end, gfp_t gfp)\n",
    "+int ida_alloc(struct ida *ida, gfp_t gfp)\n",
    " {\n",
    "     return 0;\n",
    " }\n",
);

fn main() -> anyhow::Result<()> {
    let mut sources = BTreeMap::new();
    sources.insert("drivers/widget/widget.c".to_string(), SOURCE.to_string());

    let index = index_symbols(&sources)?;
    println!("definitions:");
    for (name, spans) in &index.definitions {
        for s in spans {
            println!("  {name:<16} {:?} {}:{}-{}", s.kind, s.path, s.start_line, s.end_line);
        }
    }

    let kernel_diff = parse_diff(KERNEL_DELTA)?;
    let mut affected = affected_symbols(&kernel_diff, &index);
    affected.retain(|s| index.knows(s));
    println!("\ndriver symbols affected by the kernel change: {affected:?}");

    // The kernel change names a callee; window the driver functions whose
    // bodies call it.
    let mut focus = affected.clone();
    for symbol in &affected {
        focus.extend(enclosing_definitions(&index, symbol));
    }
    let windows = extract_context(&sources, &index, &focus, 3)?;
    for w in &windows {
        println!(
            "\nwindow {} lines {}-{} (focus: {:?})\n{}",
            w.path, w.start_line, w.end_line, w.focus_symbols, w.text
        );
    }
    Ok(())
}
