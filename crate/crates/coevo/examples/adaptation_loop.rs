//! Drive the closed-loop adaptation engine with a scripted generator and the
//! local compiler executor, then hand the compiled session to runtime
//! validation.
//!
//! The script fails twice on purpose — a malformed diff (stage 1), then a
//! half-done rename that trips an implicit-declaration compile error
//! (stage 2) — before producing the correct patch, so the printed attempt
//! log shows the two-stage failure taxonomy and the error-driven feedback.
//!
//! Run with: cargo run -p coevo --example adaptation_loop

use std::collections::BTreeMap;

use coevo::casepack::{CasePack, FineLabel, TaxonomyLabel, ValidationPlan};
use coevo::looporch::{
    run_adaptation_loop, runtime_validate, LocalCompilerExecutor, LoopConfig, MockRuntimeRunner,
    ScriptedBackend,
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

fn full_file_patch(new_def: &str, new_call: &str) -> String {
    let old: Vec<&str> = BASELINE.trim_end_matches('\n').split('\n').collect();
    let mut body = String::new();
    for (i, line) in old.iter().enumerate() {
        match i + 1 {
            3 => {
                body.push_str(&format!("-{line}\n+{new_def}\n"));
            }
            11 => {
                body.push_str(&format!("-{line}\n+{new_call}\n"));
            }
            _ => body.push_str(&format!(" {line}\n")),
        }
    }
    format!(
        "--- a/drivers/widget/widget.c\n+++ b/drivers/widget/widget.c\n@@ -1,{n} +1,{n} @@\n{body}",
        n = old.len()
    )
}

fn main() -> anyhow::Result<()> {
    let reference = full_file_patch(
        "static int widget_alloc(int size)",
        "    return widget_alloc(16);",
    );
    let mut contents = BTreeMap::new();
    contents.insert("drivers/widget/widget.c".to_string(), BASELINE.to_string());
    let case = CasePack {
        message: "widget: rename widget_old_alloc to widget_alloc api".into(),
        files: vec!["drivers/widget/widget.c".into()],
        patch: reference.clone(),
        hash: "a1".repeat(20),
        kernel_hash: "b2".repeat(20),
        type_label: TaxonomyLabel::human(FineLabel::Rename),
        contents,
        link: None,
        description: None,
    };
    case.validate()?;

    // Renames the call site but not the definition: compiles fail with an
    // implicit declaration of widget_alloc.
    let half_done = full_file_patch(
        "static int widget_old_alloc(int size)",
        "    return widget_alloc(16);",
    );
    let mut generator = ScriptedBackend::replies([
        "sorry, here is some prose instead of a diff".to_string(),
        half_done,
        reference,
    ]);

    let config = LoopConfig::default();
    let executor = LocalCompilerExecutor::default();
    let session = run_adaptation_loop(&case, &mut generator, &executor, &config, "")?;

    println!("outcome: {:?} after {} attempt(s)", session.outcome, session.attempts.len());
    for attempt in &session.attempts {
        println!(
            "  attempt {}: stage {:?}, gate accepted {}, prompt {}",
            attempt.index,
            attempt.stage,
            attempt.gate.accepted,
            &attempt.prompt_digest[..12],
        );
        if let Some(report) = &attempt.build {
            for m in report.errors() {
                println!("    {}:{}: {}", m.file, m.line, m.text);
            }
            if !report.extracted_symbols.is_empty() {
                println!("    symbols: {:?}", report.extracted_symbols);
            }
        }
    }

    let plan = ValidationPlan {
        functional_checks: vec!["probe_unload".into()],
        security_checks: vec!["refcount_balance".into()],
    };
    let validated = runtime_validate(session, &MockRuntimeRunner::default(), &plan)?;
    println!("\nafter runtime checks: {:?}", validated.outcome);
    for check in &validated.runtime_checks {
        println!("  {:?} {}: {}", check.kind, check.id, if check.passed { "pass" } else { "fail" });
    }
    Ok(())
}
