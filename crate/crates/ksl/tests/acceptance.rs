//! Runs the full release gate and requires every criterion to hold,
//! including each one's time budget. Run with `--nocapture` to see the
//! per-criterion verdict lines.

use ksl::acceptance::run_all;

#[test]
fn all_criteria_pass() {
    let results = run_all();
    assert_eq!(results.len(), 7);
    for r in &results {
        println!("{}", r.line());
    }
    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.line())
        .collect();
    assert!(
        failed.is_empty(),
        "failing criteria:\n{}",
        failed.join("\n")
    );
}
