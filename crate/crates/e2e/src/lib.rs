//! Helpers for the acceptance run in `tests/acceptance.rs`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use serde_json::Value;

/// Verdict and measured values for one criterion.
pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(pass: bool, detail: String) -> Self {
        Outcome { pass, detail }
    }
}

/// Collects verdicts and prints one line per criterion as it finishes.
#[derive(Default)]
pub struct Report {
    results: Vec<(String, bool)>,
}

impl Report {
    /// Runs `f`, turning a panic into a failure that carries its message.
    pub fn check(&mut self, name: &str, f: impl FnOnce() -> Outcome) {
        let t = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::new(false, format!("panicked: {msg}"))
        });
        println!(
            "{} {name}: {} [{:.1} s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
        self.results.push((name.to_string(), o.pass));
    }

    /// Prints the tally; returns false when anything failed.
    pub fn finish(&self) -> bool {
        let failed: Vec<&str> = self.results.iter().filter(|r| !r.1).map(|r| r.0.as_str()).collect();
        println!("acceptance: {} passed, {} failed", self.results.len() - failed.len(), failed.len());
        if !failed.is_empty() {
            println!("failed: {}", failed.join(", "));
        }
        failed.is_empty()
    }
}

/// Runs one `grainforge` invocation in-process with `--out out`; panics
/// unless it succeeds.
pub fn grainforge(out: &Path, args: &[&str]) -> Value {
    let mut argv: Vec<String> = vec!["grainforge".into(), "--out".into(), out.display().to_string()];
    argv.extend(args.iter().map(|a| a.to_string()));
    let r = grainforge_cli::run(argv);
    assert_eq!(r.code, 0, "grainforge {args:?} exited with {}", r.code);
    r.summary.expect("successful runs return a summary")
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).expect("readable JSON file")).expect("valid JSON")
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("UTF-8 path")
}
