use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let out = grainforge_cli::run(std::env::args_os());
    if let Some(summary) = out.summary {
        let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
        let _ = writeln!(std::io::stdout().lock(), "{text}");
    }
    ExitCode::from(out.code)
}
