use std::process::ExitCode;

fn main() -> ExitCode {
    let outcome = proxnet_cli::run(std::env::args_os());
    if !outcome.report.is_null() {
        let text = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
        println!("{text}");
    }
    if let Some(msg) = outcome.error {
        eprintln!("{msg}");
    }
    ExitCode::from(outcome.exit_code as u8)
}
