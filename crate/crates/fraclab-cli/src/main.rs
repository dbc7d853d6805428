use clap::Parser;
use fraclab_cli::commands::{self, Cli, CliError};

fn main() {
    commands::init_threads();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version requests are not errors
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match fraclab_cli::run(cli) {
        Ok(()) => {}
        Err(err) => {
            match &err {
                CliError::Compute(msg) => eprintln!(
                    "{}",
                    serde_json::json!({ "error": "computation", "detail": msg })
                ),
                other => eprintln!("{}", other.message()),
            }
            std::process::exit(err.exit_code());
        }
    }
}
