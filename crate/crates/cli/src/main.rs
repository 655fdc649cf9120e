use clap::Parser;

use catalog_cli::commands::{self, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(outcome) => {
            println!("{}", serde_json::to_string_pretty(&outcome.summary).unwrap_or_default());
            std::process::exit(outcome.exit_code);
        }
        Err(e) => {
            let summary = serde_json::json!({
                "status": "error",
                "message": format!("{e:#}"),
            });
            println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            std::process::exit(1);
        }
    }
}
