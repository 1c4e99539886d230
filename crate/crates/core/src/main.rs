mod cli;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let args = cli::Cli::parse();
    match cli::run(&args) {
        Ok(cli::Output::Json(v)) => {
            let text = serde_json::to_string_pretty(&v).expect("json values serialize") + "\n";
            if let Err(e) = emit(&args, &text) {
                return fail(&e);
            }
            ExitCode::SUCCESS
        }
        Ok(cli::Output::Text { text, ok }) => {
            if let Err(e) = emit(&args, &text) {
                return fail(&e);
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => fail(&e),
    }
}

fn emit(args: &cli::Cli, text: &str) -> anyhow::Result<()> {
    match &args.config.output {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn fail(e: &anyhow::Error) -> ExitCode {
    let chain: Vec<String> = e.chain().map(ToString::to_string).collect();
    let body = json!({ "error": chain.join(": ") });
    println!("{}", serde_json::to_string_pretty(&body).expect("json values serialize"));
    ExitCode::from(1)
}
