use clap::Parser;
use highway_assert::app::{run, Cli, Io};
use std::io::{self, Write};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let stdin = io::stdin();
    let (mut input, mut out, mut err) = (stdin.lock(), io::stdout().lock(), io::stderr());
    let code = run(cli, &mut Io { stdin: &mut input, stdout: &mut out, stderr: &mut err });
    let _ = out.flush();
    std::process::exit(code);
}
