use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CHEMPAT_LOG", "warn"))
        .format_timestamp(None)
        .init();

    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match chempat::cli::parse_args(&argv) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match chempat::cli::run(&cli, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
