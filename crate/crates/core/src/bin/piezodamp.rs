fn main() {
    let quiet = std::env::args().any(|a| a == "--quiet");
    env_logger::Builder::from_env(
        env_logger::Env::default().default_filter_or(if quiet { "error" } else { "warn" }),
    )
    .init();
    std::process::exit(piezodamp::cli::run_from(std::env::args_os()));
}
