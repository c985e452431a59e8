fn main() {
    let code = suitegauge::cli::run_command(std::env::args_os());
    std::process::exit(code);
}
