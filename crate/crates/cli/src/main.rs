fn main() {
    std::process::exit(returnlaw_cli::run_from(std::env::args_os()));
}
