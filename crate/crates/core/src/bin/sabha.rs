fn main() {
    std::process::exit(sabha::cli::run_cli(std::env::args_os()));
}
