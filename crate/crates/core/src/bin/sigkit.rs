fn main() {
    std::process::exit(sigkit::cli::run_cli(std::env::args_os()));
}
