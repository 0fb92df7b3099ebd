fn main() {
    std::process::exit(qssa_lab::cli::run_cli(std::env::args_os()));
}
