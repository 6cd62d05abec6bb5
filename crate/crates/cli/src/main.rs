fn main() {
    std::process::exit(pivotal_cli::run_from_args(std::env::args_os()));
}
