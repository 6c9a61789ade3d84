fn main() {
    std::process::exit(fdflow_cli::run_cli(std::env::args_os()));
}
