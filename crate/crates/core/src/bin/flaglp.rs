fn main() {
    std::process::exit(flaglp::cli::run_command(std::env::args_os()));
}
