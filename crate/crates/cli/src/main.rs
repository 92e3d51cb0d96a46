fn main() {
    std::process::exit(reanchor_cli::run(std::env::args_os()));
}
