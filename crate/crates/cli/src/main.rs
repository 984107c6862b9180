fn main() {
    std::process::exit(graphrel_cli::run(std::env::args_os()));
}
