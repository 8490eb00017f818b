fn main() {
    std::process::exit(richcore_cli::run(std::env::args_os()));
}
