fn main() {
    std::process::exit(hypboundary_cli::run(std::env::args_os()));
}
