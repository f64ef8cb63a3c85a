fn main() {
    std::process::exit(umato_cli::run(std::env::args_os()));
}
