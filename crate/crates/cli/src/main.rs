fn main() {
    std::process::exit(restoro_cli::run(std::env::args_os()));
}
