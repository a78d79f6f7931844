fn main() {
    std::process::exit(hsdfactor::cli::run(std::env::args_os()));
}
