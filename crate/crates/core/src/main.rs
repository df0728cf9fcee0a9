fn main() {
    std::process::exit(slopt::cli::run(std::env::args_os()));
}
