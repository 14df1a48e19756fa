fn main() {
    std::process::exit(fastfuzz::cli::run(std::env::args_os()));
}
