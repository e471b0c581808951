fn main() {
    std::process::exit(schrospec::cli::run(std::env::args_os()));
}
