fn main() {
    std::process::exit(crisk::cli::run(std::env::args_os()));
}
