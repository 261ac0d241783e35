fn main() {
    std::process::exit(fracsync::cli::run(std::env::args_os()));
}
