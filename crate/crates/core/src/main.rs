fn main() {
    std::process::exit(mbmm::cli::run(std::env::args_os()));
}
