fn main() {
    std::process::exit(diagform::cli::run(std::env::args_os()));
}
