fn main() {
    std::process::exit(roadkit::cli::main_with_args(std::env::args_os()));
}
