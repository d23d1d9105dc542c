fn main() {
    std::process::exit(ved::cli::main_with_args(std::env::args_os()));
}
