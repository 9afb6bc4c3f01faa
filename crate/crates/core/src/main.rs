fn main() {
    std::process::exit(superposition_lab::cli::main_with_args(std::env::args_os()));
}
